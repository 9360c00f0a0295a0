"""Naive scalar Canny reference used as the test oracle.

Pure-Python loops implementing the documented contract step by step with
no vectorization: Gaussian blur (radius ceil(3 sigma), replicate border),
3x3 Sobel, magnitude, 4-bin non-maximum suppression, double threshold on
fractions of the max magnitude, and BFS hysteresis. Arithmetic mirrors
the pinned operation ordering so results are bit-exact, but the code
shares nothing with the production implementation.
"""

import math

TAN_22_5 = math.tan(math.radians(22.5))
TAN_67_5 = math.tan(math.radians(67.5))

SOBEL_X = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
SOBEL_Y = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]


def gaussian_kernel(sigma):
    radius = math.ceil(3.0 * sigma)
    size = 2 * radius + 1
    kern = []
    total = 0.0
    for ky in range(size):
        row = []
        for kx in range(size):
            dy = ky - radius
            dx = kx - radius
            v = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
            row.append(v)
            total += v
        kern.append(row)
    return [[v / total for v in row] for row in kern]


def correlate_replicate(img, kernel):
    h = len(img)
    w = len(img[0])
    kh = len(kernel)
    kw = len(kernel[0])
    ry = kh // 2
    rx = kw // 2
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for ky in range(kh):
                for kx in range(kw):
                    sy = min(max(y + ky - ry, 0), h - 1)
                    sx = min(max(x + kx - rx, 0), w - 1)
                    acc = acc + img[sy][sx] * kernel[ky][kx]
            out[y][x] = acc
    return out


def direction_bin(gx, gy):
    ax = abs(gx)
    ay = abs(gy)
    if ay <= TAN_22_5 * ax:
        return 0
    if ay >= TAN_67_5 * ax:
        return 2
    return 1 if gx * gy >= 0.0 else 3

NEIGHBORS = {
    0: ((0, -1), (0, 1)),
    1: ((-1, -1), (1, 1)),
    2: ((-1, 0), (1, 0)),
    3: ((-1, 1), (1, -1)),
}


def canny_reference(img, low, high, sigma):
    """img: uint8-valued 2D list or array; returns a 2D list of 0/255."""
    h = len(img)
    w = len(img[0])
    gray = [[float(img[y][x]) for x in range(w)] for y in range(h)]
    flat = [v for row in gray for v in row]
    if min(flat) == max(flat):  # constant input: zero gradient by definition
        return [[0] * w for _ in range(h)]
    blurred = correlate_replicate(gray, gaussian_kernel(sigma))
    gx = correlate_replicate(blurred, SOBEL_X)
    gy = correlate_replicate(blurred, SOBEL_Y)

    mag = [[math.sqrt(gx[y][x] * gx[y][x] + gy[y][x] * gy[y][x]) for x in range(w)]
           for y in range(h)]
    max_mag = max(max(row) for row in mag)
    if max_mag == 0.0:
        return [[0] * w for _ in range(h)]

    nms = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            b = direction_bin(gx[y][x], gy[y][x])
            (dy1, dx1), (dy2, dx2) = NEIGHBORS[b]
            n1 = mag[y + dy1][x + dx1] if 0 <= y + dy1 < h and 0 <= x + dx1 < w else 0.0
            n2 = mag[y + dy2][x + dx2] if 0 <= y + dy2 < h and 0 <= x + dx2 < w else 0.0
            if mag[y][x] >= n1 and mag[y][x] >= n2:
                nms[y][x] = mag[y][x]

    low_t = low * max_mag
    high_t = high * max_mag
    strong = [[nms[y][x] > 0.0 and nms[y][x] >= high_t for x in range(w)] for y in range(h)]
    weak = [[nms[y][x] > 0.0 and nms[y][x] >= low_t and not strong[y][x] for x in range(w)]
            for y in range(h)]

    visited = [[strong[y][x] for x in range(w)] for y in range(h)]
    queue = [(y, x) for y in range(h) for x in range(w) if strong[y][x]]
    while queue:
        y, x = queue.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny][nx] and not visited[ny][nx]:
                    visited[ny][nx] = True
                    queue.append((ny, nx))
    return [[255 if visited[y][x] else 0 for x in range(w)] for y in range(h)]
