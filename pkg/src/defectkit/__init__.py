"""defectkit: leather surface-defect classification toolkit.

Two pipelines over binary defective / non-defective labels: an
edge-feature + shallow-network classifier and a modified-AlexNet
convolutional classifier, plus deterministic data splits, k-fold
cross-validation, evaluation metrics and a synthetic texture generator.

Submodules import numpy lazily relative to this package root so the CLI
can pin BLAS thread counts first; import what you need directly, e.g.
``from defectkit import imagecore``.
"""

__version__ = "0.1.0"
