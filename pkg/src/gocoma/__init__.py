"""Hyperbolic cross-modal fusion for code authorship attribution.

Subpackages:
  geometry    Poincare ball operations (float64, numerically guarded)
  autodiff    minimal reverse-mode engine used for exact gradients
  fusion      geodesic-similarity cross-modal attention and fusion baselines
  classifier  1D-CNN and FCN heads, Adam training loop, metrics
  bpea        compile sources to pre-executable artifacts, render byte images
  pipeline    datasets, splits, experiments, reporting, the `gocoma` CLI
"""

__version__ = "0.1.0"
