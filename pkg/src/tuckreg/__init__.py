"""Sparse, low-Tucker-rank tensor regression toolkit."""

from . import bounds, harness, measurement, model, projection, solvers, tensor

__all__ = ["bounds", "harness", "measurement", "model", "projection", "solvers", "tensor"]
__version__ = "0.1.0"
