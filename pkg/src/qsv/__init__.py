"""Exact verification engine for q-deformed Schroedinger theory on the braided line and q-deformed Euclidean 3-space."""

from .qfield import QScalar, GaussianRational, PoleError

__all__ = ["QScalar", "GaussianRational", "PoleError"]
__version__ = "0.1.0"
