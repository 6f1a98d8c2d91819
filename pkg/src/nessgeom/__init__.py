"""Geometry of fermionic Gaussian steady states.

Covariance-matrix toolkit for ground, thermal and driven-dissipative
steady states of quadratic fermion models: Bures metric, mean Uhlmann
curvature, incompatibility ratio, dissipative gaps, correlation lengths
and finite-size scaling, validated against an exact dense oracle.
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
