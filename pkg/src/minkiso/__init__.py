"""Numerical verification of isoperimetric-type inequalities for spacelike
submanifolds of Minkowski space."""

from .mink import CausalClass, MinkVec, Signature, causal_class, mink_inner, proj_s, proj_t

__version__ = "0.1.0"

__all__ = [
    "CausalClass",
    "MinkVec",
    "Signature",
    "causal_class",
    "mink_inner",
    "proj_s",
    "proj_t",
]
