"""Arithmetic of the pseudo-Euclidean space R^{p,q}.

Coordinates are stored spatial-first: the first ``space_dim`` entries carry
the positive part of the metric, the last ``time_dim`` entries the negative
part.  Every function here also accepts plain arrays whose last axis holds
coordinates, so the same code serves single vectors and large batches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SignatureMismatch

DEFAULT_NULL_TOL = 1e-12


@dataclass(frozen=True)
class Signature:
    space_dim: int
    time_dim: int

    def __post_init__(self):
        if self.space_dim < 1:
            raise ValueError(f"space_dim must be >= 1, got {self.space_dim}")
        if self.time_dim < 0:
            raise ValueError(f"time_dim must be >= 0, got {self.time_dim}")

    @property
    def dim(self) -> int:
        return self.space_dim + self.time_dim

    @property
    def metric(self) -> np.ndarray:
        """Diagonal of the metric tensor, ``(+1, ..., +1, -1, ..., -1)``."""
        return np.concatenate([np.ones(self.space_dim), -np.ones(self.time_dim)])

    def inner(self, u, v):
        """Indefinite inner product along the last axis (broadcasting)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        s = self.space_dim
        return np.sum(u[..., :s] * v[..., :s], axis=-1) - np.sum(
            u[..., s:] * v[..., s:], axis=-1
        )

    def gram(self, a, b=None):
        """Matrix of inner products between the rows of ``a`` and ``b``."""
        a = np.asarray(a, dtype=float)
        b = a if b is None else np.asarray(b, dtype=float)
        return (a * self.metric) @ np.swapaxes(b, -1, -2)

    def split(self, v):
        """Return ``(spatial, temporal)`` coordinate blocks of ``v``."""
        v = np.asarray(v, dtype=float)
        return v[..., : self.space_dim], v[..., self.space_dim :]

    def __str__(self):
        return f"R^{{{self.space_dim},{self.time_dim}}}"


class CausalClass(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    NULL = "null"


@dataclass(frozen=True)
class MinkVec:
    """A vector of R^{space_dim, time_dim}."""

    coords: np.ndarray
    sig: Signature

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.shape != (self.sig.dim,):
            raise ValueError(
                f"expected {self.sig.dim} coordinates for {self.sig}, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_parts(cls, spatial, temporal, sig: Signature | None = None) -> "MinkVec":
        spatial = np.atleast_1d(np.asarray(spatial, dtype=float))
        temporal = np.atleast_1d(np.asarray(temporal, dtype=float))
        if sig is None:
            sig = Signature(spatial.size, temporal.size)
        return cls(np.concatenate([spatial, temporal]), sig)

    @property
    def spatial(self) -> np.ndarray:
        return self.coords[: self.sig.space_dim]

    @property
    def temporal(self) -> np.ndarray:
        return self.coords[self.sig.space_dim :]

    def _check(self, other: "MinkVec"):
        if self.sig != other.sig:
            raise SignatureMismatch(f"{self.sig} vs {other.sig}")

    def __add__(self, other: "MinkVec") -> "MinkVec":
        self._check(other)
        return MinkVec(self.coords + other.coords, self.sig)

    def __sub__(self, other: "MinkVec") -> "MinkVec":
        self._check(other)
        return MinkVec(self.coords - other.coords, self.sig)

    def __mul__(self, scalar: float) -> "MinkVec":
        return MinkVec(self.coords * float(scalar), self.sig)

    __rmul__ = __mul__

    def __neg__(self) -> "MinkVec":
        return MinkVec(-self.coords, self.sig)


def mink_inner(u: MinkVec, v: MinkVec) -> float:
    """Indefinite inner product; spatial part minus temporal part."""
    if u.sig != v.sig:
        raise SignatureMismatch(f"cannot pair vectors of {u.sig} and {v.sig}")
    return float(u.sig.inner(u.coords, v.coords))


def mink_sq(v: MinkVec) -> float:
    return mink_inner(v, v)


def proj_s(v: MinkVec) -> MinkVec:
    c = v.coords.copy()
    c[v.sig.space_dim :] = 0.0
    return MinkVec(c, v.sig)


def proj_t(v: MinkVec) -> MinkVec:
    c = v.coords.copy()
    c[: v.sig.space_dim] = 0.0
    return MinkVec(c, v.sig)


def spatial_norm(v) -> float:
    """Euclidean length of the spatial projection."""
    if isinstance(v, MinkVec):
        return float(np.linalg.norm(v.spatial))
    raise TypeError("spatial_norm expects a MinkVec")


def temporal_norm(v) -> float:
    """Positive-definite length of the temporal projection."""
    if isinstance(v, MinkVec):
        return float(np.linalg.norm(v.temporal))
    raise TypeError("temporal_norm expects a MinkVec")


def causal_class(v: MinkVec, tol: float | None = None) -> CausalClass:
    """Classify ``v`` by the sign of <v, v>.

    ``tol`` defaults to ``1e-12 * max(1, |coords|^2)`` (Euclidean norm of
    the coordinate array).
    """
    if tol is None:
        tol = DEFAULT_NULL_TOL * max(1.0, float(v.coords @ v.coords))
    if tol < 0:
        raise ValueError("tol must be non-negative")
    q = mink_sq(v)
    if q > tol:
        return CausalClass.SPACELIKE
    if q < -tol:
        return CausalClass.TIMELIKE
    return CausalClass.NULL


def block_isometry(sig: Signature, spatial_rot: np.ndarray, temporal_rot: np.ndarray):
    """Matrix of the block isometry ``diag(spatial_rot, temporal_rot)``."""
    m = np.zeros((sig.dim, sig.dim))
    m[: sig.space_dim, : sig.space_dim] = spatial_rot
    m[sig.space_dim :, sig.space_dim :] = temporal_rot
    return m


def boost(sig: Signature, rapidity: float, space_axis: int = 0, time_axis: int = 0):
    """Matrix of the boost mixing one spatial and one temporal axis."""
    m = np.eye(sig.dim)
    i, j = space_axis, sig.space_dim + time_axis
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    m[i, i] = ch
    m[j, j] = ch
    m[i, j] = sh
    m[j, i] = sh
    return m
