"""Linear algebra of spacelike subspaces of R^{n+m,k}.

A spacelike n-plane ``L`` projects injectively onto the spatial summand, so
it is the graph of a linear map ``B`` from ``H = pi_s(L)`` into the temporal
summand.  The singular value decomposition of ``B`` (positive-definite
metrics on both sides) produces the adapted frame used everywhere else:

* spatial unit vectors ``e_j^+`` (a basis of ``H`` followed by a basis of its
  spatial complement),
* temporal unit vectors ``e_j^-``,
* singular values ``0 <= lambda_j < 1``.

The vectors ``(e_j^+ + lambda_j e_j^-) / sqrt(1 - lambda_j^2)`` are an
orthonormal basis of ``L`` and the slope is ``1 / sqrt(1 - lambda_1^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioned, NotSpacelike, SignatureMismatch
from .mink import MinkVec, Signature

ILL_CONDITIONED_RTOL = 1e-10
LAMBDA_ZERO_TOL = 1e-13


def _as_rows(vectors, sig: Signature | None):
    if isinstance(vectors, np.ndarray):
        if sig is None:
            raise ValueError("a Signature is required when passing a raw array")
        return np.atleast_2d(np.asarray(vectors, dtype=float)), sig
    vectors = list(vectors)
    if not vectors:
        raise ValueError("empty basis")
    if not all(isinstance(v, MinkVec) for v in vectors):
        if sig is None:
            raise ValueError("a Signature is required when passing raw coordinates")
        return np.atleast_2d(np.asarray(vectors, dtype=float)), sig
    if sig is None:
        sig = vectors[0].sig
    for v in vectors:
        if v.sig != sig:
            raise SignatureMismatch(f"{v.sig} vs {sig}")
    return np.array([v.coords for v in vectors]), sig


@dataclass(frozen=True)
class SpacelikeSubspace:
    """Span of ``basis`` (rows); construction enforces the spacelike test."""

    basis: np.ndarray
    sig: Signature
    gram: np.ndarray = field(repr=False)

    @classmethod
    def from_vectors(cls, vectors, sig: Signature | None = None, rtol=ILL_CONDITIONED_RTOL):
        basis, sig = _as_rows(vectors, sig)
        if basis.shape[1] != sig.dim:
            raise ValueError(f"basis vectors must have {sig.dim} coordinates")
        if basis.shape[0] > sig.space_dim:
            raise NotSpacelike(
                f"a spacelike subspace of {sig} has dimension at most {sig.space_dim}"
            )
        gram = sig.gram(basis)
        gram = 0.5 * (gram + gram.T)
        ev = np.linalg.eigvalsh(gram)
        if ev[0] <= 0.0:
            raise NotSpacelike(f"Gram matrix is not positive definite (min eigenvalue {ev[0]:.3e})")
        if ev[0] < rtol * ev[-1]:
            raise IllConditioned(
                f"Gram matrix is near-degenerate: eigenvalue ratio {ev[0] / ev[-1]:.3e}"
            )
        basis = basis.copy()
        basis.setflags(write=False)
        gram.setflags(write=False)
        return cls(basis, sig, gram)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class SpacelikeFrame:
    sig: Signature
    e_plus: np.ndarray  # (n+m, D): first n span pi_s(L)
    e_minus: np.ndarray  # (k, D)
    lambdas: np.ndarray  # (n,), non-negative, descending
    tau: float
    L_basis_orthonormal: np.ndarray  # (n, D)

    @property
    def n(self) -> int:
        return self.lambdas.size

    @property
    def lambdas_full(self) -> np.ndarray:
        """Singular values padded with zeros to length k (for the N^- basis)."""
        k = self.sig.time_dim
        out = np.zeros(k)
        r = min(k, self.n)
        out[:r] = self.lambdas[:r]
        return out


@dataclass(frozen=True)
class NormalSplit:
    sig: Signature
    n_plus: np.ndarray  # (m, D), spacelike orthonormal
    n_minus: np.ndarray  # (k, D), timelike, <f, f> = -1

    def project_plus(self, v):
        v = np.asarray(v, dtype=float)
        return self.sig.inner(v[..., None, :], self.n_plus) @ self.n_plus

    def project_minus(self, v):
        v = np.asarray(v, dtype=float)
        return -self.sig.inner(v[..., None, :], self.n_minus) @ self.n_minus


def build_frame(L: SpacelikeSubspace) -> SpacelikeFrame:
    sig = L.sig
    s, k = sig.space_dim, sig.time_dim
    n = L.dim
    S = L.basis[:, :s]  # rows: pi_s of basis vectors
    T = L.basis[:, s:]
    # Full orthonormal basis of R^{s} whose first n columns span H = pi_s(L).
    Q, R = np.linalg.qr(S.T, mode="complete")
    Qh = Q[:, :n]
    # Coordinates of pi_s(b_i) in Qh:  S.T = Qh @ Rh
    Rh = R[:n, :n]
    if k == 0:
        U = np.zeros((0, 0))
        sv = np.zeros(0)
        V = np.eye(n)
    else:
        # B maps Qh-coordinates to temporal coordinates: T.T = Bm @ Rh
        Bm = np.linalg.solve(Rh.T, T).T  # (k, n)
        U, sv, Vt = np.linalg.svd(Bm, full_matrices=True)
        V = Vt.T
    lambdas = np.zeros(n)
    r = min(n, k)
    lambdas[:r] = sv[:r]
    lambdas[lambdas < LAMBDA_ZERO_TOL] = 0.0
    if np.any(lambdas >= 1.0):
        raise NotSpacelike("singular value >= 1: subspace is not spacelike")

    e_plus = np.zeros((s, sig.dim))
    e_plus[:n, :s] = (Qh @ V).T
    e_plus[n:, :s] = Q[:, n:].T
    e_minus = np.zeros((k, sig.dim))
    e_minus[:, s:] = U.T

    lam_k = np.zeros(n)
    lam_k[:r] = lambdas[:r]
    scale = 1.0 / np.sqrt(1.0 - lambdas**2)
    Lb = e_plus[:n].copy()
    Lb[:r] += lambdas[:r, None] * e_minus[:r]
    Lb *= scale[:, None]
    tau = float(scale.max()) if n else 1.0
    for a in (e_plus, e_minus, lambdas, Lb):
        a.setflags(write=False)
    return SpacelikeFrame(sig, e_plus, e_minus, lambdas, tau, Lb)


def slope(L: SpacelikeSubspace) -> float:
    """Largest spatial length of a unit vector of ``L`` (always >= 1)."""
    return build_frame(L).tau


def project_onto(L: SpacelikeSubspace, v, frame: SpacelikeFrame | None = None):
    """Orthogonal projection of ``v`` onto ``L``, built from the adapted frame.

    ``v`` may be a MinkVec (returns a MinkVec) or an array of shape (..., D).
    """
    if frame is None:
        frame = build_frame(L)
    sig = L.sig
    arr = v.coords if isinstance(v, MinkVec) else np.asarray(v, dtype=float)
    if isinstance(v, MinkVec) and v.sig != sig:
        raise SignatureMismatch(f"{v.sig} vs {sig}")
    n = frame.n
    r = min(n, sig.time_dim)
    # Euclidean coordinates in the adapted frame (both frames are Euclidean-orthonormal)
    vp = arr @ frame.e_plus[:n].T
    vm = np.zeros_like(vp)
    vm[..., :r] = arr @ frame.e_minus[:r].T
    lam = frame.lambdas
    coef = (vp - lam * vm) / (1.0 - lam**2)
    dirs = frame.e_plus[:n].copy()
    dirs[:r] += lam[:r, None] * frame.e_minus[:r]
    out = coef @ dirs
    if isinstance(v, MinkVec):
        return MinkVec(out, sig)
    return out


def normal_split(L: SpacelikeSubspace, frame: SpacelikeFrame | None = None) -> NormalSplit:
    if frame is None:
        frame = build_frame(L)
    n = frame.n
    lam = frame.lambdas_full
    nm = frame.e_minus.copy()
    r = min(n, frame.sig.time_dim)
    nm[:r] += lam[:r, None] * frame.e_plus[:r]
    nm /= np.sqrt(1.0 - lam**2)[:, None]
    n_plus = frame.e_plus[n:].copy()
    n_plus.setflags(write=False)
    nm.setflags(write=False)
    return NormalSplit(frame.sig, n_plus, nm)


def gram_projection(L: SpacelikeSubspace, v):
    """Projection onto ``L`` by solving the Gram system (independent route)."""
    arr = np.asarray(v.coords if isinstance(v, MinkVec) else v, dtype=float)
    rhs = L.sig.gram(L.basis, np.atleast_2d(arr))  # (n, batch)
    coef = np.linalg.solve(L.gram, rhs)
    out = coef.T @ L.basis
    return out.reshape(arr.shape)


def lorentz_norm(sig: Signature, v):
    """sqrt(|<v, v>|): the length used for spacelike and (positively) timelike vectors."""
    return np.sqrt(np.abs(sig.inner(v, v)))


def linear_bounds(frame: SpacelikeFrame, split: NormalSplit, V):
    """Evaluate the three projection bounds for a batch of vectors ``V``.

    Returns a dict of arrays ``(lhs, rhs)`` for keys ``"proj"``, ``"plus"``
    and ``"minus"``; the bounds hold when ``lhs <= rhs``.
    """
    from . import kernels

    return kernels.linear_bounds(
        V,
        frame.e_plus,
        frame.e_minus,
        frame.lambdas,
        split.n_plus,
        split.n_minus,
        frame.sig.space_dim,
        frame.tau,
    )


def random_spacelike_subspace(rng: np.random.Generator, n: int, m: int, k: int, max_tilt=0.95):
    """Random spacelike n-plane in R^{n+m,k} (rejection from tilted Gaussian bases)."""
    sig = Signature(n + m, k)
    while True:
        S = rng.standard_normal((n, n + m))
        T = rng.standard_normal((n, k))
        # scale temporal parts so that the graph map has norm below max_tilt
        alpha = rng.uniform(0.0, max_tilt)
        Bmap = T.T @ np.linalg.pinv(S.T)  # temporal = Bmap @ spatial
        nb = np.linalg.norm(Bmap, 2) if k else 0.0
        if nb > 0:
            T = T * (alpha / nb)
        basis = np.hstack([S, T])
        try:
            return SpacelikeSubspace.from_vectors(basis, sig)
        except (NotSpacelike, IllConditioned):
            continue
