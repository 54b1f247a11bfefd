"""Smooth reconstruction of a finite element solution on a parametric chart.

Piecewise-linear solutions have no second derivatives, yet the comparison
map needs a Hessian.  When the mesh comes from a parametric surface, the
vertex values are fitted by a spectral expansion in chart coordinates
(Chebyshev polynomials, Fourier modes along periodic directions) subject to
the PDE ``Lap u = rhs`` at collocation points.  The PDE constraint pins the
trace of the Hessian; the vertex data pin the harmonic remainder.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

from .surface import ParametricSurface, local_geometry


@lru_cache(maxsize=None)
def _cheb_diff_matrix(deg):
    """Column i holds the Chebyshev coefficients of T_i'."""
    D = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        e = np.zeros(deg + 1)
        e[i] = 1.0
        d = C.chebder(e)
        D[: len(d), i] = d
    D.setflags(write=False)
    return D


def _cheb1d(t, deg, a, b):
    s = 2.0 / (b - a)
    x = s * (np.asarray(t) - a) - 1.0
    V = C.chebvander(x, deg)
    D = _cheb_diff_matrix(deg)
    V1 = V @ D
    return V, s * V1, s * s * (V1 @ D)


def _fourier1d(t, J):
    j = np.arange(1, J + 1)
    ang = np.asarray(t)[:, None] * j
    c, s = np.cos(ang), np.sin(ang)
    one = np.ones((len(t), 1))
    zero = np.zeros((len(t), 1))
    V = np.hstack([one, c, s])
    V1 = np.hstack([zero, -s * j, c * j])
    V2 = np.hstack([zero, -c * j * j, -s * j * j])
    return V, V1, V2


class SpectralBasis:
    """Tensor basis adapted to a chart domain; returns values and derivatives."""

    def __init__(self, domain, degree: int = 16, modes: int | None = None):
        self.domain = domain
        self.degree = degree
        self.modes = degree // 2 if modes is None else modes
        if domain.kind == "disk":
            R = domain.bounds[0]
            self._axes = ((-R, R), (-R, R))
            self.pairs = [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]
        elif domain.kind == "band":
            lo, hi = domain.bounds
            self._axes = ((lo, hi), None)
            self.pairs = [(i, j) for i in range(degree + 1) for j in range(2 * self.modes + 1)]
        else:
            lo0, hi0, lo1, hi1 = domain.bounds
            self._axes = ((lo0, hi0), (lo1, hi1))
            self.pairs = [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]
        self._i = np.array([p[0] for p in self.pairs])
        self._j = np.array([p[1] for p in self.pairs])

    def __len__(self):
        return len(self.pairs)

    def _factors(self, P):
        A = _cheb1d(P[:, 0], self.degree, *self._axes[0])
        if self._axes[1] is None:
            return A, _fourier1d(P[:, 1], self.modes)
        return A, _cheb1d(P[:, 1], self.degree, *self._axes[1])

    def evaluate(self, P):
        """Values (N, B), first derivatives (N, 2, B), second (N, 2, 2, B)."""
        P = np.atleast_2d(P)
        A, Bv = self._factors(P)
        a = [x[:, self._i] for x in A]
        b = [x[:, self._j] for x in Bv]
        V = a[0] * b[0]
        d1 = np.stack([a[1] * b[0], a[0] * b[1]], 1)
        d2 = np.empty((P.shape[0], 2, 2, len(self)))
        d2[:, 0, 0] = a[2] * b[0]
        d2[:, 1, 1] = a[0] * b[2]
        d2[:, 0, 1] = d2[:, 1, 0] = a[1] * b[1]
        return V, d1, d2

    def contract(self, P, coef):
        """Value, gradient and Hessian of ``sum coef_b phi_b`` without the full basis."""
        P = np.atleast_2d(P)
        (a0, a1, a2), (b0, b1, b2) = self._factors(P)
        Cm = np.zeros((a0.shape[1], b0.shape[1]))
        Cm[self._i, self._j] = coef

        def q(a, b):
            return np.einsum("ni,ni->n", a @ Cm, b)

        u = q(a0, b0)
        du = np.stack([q(a1, b0), q(a0, b1)], -1)
        ddu = np.empty((len(P), 2, 2))
        ddu[:, 0, 0] = q(a2, b0)
        ddu[:, 1, 1] = q(a0, b2)
        ddu[:, 0, 1] = ddu[:, 1, 0] = q(a1, b1)
        return u, du, ddu


def laplacian_rows(geo, d1, d2):
    """Laplace-Beltrami of every basis function: g^ij (d_ij - Gamma^k_ij d_k)."""
    hess = d2 - np.einsum("nkij,nkb->nijb", geo.christoffel, d1)
    return np.einsum("nij,nijb->nb", geo.ginv, hess)


@dataclass
class FieldValues:
    u: np.ndarray  # (N,)
    du: np.ndarray  # chart gradient (N, 2)
    grad: np.ndarray  # ambient gradient, tangent (N, D)
    hess: np.ndarray  # covariant Hessian in the orthonormal frame (N, 2, 2)
    lap: np.ndarray  # (N,)
    geo: object


class SmoothField:
    """Spectral fit ``u(P) = sum c_b phi_b(P)`` on a parametric surface."""

    def __init__(self, surface: ParametricSurface, basis: SpectralBasis, coef,
                 pde_residual: float, data_residual: float):
        self.surface = surface
        self.basis = basis
        self.coef = np.asarray(coef)
        self.pde_residual = pde_residual
        self.data_residual = data_residual

    @classmethod
    def fit(cls, surface: ParametricSurface, points, values, weights, rhs=None,
            degree: int = 16, colloc_res: int | None = None, rcond: float = 1e-11):
        """Weighted least-squares fit of ``values`` at chart ``points``.

        ``rhs`` (callable on chart points) imposes ``Lap u = rhs`` at a
        Gauss grid first; the data then select a member of the solution set.
        """
        basis = SpectralBasis(surface.domain, degree)
        V, _, _ = basis.evaluate(points)
        sw = np.sqrt(np.asarray(weights, dtype=float))
        y = np.asarray(values, dtype=float)
        if rhs is None:
            coef, *_ = np.linalg.lstsq(V * sw[:, None], y * sw, rcond=None)
            return cls(surface, basis, coef, np.nan, _wrms(V @ coef - y, weights))
        res = colloc_res or max(8, degree // 2 + 4)
        Q, wq = surface.domain.quadrature(res, 4)
        geo = local_geometry(surface, Q)
        _, d1, d2 = basis.evaluate(Q)
        Lrow = laplacian_rows(geo, d1, d2)
        target = rhs(Q)
        U, s, Vt = np.linalg.svd(Lrow, full_matrices=False)
        r = int(np.sum(s > rcond * s[0]))
        cp = Vt[:r].T @ ((U[:, :r].T @ target) / s[:r])
        N = Vt[r:].T
        z, *_ = np.linalg.lstsq((V @ N) * sw[:, None], (y - V @ cp) * sw, rcond=None)
        coef = cp + N @ z
        pde = float(np.max(np.abs(Lrow @ coef - target)) / max(np.max(np.abs(target)), 1.0))
        return cls(surface, basis, coef, pde, _wrms(V @ coef - y, weights))

    def values(self, P, geo=None) -> FieldValues:
        P = np.atleast_2d(P)
        geo = local_geometry(self.surface, P) if geo is None else geo
        u, du, ddu = self.basis.contract(P, self.coef)
        up = np.einsum("nij,nj->ni", geo.ginv, du)
        grad = np.einsum("ni,nid->nd", up, geo.dX)
        cov = ddu - np.einsum("nkij,nk->nij", geo.christoffel, du)
        hess = np.einsum("nia,nij,njb->nab", geo.frame, cov, geo.frame)
        lap = np.einsum("nij,nij->n", geo.ginv, cov)
        return FieldValues(u, du, grad, hess, lap, geo)


def _wrms(r, w):
    w = np.asarray(w, dtype=float)
    return float(np.sqrt(np.sum(w * r * r) / np.sum(w)))
