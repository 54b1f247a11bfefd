"""Spacelike surfaces in R^{n+m,k}: parametric immersions and triangle meshes.

The parametric backend evaluates an immersion together with its first and
second partial derivatives and is the accuracy reference.  The mesh backend
stores ambient vertex coordinates and feeds the finite element solver.

All routines are written for two-dimensional surfaces (n = 2); simplex
volumes and the Gram-based quantities are dimension-agnostic.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from .errors import (
    BoundaryCurvatureUnavailable,
    InvalidMesh,
    MeshDegenerate,
    NotSpacelike,
    SlopeCapExceeded,
    Unsupported,
)
from .mink import Signature

logger = logging.getLogger(__name__)

DEFAULT_SLOPE_CAP = 1e3
TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# parameter domains


@dataclass(frozen=True)
class Domain:
    """Parameter domain of a surface chart.

    ``disk``  : Cartesian chart points ``p`` with ``|p| <= radius``.
    ``band``  : ``lo <= p[0] <= hi``, ``p[1]`` periodic in ``[0, 2*pi)``.
    ``rect``  : ``lo0 <= p[0] <= hi0``, ``lo1 <= p[1] <= hi1``.
    """

    kind: str
    bounds: tuple

    def __post_init__(self):
        if self.kind not in ("disk", "band", "rect"):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def disk(cls, radius: float) -> "Domain":
        return cls("disk", (float(radius),))

    @classmethod
    def band(cls, lo: float, hi: float) -> "Domain":
        if not hi > lo:
            raise ValueError("band needs hi > lo")
        return cls("band", (float(lo), float(hi)))

    @classmethod
    def rect(cls, lo0, hi0, lo1, hi1) -> "Domain":
        return cls("rect", (float(lo0), float(hi0), float(lo1), float(hi1)))

    @property
    def scale(self) -> float:
        if self.kind == "disk":
            return self.bounds[0]
        if self.kind == "band":
            return self.bounds[1] - self.bounds[0]
        lo0, hi0, lo1, hi1 = self.bounds
        return max(hi0 - lo0, hi1 - lo1)

    @property
    def area(self) -> float:
        if self.kind == "disk":
            return np.pi * self.bounds[0] ** 2
        if self.kind == "band":
            return (self.bounds[1] - self.bounds[0]) * TWO_PI
        lo0, hi0, lo1, hi1 = self.bounds
        return (hi0 - lo0) * (hi1 - lo1)

    def wrap(self, P):
        P = np.array(P, dtype=float)
        if self.kind == "band":
            P[..., 1] = np.mod(P[..., 1], TWO_PI)
        return P

    def boundary_distance(self, P):
        """Distance (in parameter units) from ``P`` to the boundary; negative outside."""
        P = np.asarray(P, dtype=float)
        if self.kind == "disk":
            return self.bounds[0] - np.linalg.norm(P, axis=-1)
        if self.kind == "band":
            lo, hi = self.bounds
            return np.minimum(P[..., 0] - lo, hi - P[..., 0])
        lo0, hi0, lo1, hi1 = self.bounds
        return np.minimum.reduce(
            [P[..., 0] - lo0, hi0 - P[..., 0], P[..., 1] - lo1, hi1 - P[..., 1]]
        )

    def contains(self, P, margin: float = 0.0):
        return self.boundary_distance(P) > margin

    def sample_uniform(self, rng: np.random.Generator, size: int):
        """Uniform samples in parameter space (density ``1 / area``)."""
        if self.kind == "disk":
            R = self.bounds[0]
            rho = R * np.sqrt(rng.random(size))
            phi = TWO_PI * rng.random(size)
            return np.stack([rho * np.cos(phi), rho * np.sin(phi)], axis=-1)
        if self.kind == "band":
            lo, hi = self.bounds
            return np.stack([lo + (hi - lo) * rng.random(size), TWO_PI * rng.random(size)], -1)
        lo0, hi0, lo1, hi1 = self.bounds
        return np.stack(
            [lo0 + (hi0 - lo0) * rng.random(size), lo1 + (hi1 - lo1) * rng.random(size)], -1
        )

    # -- quadrature ---------------------------------------------------------

    def quadrature(self, res: int, order: int = 4):
        """Composite tensor Gauss-Legendre rule: points (Q, 2), weights (Q,).

        The disk rule works in polar coordinates of the chart and carries the
        ``rho`` Jacobian in its weights.
        """
        x, w = np.polynomial.legendre.leggauss(order)
        if self.kind == "disk":
            R = self.bounds[0]
            a, wa = _composite(x, w, 0.0, R, res)
            b, wb = _composite(x, w, 0.0, TWO_PI, 2 * res)
            A, B = np.meshgrid(a, b, indexing="ij")
            W = np.outer(wa * a, wb)
            P = np.stack([A * np.cos(B), A * np.sin(B)], -1)
        elif self.kind == "band":
            lo, hi = self.bounds
            a, wa = _composite(x, w, lo, hi, res)
            b, wb = _composite(x, w, 0.0, TWO_PI, 2 * res)
            A, B = np.meshgrid(a, b, indexing="ij")
            W = np.outer(wa, wb)
            P = np.stack([A, B], -1)
        else:
            lo0, hi0, lo1, hi1 = self.bounds
            a, wa = _composite(x, w, lo0, hi0, res)
            b, wb = _composite(x, w, lo1, hi1, res)
            A, B = np.meshgrid(a, b, indexing="ij")
            W = np.outer(wa, wb)
            P = np.stack([A, B], -1)
        return P.reshape(-1, 2), W.ravel()

    def boundary_quadrature(self, res: int, order: int = 4):
        """Rule for boundary integrals: points, parameter velocity, weights.

        ``integral over the boundary of phi ds`` is
        ``sum(w * phi(P) * |dF(P) . T|)`` with ``T`` the returned velocity.
        Boundary curves are traversed with the domain on their left.
        """
        x, w = np.polynomial.legendre.leggauss(order)
        pts, vel, wts = [], [], []
        if self.kind == "disk":
            R = self.bounds[0]
            t, wt = _composite(x, w, 0.0, TWO_PI, 2 * res)
            pts.append(np.stack([R * np.cos(t), R * np.sin(t)], -1))
            vel.append(np.stack([-R * np.sin(t), R * np.cos(t)], -1))
            wts.append(wt)
        elif self.kind == "band":
            lo, hi = self.bounds
            t, wt = _composite(x, w, 0.0, TWO_PI, 2 * res)
            for r0, sgn in ((hi, 1.0), (lo, -1.0)):
                pts.append(np.stack([np.full_like(t, r0), t], -1))
                vel.append(np.stack([np.zeros_like(t), sgn * np.ones_like(t)], -1))
                wts.append(wt)
        else:
            lo0, hi0, lo1, hi1 = self.bounds
            a, wa = _composite(x, w, lo0, hi0, res)
            b, wb = _composite(x, w, lo1, hi1, res)
            one_a, one_b = np.ones_like(a), np.ones_like(b)
            pts += [
                np.stack([a, lo1 * one_a], -1),
                np.stack([hi0 * one_b, b], -1),
                np.stack([a, hi1 * one_a], -1),
                np.stack([lo0 * one_b, b], -1),
            ]
            vel += [
                np.stack([one_a, 0 * one_a], -1),
                np.stack([0 * one_b, one_b], -1),
                np.stack([-one_a, 0 * one_a], -1),
                np.stack([0 * one_b, -one_b], -1),
            ]
            wts += [wa, wb, wa, wb]
        return np.concatenate(pts), np.concatenate(vel), np.concatenate(wts)

    def grid(self, res: int, refine: int = 1):
        """Sample grid (including the boundary) used for slope maxima."""
        n = res * refine
        if self.kind == "disk":
            R = self.bounds[0]
            rho = np.linspace(0.0, R, n + 1)
            phi = np.linspace(0.0, TWO_PI, 2 * n, endpoint=False)
            A, B = np.meshgrid(rho, phi, indexing="ij")
            return np.stack([A * np.cos(B), A * np.sin(B)], -1).reshape(-1, 2)
        if self.kind == "band":
            lo, hi = self.bounds
            a = np.linspace(lo, hi, n + 1)
            b = np.linspace(0.0, TWO_PI, 2 * n, endpoint=False)
        else:
            lo0, hi0, lo1, hi1 = self.bounds
            a = np.linspace(lo0, hi0, n + 1)
            b = np.linspace(lo1, hi1, n + 1)
        A, B = np.meshgrid(a, b, indexing="ij")
        return np.stack([A, B], -1).reshape(-1, 2)


def _composite(x, w, a, b, ncell):
    edges = np.linspace(a, b, ncell + 1)
    h = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + 0.5 * h[:, None] * x[None, :]).ravel()
    wts = (0.5 * h[:, None] * w[None, :]).ravel()
    return pts, wts


# ---------------------------------------------------------------------------
# parametric surfaces


Immersion = Callable[[np.ndarray], tuple]


class ParametricSurface:
    """Immersion of a two-dimensional parameter domain into R^{n+m,k}.

    ``func(P)`` takes points of shape (N, 2) and returns ``(F, dF, d2F)``
    with shapes (N, D), (N, 2, D) and (N, 2, 2, D).
    """

    n = 2

    def __init__(self, name: str, sig: Signature, domain: Domain, func: Immersion,
                 params: dict | None = None, slope_cap: float = DEFAULT_SLOPE_CAP,
                 validate_res: int = 16):
        self.name = name
        self.sig = sig
        self.domain = domain
        self.func = func
        self.params = dict(params or {})
        self.slope_cap = slope_cap
        if validate_res:
            self._validate(validate_res)

    @classmethod
    def from_immersion(cls, name, sig, domain, F: Callable[[np.ndarray], np.ndarray], **kw):
        """Wrap a position-only immersion; derivatives by central differences."""
        h = 1e-5 * domain.scale

        def func(P):
            P = np.asarray(P, dtype=float)
            e = np.eye(2) * h
            X = F(P)
            d1 = np.stack([(F(P + e[i]) - F(P - e[i])) / (2 * h) for i in range(2)], 1)
            d2 = np.empty(P.shape[:1] + (2, 2) + X.shape[-1:])
            for i in range(2):
                d2[:, i, i] = (F(P + e[i]) - 2 * X + F(P - e[i])) / h**2
            d2[:, 0, 1] = d2[:, 1, 0] = (
                F(P + e[0] + e[1]) - F(P + e[0] - e[1]) - F(P - e[0] + e[1]) + F(P - e[0] - e[1])
            ) / (4 * h * h)
            return X, d1, d2

        return cls(name, sig, domain, func, **kw)

    def __repr__(self):
        return f"ParametricSurface({self.name!r}, {self.sig}, {self.domain.kind})"

    def evaluate(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return self.func(P)

    def position(self, P):
        return self.evaluate(P)[0]

    def _validate(self, res):
        P = self.domain.grid(res)
        g = induced_metric(self, P)
        bad = np.linalg.eigvalsh(g)[:, 0] <= 0
        if np.any(bad):
            raise NotSpacelike(
                f"{self.name}: tangent plane not spacelike", location=P[np.argmax(bad)].tolist()
            )


@dataclass
class LocalGeometry:
    """Pointwise differential geometry of a parametric surface."""

    P: np.ndarray
    X: np.ndarray  # positions (N, D)
    dX: np.ndarray  # (N, 2, D)
    ddX: np.ndarray  # (N, 2, 2, D)
    g: np.ndarray  # induced metric (N, 2, 2)
    ginv: np.ndarray
    sqrt_det: np.ndarray
    frame: np.ndarray  # E with e_a = sum_i E[i, a] dX_i  (N, 2, 2)
    tangent: np.ndarray  # orthonormal tangent vectors (N, 2, D)
    II_param: np.ndarray  # normal part of ddX (N, 2, 2, D)
    II: np.ndarray  # second fundamental form in the orthonormal frame (N, 2, 2, D)
    H: np.ndarray  # mean curvature vector (N, D)
    christoffel: np.ndarray  # Gamma^k_ij stored as [N, k, i, j]


def local_geometry(S: ParametricSurface, P) -> LocalGeometry:
    sig = S.sig
    P = np.atleast_2d(np.asarray(P, dtype=float))
    X, dX, ddX = S.evaluate(P)
    g = sig.inner(dX[:, :, None, :], dX[:, None, :, :])
    ev = np.linalg.eigvalsh(g)
    if np.any(ev[:, 0] <= 0):
        i = int(np.argmin(ev[:, 0]))
        raise NotSpacelike(f"{S.name}: non-spacelike tangent plane", location=P[i].tolist())
    ginv = np.linalg.inv(g)
    sqrt_det = np.sqrt(np.linalg.det(g))
    Lc = np.linalg.cholesky(g)
    E = np.swapaxes(np.linalg.inv(Lc), 1, 2)  # E^T g E = I
    tangent = np.einsum("nia,nid->nad", E, dX)
    # first-kind Christoffel symbols <d_i d_j X, d_l X>
    c1 = sig.inner(ddX[:, :, :, None, :], dX[:, None, None, :, :])
    christoffel = np.einsum("nkl,nijl->nkij", ginv, c1)
    II_param = ddX - np.einsum("nkij,nkd->nijd", christoffel, dX)
    II = np.einsum("nia,njb,nijd->nabd", E, E, II_param)
    H = II[:, 0, 0] + II[:, 1, 1]
    return LocalGeometry(P, X, dX, ddX, g, ginv, sqrt_det, E, tangent, II_param, II, H,
                         christoffel)


def induced_metric(S, sample):
    """First fundamental form.

    Parametric surfaces: ``sample`` is a parameter point (or array of them)
    and the metric is taken in parameter coordinates.  Meshes: ``sample`` is
    a cell index (or array) and the metric is the Gram matrix of the cell's
    edge vectors from its first vertex.
    """
    if isinstance(S, SurfaceMesh):
        c = np.atleast_1d(sample)
        E = S.vertices[S.cells[c, 1:]] - S.vertices[S.cells[c, :1]]
        G = S.sig.inner(E[:, :, None, :], E[:, None, :, :])
        bad = np.linalg.eigvalsh(G)[:, 0] <= 0
        if np.any(bad):
            raise NotSpacelike("non-spacelike cell", location=int(c[np.argmax(bad)]))
        return G[0] if np.ndim(sample) == 0 else G
    P = np.asarray(sample, dtype=float)
    single = P.ndim == 1
    _, dX, _ = S.evaluate(np.atleast_2d(P))
    g = S.sig.inner(dX[:, :, None, :], dX[:, None, :, :])
    return g[0] if single else g


# ---------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureData:
    H: np.ndarray
    II: np.ndarray
    H_s_norm: np.ndarray
    H_t_norm: np.ndarray
    H_mink_sq: np.ndarray
    gauss_K: np.ndarray  # from the Gauss equation
    tangent: np.ndarray


def _curvature_from(sig: Signature, II, H, tangent):
    H_s, H_t = sig.split(H)
    K = (
        sig.inner(II[:, 0, 0], II[:, 1, 1]) - sig.inner(II[:, 0, 1], II[:, 0, 1])
    )
    return CurvatureData(
        H=H,
        II=II,
        H_s_norm=np.linalg.norm(H_s, axis=-1),
        H_t_norm=np.linalg.norm(H_t, axis=-1),
        H_mink_sq=sig.inner(H, H),
        gauss_K=K,
        tangent=tangent,
    )


def second_fundamental_form(S, sample) -> CurvatureData:
    """II, H and derived norms at parameter points or mesh vertices."""
    if isinstance(S, SurfaceMesh):
        v = np.atleast_1d(np.asarray(sample, dtype=np.int64))
        if np.any(S.boundary_vertex_mask[v]):
            raise BoundaryCurvatureUnavailable(
                f"vertex {int(v[np.argmax(S.boundary_vertex_mask[v])])} lies on the boundary"
            )
        II, H, T = S._vertex_curvature(v)
        return _curvature_from(S.sig, II, H, T)
    geo = local_geometry(S, np.atleast_2d(sample))
    return _curvature_from(S.sig, geo.II, geo.H, geo.tangent)


def gauss_curvature(S, sample, fd_step: float | None = None):
    """Intrinsic Gauss curvature.

    Parametric: Brioschi's formula from the metric and its derivatives
    (first derivatives exact, second by central differences of the exact
    first derivatives).  Mesh: angle defect over a third of the incident
    area at interior vertices.
    """
    if getattr(S, "n", None) != 2:
        raise Unsupported("Gauss curvature is only defined here for surfaces")
    if isinstance(S, SurfaceMesh):
        v = np.atleast_1d(np.asarray(sample, dtype=np.int64))
        if np.any(S.boundary_vertex_mask[v]):
            raise BoundaryCurvatureUnavailable("angle defect needs an interior vertex")
        defect = 2 * np.pi - S.vertex_angle_sums()[v]
        K = defect / (S.vertex_areas()[v] * 1.0)
        return K[0] if np.ndim(sample) == 0 else K
    P = np.atleast_2d(np.asarray(sample, dtype=float))
    h = fd_step if fd_step is not None else 1e-4 * S.domain.scale

    def metric_and_d1(Q):
        _, dX, ddX = S.evaluate(Q)
        g = S.sig.inner(dX[:, :, None, :], dX[:, None, :, :])
        # dg[n, k, i, j] = d_k g_ij
        t = S.sig.inner(ddX[:, :, :, None, :], dX[:, None, None, :, :])  # <d_k d_i X, d_j X>
        dg = t + np.swapaxes(t, 2, 3)
        return g, dg

    g, dg = metric_and_d1(P)
    e0, e1 = np.array([h, 0.0]), np.array([0.0, h])
    _, dgp0 = metric_and_d1(P + e0)
    _, dgm0 = metric_and_d1(P - e0)
    _, dgp1 = metric_and_d1(P + e1)
    _, dgm1 = metric_and_d1(P - e1)
    d0dg = (dgp0 - dgm0) / (2 * h)  # d_0 (d_k g_ij)
    d1dg = (dgp1 - dgm1) / (2 * h)
    E_, F_, G_ = g[:, 0, 0], g[:, 0, 1], g[:, 1, 1]
    Eu, Ev = dg[:, 0, 0, 0], dg[:, 1, 0, 0]
    Fu, Fv = dg[:, 0, 0, 1], dg[:, 1, 0, 1]
    Gu, Gv = dg[:, 0, 1, 1], dg[:, 1, 1, 1]
    Evv = d1dg[:, 1, 0, 0]
    Guu = d0dg[:, 0, 1, 1]
    Fuv = 0.5 * (d1dg[:, 0, 0, 1] + d0dg[:, 1, 0, 1])
    M1 = np.empty(P.shape[:1] + (3, 3))
    M1[:, 0] = np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1)
    M1[:, 1] = np.stack([Fv - 0.5 * Gu, E_, F_], -1)
    M1[:, 2] = np.stack([0.5 * Gv, F_, G_], -1)
    M2 = np.zeros_like(M1)
    M2[:, 0] = np.stack([np.zeros_like(E_), 0.5 * Ev, 0.5 * Gu], -1)
    M2[:, 1] = np.stack([0.5 * Ev, E_, F_], -1)
    M2[:, 2] = np.stack([0.5 * Gu, F_, G_], -1)
    K = (np.linalg.det(M1) - np.linalg.det(M2)) / (E_ * G_ - F_**2) ** 2
    return K[0] if np.asarray(sample).ndim == 1 else K


# ---------------------------------------------------------------------------
# slope


def pointwise_slope(sig: Signature, tangent_rows):
    """tau(x) for batches of tangent bases ``tangent_rows`` (N, n, D).

    Largest generalized eigenvalue of (spatial Gram, Minkowski Gram), square
    rooted; equals the slope computed from the adapted frame.
    """
    T = np.asarray(tangent_rows, dtype=float)
    s = sig.space_dim
    G = sig.inner(T[:, :, None, :], T[:, None, :, :])
    Ts = T[..., :s]
    Ps = np.einsum("nid,njd->nij", Ts, Ts)
    Lc = np.linalg.cholesky(G)
    Li = np.linalg.inv(Lc)
    A = Li @ Ps @ np.swapaxes(Li, 1, 2)
    ev = np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, 1, 2)))
    return np.sqrt(np.maximum(ev[:, -1], 1.0))


@dataclass
class SlopeField:
    samples: np.ndarray  # parameter points or cell indices
    tau_x: np.ndarray
    tau: float
    argmax: int
    converged: bool = True
    rounds: int = 0


def slope_field(S, res: int = 32, rtol: float = 1e-6, max_rounds: int = 3,
                cap: float | None = None) -> SlopeField:
    """Pointwise slope and its maximum.

    Parametric surfaces: the grid maximum is polished by a constrained local
    search and accepted once a refinement moves it by less than ``rtol``
    (relative), refining at most ``max_rounds`` times.  Meshes: slope of
    every (planar) cell.
    """
    if isinstance(S, SurfaceMesh):
        E = S.vertices[S.cells[:, 1:]] - S.vertices[S.cells[:, :1]]
        t = pointwise_slope(S.sig, E)
        i = int(np.argmax(t))
        sf = SlopeField(np.arange(len(t)), t, float(t[i]), i)
        _check_cap(sf.tau, cap if cap is not None else DEFAULT_SLOPE_CAP)
        return sf
    cap = S.slope_cap if cap is None else cap
    prev = None
    refine = 1
    for rnd in range(max_rounds + 1):
        P = S.domain.grid(res, refine)
        _, dX, _ = S.evaluate(P)
        t = pointwise_slope(S.sig, dX)
        i = int(np.argmax(t))
        p_best, t_best = _polish_slope(S, P[i], float(t[i]))
        P, t = np.vstack([P, p_best[None]]), np.append(t, t_best)
        i = int(np.argmax(t))
        cur = SlopeField(P, t, float(t[i]), i, rounds=rnd)
        _check_cap(cur.tau, cap)
        if prev is not None and abs(cur.tau - prev.tau) <= rtol * cur.tau:
            return cur
        prev = cur
        refine *= 2
    cur.converged = False
    warnings.warn(f"{S.name}: slope maximum not stable after {max_rounds} refinements")
    return cur


def _polish_slope(S, p0, t0):
    """Local maximum of the pointwise slope near ``p0``; falls back to ``p0``."""
    dom = S.domain

    def neg(p):
        _, dX, _ = S.evaluate(dom.wrap(p[None]))
        return -float(pointwise_slope(S.sig, dX)[0])

    def inside(p):
        return float(dom.boundary_distance(dom.wrap(p[None]))[0])

    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            res = minimize(neg, p0, method="SLSQP", constraints=[{"type": "ineq", "fun": inside}],
                           options={"ftol": 1e-15, "maxiter": 100})
        except (ValueError, np.linalg.LinAlgError):
            return p0, t0
    p = dom.wrap(res.x[None])[0]
    if inside(p) < -1e-12 or not np.isfinite(res.fun) or -res.fun <= t0:
        return p0, t0
    return p, -float(res.fun)


def _check_cap(tau, cap):
    if tau > cap:
        raise SlopeCapExceeded(f"slope {tau:.4g} exceeds cap {cap:.4g}")


# ---------------------------------------------------------------------------
# volumes


def volume(S, res: int = 32, order: int = 4) -> float:
    if isinstance(S, SurfaceMesh):
        return float(S.cell_volumes().sum())
    P, w = S.domain.quadrature(res, order)
    g = induced_metric(S, P)
    return float(np.sum(w * np.sqrt(np.linalg.det(g))))


def boundary_volume(S, res: int = 32, order: int = 4) -> float:
    if isinstance(S, SurfaceMesh):
        return float(S.boundary_face_volumes().sum())
    P, T, w = S.domain.boundary_quadrature(res, order)
    _, dX, _ = S.evaluate(P)
    vel = np.einsum("ni,nid->nd", T, dX)
    return float(np.sum(w * np.sqrt(S.sig.inner(vel, vel))))


def integrate(S: ParametricSurface, fn, res: int = 32, order: int = 4) -> float:
    """Integral over the surface of ``fn(LocalGeometry) -> (Q,)`` values."""
    P, w = S.domain.quadrature(res, order)
    geo = local_geometry(S, P)
    return float(np.sum(w * geo.sqrt_det * fn(geo)))


# ---------------------------------------------------------------------------
# meshes


@dataclass
class SurfaceMesh:
    """Triangle mesh with ambient vertex coordinates.

    ``boundary`` holds oriented boundary edges (the orientation induced by
    the cells).  ``params`` and ``source`` link vertices back to the
    parametric surface the mesh was sampled from, when there is one.
    """

    vertices: np.ndarray
    cells: np.ndarray
    sig: Signature
    boundary: np.ndarray | None = None
    params: np.ndarray | None = None
    source: ParametricSurface | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.sig.dim:
            raise InvalidMesh(f"vertices must have {self.sig.dim} coordinates")
        if self.cells.ndim != 2 or self.cells.shape[1] != 3:
            raise InvalidMesh("cells must be triangles")
        if self.cells.min() < 0 or self.cells.max() >= len(self.vertices):
            raise InvalidMesh("cell index out of range")
        derived = _boundary_edges(self.cells)
        if self.boundary is None:
            self.boundary = derived
        else:
            self.boundary = np.asarray(self.boundary, dtype=np.int64).reshape(-1, 2)
            if {tuple(sorted(e)) for e in self.boundary} != {tuple(sorted(e)) for e in derived}:
                raise InvalidMesh("given boundary faces differ from the unshared cell faces")
        E = self.vertices[self.cells[:, 1:]] - self.vertices[self.cells[:, :1]]
        G = self.sig.inner(E[:, :, None, :], E[:, None, :, :])
        ev = np.linalg.eigvalsh(G)
        scale = np.abs(ev).max(axis=1)
        flat = np.abs(ev[:, 0]) <= 1e-12 * scale
        if np.any(flat):
            raise MeshDegenerate(f"{int(flat.sum())} degenerate cells, first {int(np.argmax(flat))}")
        if np.any(ev[:, 0] < 0):
            raise NotSpacelike("non-spacelike cell", location=int(np.argmax(ev[:, 0] < 0)))

    n = 2

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def cell_volumes(self):
        if "vol" not in self._cache:
            E = self.vertices[self.cells[:, 1:]] - self.vertices[self.cells[:, :1]]
            G = self.sig.inner(E[:, :, None, :], E[:, None, :, :])
            self._cache["vol"] = 0.5 * np.sqrt(np.linalg.det(G))
        return self._cache["vol"]

    def mesh_size(self) -> float:
        """Longest edge in the induced metric."""
        if "h" not in self._cache:
            C = self.cells
            E = np.concatenate([self.vertices[C[:, i]] - self.vertices[C[:, (i + 1) % 3]]
                                for i in range(3)])
            self._cache["h"] = float(np.sqrt(self.sig.inner(E, E).max()))
        return self._cache["h"]

    def boundary_face_volumes(self):
        e = self.vertices[self.boundary[:, 1]] - self.vertices[self.boundary[:, 0]]
        return np.sqrt(self.sig.inner(e, e))

    def vertex_areas(self):
        """Lumped (one third) vertex areas."""
        if "varea" not in self._cache:
            a = np.zeros(self.n_vertices)
            np.add.at(a, self.cells.ravel(), np.repeat(self.cell_volumes() / 3.0, 3))
            self._cache["varea"] = a
        return self._cache["varea"]

    def boundary_vertex_lengths(self):
        """Lumped (one half) boundary lengths per vertex."""
        b = np.zeros(self.n_vertices)
        np.add.at(b, self.boundary.ravel(), np.repeat(self.boundary_face_volumes() / 2.0, 2))
        return b

    @property
    def boundary_vertex_mask(self):
        if "bmask" not in self._cache:
            m = np.zeros(self.n_vertices, dtype=bool)
            m[self.boundary.ravel()] = True
            self._cache["bmask"] = m
        return self._cache["bmask"]

    def adjacency(self):
        if "adj" not in self._cache:
            c = self.cells
            i = np.concatenate([c[:, 0], c[:, 1], c[:, 2], c[:, 1], c[:, 2], c[:, 0]])
            j = np.concatenate([c[:, 1], c[:, 2], c[:, 0], c[:, 0], c[:, 1], c[:, 2]])
            A = sparse.csr_matrix((np.ones(len(i)), (i, j)), shape=(self.n_vertices,) * 2)
            A.data[:] = 1.0
            self._cache["adj"] = A
        return self._cache["adj"]

    def vertex_cells(self):
        """CSR matrix vertex x cell incidence."""
        if "vc" not in self._cache:
            T = len(self.cells)
            rows = self.cells.ravel()
            cols = np.repeat(np.arange(T), 3)
            self._cache["vc"] = sparse.csr_matrix(
                (np.ones(len(rows)), (rows, cols)), shape=(self.n_vertices, T)
            )
        return self._cache["vc"]

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components

        return connected_components(self.adjacency(), directed=False)[0] == 1

    def corner_angles(self):
        """Interior angles (T, 3) measured with the induced metric."""
        X = self.vertices[self.cells]
        ang = np.empty(self.cells.shape)
        for c in range(3):
            a = X[:, (c + 1) % 3] - X[:, c]
            b = X[:, (c + 2) % 3] - X[:, c]
            ab = self.sig.inner(a, b)
            na = np.sqrt(self.sig.inner(a, a))
            nb = np.sqrt(self.sig.inner(b, b))
            ang[:, c] = np.arccos(np.clip(ab / (na * nb), -1.0, 1.0))
        return ang

    def vertex_angle_sums(self):
        s = np.zeros(self.n_vertices)
        np.add.at(s, self.cells.ravel(), self.corner_angles().ravel())
        return s

    def euler_characteristic(self) -> int:
        edges = {tuple(sorted(e)) for c in self.cells for e in ((c[0], c[1]), (c[1], c[2]), (c[2], c[0]))}
        return self.n_vertices - len(edges) + len(self.cells)

    def boundary_conormals(self):
        """Outward unit conormal of each boundary edge inside its cell."""
        edge_cell = _edge_owner(self.cells, self.boundary)
        a = self.vertices[self.boundary[:, 0]]
        b = self.vertices[self.boundary[:, 1]]
        cell = self.cells[edge_cell]
        opp = np.where(
            (cell != self.boundary[:, :1]) & (cell != self.boundary[:, 1:]), cell, -1
        ).max(axis=1)
        c = self.vertices[opp]
        t = b - a
        w = c - a
        w = w - (self.sig.inner(w, t) / self.sig.inner(t, t))[:, None] * t
        eta = -w / np.sqrt(self.sig.inner(w, w))[:, None]
        return eta, edge_cell

    def neighbors(self, v: int, rings: int = 1):
        A = self.adjacency()
        cur = {int(v)}
        seen = {int(v)}
        for _ in range(rings):
            nxt = set()
            for u in cur:
                nxt.update(A.indices[A.indptr[u]: A.indptr[u + 1]].tolist())
            nxt -= seen
            seen |= nxt
            cur = nxt
        seen.discard(int(v))
        return np.array(sorted(seen), dtype=np.int64)

    def vertex_tangent_frames(self, verts=None):
        """Tangent plane estimates at vertices: Minkowski-orthonormal rows (V, 2, D).

        The plane is the best Euclidean fit to the one-ring offsets (the span
        of offsets is metric independent to first order) and is then
        orthonormalized with the indefinite product.
        """
        verts = np.arange(self.n_vertices) if verts is None else np.atleast_1d(verts)
        out = np.empty((len(verts), 2, self.sig.dim))
        for idx, v in enumerate(verts):
            nb = self.neighbors(v, 1)
            d = self.vertices[nb] - self.vertices[v]
            _, _, Vt = np.linalg.svd(d, full_matrices=False)
            out[idx] = _mink_orthonormalize(self.sig, Vt[:2])
        return out

    def _vertex_curvature(self, verts):
        sig = self.sig
        II = np.empty((len(verts), 2, 2, sig.dim))
        H = np.empty((len(verts), sig.dim))
        T = np.empty((len(verts), 2, sig.dim))
        for idx, v in enumerate(verts):
            nb = self.neighbors(v, 1)
            if len(nb) < 5:
                nb = self.neighbors(v, 2)
            d = self.vertices[nb] - self.vertices[v]
            _, _, Vt = np.linalg.svd(d, full_matrices=False)
            B = _mink_orthonormalize(sig, Vt[:2])
            s = sig.inner(d[:, None, :], B[None, :, :])  # (deg, 2)
            A = np.column_stack([s[:, 0], s[:, 1], 0.5 * s[:, 0] ** 2, s[:, 0] * s[:, 1],
                                 0.5 * s[:, 1] ** 2])
            coef, *_ = np.linalg.lstsq(A, d, rcond=None)
            r = coef[:2]  # tangent vectors
            Q = np.array([[coef[2], coef[3]], [coef[3], coef[4]]])
            g = sig.inner(r[:, None, :], r[None, :, :])
            ginv = np.linalg.inv(g)
            tang = np.einsum("kl,ijl->ijk", ginv, sig.inner(Q[:, :, None, :], r[None, None, :, :]))
            IIp = Q - np.einsum("ijk,kd->ijd", tang, r)
            E = np.linalg.inv(np.linalg.cholesky(g)).T
            II[idx] = np.einsum("ia,jb,ijd->abd", E, E, IIp)
            H[idx] = II[idx, 0, 0] + II[idx, 1, 1]
            T[idx] = E.T @ r
        return II, H, T


def _mink_orthonormalize(sig: Signature, rows):
    G = sig.gram(rows)
    if np.linalg.eigvalsh(G)[0] <= 0:
        raise NotSpacelike("estimated tangent plane is not spacelike")
    Lc = np.linalg.cholesky(G)
    return np.linalg.solve(Lc, rows)


def _boundary_edges(cells):
    """Edges used by exactly one cell, oriented as in that cell."""
    e = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    return e[counts[inv] == 1]


def _edge_owner(cells, edges):
    owner = {}
    for t, c in enumerate(cells):
        for a, b in ((c[0], c[1]), (c[1], c[2]), (c[2], c[0])):
            owner[(int(a), int(b))] = t
    return np.array([owner[(int(a), int(b))] for a, b in edges], dtype=np.int64)


def mesh_from_parametric(S: ParametricSurface, res: int) -> SurfaceMesh:
    """Structured triangulation of the parameter domain pushed through ``S``.

    Disk charts use ``res`` rings of ``2 * res`` vertices around a single
    centre vertex; bands use ``res`` radial cells and ``2 * res`` periodic
    angular cells (no seam); rectangles use a ``res x res`` grid.
    """
    if res < 2:
        raise ValueError("res must be at least 2")
    dom = S.domain
    if dom.kind == "disk":
        R = dom.bounds[0]
        nt = 2 * res
        rho = R * np.arange(1, res + 1) / res
        phi = TWO_PI * np.arange(nt) / nt
        A, B = np.meshgrid(rho, phi, indexing="ij")
        P = np.vstack([[0.0, 0.0], np.stack([A * np.cos(B), A * np.sin(B)], -1).reshape(-1, 2)])

        def vid(i, j):  # ring i >= 1
            return 1 + (i - 1) * nt + np.mod(j, nt)

        j = np.arange(nt)
        cells = [np.stack([np.zeros(nt, dtype=np.int64), vid(1, j), vid(1, j + 1)], -1)]
        for i in range(1, res):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells += [np.stack([a, b, c], -1), np.stack([a, c, d], -1)]
        cells = np.vstack(cells)
    elif dom.kind == "band":
        lo, hi = dom.bounds
        nt = 2 * res
        a_ = np.linspace(lo, hi, res + 1)
        b_ = TWO_PI * np.arange(nt) / nt
        A, B = np.meshgrid(a_, b_, indexing="ij")
        P = np.stack([A, B], -1).reshape(-1, 2)

        def vid(i, j):
            return i * nt + np.mod(j, nt)

        j = np.arange(nt)
        cells = []
        for i in range(res):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells += [np.stack([a, b, c], -1), np.stack([a, c, d], -1)]
        cells = np.vstack(cells)
    else:
        lo0, hi0, lo1, hi1 = dom.bounds
        a_ = np.linspace(lo0, hi0, res + 1)
        b_ = np.linspace(lo1, hi1, res + 1)
        A, B = np.meshgrid(a_, b_, indexing="ij")
        P = np.stack([A, B], -1).reshape(-1, 2)
        nb = res + 1

        def vid(i, j):
            return i * nb + j

        cells = []
        for i in range(res):
            j = np.arange(res)
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells += [np.stack([a, b, c], -1), np.stack([a, c, d], -1)]
        cells = np.vstack(cells)
    X = S.position(P)
    return SurfaceMesh(X, cells, S.sig, params=P, source=S)
