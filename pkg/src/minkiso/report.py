"""Both sides of the isoperimetric inequalities, and curvature comparisons.

Ratios are ``lhs / rhs`` so a check passes when the ratio is at most
``1 + slack``.  On meshes the slack is ``SLACK_C * h`` with ``h`` the longest
edge; parametric quadrature is converged to near machine precision, so the
slack there is ``1e-9``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import (
    TheoremConstants,
    density_identity_gap,
    thm1_constant,
    thm2_constant,
)
from .errors import FHInapplicable, RadiusTooLarge, TimelikeHViolation, Unsupported
from .fem import mesh_density, thm2_coefficients
from .surface import (
    ParametricSurface,
    SurfaceMesh,
    boundary_volume,
    gauss_curvature,
    local_geometry,
    pointwise_slope,
    slope_field,
    volume,
)

SLACK_C = 5.0
CURVATURE_TOL = 1e-8


@dataclass
class InequalityReport:
    surface: str
    theorem: str
    n: int
    m: int
    k: int
    tau: float
    vol: float
    bvol: float
    integral_f: float
    lhs: float
    rhs: float
    ratio: float
    slack: float
    passed: bool
    constants: TheoremConstants
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        d = {k: getattr(self, k) for k in (
            "surface", "theorem", "n", "m", "k", "tau", "vol", "bvol", "integral_f",
            "lhs", "rhs", "ratio", "slack", "passed")}
        d["constants"] = {"c_thm1": self.constants.c_thm1, "c_thm2": self.constants.c_thm2}
        d["extras"] = dict(self.extras)
        return d


def _dims(S):
    n = 2
    return n, S.sig.space_dim - n, S.sig.time_dim


def _name(S):
    if isinstance(S, ParametricSurface):
        return S.name
    return S.source.name if S.source is not None else "mesh"


def _slack(S):
    return SLACK_C * S.mesh_size() if isinstance(S, SurfaceMesh) else 1e-9


def _thm1_density(sig, H):
    q = sig.inner(H, H)
    tol = CURVATURE_TOL * np.maximum(1.0, np.sum(H * H, axis=-1))
    if np.any(q > tol):
        i = int(np.argmax(q - tol))
        raise TimelikeHViolation(f"<H,H> = {q[i]:.3e} > 0 at sample {i}")
    return np.sqrt(np.clip(-q, 0.0, None)), float(max(q.max(initial=0.0), 0.0))


def _thm2_density(sig, H, tau):
    """Density as written in the statement; equals the working form (see identity)."""
    hs, ht = sig.split(H)
    a = (1.0 + np.sqrt(tau**4 - 1.0)) / tau
    return a * np.linalg.norm(hs, axis=-1) + np.sqrt(tau * tau + 1.0) * np.linalg.norm(ht, axis=-1)


def _integrate_density(S, kind, tau, res, order):
    """Integral of the density plus the largest clamped <H,H> (thm1)."""
    if isinstance(S, SurfaceMesh):
        f = mesh_density(S, kind, tau)
        return float(S.vertex_areas() @ f.values), f.clamp
    P, w = S.domain.quadrature(res, order)
    geo = local_geometry(S, P)
    if kind == "thm1":
        f, clamp = _thm1_density(S.sig, geo.H)
    else:
        f, clamp = _thm2_density(S.sig, geo.H, tau), 0.0
    return float(np.sum(w * geo.sqrt_det * f)), clamp


def _total_curvature(S: ParametricSurface, res: int, order: int):
    P, w = S.domain.quadrature(res, order)
    geo = local_geometry(S, P)
    K = gauss_curvature(S, P)
    return float(np.sum(w * geo.sqrt_det * K)), float(K.min())


def check_thm1(S, res: int = 64, quad_order: int = 4) -> InequalityReport:
    """Purely timelike codimension: vol^{n-1} <= c (vol(bd) + int sqrt(-<H,H>))^n."""
    n, m, k = _dims(S)
    if m != 0:
        return check_thm2(S, res, quad_order)
    tau = slope_field(S).tau
    A = volume(S, res, quad_order)
    L = boundary_volume(S, res, quad_order)
    If, clamp = _integrate_density(S, "thm1", tau, res, quad_order)
    c = thm1_constant(n, k, tau)
    lhs = A ** (n - 1)
    rhs = c * (L + If) ** n
    slack = _slack(S)
    extras = {"clamp": clamp, "euclidean_rhs": L * L / (4 * np.pi)}
    if isinstance(S, ParametricSurface) and S.domain.kind == "disk":
        tk, kmin = _total_curvature(S, res, quad_order)
        extras["total_K"] = tk
        if 2 * tk < 4 * np.pi:
            extras["fiala_huber_rhs"] = L * L / (4 * np.pi - 2 * tk)
    ratio = lhs / rhs
    return InequalityReport(_name(S), "thm1", n, m, k, tau, A, L, If, lhs, rhs, ratio, slack,
                            bool(ratio <= 1 + slack), TheoremConstants.build(n, m, k, tau),
                            extras)


def check_thm2(S, res: int = 64, quad_order: int = 4) -> InequalityReport:
    """Mixed codimension m >= 1 with the slope-weighted density."""
    n, m, k = _dims(S)
    if m < 1:
        raise Unsupported("check_thm2 needs m >= 1; use check_thm1")
    tau = slope_field(S).tau
    A = volume(S, res, quad_order)
    L = boundary_volume(S, res, quad_order)
    If, _ = _integrate_density(S, "thm2", tau, res, quad_order)
    c = thm2_constant(n, m, k, tau)
    lhs = A ** (n - 1)
    rhs = c * (L + If) ** n
    a_work, _ = thm2_coefficients(tau)
    gap = abs((1.0 + np.sqrt(tau**4 - 1.0)) / tau - a_work)
    slack = _slack(S)
    ratio = lhs / rhs
    extras = {"identity_gap": float(gap), "identity_ok": bool(gap < 1e-12)}
    return InequalityReport(_name(S), "thm2", n, m, k, tau, A, L, If, lhs, rhs, ratio, slack,
                            bool(ratio <= 1 + slack and gap < 1e-12),
                            TheoremConstants.build(n, m, k, tau), extras)


def identity_check(taus) -> float:
    """Largest gap between the two forms of the density coefficient."""
    return float(np.max(np.abs(density_identity_gap(taus))))


# ---------------------------------------------------------------------------
# geodesic disks


@dataclass
class GeodesicDisk:
    center: np.ndarray
    rho: float
    area: float
    length: float
    total_K: float
    tau: float
    min_K: float
    integral_f: float = 0.0  # of sqrt(-<H,H>); only filled when m = 0
    m: int = 0
    k: int = 2


def _christoffel(S, P):
    return local_geometry(S, P).christoffel


def geodesic_disk(S: ParametricSurface, p, rho: float, n_theta: int = 64,
                  n_steps: int = 200) -> GeodesicDisk:
    """Area, perimeter, total curvature and slope of the geodesic disk of
    radius ``rho`` about ``p``, by shooting geodesics.

    Geodesics are integrated with RK4 (``n_steps`` steps, even); circles are
    differentiated spectrally in the angle, and radial integrals use
    Simpson's rule.  Raises RadiusTooLarge when a geodesic leaves the chart or
    neighbouring geodesics cross.
    """
    if n_steps % 2:
        n_steps += 1
    p = np.asarray(p, dtype=float)
    dom = S.domain
    geo0 = local_geometry(S, p[None])
    phi = 2 * np.pi * np.arange(n_theta) / n_theta
    V = np.einsum("ia,na->ni", geo0.frame[0], np.stack([np.cos(phi), np.sin(phi)], -1))
    X = np.repeat(p[None], n_theta, axis=0)
    h = rho / n_steps

    def rhs(x, v):
        G = _christoffel(S, x)
        return v, -np.einsum("nkij,ni,nj->nk", G, v, v)

    traj = [X.copy()]
    for _ in range(n_steps):
        k1x, k1v = rhs(X, V)
        k2x, k2v = rhs(X + 0.5 * h * k1x, V + 0.5 * h * k1v)
        k3x, k3v = rhs(X + 0.5 * h * k2x, V + 0.5 * h * k2v)
        k4x, k4v = rhs(X + h * k3x, V + h * k3v)
        X = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        V = V + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if np.any(dom.boundary_distance(dom.wrap(X)) <= 0):
            raise RadiusTooLarge(f"geodesic disk of radius {rho} leaves the domain")
        traj.append(X.copy())
    traj = np.array(traj)  # (steps+1, n_theta, 2)
    freq = np.fft.fftfreq(n_theta, 1.0 / n_theta)
    dtraj = np.real(np.fft.ifft(1j * freq[None, :, None] * np.fft.fft(traj, axis=1), axis=1))
    flat = traj[1:].reshape(-1, 2)
    geo = local_geometry(S, flat)
    dflat = dtraj[1:].reshape(-1, 2)
    J = np.sqrt(np.einsum("ni,nij,nj->n", dflat, geo.g, dflat)).reshape(n_steps, n_theta)
    if np.any(J <= 0) or np.any(np.diff(J.mean(axis=1)) <= 0):
        raise RadiusTooLarge("geodesics cross before the requested radius")
    K = gauss_curvature(S, flat).reshape(n_steps, n_theta)
    dphi = 2 * np.pi / n_theta
    Ls = np.concatenate([[0.0], J.sum(axis=1) * dphi])
    KJ = np.concatenate([[0.0], (K * J).sum(axis=1) * dphi])
    wS = np.ones(n_steps + 1)
    wS[1:-1:2] = 4
    wS[2:-1:2] = 2
    wS *= h / 3
    _, dX, _ = S.evaluate(np.vstack([p[None], flat]))
    tau = float(pointwise_slope(S.sig, dX).max())
    _, m, k = _dims(S)
    If = 0.0
    if m == 0:
        f, _ = _thm1_density(S.sig, geo.H)
        fJ = np.concatenate([[0.0], (f.reshape(n_steps, n_theta) * J).sum(axis=1) * dphi])
        If = float(wS @ fJ)
    return GeodesicDisk(p, rho, float(wS @ Ls), float(Ls[-1]), float(wS @ KJ), tau,
                        float(K.min()), If, m, k)


@dataclass
class FialaHuberComparison:
    lhs_A: float
    rhs_fh: float
    rhs_thm1: float | None  # None when m >= 1, where the slope bound does not apply
    total_K: float
    euclidean_rhs: float
    tighter: str

    @property
    def holds(self) -> bool:
        tol = 1e-9 * max(self.lhs_A, 1.0)
        ok = self.lhs_A <= self.rhs_fh + tol
        return ok and (self.rhs_thm1 is None or self.lhs_A <= self.rhs_thm1 + tol)

    @property
    def euclidean_fails(self) -> bool:
        # relative allowance so equality cases are not flagged by rounding
        return self.lhs_A > self.euclidean_rhs * (1 + 1e-12)

    def as_dict(self):
        d = dict(self.__dict__)
        d["euclidean_fails"] = self.euclidean_fails
        d["holds"] = self.holds
        return d


def fiala_huber_compare(S, res: int = 64, quad_order: int = 4, min_K_tol: float = 1e-8):
    """Area against the total-curvature bound and, when m = 0, the slope bound.

    ``S`` is a disk-type parametric surface or a :class:`GeodesicDisk`.
    """
    if isinstance(S, GeodesicDisk):
        A, L, tk, tau, kmin = S.area, S.length, S.total_K, S.tau, S.min_K
        m, k, If = S.m, S.k, S.integral_f
    else:
        if S.domain.kind != "disk":
            raise Unsupported("the comparison needs a disk-type domain")
        A = volume(S, res, quad_order)
        L = boundary_volume(S, res, quad_order)
        tk, kmin = _total_curvature(S, res, quad_order)
        tau = slope_field(S).tau
        _, m, k = _dims(S)
        If = _integrate_density(S, "thm1", tau, res, quad_order)[0] if m == 0 else 0.0
    if kmin < -min_K_tol:
        raise FHInapplicable(f"Gauss curvature {kmin:.3e} is negative somewhere")
    den = 4 * np.pi - 2 * tk
    if den <= 0:
        raise FHInapplicable("total curvature too large: 2 int K >= 4 pi")
    rhs_fh = L * L / den
    rhs_t1 = float(thm1_constant(2, k, tau) * (L + If) ** 2) if m == 0 else None
    tighter = "fiala-huber" if rhs_t1 is None or rhs_fh < rhs_t1 else "thm1"
    return FialaHuberComparison(A, rhs_fh, rhs_t1, tk, L * L / (4 * np.pi), tighter)


@dataclass
class ExpansionFit:
    coefficient: float
    K_p: float
    radii: np.ndarray
    values: np.ndarray  # 4 pi A / L^2 - 1

    @property
    def relative_error(self) -> float:
        ref = self.K_p / 4
        return abs(self.coefficient - ref) / abs(ref) if ref != 0 else abs(self.coefficient)


def geodesic_ball_expansion(S: ParametricSurface, p, radii=None, **kw) -> ExpansionFit:
    """Fit ``4 pi A / L^2 - 1`` by ``a rho^2 + b rho^3 + c rho^4``; ``a`` should be ``K_p / 4``."""
    p = np.asarray(p, dtype=float)
    if radii is None:
        radii = np.arange(1, 6) * 0.02 * S.domain.scale
    radii = np.asarray(radii, dtype=float)
    if S.domain.boundary_distance(p) <= 0:
        raise RadiusTooLarge("centre must be interior")
    vals = []
    for r in radii:
        d = geodesic_disk(S, p, r, **kw)
        vals.append(4 * np.pi * d.area / d.length**2 - 1.0)
    vals = np.array(vals)
    B = np.stack([radii**2, radii**3, radii**4], -1)
    coef, *_ = np.linalg.lstsq(B, vals, rcond=None)
    Kp = float(gauss_curvature(S, p[None])[0])
    return ExpansionFit(float(coef[0]), Kp, radii, vals)
