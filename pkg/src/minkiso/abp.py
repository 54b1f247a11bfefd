"""Comparison map on the normal bundle and the pointwise checks built on it.

For a solution ``u`` of the Neumann problem the map is

    Phi(x, y) = grad u(x) + y,      y normal to the surface at x,

and the relevant regions are

    D     = {xi : c0 - tau |xi_s| - sqrt(tau^2 - 1) |xi_t| > 0}
    U     = {x interior : |grad u(x)| < c0}
    Omega = {(x, y) : x in U, Phi(x, y) in D}
    A     = {(x, y) in Omega : Hess u(x) - <II_x, y> >= 0}.

Points are addressed by chart coordinates on a parametric twin (the smooth
backend) or by vertex on a bare mesh.  Everything is batched; the single
point helpers wrap the batched versions.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .constants import measure_constant, sphere_area
from .errors import (
    ACondViolation,
    BoundViolation,
    EstimateInconclusive,
    SurjectivityViolation,
)
from .fem import NeumannSolution, density_from_H, solve_neumann, DensityField, mesh_density
from .smooth import SmoothField
from .surface import (
    ParametricSurface,
    SurfaceMesh,
    boundary_volume,
    integrate,
    local_geometry,
    mesh_from_parametric,
    second_fundamental_form,
    slope_field,
    volume,
)

logger = logging.getLogger(__name__)

A_TOL = 1e-6


# ---------------------------------------------------------------------------
# data types


@dataclass
class NormalPoint:
    """A point of the normal bundle: base point plus ambient normal vector."""

    y: np.ndarray
    P: np.ndarray | None = None  # chart coordinates (smooth backend)
    vertex: int | None = None  # mesh vertex (mesh backend)
    y_plus: np.ndarray | None = None  # coordinates along the spacelike normals
    y_minus: np.ndarray | None = None  # coordinates along the timelike normals


@dataclass
class RegionFlags:
    in_D: bool
    in_U: bool
    in_Omega: bool
    in_A: bool | None  # None when no Hessian is available
    hessian_min_eig: float


@dataclass
class Diagnostic:
    """One JSON record per check."""

    check: str
    surface: str
    parameters: dict
    passed: bool
    worst_location: list | None
    residual: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), default=_jsonable, sort_keys=True)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


@dataclass
class Local:
    """Batched pointwise data at base points."""

    interior: np.ndarray  # (N,) bool
    tangent: np.ndarray  # orthonormal tangent vectors (N, n, D)
    II: np.ndarray  # (N, n, n, D)
    H: np.ndarray  # (N, D)
    grad: np.ndarray  # ambient gradient of u (N, D)
    hess: np.ndarray  # Hessian in the tangent frame (N, n, n); nan if unavailable
    f: np.ndarray  # density (N,)
    n_plus: np.ndarray  # (N, m, D)
    n_minus: np.ndarray  # (N, k, D)
    jac: np.ndarray | None = None  # area element w.r.t. chart coordinates
    geo: object = None


# ---------------------------------------------------------------------------
# normal frames


def normal_frames(sig, tangent, m, axis_order, threshold=0.1):
    """Smooth Minkowski-orthonormal normal frames from projected coordinate axes.

    Timelike normals come from the temporal axes (their normal projections
    are always timelike).  Spacelike normals come from the spatial axes in
    ``axis_order``, skipping any whose projection is nearly degenerate; the
    last one is oriented so the full frame is positively oriented.
    """
    N, n, D = tangent.shape
    s = sig.space_dim
    k = sig.time_dim

    def project(v, basis, signs):
        for b, sgn in zip(basis, signs):
            v = v - (sig.inner(v, b) * sgn)[:, None] * b
        return v

    tang = [tangent[:, a] for a in range(n)]
    fm = []
    for j in range(k):
        v = np.zeros((N, D))
        v[:, s + j] = 1.0
        v = project(v, tang + fm, [1.0] * n + [-1.0] * len(fm))
        fm.append(v / np.sqrt(-sig.inner(v, v))[:, None])
    fp = np.zeros((N, m, D))
    count = np.zeros(N, dtype=int)
    for ax in axis_order:
        if np.all(count >= m):
            break
        v = np.zeros((N, D))
        v[:, ax] = 1.0
        v = project(v, tang + fm, [1.0] * n + [-1.0] * k)
        for j in range(m):
            v = v - sig.inner(v, fp[:, j])[:, None] * fp[:, j]
        sq = sig.inner(v, v)
        take = (count < m) & (sq > threshold**2)
        if np.any(take):
            idx = np.where(take)[0]
            fp[idx, count[idx]] = v[idx] / np.sqrt(sq[idx])[:, None]
            count[idx] += 1
    if np.any(count < m):
        raise ValueError("could not complete the spacelike normal frame")
    nm = np.stack(fm, axis=1) if k else np.zeros((N, 0, D))
    if m:
        W = np.concatenate([tangent, fp, nm], axis=1)
        flip = np.linalg.det(W) < 0
        fp[flip, m - 1] *= -1.0
    return fp, nm


def _spatial_axis_order(sig, tangent):
    """Spatial axes sorted by how transverse they are on average."""
    t = tangent[:, :, : sig.space_dim]
    score = np.mean(1.0 - np.sum(t * t, axis=1), axis=0)
    return [int(a) for a in np.argsort(-score, kind="stable")]


# ---------------------------------------------------------------------------
# context


class AbpContext:
    """Shared data for the comparison-map checks.

    Build with :meth:`from_surface` (parametric twin available) or
    :meth:`from_mesh` (vertex-based, mesh only).
    """

    def __init__(self, mesh: SurfaceMesh, sol: NeumannSolution, tau: float, c0: float,
                 f: DensityField, twin: ParametricSurface | None = None,
                 field_: SmoothField | None = None, c_f: float | None = None,
                 density_kind: str = "custom", density_fn=None):
        self.surface = mesh
        self.twin = twin
        self.sol = sol
        self.tau = float(tau)
        self.c0 = float(c0)
        self.f = f
        self.field = field_
        self.c_f = sol.c_f if c_f is None else float(c_f)
        self.sig = mesh.sig
        self.n = 2
        self.k = self.sig.time_dim
        self.m = self.sig.space_dim - self.n
        self.density_kind = density_kind
        self._density_fn = density_fn
        if twin is not None:
            G = twin.domain.grid(8)
            self.axis_order = _spatial_axis_order(self.sig, local_geometry(twin, G).tangent)
        else:
            self.axis_order = _spatial_axis_order(self.sig, mesh.vertex_tangent_frames())
        self._vertex_cache = None
        self._u_vertices = None

    @property
    def name(self):
        if self.twin is not None:
            return self.twin.name
        src = self.surface.source
        return src.name if src is not None else "mesh"

    # -- construction -------------------------------------------------------

    @classmethod
    def from_surface(cls, S: ParametricSurface, res: int = 48, c0: float = 1.0,
                     density: str | None = None, degree: int = 16, quad_res: int = 32):
        """Mesh, solve and fit on a parametric surface.

        ``density`` is ``"thm1"`` (length of H), ``"thm2"`` or ``"zero"``;
        the default follows the normal bundle (thm1 when m = 0).
        """
        sig = S.sig
        m = sig.space_dim - 2
        kind = density or ("thm1" if m == 0 else "thm2")
        tau = slope_field(S).tau
        mesh = mesh_from_parametric(S, res)

        def dens(P):
            if kind == "zero":
                return np.zeros(len(np.atleast_2d(P)))
            H = second_fundamental_form(S, P).H
            return density_from_H(sig, H, kind, tau).values

        f = DensityField(dens(mesh.params), kind if kind != "zero" else "custom")
        sol = solve_neumann(mesh, f, c0)
        A = volume(S, quad_res)
        L = boundary_volume(S, quad_res)
        If = integrate(S, lambda g: dens(g.P), quad_res) if kind != "zero" else 0.0
        c_f = (L + If) / A
        fld = SmoothField.fit(S, mesh.params, sol.u, mesh.vertex_areas(),
                              rhs=lambda Q: c0 * (c_f - dens(Q)), degree=degree)
        return cls(mesh, sol, tau, c0, f, twin=S, field_=fld, c_f=c_f,
                   density_kind=kind, density_fn=dens)

    @classmethod
    def from_mesh(cls, mesh: SurfaceMesh, c0: float = 1.0, density: str = "thm1",
                  tau: float | None = None):
        tau = slope_field(mesh).tau if tau is None else tau
        f = mesh_density(mesh, density, tau)
        sol = solve_neumann(mesh, f, c0)
        return cls(mesh, sol, tau, c0, f, density_kind=density)

    # -- pointwise data -----------------------------------------------------

    def density(self, P):
        return self._density_fn(P)

    def local(self, P) -> Local:
        """Pointwise data at chart points of the parametric twin."""
        if self.field is None:
            raise ValueError("chart points need a parametric twin")
        S = self.twin
        P = S.domain.wrap(np.atleast_2d(P))
        geo = local_geometry(S, P)
        fv = self.field.values(P, geo)
        fp, fm = normal_frames(self.sig, geo.tangent, self.m, self.axis_order)
        return Local(
            interior=S.domain.boundary_distance(P) > 0,
            tangent=geo.tangent, II=geo.II, H=geo.H, grad=fv.grad, hess=fv.hess,
            f=self.density(P), n_plus=fp, n_minus=fm, jac=geo.sqrt_det, geo=geo,
        )

    def local_vertices(self, verts) -> Local:
        """Pointwise data at mesh vertices (mesh backend)."""
        verts = np.atleast_1d(np.asarray(verts, dtype=np.int64))
        vc = self._vertex_data()
        T = vc["tangent"][verts]
        fp, fm = normal_frames(self.sig, T, self.m, self.axis_order)
        return Local(
            interior=~self.surface.boundary_vertex_mask[verts],
            tangent=T, II=vc["II"][verts], H=vc["H"][verts], grad=vc["grad"][verts],
            hess=vc["hess"][verts], f=self.f.values[verts], n_plus=fp, n_minus=fm,
        )

    def _vertex_data(self):
        if self._vertex_cache is not None:
            return self._vertex_cache
        mesh = self.surface
        sig = self.sig
        V = mesh.n_vertices
        D = sig.dim
        # area-weighted average of the cell gradients, projected to the vertex plane
        vol = mesh.cell_volumes()
        acc = np.zeros((V, D))
        wsum = np.zeros(V)
        for c in range(3):
            np.add.at(acc, mesh.cells[:, c], vol[:, None] * self.sol.grad_u)
            np.add.at(wsum, mesh.cells[:, c], vol)
        grad = acc / wsum[:, None]
        T = mesh.vertex_tangent_frames()
        coef = sig.inner(grad[:, None, :], T)
        grad = np.einsum("va,vad->vd", coef, T)
        II = np.full((V, 2, 2, D), np.nan)
        H = np.full((V, D), np.nan)
        hess = np.full((V, 2, 2), np.nan)
        interior = np.where(~mesh.boundary_vertex_mask)[0]
        cd = second_fundamental_form(mesh, interior)
        II[interior] = cd.II
        H[interior] = cd.H
        T[interior] = cd.tangent
        coef = sig.inner(grad[:, None, :], T)
        grad = np.einsum("va,vad->vd", coef, T)
        for v in interior:
            nb = mesh.neighbors(v, 1)
            d = sig.inner((mesh.vertices[nb] - mesh.vertices[v])[:, None, :], T[v][None])
            dg = sig.inner((grad[nb] - grad[v])[:, None, :], T[v][None])
            Hm, *_ = np.linalg.lstsq(d, dg, rcond=None)
            hess[v] = 0.5 * (Hm + Hm.T)
        self._vertex_cache = dict(tangent=T, II=II, H=H, grad=grad, hess=hess)
        return self._vertex_cache

    def _vertex_u(self):
        """Smooth field values at the mesh vertices."""
        if self._u_vertices is None:
            P = self.surface.params
            self._u_vertices = self.field.basis.contract(P, self.field.coef)[0]
        return self._u_vertices

    def _local_for(self, p: NormalPoint) -> Local:
        if p.P is not None:
            return self.local(np.atleast_2d(p.P))
        return self.local_vertices([p.vertex])

    # -- regions ------------------------------------------------------------

    def d_margin(self, xi):
        """``c0 - tau |xi_s| - sqrt(tau^2 - 1) |xi_t|``; positive inside D."""
        xs, xt = self.sig.split(np.asarray(xi, dtype=float))
        t = self.tau
        return (self.c0 - t * np.linalg.norm(xs, axis=-1)
                - np.sqrt(max(t * t - 1.0, 0.0)) * np.linalg.norm(xt, axis=-1))

    def batch_flags(self, loc: Local, y):
        """Region memberships, min eigenvalue, determinant and trace for a batch."""
        phi = loc.grad + y
        gnorm = np.sqrt(np.clip(self.sig.inner(loc.grad, loc.grad), 0.0, None))
        in_U = loc.interior & (gnorm < self.c0)
        in_D = self.d_margin(phi) > 0
        in_O = in_U & in_D
        ok = np.all(np.isfinite(loc.hess.reshape(len(y), -1)), axis=1)
        mins = np.full(len(y), np.nan)
        dets = np.full(len(y), np.nan)
        trs = np.full(len(y), np.nan)
        if np.any(ok):
            a, b, c = kernels.abp_integrand(loc.hess[ok], loc.II[ok], y[ok], self.sig.space_dim)
            mins[ok], dets[ok], trs[ok] = a, b, c
        in_A = in_O & ok & (mins >= 0)
        return dict(phi=phi, in_U=in_U, in_D=in_D, in_Omega=in_O, in_A=in_A,
                    hess_ok=ok, min_eig=mins, det=dets, trace=trs)

    # -- normal points ------------------------------------------------------

    def normal_point(self, y_plus=(), y_minus=(), P=None, vertex=None) -> NormalPoint:
        """Normal point from frame coordinates at a base point."""
        loc = self.local(np.atleast_2d(P)) if P is not None else self.local_vertices([vertex])
        yp = np.asarray(y_plus, dtype=float).reshape(self.m)
        ym = np.asarray(y_minus, dtype=float).reshape(self.k)
        y = yp @ loc.n_plus[0] + ym @ loc.n_minus[0]
        Pv = None if P is None else np.asarray(P, dtype=float)
        return NormalPoint(y, Pv, vertex, yp, ym)

    def normal_point_from_vector(self, w, P=None, vertex=None) -> NormalPoint:
        """Project an ambient vector to the normal space at the base point."""
        loc = self.local(np.atleast_2d(P)) if P is not None else self.local_vertices([vertex])
        w = np.asarray(w, dtype=float)
        T = loc.tangent[0]
        y = w - self.sig.inner(w[None], T) @ T
        yp = self.sig.inner(y[None], loc.n_plus[0])
        ym = -self.sig.inner(y[None], loc.n_minus[0])
        Pv = None if P is None else np.asarray(P, dtype=float)
        return NormalPoint(y, Pv, vertex, yp, ym)


# ---------------------------------------------------------------------------
# single-point operations


def phi(ctx: AbpContext, p: NormalPoint):
    loc = ctx._local_for(p)
    return loc.grad[0] + p.y


def in_region_D(ctx: AbpContext, xi) -> bool:
    return bool(ctx.d_margin(np.asarray(xi, dtype=float)) > 0)


def classify(ctx: AbpContext, p: NormalPoint) -> RegionFlags:
    loc = ctx._local_for(p)
    fl = ctx.batch_flags(loc, np.atleast_2d(p.y))
    in_A = bool(fl["in_A"][0]) if fl["hess_ok"][0] else None
    return RegionFlags(bool(fl["in_D"][0]), bool(fl["in_U"][0]), bool(fl["in_Omega"][0]),
                       in_A, float(fl["min_eig"][0]))


def jacobian_det(ctx: AbpContext, p: NormalPoint) -> float:
    """det(Hess u - <II, y>) in an orthonormal tangent frame."""
    loc = ctx._local_for(p)
    fl = ctx.batch_flags(loc, np.atleast_2d(p.y))
    return float(fl["det"][0])


def jacobian_det_fd(ctx: AbpContext, p: NormalPoint, h: float = 1e-5) -> float:
    """Determinant of dPhi by central differences in chart and frame coordinates.

    Columns are taken along the orthonormal tangent frame and the normal
    frame, then expressed in that same frame; the normal frame varies with
    the base point, which the differences see.
    """
    if p.P is None:
        raise ValueError("finite differences need chart coordinates")
    S = ctx.twin
    hs = h * S.domain.scale
    P0 = np.asarray(p.P, dtype=float)
    loc0 = ctx.local(P0[None])
    yp = ctx.sig.inner(p.y[None], loc0.n_plus[0]) if ctx.m else np.zeros(0)
    ym = -ctx.sig.inner(p.y[None], loc0.n_minus[0])
    coords = np.concatenate([yp, ym])

    def Phi(P, c):
        loc = ctx.local(np.atleast_2d(P))
        y = c[: ctx.m] @ loc.n_plus[0] + c[ctx.m:] @ loc.n_minus[0]
        return loc.grad[0] + y

    D = ctx.sig.dim
    J = np.empty((D, D))
    dP = np.empty((D, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = hs
        dP[:, i] = (Phi(P0 + e, coords) - Phi(P0 - e, coords)) / (2 * hs)
    J[:, :2] = dP @ loc0.geo.frame[0]
    for j in range(len(coords)):
        e = np.zeros(len(coords))
        e[j] = h
        J[:, 2 + j] = (Phi(P0, coords + e) - Phi(P0, coords - e)) / (2 * h)
    W = np.concatenate([loc0.tangent[0], loc0.n_plus[0], loc0.n_minus[0]]).T
    return float(np.linalg.det(np.linalg.solve(W, J)))


def amgm_bound_check(ctx: AbpContext, p: NormalPoint, tol: float = A_TOL):
    """Return ``(lhs, rhs, scalar)`` with lhs the Jacobian determinant,
    scalar = c0 (c_f - f) - <H, y> and rhs = (scalar / n)^n."""
    loc = ctx._local_for(p)
    lhs, rhs, sc = amgm_batch(ctx, loc, np.atleast_2d(p.y))
    where = p.P.tolist() if p.P is not None else p.vertex
    if sc[0] < -tol:
        raise BoundViolation(f"trace scalar {sc[0]:.3e} < 0", location=where)
    if lhs[0] < -tol or lhs[0] > rhs[0] + tol:
        raise BoundViolation(f"det {lhs[0]:.6e} outside [0, {rhs[0]:.6e}]", location=where)
    return float(lhs[0]), float(rhs[0]), float(sc[0])


def amgm_batch(ctx: AbpContext, loc: Local, y):
    fl = ctx.batch_flags(loc, y)
    sc = ctx.c0 * (ctx.c_f - loc.f) - ctx.sig.inner(loc.H, y)
    return fl["det"], (sc / ctx.n) ** ctx.n, sc


# ---------------------------------------------------------------------------
# surjectivity


def _minimize_w(ctx: AbpContext, xi, P0, max_iter=200, gtol=1e-12):
    """Armijo descent on ``w = u - <x, xi>`` in chart coordinates.

    Steps are Newton steps where the chart Hessian of ``w`` is positive
    definite and metric gradient steps otherwise.  Near the minimum, where
    ``w`` no longer resolves the decrease, a step is also accepted if it
    shrinks the gradient.
    """
    S = ctx.twin
    dom = S.domain
    fld = ctx.field
    sig = ctx.sig

    def w_all(P):
        X, dX, ddX = S.evaluate(P[None])
        u, du, ddu = fld.basis.contract(P[None], fld.coef)
        w = u[0] - sig.inner(X[0], xi)
        g = du[0] - sig.inner(dX[0], xi)
        Hm = ddu[0] - sig.inner(ddX[0], xi)
        gm = sig.inner(dX[0][:, None], dX[0][None])
        return w, g, Hm, gm

    def gnorm(g, gm):
        return float(np.sqrt(max(g @ np.linalg.solve(gm, g), 0.0)))

    P = np.array(P0, dtype=float)
    w, g, Hm, gm = w_all(P)
    gn0 = gnorm(g, gm)
    it = 0
    for it in range(1, max_iter + 1):
        if gn0 < gtol:
            break
        ev = np.linalg.eigvalsh(0.5 * (Hm + Hm.T))
        if ev[0] > 1e-12 * max(ev[-1], 1.0):
            d = -np.linalg.solve(Hm, g)
        else:
            d = -np.linalg.solve(gm, g)
        slope = g @ d
        if slope >= 0:
            d = -np.linalg.solve(gm, g)
            slope = g @ d
        a = 1.0
        accepted = False
        while a > 1e-10:
            Pn = dom.wrap(P + a * d)
            if dom.contains(Pn):
                wn, gg, Hn, gmn = w_all(Pn)
                gn1 = gnorm(gg, gmn)
                if wn <= w + 1e-4 * a * slope or (
                    abs(wn - w) <= 1e-13 * (1.0 + abs(w)) and gn1 < gn0
                ):
                    accepted = True
                    break
            a *= 0.5
        if not accepted:
            break
        P, w, g, Hm, gm, gn0 = Pn, wn, gg, Hn, gmn, gn1
    return P, w, it


def surjectivity_check(ctx: AbpContext, xi, tol: float = A_TOL, raise_on_fail: bool = True):
    """Locate ``x`` with ``Phi(x, y) = xi`` by minimising ``u(x) - <x, xi>``.

    Returns ``(x, y, diagnostics)``; ``x`` is chart coordinates on the smooth
    backend and a vertex index on the mesh backend.
    """
    xi = np.asarray(xi, dtype=float)
    mesh = ctx.surface
    diag = {"d_margin": float(ctx.d_margin(xi))}
    if ctx.field is not None:
        uv = ctx._vertex_u()
        wv = uv - ctx.sig.inner(mesh.vertices, xi)
        v0 = int(np.argmin(wv))
        P, w, iters = _minimize_w(ctx, xi, mesh.params[v0])
        diag.update(start_vertex=v0, iterations=iters, w_min=float(w))
        dist = float(ctx.twin.domain.boundary_distance(P))
        loc = ctx.local(P[None])
        x_out = P
        where = P.tolist()
    else:
        wv = ctx.sol.u - ctx.sig.inner(mesh.vertices, xi)
        v0 = int(np.argmin(wv))
        dist = 0.0 if mesh.boundary_vertex_mask[v0] else 1.0
        loc = ctx.local_vertices([v0])
        x_out = v0
        where = v0
        # a vertex minimiser resolves Phi = xi only to the local edge length
        ring = mesh.neighbors(v0)
        e = mesh.vertices[ring] - mesh.vertices[v0]
        diag["residual_tol"] = float(np.sqrt(np.max(ctx.sig.inner(e, e))))
    T = loc.tangent[0]
    r = xi - loc.grad[0]
    y = r - ctx.sig.inner(r[None], T) @ T
    fl = ctx.batch_flags(loc, y[None])
    resid = float(np.linalg.norm(loc.grad[0] + y - xi))
    diag.update(
        boundary_distance=dist,
        residual=resid,
        grad_norm=float(np.sqrt(max(ctx.sig.inner(loc.grad[0], loc.grad[0]), 0.0))),
        in_U=bool(fl["in_U"][0]),
        hessian_min_eig=float(fl["min_eig"][0]),
        location=where,
    )
    diag["interior"] = dist > 0
    diag["passed"] = bool(diag["interior"] and diag["in_U"]
                          and resid < diag.get("residual_tol", 1e-4)
                          and fl["min_eig"][0] > -tol)
    if raise_on_fail:
        if not diag["interior"]:
            raise SurjectivityViolation(f"minimiser on the boundary at {where}")
        if not fl["min_eig"][0] > -tol:
            raise ACondViolation(
                f"Hessian condition fails at {where}", magnitude=float(-fl["min_eig"][0])
            )
    return x_out, y, diag


def boundary_flux_check(ctx: AbpContext, xis, res: int = 64, tol: float | None = None):
    """Minimum over boundary points of ``<grad w, eta> - margin(xi)``.

    ``w = u - <x, xi>``; the outward derivative should exceed the D margin
    (up to discretization error) for every ``xi`` in D.
    """
    tol = 1e-2 * ctx.c0 if tol is None else tol
    S = ctx.twin
    P, Tv, _ = S.domain.boundary_quadrature(res, 2)
    loc = ctx.local(P)
    vel = np.einsum("ni,nid->nd", Tv, loc.geo.dX)
    vel /= np.sqrt(ctx.sig.inner(vel, vel))[:, None]
    # rotate the unit velocity by -90 degrees in the tangent plane: outward for ccw traversal
    T = loc.tangent
    c = ctx.sig.inner(vel[:, None, :], T)
    eta = c[:, 1:2] * T[:, 0] - c[:, 0:1] * T[:, 1]
    orient = np.sign(np.linalg.det(loc.geo.frame))[:, None]
    eta *= orient
    flux_u = ctx.sig.inner(loc.grad, eta)
    worst = np.inf
    for xi in np.atleast_2d(xis):
        val = flux_u - ctx.sig.inner(eta, xi) - ctx.d_margin(xi)
        worst = min(worst, float(val.min()))
    return worst, worst >= -tol, float(np.abs(flux_u - ctx.c0).max())


# ---------------------------------------------------------------------------
# sampling


def _rng(seed: int, stream: int):
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def _sphere(rng, n, d):
    if d == 0:
        return np.zeros((n, 0))
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_D(ctx: AbpContext, rng, size: int):
    """Uniform samples of D intersected with a box, by rejection."""
    sig = ctx.sig
    t = ctx.tau
    rs = ctx.c0 / t
    rt = ctx.c0 / np.sqrt(t * t - 1.0) if t > 1 else ctx.c0
    out = []
    got = 0
    while got < size:
        xs = rng.uniform(-rs, rs, (4 * size, sig.space_dim))
        xt = rng.uniform(-rt, rt, (4 * size, sig.time_dim))
        xi = np.hstack([xs, xt])
        xi = xi[ctx.d_margin(xi) > 0]
        out.append(xi)
        got += len(xi)
    return np.vstack(out)[:size]


def sample_normal_points(ctx: AbpContext, rng, size: int, r_max: float | None = None):
    """Random base points (uniform in the chart) and normal vectors with
    ``|y+| <= c0 / tau`` and ``|y-| <= r_max``.  Returns ``(P, y, loc)``."""
    P = ctx.twin.domain.sample_uniform(rng, size)
    loc = ctx.local(P)
    if r_max is None:
        st = np.sqrt(ctx.tau**2 - 1.0)
        r_max = min(2.0 * ctx.c0, ctx.c0 / st) if st > 0 else 2.0 * ctx.c0
    s = (ctx.c0 / ctx.tau) * rng.random(size) ** (1.0 / max(ctx.m, 1))
    r = r_max * rng.random(size) ** (1.0 / ctx.k)
    up = _sphere(rng, size, ctx.m)
    um = _sphere(rng, size, ctx.k)
    y = (np.einsum("na,nad->nd", s[:, None] * up, loc.n_plus)
         + np.einsum("na,nad->nd", r[:, None] * um, loc.n_minus))
    return P, y, loc


def sample_region(ctx: AbpContext, size: int, region: str = "A", seed: int = 0,
                  chunk: int = 20_000, max_draws: int = 5_000_000):
    """Collect ``size`` random points of ``Omega`` or ``A``.

    Returns ``(P, y, draws)``; fewer points come back if ``max_draws`` runs out.
    """
    key = {"A": "in_A", "Omega": "in_Omega"}[region]
    Ps, ys = [], []
    got = draws = stream = 0
    while got < size and draws < max_draws:
        P, y, loc = sample_normal_points(ctx, _rng(seed, 1_000_000 + stream), chunk)
        keep = ctx.batch_flags(loc, y)[key]
        Ps.append(P[keep])
        ys.append(y[keep])
        got += int(keep.sum())
        draws += chunk
        stream += 1
    return np.vstack(Ps)[:size], np.vstack(ys)[:size], draws


def _estimate_chunk(ctx: AbpContext, rng, size: int, eps: float):
    """Weights whose mean estimates the measure integral divided by eps^2."""
    dom = ctx.twin.domain
    P = dom.sample_uniform(rng, size)
    loc = ctx.local(P)
    smax = ctx.c0 / ctx.tau
    g2 = ctx.sig.inner(loc.grad, loc.grad)
    w = dom.area * loc.jac * sphere_area(ctx.k) * eps * eps
    if ctx.m:
        s = smax * rng.random(size)
        up = _sphere(rng, size, ctx.m)
        w = w * smax * sphere_area(ctx.m) * s ** (ctx.m - 1)
    else:
        s = np.zeros(size)
        up = np.zeros((size, 0))
    t = g2 + s * s + eps * eps * rng.random(size)
    um = _sphere(rng, size, ctx.k)
    w = w * 0.5 * t ** ((ctx.k - 2) / 2.0)
    y = (np.einsum("na,nad->nd", s[:, None] * up, loc.n_plus)
         + np.einsum("na,nad->nd", np.sqrt(t)[:, None] * um, loc.n_minus))
    fl = ctx.batch_flags(loc, y)
    keep = fl["in_A"]
    return np.where(keep, w * np.nan_to_num(fl["det"]), 0.0), int(keep.sum())


@dataclass
class MeasureEstimate:
    lhs_analytic: float
    rhs_mc: float  # extrapolated to eps -> 0
    ci: float
    slack: float
    passed: bool
    runs: dict


def measure_estimate_check(ctx: AbpContext, eps: float | None = None,
                           n_samples: int = 1_000_000, seed: int = 0,
                           chunk: int = 100_000) -> MeasureEstimate:
    """Monte Carlo check of the lower bound on the image measure.

    The estimate at ``eps`` and ``eps / 2`` (same random streams) is
    extrapolated linearly to ``eps = 0``; the comparison allows the 95%
    confidence half-width plus the size of the extrapolation step.
    """
    if ctx.field is None:
        raise ValueError("the measure estimate needs a parametric twin")
    eps = 1e-2 * ctx.c0 if eps is None else eps
    runs = {}
    for e in (eps, eps / 2):
        tot = 0.0
        tot2 = 0.0
        hits = 0
        done = 0
        stream = 0
        while done < n_samples:
            b = min(chunk, n_samples - done)
            w, h = _estimate_chunk(ctx, _rng(seed, stream), b, e)
            w = w / (e * e)
            tot += float(w.sum())
            tot2 += float((w * w).sum())
            hits += h
            done += b
            stream += 1
        if hits == 0:
            raise EstimateInconclusive("no sample landed in the preimage of D and S_eps")
        mean = tot / n_samples
        var = max(tot2 / n_samples - mean * mean, 0.0)
        runs[e] = dict(mean=mean, ci=1.96 * np.sqrt(var / n_samples), hits=hits)
    r1, r2 = runs[eps], runs[eps / 2]
    R0 = 2 * r2["mean"] - r1["mean"]
    ci = float(np.sqrt(4 * r2["ci"] ** 2 + r1["ci"] ** 2))
    slack = abs(r2["mean"] - r1["mean"])
    lhs = measure_constant(ctx.n, ctx.m, ctx.k, ctx.c0, ctx.tau)
    fp = 1e-12 * abs(lhs)  # rounding allowance; the flat disk has zero variance
    return MeasureEstimate(lhs, R0, ci, slack, bool(lhs <= R0 + ci + slack + fp),
                           {str(k): v for k, v in runs.items()})
