"""Piecewise-linear finite elements for the Neumann problem

    Lap u = c0 (c_f - f)  on the surface,     du/deta = c0  on the boundary,

on the induced (Riemannian) metric of a spacelike triangle mesh.  The
constant ``c_f`` is the one making the data compatible with Green's
identity, computed with the same lumped measures the assembly uses.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import kernels
from .errors import InvalidMesh, NotConnected, SolverFailure
from .surface import SurfaceMesh, second_fundamental_form, slope_field

logger = logging.getLogger(__name__)

COMPAT_WARN = 1e-6


@dataclass
class DensityField:
    values: np.ndarray
    kind: str  # "thm1", "thm2" or "custom"
    clamp: float = 0.0  # largest positive <H, H> clamped away (thm1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise ValueError("density must be non-negative")


def _vertex_mean_curvature(mesh: SurfaceMesh):
    """Mean curvature vectors at all vertices.

    Uses the parametric source when the mesh has one; otherwise the
    quadratic-fit estimate at interior vertices, with boundary vertices
    taking the average of their interior neighbours.
    """
    if mesh.source is not None and mesh.params is not None:
        return second_fundamental_form(mesh.source, mesh.params).H
    H = np.zeros((mesh.n_vertices, mesh.sig.dim))
    interior = np.where(~mesh.boundary_vertex_mask)[0]
    H[interior] = second_fundamental_form(mesh, interior).H
    A = mesh.adjacency()
    for v in np.where(mesh.boundary_vertex_mask)[0]:
        nb = A.indices[A.indptr[v]: A.indptr[v + 1]]
        nb = nb[~mesh.boundary_vertex_mask[nb]]
        if len(nb):
            H[v] = H[nb].mean(axis=0)
    return H


def thm2_coefficients(tau: float):
    """Weights of |pi_s H| and |pi_t H| in the codimension-with-space density."""
    a = 1.0 / tau + np.sqrt(max(tau * tau - 1.0 / (tau * tau), 0.0))
    b = np.sqrt(tau * tau + 1.0)
    return a, b


def density_from_H(sig, H, kind: str, tau: float | None = None):
    """Density values from mean curvature vectors ``H`` (N, D)."""
    if kind == "thm1":
        q = sig.inner(H, H)
        clamp = float(max(q.max(initial=0.0), 0.0))
        return DensityField(np.sqrt(np.clip(-q, 0.0, None)), "thm1", clamp)
    if kind == "thm2":
        if tau is None:
            raise ValueError("thm2 density needs tau")
        a, b = thm2_coefficients(tau)
        hs, ht = sig.split(H)
        return DensityField(a * np.linalg.norm(hs, axis=-1) + b * np.linalg.norm(ht, axis=-1),
                            "thm2")
    raise ValueError(f"unknown density kind {kind!r}")


def mesh_density(mesh: SurfaceMesh, kind: str, tau: float | None = None) -> DensityField:
    if kind == "thm2" and tau is None:
        tau = slope_field(mesh.source if mesh.source is not None else mesh).tau
    return density_from_H(mesh.sig, _vertex_mean_curvature(mesh), kind, tau)


def compute_cf(mesh: SurfaceMesh, f: DensityField) -> float:
    A = float(mesh.vertex_areas().sum())
    if not A > 0:
        raise InvalidMesh("mesh has non-positive area")
    L = float(mesh.boundary_face_volumes().sum())
    return (L + float(mesh.vertex_areas() @ f.values)) / A


def assemble_stiffness(mesh: SurfaceMesh):
    K_loc, vol, _ = kernels.simplex_stiffness(mesh.vertices, mesh.cells, mesh.sig.space_dim)
    c = mesh.cells
    rows = np.repeat(c, 3, axis=1).ravel()
    cols = np.tile(c, (1, 3)).ravel()
    K = sparse.csr_matrix((K_loc.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)
    return K, vol


@dataclass
class NeumannSolution:
    u: np.ndarray
    grad_u: np.ndarray  # per cell, ambient tangent vectors (T, D)
    c0: float
    c_f: float
    compat_residual: float
    boundary_flux_error: float
    pre_projection_residual: float
    multiplier: float
    rhs: np.ndarray = field(repr=False)
    warnings: list = field(default_factory=list)
    density: DensityField | None = field(default=None, repr=False)


def cell_gradients(mesh: SurfaceMesh, u):
    """Ambient gradient of the P1 interpolant of ``u`` on every cell."""
    E = mesh.vertices[mesh.cells[:, 1:]] - mesh.vertices[mesh.cells[:, :1]]
    G = mesh.sig.inner(E[:, :, None, :], E[:, None, :, :])
    du = u[mesh.cells[:, 1:]] - u[mesh.cells[:, :1]]
    a = np.linalg.solve(G, du[..., None])[..., 0]
    return np.einsum("ti,tid->td", a, E)


def _bordered_solve(K, M, b):
    n = K.shape[0]
    Mcol = sparse.csr_matrix(M.reshape(-1, 1))
    A = sparse.bmat([[K, Mcol], [Mcol.T, None]], format="csc")
    rhs = np.append(b, 0.0)
    try:
        x = spla.splu(A).solve(rhs)
    except RuntimeError as exc:
        logger.warning("direct factorization failed (%s); trying MINRES", exc)
        x, info = spla.minres(A, rhs, rtol=1e-12, maxiter=20 * n)
        if info != 0:
            raise SolverFailure(f"MINRES did not converge (info={info})") from exc
    if not np.all(np.isfinite(x)):
        raise SolverFailure("non-finite solution")
    rel = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if rel > 1e-8:
        raise SolverFailure(f"linear solve residual {rel:.2e}")
    return x[:n], float(x[n])


def solve_poisson_neumann(mesh: SurfaceMesh, source, flux, project: bool = True):
    """Solve ``Lap u = source``, ``du/deta = flux`` with lumped data.

    ``source`` is given per vertex, ``flux`` per vertex (only boundary values
    are used) or as a scalar.  Returns ``(u, multiplier, rhs, pre_residual)``;
    ``u`` has zero mean for the lumped mass.
    """
    if not mesh.is_connected():
        raise NotConnected("mesh has more than one component")
    K, _ = assemble_stiffness(mesh)
    M = mesh.vertex_areas()
    Mb = mesh.boundary_vertex_lengths()
    b = -np.asarray(source, dtype=float) * M + np.broadcast_to(flux, M.shape) * Mb
    total = float(b.sum())
    scale = float(np.abs(np.broadcast_to(flux, M.shape) * Mb).sum()) or 1.0
    pre = abs(total) / scale
    if project:
        b = b - (total / M.sum()) * M
    u, lam = _bordered_solve(K, M, b)
    return u, lam, b, pre


def solve_neumann(mesh: SurfaceMesh, f: DensityField, c0: float = 1.0) -> NeumannSolution:
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    c_f = compute_cf(mesh, f)
    if not mesh.is_connected():
        raise NotConnected("mesh has more than one component")
    K, _ = assemble_stiffness(mesh)
    M = mesh.vertex_areas()
    Mb = mesh.boundary_vertex_lengths()
    L = float(Mb.sum())
    # right-hand side for c0 = 1, then scaled, so rhs(c0) == c0 * rhs(1) exactly
    b1 = -(c_f - f.values) * M + Mb
    b = c0 * b1
    notes = []
    pre = abs(float(b.sum())) / (c0 * L)
    if pre > COMPAT_WARN:
        notes.append(f"compatibility residual {pre:.2e} before projection")
        logger.warning(notes[-1])
    b = b - (float(b.sum()) / M.sum()) * M
    u, lam = _bordered_solve(K, M, b)
    integral_lap = float(M @ (c0 * (c_f - f.values))) + lam * float(M.sum())
    compat = abs(integral_lap - c0 * L) / (c0 * L)
    grad = cell_gradients(mesh, u)
    eta, owner = mesh.boundary_conormals()
    flux = mesh.sig.inner(grad[owner], eta)
    return NeumannSolution(
        u=u,
        grad_u=grad,
        c0=c0,
        c_f=c_f,
        compat_residual=compat,
        boundary_flux_error=float(np.abs(flux - c0).max()),
        pre_projection_residual=pre,
        multiplier=lam,
        rhs=b,
        warnings=notes,
        density=f,
    )


def gradient_field(sol: NeumannSolution, mesh: SurfaceMesh):
    """Per-cell ambient gradient of the solution (tangent to each cell)."""
    return sol.grad_u
