"""Pure NumPy implementations of the batched kernels.

These are the reference versions; ``_ckernels`` must agree with them to
rounding.  All functions take and return plain float64 arrays.
"""

import numpy as np

BACKEND = "python"


def _inner(a, b, s):
    return np.sum(a[..., :s] * b[..., :s], axis=-1) - np.sum(a[..., s:] * b[..., s:], axis=-1)


def linear_bounds(V, e_plus, e_minus, lambdas, n_plus, n_minus, space_dim, tau):
    V = np.ascontiguousarray(V, dtype=float)
    n = lambdas.size
    k = e_minus.shape[0]
    r = min(n, k)
    vp = V @ e_plus[:n].T
    vm = np.zeros_like(vp)
    vm[:, :r] = V @ e_minus[:r].T
    proj = np.sqrt(np.sum((vp - lambdas * vm) ** 2 / (1.0 - lambdas**2), axis=1))
    vs = np.linalg.norm(V[:, :space_dim], axis=1)
    vt = np.linalg.norm(V[:, space_dim:], axis=1)
    stau = np.sqrt(max(tau * tau - 1.0, 0.0))
    plus = np.sqrt(np.sum(_inner(V[:, None, :], n_plus[None], space_dim) ** 2, axis=1))
    minus = np.sqrt(np.sum(_inner(V[:, None, :], n_minus[None], space_dim) ** 2, axis=1))
    return {
        "proj": (proj, tau * vs + stau * vt),
        "plus": (plus, vs),
        "minus": (minus, stau * vs + tau * vt),
    }


def simplex_stiffness(X, cells, space_dim):
    """Local P1 stiffness matrices and volumes of spacelike simplices.

    Returns ``(K, vol, G)`` with ``K`` of shape (T, n+1, n+1), the simplex
    volumes ``vol`` (T,) and the edge Gram matrices ``G`` (T, n, n).
    """
    X = np.asarray(X, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    n = cells.shape[1] - 1
    E = X[cells[:, 1:]] - X[cells[:, :1]]  # (T, n, D)
    metric = np.ones(X.shape[1])
    metric[space_dim:] = -1.0
    G = np.einsum("tid,tjd,d->tij", E, E, metric)
    det = np.linalg.det(G)
    vol = np.sqrt(np.clip(det, 0.0, None)) / float(np.prod(np.arange(1, n + 1)))
    D = np.vstack([-np.ones((1, n)), np.eye(n)])  # reference barycentric gradients
    Ginv = np.linalg.inv(G)
    K = vol[:, None, None] * np.einsum("ai,tij,bj->tab", D, Ginv, D)
    return K, vol, G


def abp_integrand(hess, ii, y, space_dim):
    """Minimum eigenvalue, determinant and trace of ``hess - <II, y>``.

    ``hess`` (S, n, n) in an orthonormal tangent frame, ``ii`` (S, n, n, D)
    normal-valued, ``y`` (S, D).
    """
    hess = np.asarray(hess, dtype=float)
    ii = np.asarray(ii, dtype=float)
    y = np.asarray(y, dtype=float)
    M = hess - _inner(ii, y[:, None, None, :], space_dim)
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    ev = np.linalg.eigvalsh(M)
    return ev[:, 0], np.linalg.det(M), np.trace(M, axis1=1, axis2=2)
