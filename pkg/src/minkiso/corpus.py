"""Benchmark surfaces with closed-form immersions and derivatives.

Every surface lives in ``R^{2+m, k}`` with ``k = 2`` by default; surfaces of
``R^{2,1}`` are padded with an unused second temporal axis.

elliptic-catenoid
    The rotationally symmetric maximal graph ``t = a * asinh(r / a)`` over an
    annulus.  Radial graphs ``t = f(r)`` are maximal when
    ``(r f' / sqrt(1 - f'^2))' = 0``; the integration constant ``a`` gives
    ``f' = a / sqrt(r^2 + a^2)`` and hence the closed form.  Induced metric
    ``diag(r^2 / (r^2 + a^2), r^2)``, slope ``sqrt(1 + a^2 / r^2)``, Gauss
    curvature ``a^2 / r^4``.
"""

from __future__ import annotations

import re

import numpy as np

from .mink import Signature
from .surface import Domain, ParametricSurface


def _zeros(P, D, extra=()):
    return np.zeros(P.shape[:1] + tuple(extra) + (D,))


def flat_disk(radius=1.0, m=0, k=2):
    sig = Signature(2 + int(m), int(k))
    D = sig.dim

    def func(P):
        X = _zeros(P, D)
        X[:, :2] = P
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = 1.0
        dX[:, 1, 1] = 1.0
        return X, dX, _zeros(P, D, (2, 2))

    return ParametricSurface("flat-disk", sig, Domain.disk(radius), func,
                             dict(radius=radius, m=m, k=k))


def boosted_disk(beta=0.5, radius=1.0, m=0, k=2):
    sig = Signature(2 + int(m), int(k))
    D = sig.dim
    s = sig.space_dim
    ch, sh = np.cosh(beta), np.sinh(beta)

    def func(P):
        X = _zeros(P, D)
        X[:, 0] = ch * P[:, 0]
        X[:, 1] = P[:, 1]
        X[:, s] = sh * P[:, 0]
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = ch
        dX[:, 0, s] = sh
        dX[:, 1, 1] = 1.0
        return X, dX, _zeros(P, D, (2, 2))

    return ParametricSurface("boosted-disk", sig, Domain.disk(radius), func,
                             dict(beta=beta, radius=radius, m=m, k=k))


def elliptic_catenoid(a=1.0, r0=0.5, r1=2.0, m=0, k=2):
    sig = Signature(2 + int(m), int(k))
    D = sig.dim
    s = sig.space_dim

    def func(P):
        r, th = P[:, 0], P[:, 1]
        c, sn = np.cos(th), np.sin(th)
        q = np.sqrt(r * r + a * a)
        X = _zeros(P, D)
        X[:, 0] = r * c
        X[:, 1] = r * sn
        X[:, s] = a * np.arcsinh(r / a)
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = c
        dX[:, 0, 1] = sn
        dX[:, 0, s] = a / q
        dX[:, 1, 0] = -r * sn
        dX[:, 1, 1] = r * c
        ddX = _zeros(P, D, (2, 2))
        ddX[:, 0, 0, s] = -a * r / q**3
        ddX[:, 0, 1, 0] = ddX[:, 1, 0, 0] = -sn
        ddX[:, 0, 1, 1] = ddX[:, 1, 0, 1] = c
        ddX[:, 1, 1, 0] = -r * c
        ddX[:, 1, 1, 1] = -r * sn
        return X, dX, ddX

    return ParametricSurface("elliptic-catenoid", sig, Domain.band(r0, r1), func,
                             dict(a=a, r0=r0, r1=r1, m=m, k=k))


def euclidean_catenoid(c=1.0, v0=-0.5, v1=0.5, m=1, k=2):
    if m < 1:
        raise ValueError("the Euclidean catenoid needs m >= 1")
    sig = Signature(2 + int(m), int(k))
    D = sig.dim

    def func(P):
        v, th = P[:, 0], P[:, 1]
        co, sn = np.cos(th), np.sin(th)
        ch, sh = np.cosh(v), np.sinh(v)
        X = _zeros(P, D)
        X[:, 0] = c * ch * co
        X[:, 1] = c * ch * sn
        X[:, 2] = c * v
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = c * sh * co
        dX[:, 0, 1] = c * sh * sn
        dX[:, 0, 2] = c
        dX[:, 1, 0] = -c * ch * sn
        dX[:, 1, 1] = c * ch * co
        ddX = _zeros(P, D, (2, 2))
        ddX[:, 0, 0, 0] = c * ch * co
        ddX[:, 0, 0, 1] = c * ch * sn
        ddX[:, 0, 1, 0] = ddX[:, 1, 0, 0] = -c * sh * sn
        ddX[:, 0, 1, 1] = ddX[:, 1, 0, 1] = c * sh * co
        ddX[:, 1, 1, 0] = -c * ch * co
        ddX[:, 1, 1, 1] = -c * ch * sn
        return X, dX, ddX

    return ParametricSurface("euclidean-catenoid", sig, Domain.band(v0, v1), func,
                             dict(c=c, v0=v0, v1=v1, m=m, k=k))


def sphere_cap(R=1.0, angle=0.5, m=1, k=2):
    """Cap of the round sphere of radius R around its north pole, as a graph
    over the chart disk of radius ``R sin(angle)`` (needs angle < pi/2)."""
    if not 0 < angle < np.pi / 2:
        raise ValueError("angle must lie in (0, pi/2)")
    if m < 1:
        raise ValueError("the sphere cap needs m >= 1")
    sig = Signature(2 + int(m), int(k))
    D = sig.dim

    def func(P):
        w = np.sqrt(R * R - np.sum(P * P, axis=1))
        X = _zeros(P, D)
        X[:, :2] = P
        X[:, 2] = w
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = 1.0
        dX[:, 1, 1] = 1.0
        dX[:, :, 2] = -P / w[:, None]
        ddX = _zeros(P, D, (2, 2))
        ddX[:, :, :, 2] = -np.eye(2)[None] / w[:, None, None] - (
            P[:, :, None] * P[:, None, :] / (w**3)[:, None, None]
        )
        return X, dX, ddX

    return ParametricSurface("sphere-cap", sig, Domain.disk(R * np.sin(angle)), func,
                             dict(R=R, angle=angle, m=m, k=k))


def maximal_graph(coeffs=None, radius=1.0, m=0, k=2):
    """Spacelike graph ``t = f(p)`` of a polynomial ``f`` over a disk.

    ``coeffs`` maps exponent pairs ``(i, j)`` to the coefficient of
    ``p1^i p2^j``.  Despite the name, ``f`` need not be maximal; only the
    spacelike condition ``|grad f| < 1`` is enforced.
    """
    coeffs = {(0, 0): 0.0} if not coeffs else {tuple(key): float(v) for key, v in coeffs.items()}
    deg = max(max(i, j) for i, j in coeffs) + 1
    C = np.zeros((deg, deg))
    for (i, j), v in coeffs.items():
        C[i, j] = v
    P2 = np.polynomial.polynomial
    Cx = P2.polyder(C, axis=0)
    Cy = P2.polyder(C, axis=1)
    Cxx = P2.polyder(C, 2, axis=0)
    Cyy = P2.polyder(C, 2, axis=1)
    Cxy = P2.polyder(Cx, axis=1)
    sig = Signature(2 + int(m), int(k))
    D = sig.dim
    s = sig.space_dim

    def ev(c, P):
        return P2.polyval2d(P[:, 0], P[:, 1], c)

    def func(P):
        X = _zeros(P, D)
        X[:, :2] = P
        X[:, s] = ev(C, P)
        dX = _zeros(P, D, (2,))
        dX[:, 0, 0] = 1.0
        dX[:, 1, 1] = 1.0
        dX[:, 0, s] = ev(Cx, P)
        dX[:, 1, s] = ev(Cy, P)
        ddX = _zeros(P, D, (2, 2))
        ddX[:, 0, 0, s] = ev(Cxx, P)
        ddX[:, 1, 1, s] = ev(Cyy, P)
        ddX[:, 0, 1, s] = ddX[:, 1, 0, s] = ev(Cxy, P)
        return X, dX, ddX

    return ParametricSurface("maximal-graph", sig, Domain.disk(radius), func,
                             dict(coeffs=coeffs, radius=radius, m=m, k=k))


CORPUS = {
    "flat-disk": (flat_disk, "unit disk in a Euclidean slice"),
    "boosted-disk": (boosted_disk, "boost of the flat disk with rapidity beta"),
    "elliptic-catenoid": (elliptic_catenoid, "maximal annulus t = a asinh(r/a) in R^{2,1}"),
    "euclidean-catenoid": (euclidean_catenoid, "minimal catenoid piece in R^3"),
    "sphere-cap": (sphere_cap, "round spherical cap in R^3"),
    "maximal-graph": (maximal_graph, "polynomial spacelike graph t = f(x, y)"),
}

_COEF = re.compile(r"^c(\d)(\d)$")


def parse_params(text: str | None) -> dict:
    """Parse ``k=v,k=v`` flag text; ``cIJ`` keys collect polynomial coefficients."""
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, _, val = item.partition("=")
        key = key.strip()
        m = _COEF.match(key)
        if m:
            out.setdefault("coeffs", {})[(int(m.group(1)), int(m.group(2)))] = float(val)
        elif key in ("m", "k"):
            out[key] = int(val)
        else:
            out[key] = float(val)
    return out


def corpus(name: str, params: dict | None = None) -> ParametricSurface:
    try:
        factory = CORPUS[name][0]
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; choose from {sorted(CORPUS)}") from None
    return factory(**(params or {}))
