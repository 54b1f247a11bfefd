"""Command-line front end.

Every subcommand produces a list of flat records; ``--format`` picks JSON,
an aligned table or CSV.  Exit status: 0 when every check passes, 1 on an
inequality or bound violation, 2 on bad input (unknown surface, broken
mesh, unsupported dimensions).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import abp, errors
from .corpus import CORPUS, corpus, parse_params
from .fem import mesh_density, solve_neumann
from .fuzz import DEFAULT_SIGNATURES, lemma_linear_fuzz
from .meshio import read_minkmesh
from .report import (
    check_thm1,
    check_thm2,
    fiala_huber_compare,
    geodesic_ball_expansion,
    geodesic_disk,
    _total_curvature,
)
from .surface import (
    ParametricSurface,
    SurfaceMesh,
    gauss_curvature,
    local_geometry,
    mesh_from_parametric,
    slope_field,
)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

# failures of a checked statement, as opposed to unusable input
_VIOLATIONS = (errors.BoundViolation, errors.SurjectivityViolation, errors.ACondViolation)


class _Input(Exception):
    """Raised for unusable command-line input."""


# ---------------------------------------------------------------------------
# helpers


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            out[key] = json.dumps(v, default=_jsonable)
        else:
            out[key] = _jsonable(v) if isinstance(v, (np.generic,)) else v
    return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def render(records, fmt: str) -> str:
    if fmt == "json":
        body = records[0] if len(records) == 1 else records
        return json.dumps(body, default=_jsonable, indent=2, sort_keys=True) + "\n"
    if fmt == "jsonl":
        return "".join(json.dumps(r, default=_jsonable, sort_keys=True) + "\n" for r in records)
    flat = [_flatten(r) for r in records]
    keys = []
    for r in flat:
        keys += [k for k in r if k not in keys]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow(r)
        return buf.getvalue()
    # table: one block per record
    width = max((len(k) for k in keys), default=0)
    blocks = []
    for r in flat:
        blocks.append("\n".join(f"{k.ljust(width)}  {_fmt(v)}" for k, v in r.items()))
    return "\n\n".join(blocks) + "\n"


def _float_list(text, name):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise _Input(f"{name}: expected comma-separated numbers, got {text!r}") from None


def load_surface(args):
    """Parametric corpus surface or a mesh file, from the common flags."""
    if getattr(args, "mesh", None):
        return read_minkmesh(args.mesh)
    if not args.surface:
        raise _Input("give --surface <name> or --mesh <file>")
    try:
        params = parse_params(args.params)
    except ValueError as exc:
        raise _Input(f"--params: {exc}") from None
    try:
        return corpus(args.surface, params)
    except TypeError as exc:
        raise _Input(f"--params: {exc}") from None


def _need_parametric(S, what):
    if not isinstance(S, ParametricSurface):
        raise _Input(f"{what} needs a parametric surface (--surface)")
    return S


def _as_mesh(S, res):
    return S if isinstance(S, SurfaceMesh) else mesh_from_parametric(S, res)


# ---------------------------------------------------------------------------
# subcommands; each returns (records, passed)


def cmd_slope(args):
    S = load_surface(args)
    sf = slope_field(S, res=args.res)
    where = sf.samples[sf.argmax]
    rec = dict(surface=_surface_name(S), tau=sf.tau, argmax=_jsonable(where),
               converged=sf.converged, rounds=sf.rounds, samples=int(len(sf.tau_x)),
               tau_min=float(sf.tau_x.min()))
    return [rec], True


def cmd_curvature(args):
    S = load_surface(args)
    rec = dict(surface=_surface_name(S))
    if isinstance(S, SurfaceMesh):
        interior = np.flatnonzero(~S.boundary_vertex_mask)
        defect = 2 * np.pi - S.vertex_angle_sums()[interior]
        rec.update(total_K_interior=float(defect.sum()),
                   euler_characteristic=S.euler_characteristic(),
                   interior_vertices=int(len(interior)))
        return [rec], True
    P = S.domain.grid(args.res)
    P = P[S.domain.boundary_distance(P) > 0]
    geo = local_geometry(S, P)
    K = gauss_curvature(S, P)
    q = S.sig.inner(geo.H, geo.H)
    hs, ht = S.sig.split(geo.H)
    tk, _ = _total_curvature(S, args.res, args.quad_order)
    rec.update(
        K_min=float(K.min()), K_max=float(K.max()), total_K=tk,
        H_mink_sq_min=float(q.min()), H_mink_sq_max=float(q.max()),
        H_spatial_max=float(np.linalg.norm(hs, axis=-1).max()),
        H_temporal_max=float(np.linalg.norm(ht, axis=-1).max()),
        samples=int(len(P)),
    )
    return [rec], True


def cmd_solve_neumann(args):
    S = load_surface(args)
    mesh = _as_mesh(S, args.res)
    tau = slope_field(mesh).tau
    f = mesh_density(mesh, args.density, tau)
    t0 = time.perf_counter()
    sol = solve_neumann(mesh, f, args.c0)
    ok = sol.compat_residual < 1e-10
    rec = dict(
        surface=_surface_name(S), vertices=mesh.n_vertices, cells=int(len(mesh.cells)),
        c0=args.c0, density=args.density, c_f=sol.c_f,
        green_residual=sol.compat_residual,
        pre_projection_residual=sol.pre_projection_residual,
        boundary_flux_error=sol.boundary_flux_error,
        u_min=float(sol.u.min()), u_max=float(sol.u.max()),
        seconds=time.perf_counter() - t0, passed=bool(ok), warnings=list(sol.warnings),
    )
    return [rec], ok


def _diag(check, ctx, params, passed, where, resid, **extra):
    return abp.Diagnostic(check, ctx.name, params, bool(passed), where, float(resid), extra)


def cmd_abp_diagnose(args):
    S = load_surface(args)
    if isinstance(S, SurfaceMesh):
        ctx = abp.AbpContext.from_mesh(S, c0=args.c0, density=args.density or "thm1")
    else:
        ctx = abp.AbpContext.from_surface(S, res=args.res, c0=args.c0, density=args.density)
    checks = args.checks.split(",") if args.checks else (
        ["jacobian", "amgm", "surjectivity", "boundary-flux", "measure"]
        if ctx.field is not None else ["surjectivity"])
    base = dict(seed=args.seed, samples=args.samples, c0=ctx.c0, tau=ctx.tau, res=args.res)
    out = []
    rng_stream = 0
    for check in checks:
        rng_stream += 1
        t0 = time.perf_counter()
        if check == "jacobian":
            n = min(args.samples, 100)
            P, y, _ = abp.sample_region(ctx, n, "Omega", seed=args.seed)
            worst, where = 0.0, None
            for Pi, yi in zip(P, y):
                p = abp.NormalPoint(yi, Pi)
                a = abp.jacobian_det(ctx, p)
                b = abp.jacobian_det_fd(ctx, p)
                err = abs(a - b) / max(abs(b), 1e-12)
                if err >= worst:
                    worst, where = err, Pi.tolist()
            d = _diag(check, ctx, dict(base, points=len(P)), len(P) > 0 and worst < 1e-4,
                      where, worst)
        elif check == "amgm":
            P, y, _ = abp.sample_region(ctx, args.samples, "A", seed=args.seed)
            det, bound, sc = abp.amgm_batch(ctx, ctx.local(P), y)
            excess = np.maximum.reduce([det - bound, -det, -sc])
            i = int(np.argmax(excess)) if len(P) else 0
            resid = float(excess[i]) if len(P) else np.nan
            d = _diag(check, ctx, dict(base, points=len(P)),
                      len(P) > 0 and resid <= abp.A_TOL, P[i].tolist() if len(P) else None,
                      resid, min_det=float(det.min(initial=np.inf)),
                      min_scalar=float(sc.min(initial=np.inf)),
                      max_equality_gap=float(np.abs(bound - det).max(initial=0.0)))
        elif check == "surjectivity":
            xis = abp.sample_D(ctx, abp._rng(args.seed, rng_stream), args.samples)
            fails, worst, where = 0, 0.0, None
            for xi in xis:
                _, _, dg = abp.surjectivity_check(ctx, xi, raise_on_fail=False)
                if not dg["passed"]:
                    fails += 1
                    where = dg["location"]
                worst = max(worst, dg["residual"])
            rate = 1.0 - fails / max(len(xis), 1)
            d = _diag(check, ctx, dict(base, points=len(xis)), rate >= 0.99, where, worst,
                      pass_rate=rate, failures=fails)
        elif check == "boundary-flux":
            xis = abp.sample_D(ctx, abp._rng(args.seed, rng_stream), min(args.samples, 200))
            worst, ok, ferr = abp.boundary_flux_check(ctx, xis)
            d = _diag(check, ctx, base, ok, None, -worst, flux_error=ferr)
        elif check == "measure":
            est = abp.measure_estimate_check(ctx, eps=args.eps, n_samples=args.samples,
                                             seed=args.seed)
            d = _diag(check, ctx, dict(base, eps=args.eps), est.passed, None,
                      est.lhs_analytic - est.rhs_mc, lhs=est.lhs_analytic, rhs=est.rhs_mc,
                      ci=est.ci, slack=est.slack)
        else:
            raise _Input(f"unknown check {check!r}")
        d.extra["seconds"] = time.perf_counter() - t0
        out.append(d)
    recs = [json.loads(d.to_json()) for d in out]
    return recs, all(d.passed for d in out)


def _check_thm(fn, args):
    S = load_surface(args)
    rep = fn(S, res=args.res, quad_order=args.quad_order)
    return [rep.as_dict()], rep.passed


def cmd_check_thm1(args):
    return _check_thm(check_thm1, args)


def cmd_check_thm2(args):
    S = load_surface(args)
    if S.sig.space_dim - 2 < 1:
        raise _Input("check-thm2 needs a spacelike normal direction (m >= 1); use check-thm1")
    return _check_thm(check_thm2, args)


def cmd_fiala_huber(args):
    S = _need_parametric(load_surface(args), "fiala-huber")
    target = S
    rec = dict(surface=S.name)
    if args.center is not None:
        c = _float_list(args.center, "--center")
        if args.rho is None:
            raise _Input("--center needs --rho")
        target = geodesic_disk(S, c, args.rho)
        rec.update(center=c, rho=args.rho)
    cmp = fiala_huber_compare(target, res=args.res, quad_order=args.quad_order)
    rec.update(cmp.as_dict())
    ok = cmp.holds
    rec["passed"] = ok
    return [rec], ok


def cmd_geodesic_expansion(args):
    S = _need_parametric(load_surface(args), "geodesic-expansion")
    c = _float_list(args.center, "--center") if args.center else _domain_centre(S.domain)
    radii = _float_list(args.radii, "--radii") if args.radii else None
    fit = geodesic_ball_expansion(S, c, radii)
    ok = fit.relative_error <= args.tolerance
    rec = dict(surface=S.name, center=list(map(float, c)), coefficient=fit.coefficient,
               K_p=fit.K_p, expected=fit.K_p / 4, relative_error=fit.relative_error,
               radii=fit.radii, values=fit.values, passed=bool(ok))
    return [rec], ok


def cmd_lemma_linear_fuzz(args):
    sigs = DEFAULT_SIGNATURES
    if args.signatures:
        try:
            sigs = tuple(tuple(int(x) for x in s.split(",")) for s in args.signatures.split(";"))
        except ValueError:
            raise _Input("--signatures: expected 'n,m,k;n,m,k'") from None
        if any(len(s) != 3 for s in sigs):
            raise _Input("--signatures: each entry needs three integers")
    res = lemma_linear_fuzz(n_pairs=args.samples, seed=args.seed, signatures=sigs)
    recs = [dict(signature=list(r.signature), pairs=r.n_pairs, subspaces=r.n_subspaces,
                 violations=r.violations, worst_excess=r.worst_excess,
                 witness_max_error=r.witness_max_error, witnesses_found=r.witness_found,
                 seconds=r.seconds, passed=r.passed) for r in res]
    return recs, all(r.passed for r in res)


def cmd_corpus(args):
    recs = [dict(name=k, description=v[1]) for k, v in sorted(CORPUS.items())]
    return recs, True


def _domain_centre(dom):
    if dom.kind == "disk":
        return [0.0, 0.0]
    if dom.kind == "band":
        return [0.5 * (dom.bounds[0] + dom.bounds[1]), 0.0]
    lo0, hi0, lo1, hi1 = dom.bounds
    return [0.5 * (lo0 + hi0), 0.5 * (lo1 + hi1)]


def _surface_name(S):
    if isinstance(S, ParametricSurface):
        return S.name
    return S.source.name if S.source is not None else "mesh"


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--surface", help="corpus surface name (see 'corpus list')")
    common.add_argument("--params", help="surface parameters as k=v,k=v")
    common.add_argument("--mesh", help="minkmesh file to use instead of a corpus surface")
    common.add_argument("--res", type=int, default=64, help="grid / mesh resolution")
    common.add_argument("--quad-order", type=int, default=4, help="Gauss points per cell")
    common.add_argument("--seed", type=int, default=0, help="random seed (u64)")
    common.add_argument("--out", help="write the report to this path (.json or .csv)")
    common.add_argument("--format", choices=("json", "table", "csv"), default=None)

    p = argparse.ArgumentParser(prog="minkiso", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    add("slope", cmd_slope, "space-time slope tau of a surface")
    add("curvature", cmd_curvature, "mean curvature and Gauss curvature summary")
    sp = add("solve-neumann", cmd_solve_neumann, "solve the Neumann problem on a mesh")
    sp.add_argument("--c0", type=float, default=1.0)
    sp.add_argument("--density", choices=("thm1", "thm2", "zero"), default="thm1")
    sp = add("abp-diagnose", cmd_abp_diagnose, "comparison-map diagnostics as JSON records")
    sp.add_argument("--c0", type=float, default=1.0)
    sp.add_argument("--density", choices=("thm1", "thm2", "zero"), default=None)
    sp.add_argument("--samples", type=int, default=500)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--checks", help="comma list of jacobian,amgm,surjectivity,"
                                     "boundary-flux,measure")
    sp.set_defaults(res=48)
    add("check-thm1", cmd_check_thm1, "both sides of the timelike-codimension inequality")
    add("check-thm2", cmd_check_thm2, "both sides of the mixed-codimension inequality")
    sp = add("fiala-huber", cmd_fiala_huber, "area against the total-curvature bound")
    sp.add_argument("--center", help="chart point x,y of a geodesic disk")
    sp.add_argument("--rho", type=float, help="geodesic radius")
    sp = add("geodesic-expansion", cmd_geodesic_expansion, "fit 4 pi A / L^2 - 1 against rho^2")
    sp.add_argument("--center", help="chart point x,y (default: domain centre)")
    sp.add_argument("--radii", help="comma list of geodesic radii")
    sp.add_argument("--tolerance", type=float, default=0.1,
                    help="allowed relative error against K_p / 4")
    sp = add("lemma-linear-fuzz", cmd_lemma_linear_fuzz, "random check of the projection bounds")
    sp.add_argument("--samples", type=int, default=100_000, help="number of (L, v) pairs")
    sp.add_argument("--signatures", help="n,m,k;n,m,k (default: four standard cases)")
    sp = add("corpus", cmd_corpus, "corpus utilities")
    sp.add_argument("action", choices=("list",))
    return p


def _output_format(args):
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix.lower() == ".csv":
        return "csv"
    if args.command == "abp-diagnose":
        return "jsonl"
    return "json"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        records, ok = args.func(args)
    except _VIOLATIONS as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (_Input, errors.MinkisoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(records, _output_format(args))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
