"""Timing of the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 200000]

Each kernel runs on identical inputs in every available backend; the
table lists the best wall time, the speed-up over NumPy and the largest
absolute difference between backend outputs.
"""

import argparse
import time

import numpy as np

from minkiso.corpus import corpus
from minkiso.kernels import available_backends
from minkiso.linalg import build_frame, normal_split, random_spacelike_subspace
from minkiso.surface import mesh_from_parametric


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _flat(out):
    if isinstance(out, dict):
        return np.concatenate([np.ravel(a) for v in out.values() for a in v])
    return np.concatenate([np.ravel(a) for a in out])


def cases(size, seed=0):
    rng = np.random.default_rng(seed)
    L = random_spacelike_subspace(rng, 3, 2, 2)
    fr = build_frame(L)
    sp = normal_split(L, fr)
    V = rng.standard_normal((size, 7))
    yield "linear_bounds", f"{size} vectors in R^(5,2)", lambda mod: mod.linear_bounds(
        V, fr.e_plus, fr.e_minus, fr.lambdas, sp.n_plus, sp.n_minus, 5, fr.tau)

    mesh = mesh_from_parametric(corpus("elliptic-catenoid"), 128)
    yield "simplex_stiffness", f"{len(mesh.cells)} cells", lambda mod: mod.simplex_stiffness(
        mesh.vertices, mesh.cells, mesh.sig.space_dim)

    hess = rng.standard_normal((size, 2, 2))
    ii = rng.standard_normal((size, 2, 2, 4))
    ii = 0.5 * (ii + np.swapaxes(ii, 1, 2))
    y = rng.standard_normal((size, 4))
    yield "abp_integrand", f"{size} points", lambda mod: mod.abp_integrand(hess, ii, y, 2)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=200_000)
    args = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the NumPy fallback is timed")
    print(f"{'kernel':<18} {'input':<26} {'backend':<8} {'seconds':>10} {'speed-up':>9} {'max diff':>10}")
    for name, desc, call in cases(args.size):
        ref_t, ref = _best(lambda: call(backends["python"]), args.repeat)
        for bname, mod in backends.items():
            t, out = (ref_t, ref) if bname == "python" else _best(lambda: call(mod), args.repeat)
            diff = float(np.max(np.abs(_flat(out) - _flat(ref))))
            print(f"{name:<18} {desc:<26} {bname:<8} {t:>10.4f} {ref_t / t:>8.2f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
