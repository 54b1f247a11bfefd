"""Randomised check of the projection bounds for spacelike subspaces.

For a spacelike n-plane L with slope tau and any vector v:

    |pi_L v|     <= tau |v_s| + sqrt(tau^2 - 1) |v_t|
    |pi_{N+} v|  <= |v_s|
    |pi_{N-} v|  <= sqrt(tau^2 - 1) |v_s| + tau |v_t|

The first is attained by ``v = e1+ - c e1-`` for every ``c >= 0``, where
``e1+, e1-`` is the top singular pair of L's temporal tilt.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import build_frame, linear_bounds, normal_split, random_spacelike_subspace

DEFAULT_SIGNATURES = ((1, 0, 1), (2, 0, 2), (2, 1, 2), (3, 2, 2))


@dataclass
class FuzzResult:
    signature: tuple
    n_pairs: int
    n_subspaces: int
    violations: dict
    worst_excess: dict
    witness_max_error: float
    witness_found: int
    seconds: float
    worst_location: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (sum(self.violations.values()) == 0
                and self.witness_found == self.n_subspaces)


def _witness_error(frame, split, rng):
    """Relative gap of bound (1) at the witness vector, for a random c >= 0."""
    v = frame.e_plus[0].copy()
    lam = frame.lambdas[0]
    if lam > 0 and len(frame.e_minus):
        v = v - rng.uniform(0.0, 2.0) * frame.e_minus[0]
    b = linear_bounds(frame, split, v[None])
    lhs, rhs = b["proj"][0][0], b["proj"][1][0]
    return abs(lhs - rhs) / max(rhs, 1e-300)


def lemma_linear_fuzz(n_pairs: int = 100_000, seed: int = 0, signatures=DEFAULT_SIGNATURES,
                      per_subspace: int = 10, slack: float = 1e-9, witness_tol: float = 1e-6):
    """Run the fuzz; ``n_pairs`` is split evenly across the signatures."""
    out = []
    per_sig = n_pairs // len(signatures)
    for si, (n, m, k) in enumerate(signatures):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, si], dtype=np.uint64)))
        t0 = time.perf_counter()
        viol = {"proj": 0, "plus": 0, "minus": 0}
        worst = {"proj": -np.inf, "plus": -np.inf, "minus": -np.inf}
        where = {}
        wmax = 0.0
        found = 0
        n_sub = 0
        done = 0
        while done < per_sig:
            L = random_spacelike_subspace(rng, n, m, k)
            frame = build_frame(L)
            split = normal_split(L, frame)
            b = min(per_subspace, per_sig - done)
            V = rng.standard_normal((b, n + m + k)) * rng.lognormal(0.0, 1.0, (b, 1))
            res = linear_bounds(frame, split, V)
            for key, (lhs, rhs) in res.items():
                ex = lhs - rhs - slack * (1.0 + rhs)
                viol[key] += int(np.sum(ex > 0))
                j = int(np.argmax(ex))
                if ex[j] > worst[key]:
                    worst[key] = float(ex[j])
                    where[key] = V[j].tolist()
            err = _witness_error(frame, split, rng)
            wmax = max(wmax, err)
            found += int(err <= witness_tol)
            n_sub += 1
            done += b
        out.append(FuzzResult((n, m, k), done, n_sub, viol, worst, wmax, found,
                              time.perf_counter() - t0, where))
    return out
