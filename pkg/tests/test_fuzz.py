import numpy as np
import pytest

from minkiso.fuzz import DEFAULT_SIGNATURES, lemma_linear_fuzz


def test_small_run_clean():
    res = lemma_linear_fuzz(4000, seed=3)
    assert [r.signature for r in res] == list(DEFAULT_SIGNATURES)
    for r in res:
        assert r.passed, r
        assert r.n_pairs == 1000 and r.n_subspaces == 100
        assert r.witness_max_error < 1e-6
        assert all(v < 0 for v in r.worst_excess.values())


def test_deterministic():
    a = lemma_linear_fuzz(400, seed=5, signatures=[(2, 1, 2)])[0]
    b = lemma_linear_fuzz(400, seed=5, signatures=[(2, 1, 2)])[0]
    assert a.worst_excess == b.worst_excess and a.worst_location == b.worst_location


def test_negative_slack_detects_sharpness():
    # bound (1) is attained, so demanding a strict margin must report violations
    r = lemma_linear_fuzz(200, seed=0, signatures=[(2, 0, 2)], slack=-0.5)[0]
    assert r.violations["proj"] > 0 and not r.passed


@pytest.mark.parametrize("sig", [(1, 1, 1), (2, 2, 1), (3, 0, 3)])
def test_other_signatures(sig):
    r = lemma_linear_fuzz(300, seed=1, signatures=[sig])[0]
    assert r.passed
