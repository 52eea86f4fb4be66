import numpy as np
import pytest

from mmtls.config import Config, apply
from mmtls.experiments import _chunks, fig2_curves, star_terminal


def test_chunks_cover_trials_in_order():
    parts = _chunks(60, 25)
    assert [list(r) for r in parts] == [list(range(25)), list(range(25, 50)), list(range(50, 60))]
    with pytest.raises(ValueError):
        _chunks(0)


def test_aggregate_is_invariant_to_trial_permutation():
    cfg = apply(Config(), [("ns", "300")])
    r = star_terminal(cfg, 30)
    # the same trials reached through a different chunking give the same per-trial values
    s = star_terminal(cfg, 30, jobs=2)
    np.testing.assert_array_equal(r["mmtls"], s["mmtls"])
    perm = np.random.default_rng(0).permutation(30)
    assert np.mean(r["mmtls"][perm]) == pytest.approx(np.mean(r["mmtls"]), rel=1e-12)


def test_fig2_terminal_matches_curve_end():
    res = fig2_curves(trials=5, horizon=500)
    for k, curve in res.curves.items():
        assert curve[-1] == pytest.approx(res.terminal[k].mean(), rel=1e-12)


@pytest.mark.xfail(strict=True, reason="deeper layers add their own gradient noise on a near-zero SI "
                   "target, so steady-state residual SI grows with depth (see README)")
def test_residual_si_decreases_with_depth():
    cfg = apply(Config(), [("isr_db", "40"), ("ns", "12000")])
    r = star_terminal(cfg, 100)
    per_layer = r["resid_layers"].mean(axis=0)
    assert np.all(np.diff(per_layer) <= 0)
