"""The vectorised Monte-Carlo engine must reproduce the sample-by-sample path."""

import numpy as np
import pytest

from mmtls.batch import run_filters_batch, run_mmtls_batch
from mmtls.core_filters import Algorithm, FilterState, run_filter
from mmtls.joint_estimator import make_stack, run_training
from mmtls.metrics import misalignment
from mmtls.star_sim import (
    StarScenario, fig2_arrays, fig2_testbench, gen_channels, synthesize_block, trial_rng,
)


@pytest.mark.parametrize("alg", list(Algorithm))
def test_single_layer_filters_match_scalar(alg):
    T, H = 3, 1200
    data = [fig2_arrays(trial_rng(0, t), H) for t in range(T)]
    X = np.stack([d.inputs for d in data])
    y = np.stack([d.outputs for d in data])
    truth = np.stack([d.truth for d in data])
    w, mis = run_filters_batch(X, y, alg, 0.05, truth=truth)
    for t in range(T):
        samples, h = fig2_testbench(trial_rng(0, t), H)
        st, hist = run_filter(FilterState.zeros(10, 0.05, algorithm=alg), samples)
        np.testing.assert_allclose(w[t], st.weights, rtol=1e-10, atol=1e-13)
        np.testing.assert_allclose(mis[t], misalignment(hist, h), rtol=1e-8, atol=1e-14)


def test_mmtls_matches_scalar():
    sc = StarScenario(ns=600, impulse_prob=0.05, snr_db=10)
    T = 3
    blocks, chans = [], []
    for t in range(T):
        rng = trial_rng(2, t)
        chans.append(gen_channels(sc, rng))
        blocks.append(synthesize_block(sc, chans[-1], rng))
    res = run_mmtls_batch(np.stack([b.y for b in blocks]), np.stack([b.i_obs for b in blocks]),
                          np.stack([b.x for b in blocks]), layers=3, mu=0.01,
                          truth_si=np.stack([c.si_taps for c in chans]),
                          truth_rt=np.stack([c.rt_taps for c in chans]))
    rejected = 0
    for t in range(T):
        trace = run_training(make_stack(4, 10, mu=0.01), blocks[t].records(), sc.ns, truth=chans[t])
        for l in range(3):
            np.testing.assert_allclose(res.joint[l, t], trace.stack.filters[l].weights, rtol=1e-9, atol=1e-13)
        np.testing.assert_allclose(res.rt_estimate[t], trace.rt_estimate, rtol=1e-9, atol=1e-13)
        np.testing.assert_allclose(10 * np.log10(res.mis_rt[t]), trace.nmsd_rt_db, atol=1e-7)
        rejected += trace.rejected[1:].sum(axis=0)
    np.testing.assert_allclose(res.reject_rate * T * sc.ns, rejected)


def test_batch_result_does_not_depend_on_batch_size():
    sc = StarScenario(ns=300)
    blocks = [synthesize_block(sc, gen_channels(sc, trial_rng(1, t)), trial_rng(1, t)) for t in range(4)]
    stack = lambda k, idx: np.stack([getattr(blocks[i], k) for i in idx])
    full = run_mmtls_batch(stack("y", range(4)), stack("i_obs", range(4)), stack("x", range(4)))
    one = run_mmtls_batch(stack("y", [2]), stack("i_obs", [2]), stack("x", [2]))
    np.testing.assert_array_equal(full.joint[:, 2], one.joint[:, 0])
