import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mmtls.core_filters import FilterState, RegressionSample, tls_step
from mmtls.metrics import nmsd
from mmtls.robust_stats import MEstimateState, median, mest_rho, mest_sigma_update

finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-6, 1e3)


@given(finite, positive)
def test_rho_is_even_and_bounded(e, xi):
    assert mest_rho(e, xi) == mest_rho(-e, xi)
    assert 0.0 <= mest_rho(e, xi) <= xi * xi / 2


@given(finite, finite, positive)
def test_rho_non_decreasing_in_magnitude(a, b, xi):
    lo, hi = sorted((abs(a), abs(b)))
    assert mest_rho(lo, xi) <= mest_rho(hi, xi)


@given(st.lists(finite, min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_median_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert median(values) == median(shuffled)


@given(st.lists(st.floats(-1e3, 1e3), min_size=20, max_size=20), st.floats(0.9, 0.999), st.integers(2, 20))
def test_sigma_update_bounds(errors, lam, nw):
    state = MEstimateState(nw=nw, lambda_sigma=lam)
    for n, e in enumerate(errors):
        new = mest_sigma_update(state, e, n == 0)
        assert new.sigma2 >= lam * state.sigma2 * (1 - 1e-12)
        assert new.sigma2 <= (lam * state.sigma2 + new.c2 * (1 - lam) * max(new.window)) * (1 + 1e-12)
        assert len(new.window) == nw
        state = new


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_tls_step_pure_and_deterministic(seed):
    rng = np.random.default_rng(seed)
    s = RegressionSample(rng.standard_normal(4), float(rng.standard_normal()))
    st_ = FilterState(rng.standard_normal(4), 0.01)
    a, b = tls_step(st_, s), tls_step(st_, s)
    np.testing.assert_array_equal(a[0].weights, b[0].weights)


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_nmsd_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    h, d = rng.standard_normal(5), rng.standard_normal(5)
    assert abs(nmsd(scale * (h + d), scale * h) - nmsd(h + d, h)) < 1e-9
