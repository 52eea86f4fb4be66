"""Sample-by-sample LMS, TLS and M-estimate TLS updates.

All updates are pure: they take a :class:`FilterState` and return a new one,
leaving the input untouched so trajectories can be replayed exactly.

The TLS family minimises the Rayleigh-quotient cost

    J(w) = mean((y - w.x)**2) / (||w||**2 + gamma)

where ``gamma`` is the ratio of output to input noise variance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .robust_stats import MEstimateState, mest_sigma_update, mest_threshold


class Algorithm(enum.Enum):
    LMS = "lms"
    TLS = "tls"
    MTLS = "mtls"


@dataclass(frozen=True)
class RegressionSample:
    """One noisy regressor/observation pair at time ``time_index``."""

    input: np.ndarray
    output: float
    time_index: int = 0

    def __post_init__(self):
        arr = np.array(self.input, dtype=float)
        if arr.ndim != 1:
            raise ValueError("sample input must be a 1-D vector")
        arr.flags.writeable = False
        object.__setattr__(self, "input", arr)
        object.__setattr__(self, "output", float(self.output))
        if self.time_index < 0:
            raise ValueError("time_index must be non-negative")


@dataclass(frozen=True)
class FilterState:
    weights: np.ndarray
    step_size: float
    gamma: float = 1.0
    algorithm: Algorithm = Algorithm.TLS

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-D vector")
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("non-finite filter weights")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, dim: int, step_size: float, gamma: float = 1.0,
              algorithm: Algorithm = Algorithm.TLS) -> "FilterState":
        return cls(np.zeros(dim), step_size, gamma, algorithm)

    @property
    def dim(self) -> int:
        return self.weights.size

    def with_weights(self, weights: np.ndarray) -> "FilterState":
        return replace(self, weights=weights)


def _check_dim(weights: np.ndarray, sample: RegressionSample) -> None:
    if sample.input.shape != weights.shape:
        raise ValueError(
            f"sample input length {sample.input.size} does not match filter dimension {weights.size}"
        )


def _denominator(weights: np.ndarray, gamma: float) -> float:
    den = float(weights @ weights) + gamma
    if not den > np.finfo(float).tiny:
        raise FloatingPointError("TLS cost denominator underflowed")
    return den


def _require(state: FilterState, algorithm: Algorithm) -> None:
    if state.algorithm is not algorithm:
        raise ValueError(f"expected a {algorithm.name} filter, got {state.algorithm.name}")


def prior_error(weights: np.ndarray, sample: RegressionSample) -> float:
    _check_dim(weights, sample)
    return sample.output - float(sample.input @ weights)


def tls_cost(weights, samples: Iterable[RegressionSample], gamma: float) -> float:
    """Rayleigh-quotient TLS cost averaged over ``samples`` (0 for none)."""
    w = np.asarray(weights, dtype=float)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    samples = list(samples)
    if not samples:
        return 0.0
    for s in samples:
        _check_dim(w, s)
    X = np.stack([s.input for s in samples])
    y = np.array([s.output for s in samples])
    r = y - X @ w
    return float(np.mean(r * r) / _denominator(w, gamma))


def tls_gradient(state: FilterState, sample: RegressionSample) -> np.ndarray:
    """Descent direction ``alpha * (x + alpha * w)`` with ``alpha = e / (||w||**2 + gamma)``.

    The update adds ``step_size`` times this vector.  It equals minus one half
    of the gradient of the single-sample Rayleigh cost.
    """
    w = state.weights
    e = prior_error(w, sample)
    alpha = e / _denominator(w, state.gamma)
    return alpha * (sample.input + alpha * w)


def tls_step(state: FilterState, sample: RegressionSample) -> tuple[FilterState, float]:
    _require(state, Algorithm.TLS)
    e = prior_error(state.weights, sample)
    w = state.weights + state.step_size * tls_gradient(state, sample)
    return state.with_weights(w), e


def lms_step(state: FilterState, sample: RegressionSample) -> tuple[FilterState, float]:
    _require(state, Algorithm.LMS)
    e = prior_error(state.weights, sample)
    w = state.weights + state.step_size * e * sample.input
    return state.with_weights(w), e


def mtls_gradient(weights: np.ndarray, x: np.ndarray, e: float, gamma: float) -> np.ndarray:
    """Gradient of ``(e**2 / 2) / (||w||**2 + gamma)`` inside the threshold branch."""
    den = _denominator(weights, gamma)
    return -(den * e * x + e * e * weights) / (den * den)


def mtls_step(
    state: FilterState,
    mstate: MEstimateState,
    sample: RegressionSample,
    is_first_sample: bool | None = None,
) -> tuple[FilterState, MEstimateState, float, bool]:
    """One M-estimate TLS update.

    Returns ``(state, mstate, prior_error, rejected)``.  When the a-priori
    error reaches the robust threshold the weights are returned unchanged.
    The first sample of a stream is always accepted.
    """
    _require(state, Algorithm.MTLS)
    if is_first_sample is None:
        is_first_sample = mstate.count == 0
    e = prior_error(state.weights, sample)
    mstate = mest_sigma_update(mstate.observe_output(sample.output), e, is_first_sample)
    xi = mest_threshold(mstate)
    if not is_first_sample and abs(e) >= xi:
        return state, mstate, e, True
    g = mtls_gradient(state.weights, sample.input, e, state.gamma)
    return state.with_weights(state.weights - state.step_size * g), mstate, e, False


def run_filter(state: FilterState, samples: Sequence[RegressionSample],
               mstate: MEstimateState | None = None) -> tuple[FilterState, np.ndarray]:
    """Run one filter over a stream and return the final state and weight history.

    ``history[n]`` holds the weights after sample ``n`` has been processed.
    """
    history = np.empty((len(samples), state.dim))
    if state.algorithm is Algorithm.MTLS and mstate is None:
        mstate = MEstimateState()
    for n, sample in enumerate(samples):
        if state.algorithm is Algorithm.LMS:
            state, _ = lms_step(state, sample)
        elif state.algorithm is Algorithm.TLS:
            state, _ = tls_step(state, sample)
        else:
            state, mstate, _, _ = mtls_step(state, mstate, sample, n == 0)
        history[n] = state.weights
    return state, history
