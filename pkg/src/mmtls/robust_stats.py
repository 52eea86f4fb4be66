"""M-estimate score, robust error-variance tracking and outlier threshold.

The error variance is tracked recursively from the median of a sliding window
of squared errors, which keeps the threshold insensitive to isolated impulses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_C1 = 2.576
DEFAULT_LAMBDA_SIGMA = 0.98
DEFAULT_NW = 14
MAD_CONSTANT = 1.483


def correction_factor(nw: int) -> float:
    """Small-window correction ``c2`` applied to the median of squared errors."""
    if nw < 2:
        raise ValueError(f"window length must be >= 2, got {nw}")
    return MAD_CONSTANT * (1.0 + 5.0 / (nw - 1))


def median(window) -> float:
    """Median of a non-empty window; even lengths average the two middle values."""
    arr = np.asarray(window, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("median of an empty window")
    return float(np.median(arr))


def mest_rho(e: float, xi: float) -> float:
    """Clipped quadratic loss: ``e**2 / 2`` inside the threshold, ``xi**2 / 2`` outside."""
    if abs(e) < xi:
        return 0.5 * e * e
    return 0.5 * xi * xi


@dataclass(frozen=True)
class MEstimateState:
    """Sliding window of squared errors plus the recursive variance estimate.

    ``window`` is empty until the first error arrives; afterwards it always
    holds exactly ``nw`` entries, oldest first.  ``y_power`` is the running
    mean square of the observations, used only to scale the threshold floor
    while the variance estimate is still zero.
    """

    nw: int = DEFAULT_NW
    lambda_sigma: float = DEFAULT_LAMBDA_SIGMA
    c1: float = DEFAULT_C1
    sigma2: float = 0.0
    window: tuple[float, ...] = ()
    count: int = 0
    y_power: float = 0.0
    floor_rel: float = 1e-6

    def __post_init__(self):
        if self.nw < 2:
            raise ValueError(f"nw must be >= 2, got {self.nw}")
        if not 0.9 <= self.lambda_sigma < 1.0:
            raise ValueError(f"lambda_sigma must lie in [0.9, 1), got {self.lambda_sigma}")
        if self.c1 <= 0:
            raise ValueError(f"c1 must be positive, got {self.c1}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")

    @property
    def c2(self) -> float:
        return correction_factor(self.nw)

    @property
    def xi_min(self) -> float:
        return max(self.floor_rel * np.sqrt(self.y_power), 1e-12)

    def observe_output(self, y: float) -> "MEstimateState":
        """Fold one observation into the running power used by the floor."""
        count = self.count + 1
        y_power = self.y_power + (y * y - self.y_power) / count
        return replace(self, count=count, y_power=y_power)


def mest_sigma_update(state: MEstimateState, e: float, is_first_sample: bool) -> MEstimateState:
    """Push ``e**2`` into the window and refresh the variance estimate.

    On the first sample the window is filled with ``nw`` copies of ``e**2``;
    afterwards the oldest entry is dropped.
    """
    e2 = float(e) * float(e)
    if is_first_sample or not state.window:
        window = (e2,) * state.nw
    else:
        window = state.window[1:] + (e2,)
    lam = state.lambda_sigma
    sigma2 = lam * state.sigma2 + state.c2 * (1.0 - lam) * median(window)
    return replace(state, window=window, sigma2=sigma2)


def mest_threshold(state: MEstimateState) -> float:
    """Outlier threshold ``c1 * sigma``, or the positive floor while sigma is zero."""
    if state.sigma2 <= 0.0:
        return state.xi_min
    return state.c1 * float(np.sqrt(state.sigma2))
