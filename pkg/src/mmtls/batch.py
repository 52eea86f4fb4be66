"""Trial-vectorised versions of the adaptive filters.

Each routine advances ``T`` independent trials in lock-step, one time index
at a time, with arrays shaped ``(T, ...)``.  The arithmetic mirrors the
sample-by-sample functions in :mod:`mmtls.core_filters` and
:mod:`mmtls.joint_estimator`; the test-suite checks the two agree.
Every reduction runs along the last axis so a trial's numbers do not depend
on how many other trials share the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_filters import Algorithm
from .robust_stats import DEFAULT_C1, DEFAULT_LAMBDA_SIGMA, DEFAULT_NW, correction_factor

_TINY = np.finfo(float).tiny


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class _RobustScale:
    """Per-trial sliding median of squared errors and the recursive variance."""

    def __init__(self, trials, nw, lambda_sigma, c1, floor_rel=1e-6):
        self.window = np.zeros((trials, nw))
        self.sigma2 = np.zeros(trials)
        self.y_power = np.zeros(trials)
        self.count = 0
        self.nw, self.lam, self.c1, self.c2 = nw, lambda_sigma, c1, correction_factor(nw)
        self.floor_rel = floor_rel

    def threshold(self, e, y):
        self.count += 1
        self.y_power = self.y_power + (y * y - self.y_power) / self.count
        e2 = e * e
        if self.count == 1:
            self.window[:] = e2[:, None]
        else:
            # circular slot; the median does not care about order
            self.window[:, (self.count - 1) % self.nw] = e2
        self.sigma2 = self.lam * self.sigma2 + self.c2 * (1.0 - self.lam) * np.median(self.window, axis=-1)
        floor = np.maximum(self.floor_rel * np.sqrt(self.y_power), 1e-12)
        return np.where(self.sigma2 > 0.0, self.c1 * np.sqrt(self.sigma2), floor)


def _tls_direction(w, x, e, gamma):
    den = _dot(w, w) + gamma
    if np.any(den <= _TINY):
        raise FloatingPointError("TLS cost denominator underflowed")
    return ((den * e)[:, None] * x + (e * e)[:, None] * w) / (den * den)[:, None]


def run_filters_batch(inputs, outputs, algorithm: Algorithm, mu: float, gamma: float = 1.0,
                      truth=None, nw: int = DEFAULT_NW, lambda_sigma: float = DEFAULT_LAMBDA_SIGMA,
                      c1: float = DEFAULT_C1, robust: bool = True):
    """Run one single-layer filter over ``T`` trials.

    ``inputs`` is ``(T, H, D)`` and ``outputs`` ``(T, H)``.  Returns
    ``(weights, misalignment)`` where ``misalignment[t, n]`` is the linear
    NMSD after sample ``n`` (only if ``truth`` of shape ``(T, D)`` is given).
    """
    inputs = np.asarray(inputs, dtype=float)
    outputs = np.asarray(outputs, dtype=float)
    T, H, D = inputs.shape
    w = np.zeros((T, D))
    mis = np.zeros((T, H)) if truth is not None else None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        h2 = _dot(truth, truth)
    scale = _RobustScale(T, nw, lambda_sigma, c1) if algorithm is Algorithm.MTLS else None
    for n in range(H):
        x = inputs[:, n]
        y = outputs[:, n]
        e = y - _dot(x, w)
        if algorithm is Algorithm.LMS:
            w = w + mu * e[:, None] * x
        elif algorithm is Algorithm.TLS:
            w = w + mu * _tls_direction(w, x, e, gamma)
        else:
            xi = scale.threshold(e, y)
            step = mu * _tls_direction(w, x, e, gamma)
            if robust and n > 0:
                step = np.where((np.abs(e) < xi)[:, None], step, 0.0)
            w = w + step
        if mis is not None:
            d = w - truth
            mis[:, n] = _dot(d, d) / h2
    return w, mis


@dataclass
class MMTLSBatchResult:
    joint: np.ndarray          # (L, T, N+M) final per-layer joint estimates
    rt_estimate: np.ndarray    # (T, M) averaged RT estimate
    mis_rt: np.ndarray | None  # (T, Ns) linear NMSD of the averaged RT estimate
    mis_si: np.ndarray | None  # (T, Ns) linear NMSD of the layer-1 SI estimate
    reject_rate: np.ndarray    # (L,) fraction of rejected updates per layer
    si_len: int

    @property
    def si_total(self) -> np.ndarray:
        """Sum of per-layer SI estimates: the SI the whole stack subtracts."""
        return self.joint[:, :, : self.si_len].sum(axis=0)

    @property
    def si_layers(self) -> np.ndarray:
        return self.joint[:, :, : self.si_len]


def run_mmtls_batch(y, i_obs, x, layers: int = 3, mu=0.002, gamma: float = 1.0,
                    nw: int = DEFAULT_NW, lambda_sigma: float = DEFAULT_LAMBDA_SIGMA,
                    c1: float = DEFAULT_C1, include_first_layer_in_average: bool = True,
                    truth_si=None, truth_rt=None, robust: bool = True) -> MMTLSBatchResult:
    """m-MTLS joint estimation over ``T`` trials.

    ``y`` is ``(T, Ns)``, ``i_obs`` ``(T, Ns, N)`` and ``x`` ``(T, Ns, M)``.
    """
    y = np.asarray(y, dtype=float)
    i_obs = np.asarray(i_obs, dtype=float)
    x = np.asarray(x, dtype=float)
    T, ns = y.shape
    N, M = i_obs.shape[-1], x.shape[-1]
    if layers < 1:
        raise ValueError("layers must be >= 1")
    if not include_first_layer_in_average and layers == 1:
        raise ValueError("cannot exclude the first layer of a single-layer stack")
    mus = np.broadcast_to(np.asarray(mu, dtype=float), (layers,))
    c = np.zeros((layers, T, N + M))
    scales = [_RobustScale(T, nw, lambda_sigma, c1) for _ in range(layers)]
    rejected = np.zeros(layers)
    first = 0 if include_first_layer_in_average else 1

    track = truth_rt is not None
    if track:
        truth_rt = np.asarray(truth_rt, dtype=float)
        truth_si = np.asarray(truth_si, dtype=float)
        mis_rt = np.zeros((T, ns))
        mis_si = np.zeros((T, ns))
        h2 = _dot(truth_rt, truth_rt)
        w2 = _dot(truth_si, truth_si)

    for n in range(ns):
        i_n = i_obs[:, n]
        u = np.concatenate([i_n, x[:, n]], axis=-1)
        y_l = y[:, n]
        for l in range(layers):
            cl = c[l]
            e = y_l - _dot(u, cl)
            xi = scales[l].threshold(e, y_l)
            step = mus[l] * _tls_direction(cl, u, e, gamma)
            if robust and n > 0:
                accept = np.abs(e) < xi
                rejected[l] += T - np.count_nonzero(accept)
                step = np.where(accept[:, None], step, 0.0)
            y_l = y_l - _dot(cl[:, :N], i_n)
            c[l] = cl + step
        if track:
            d = c[first:, :, N:].mean(axis=0) - truth_rt
            mis_rt[:, n] = _dot(d, d) / h2
            d = c[0, :, :N] - truth_si
            mis_si[:, n] = _dot(d, d) / w2

    rt = c[first:, :, N:].mean(axis=0)
    return MMTLSBatchResult(
        joint=c, rt_estimate=rt,
        mis_rt=mis_rt if track else None, mis_si=mis_si if track else None,
        reject_rate=rejected / max(T * ns, 1), si_len=N,
    )
