"""Multi-layered M-estimate TLS (m-MTLS) joint SI / RT channel estimation.

Every layer runs an MTLS filter over the joint regressor ``u(n) = [i(n); x(n)]``.
Layer ``l`` subtracts its a-priori SI estimate from its observation to form
the observation of layer ``l + 1``; the final RT estimate is the mean of the
per-layer RT estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core_filters import Algorithm, FilterState, RegressionSample, mtls_step
from .metrics import NMSD_FLOOR_DB, nmsd
from .robust_stats import DEFAULT_C1, DEFAULT_LAMBDA_SIGMA, DEFAULT_NW, MEstimateState


@dataclass(frozen=True)
class JointChannelEstimate:
    si_part: np.ndarray
    rt_part: np.ndarray

    @property
    def joint(self) -> np.ndarray:
        return np.concatenate([self.si_part, self.rt_part])


@dataclass(frozen=True)
class LayerStack:
    filters: tuple[FilterState, ...]
    mstates: tuple[MEstimateState, ...]
    si_len: int
    rt_len: int
    include_first_layer_in_average: bool = True
    last_rejected: tuple[bool, ...] = ()

    def __post_init__(self):
        if len(self.filters) < 1:
            raise ValueError("a layer stack needs at least one layer")
        if len(self.filters) != len(self.mstates):
            raise ValueError("one M-estimate state is required per layer")
        dim = self.si_len + self.rt_len
        if any(f.dim != dim for f in self.filters):
            raise ValueError(f"every layer must have dimension N + M = {dim}")
        if not self.include_first_layer_in_average and len(self.filters) == 1:
            raise ValueError("cannot exclude the first layer of a single-layer stack")

    @property
    def num_layers(self) -> int:
        return len(self.filters)

    def estimate(self, layer: int) -> JointChannelEstimate:
        c = self.filters[layer].weights
        return JointChannelEstimate(c[: self.si_len], c[self.si_len:])


def make_stack(si_len: int, rt_len: int, layers: int = 3, mu=0.002, gamma: float = 1.0,
               nw: int = DEFAULT_NW, lambda_sigma: float = DEFAULT_LAMBDA_SIGMA,
               c1: float = DEFAULT_C1, include_first_layer_in_average: bool = True) -> LayerStack:
    """Zero-initialised stack. ``mu`` may be a scalar or one value per layer."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    mus = np.broadcast_to(np.asarray(mu, dtype=float), (layers,))
    dim = si_len + rt_len
    filters = tuple(FilterState.zeros(dim, float(m), gamma, Algorithm.MTLS) for m in mus)
    mstates = tuple(MEstimateState(nw=nw, lambda_sigma=lambda_sigma, c1=c1) for _ in range(layers))
    return LayerStack(filters, mstates, si_len, rt_len, include_first_layer_in_average)


def build_joint_input(local_ref, remote_ref, si_len: int | None = None,
                      rt_len: int | None = None) -> np.ndarray:
    i = np.asarray(local_ref, dtype=float).ravel()
    x = np.asarray(remote_ref, dtype=float).ravel()
    if si_len is not None and i.size != si_len:
        raise ValueError(f"local reference has length {i.size}, expected {si_len}")
    if rt_len is not None and x.size != rt_len:
        raise ValueError(f"remote reference has length {x.size}, expected {rt_len}")
    return np.concatenate([i, x])


def average_rt_estimate(stack: LayerStack) -> np.ndarray:
    start = 0 if stack.include_first_layer_in_average else 1
    if start >= stack.num_layers:
        raise ValueError("no layers left to average")
    parts = [stack.estimate(l).rt_part for l in range(start, stack.num_layers)]
    return np.mean(parts, axis=0)


def mmtls_step(stack: LayerStack, y: float, u, local_ref, is_first_sample: bool):
    """Process one received sample through every layer.

    Returns ``(stack, rt_estimate, layer_residuals)`` where
    ``layer_residuals[l]`` is the observation handed to layer ``l + 1``,
    i.e. ``y`` minus the a-priori SI estimates of layers ``0..l``.
    """
    u = np.asarray(u, dtype=float)
    i = np.asarray(local_ref, dtype=float)
    N = stack.si_len
    if u.shape != (N + stack.rt_len,) or i.shape != (N,):
        raise ValueError("joint input or local reference has the wrong length")
    if not (np.isfinite(y) and np.all(np.isfinite(u)) and np.all(np.isfinite(i))):
        raise ValueError("non-finite received sample or regressor")

    filters, mstates, residuals, rejected = [], [], [], []
    y_l = float(y)
    for f, m in zip(stack.filters, stack.mstates):
        w_prior = f.weights[:N]
        f, m, _, rej = mtls_step(f, m, RegressionSample(u, y_l), is_first_sample)
        y_l = y_l - float(w_prior @ i)
        filters.append(f)
        mstates.append(m)
        residuals.append(y_l)
        rejected.append(rej)
    stack = replace(stack, filters=tuple(filters), mstates=tuple(mstates),
                    last_rejected=tuple(rejected))
    return stack, average_rt_estimate(stack), np.array(residuals)


@dataclass
class TrainingTrace:
    """Per-sample record of one training run.

    NMSD columns are NaN when no ground truth was supplied.
    """

    nmsd_si_db: np.ndarray
    nmsd_rt_db: np.ndarray
    rejected: np.ndarray
    residuals: np.ndarray
    stack: LayerStack
    rt_estimate: np.ndarray = field(default=None)

    @property
    def si_estimate(self) -> np.ndarray:
        return self.stack.estimate(0).si_part

    def columns(self) -> dict[str, np.ndarray]:
        cols = {
            "n": np.arange(1, self.nmsd_rt_db.size + 1),
            "nmsd_si_db": self.nmsd_si_db,
            "nmsd_rt_db": self.nmsd_rt_db,
        }
        for l in range(self.rejected.shape[1]):
            cols[f"rejected_l{l + 1}"] = self.rejected[:, l].astype(int)
        return cols


def run_training(stack: LayerStack, records: Sequence, ns: int, truth=None,
                 floor_db: float = NMSD_FLOOR_DB) -> TrainingTrace:
    """Iterate :func:`mmtls_step` over the first ``ns`` records.

    ``truth`` is an optional object with ``si_taps`` and ``rt_taps`` used to
    fill the NMSD columns.
    """
    if ns < 0 or len(records) < ns:
        raise ValueError(f"need {ns} records, got {len(records)}")
    L = stack.num_layers
    nmsd_si = np.full(ns, np.nan)
    nmsd_rt = np.full(ns, np.nan)
    rejected = np.zeros((ns, L), dtype=bool)
    residuals = np.zeros((ns, L))
    rt_est = average_rt_estimate(stack)
    for n in range(ns):
        rec = records[n]
        u = build_joint_input(rec.i_vec, rec.x_vec, stack.si_len, stack.rt_len)
        stack, rt_est, residuals[n] = mmtls_step(stack, rec.y, u, rec.i_vec, n == 0)
        rejected[n] = stack.last_rejected
        if truth is not None:
            nmsd_si[n] = nmsd(stack.estimate(0).si_part, truth.si_taps, floor_db)
            nmsd_rt[n] = nmsd(rt_est, truth.rt_taps, floor_db)
    return TrainingTrace(nmsd_si, nmsd_rt, rejected, residuals, stack, rt_est)
