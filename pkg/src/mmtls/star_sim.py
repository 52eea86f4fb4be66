"""Simultaneous transmit-and-receive (STAR) scenario generation.

The received baseband sample is

    y(n) = w.i(n) + h.x(n) + v(n)

with ``i(n)`` the local BPSK stream seen through the self-interference (SI)
channel ``w`` and ``x(n)`` the remote BPSK pilot seen through the remote
transmission (RT) channel ``h``.  The estimator observes a noisy copy of the
local reference; the SI itself is formed from the clean stream.

Channel scaling: ``||w||**2 = 10**(si_gain_db/10)`` and
``||h||**2 = ||w||**2 / 10**(isr_db/10)`` exactly.  With unit-power BPSK the SI
power equals ``||w||**2`` and the Gaussian noise variance on both ``y`` and the
local reference is ``||w||**2 / 10**(snr_db/10)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core_filters import RegressionSample

FIG2_DIM = 10
FIG2_NOISE_VAR = 0.1
FIG2_IMPULSE_VAR = 10.0
FIG2_IMPULSE_TIMES = (1000, 1500, 2000, 3000)
FIG2_HORIZON = 4000


@dataclass(frozen=True)
class StarScenario:
    si_len: int = 4
    rt_len: int = 10
    isr_db: float = 20.0
    snr_db: float = 20.0
    impulse_prob: float = 0.01
    impulse_var_ratio: float = 100.0
    ns: int = 2000
    sample_rate_hz: float = 10_000.0
    bandwidth_hz: float = 5_000.0
    seed: int = 0
    si_gain_db: float = -20.0

    def __post_init__(self):
        for name in ("si_len", "rt_len", "ns"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.impulse_prob <= 1.0:
            raise ValueError("impulse_prob must lie in [0, 1]")
        if self.impulse_var_ratio <= 0:
            raise ValueError("impulse_var_ratio must be positive")
        if self.sample_rate_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("sample_rate_hz and bandwidth_hz must be positive")

    @property
    def isr(self) -> float:
        return 10.0 ** (self.isr_db / 10.0)

    @property
    def si_power(self) -> float:
        return 10.0 ** (self.si_gain_db / 10.0)

    @property
    def noise_var(self) -> float:
        """Gaussian noise variance on y and on the local reference."""
        return self.si_power * 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    si_taps: np.ndarray
    rt_taps: np.ndarray

    @property
    def joint(self) -> np.ndarray:
        return np.concatenate([self.si_taps, self.rt_taps])


@dataclass(frozen=True)
class SignalRecord:
    """One received sample with its hidden decomposition.

    ``i_vec`` is the noisy local reference the estimator sees; ``i_clean`` is
    the window that actually drove the SI channel.
    """

    y: float
    i_vec: np.ndarray
    x_vec: np.ndarray
    si_component: float
    rt_component: float
    noise: float
    i_clean: np.ndarray


@dataclass(frozen=True)
class SignalBlock:
    """Array form of a training block, one row per time index."""

    y: np.ndarray
    i_obs: np.ndarray
    i_clean: np.ndarray
    x: np.ndarray
    si: np.ndarray
    rt: np.ndarray
    noise: np.ndarray

    def __len__(self):
        return self.y.size

    def records(self) -> list[SignalRecord]:
        return [
            SignalRecord(float(self.y[n]), self.i_obs[n], self.x[n], float(self.si[n]),
                         float(self.rt[n]), float(self.noise[n]), self.i_clean[n])
            for n in range(self.y.size)
        ]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte-Carlo trial, insensitive to run order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def tapped_delay(stream: np.ndarray, taps: int) -> np.ndarray:
    """Rows ``[s[n], s[n-1], ..., s[n-taps+1]]`` for every full window of ``stream``."""
    return sliding_window_view(stream, taps)[:, ::-1]


def gen_bpsk(count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be non-negative")
    return 2.0 * rng.integers(0, 2, size=count) - 1.0


def _unit_gaussian(n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm > 0:
            return v / norm


def gen_channels(scenario: StarScenario, rng: np.random.Generator) -> ChannelRealization:
    """Gaussian tap directions rescaled to the configured SI power and ISR."""
    w = _unit_gaussian(scenario.si_len, rng) * np.sqrt(scenario.si_power)
    h = _unit_gaussian(scenario.rt_len, rng) * np.sqrt(scenario.si_power / scenario.isr)
    return ChannelRealization(w, h)


def gen_noise(count: int, scenario: StarScenario, rng: np.random.Generator):
    """Gaussian floor and Bernoulli-Gaussian impulses, both of length ``count``."""
    sigma2 = scenario.noise_var
    gaussian = np.sqrt(sigma2) * rng.standard_normal(count)
    hits = rng.random(count) < scenario.impulse_prob
    impulses = np.where(hits, np.sqrt(scenario.impulse_var_ratio * sigma2) * rng.standard_normal(count), 0.0)
    return gaussian, impulses


def synthesize_block(scenario: StarScenario, channels: ChannelRealization,
                     rng: np.random.Generator, count: int | None = None) -> SignalBlock:
    n_samples = scenario.ns if count is None else count
    N, M = scenario.si_len, scenario.rt_len
    local = gen_bpsk(n_samples + N - 1, rng)
    remote = gen_bpsk(n_samples + M - 1, rng)
    gaussian, impulses = gen_noise(n_samples, scenario, rng)
    ref_noise = np.sqrt(scenario.noise_var) * rng.standard_normal(local.size)

    i_clean = tapped_delay(local, N)
    i_obs = tapped_delay(local + ref_noise, N)
    x = tapped_delay(remote, M)
    si = i_clean @ channels.si_taps
    rt = x @ channels.rt_taps
    noise = gaussian + impulses
    y = si + rt + noise
    return SignalBlock(y, i_obs, i_clean, x, si, rt, noise)


def synthesize(scenario: StarScenario, channels: ChannelRealization,
               rng: np.random.Generator) -> list[SignalRecord]:
    return synthesize_block(scenario, channels, rng).records()


@dataclass(frozen=True)
class Fig2Data:
    inputs: np.ndarray   # noisy regressors, (horizon, 10)
    outputs: np.ndarray  # noisy observations, (horizon,)
    truth: np.ndarray
    impulses: np.ndarray


def fig2_arrays(rng: np.random.Generator, horizon: int = FIG2_HORIZON,
                impulse_times=FIG2_IMPULSE_TIMES) -> Fig2Data:
    """System-identification testbench with noisy input and output.

    White unit-variance input through an unknown unit-norm FIR system of
    length 10; Gaussian noise of variance 0.1 on the input stream and on the
    output; impulses of variance 10 on the output at the 1-based time indices
    in ``impulse_times``.
    """
    D = FIG2_DIM
    truth = _unit_gaussian(D, rng)
    clean = rng.standard_normal(horizon + D - 1)
    in_noise = np.sqrt(FIG2_NOISE_VAR) * rng.standard_normal(clean.size)
    out_noise = np.sqrt(FIG2_NOISE_VAR) * rng.standard_normal(horizon)
    impulses = np.zeros(horizon)
    times = np.asarray(impulse_times, dtype=int)
    times = times[times <= horizon]
    impulses[times - 1] = np.sqrt(FIG2_IMPULSE_VAR) * rng.standard_normal(times.size)
    outputs = tapped_delay(clean, D) @ truth + out_noise + impulses
    return Fig2Data(tapped_delay(clean + in_noise, D), outputs, truth, impulses)


def fig2_testbench(rng: np.random.Generator, horizon: int = FIG2_HORIZON,
                   impulse_times=FIG2_IMPULSE_TIMES) -> tuple[list[RegressionSample], np.ndarray]:
    data = fig2_arrays(rng, horizon, impulse_times)
    samples = [RegressionSample(data.inputs[n], data.outputs[n], n + 1) for n in range(horizon)]
    return samples, data.truth
