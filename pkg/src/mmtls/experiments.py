"""Monte-Carlo experiments behind the CLI subcommands.

Trials are processed in fixed-size chunks.  A chunk's numbers depend only on
the seed and its trial indices, and chunk results are reduced in index order,
so the output is identical for any number of worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .batch import run_filters_batch, run_mmtls_batch
from .config import Config
from .core_filters import Algorithm
from .metrics import misalignment, mmse_solve, to_db
from .star_sim import (
    FIG2_HORIZON, FIG2_IMPULSE_TIMES, StarScenario, fig2_arrays, gen_channels,
    synthesize_block, trial_rng,
)

CHUNK = 25
FIG2_MU = 0.05
SNR_POINTS = (0.0, 10.0, 20.0, 30.0)
ISR_POINTS = (20.0, 25.0, 30.0, 35.0, 40.0)


def _chunks(trials: int, size: int = CHUNK):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return [range(a, min(a + size, trials)) for a in range(0, trials, size)]


def _run(func, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


# -- impulse-robustness testbench ---------------------------------------------

@dataclass
class Fig2Result:
    n: np.ndarray
    curves: dict[str, np.ndarray]    # trial-mean linear misalignment per algorithm
    terminal: dict[str, np.ndarray]  # per-trial linear misalignment at the last sample

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"n": self.n}
        for name, curve in self.curves.items():
            cols[f"nmsd_{name}_db"] = to_db(curve)
        return cols


def _fig2_chunk(task):
    seed, trials, mu, horizon, impulse_times = task
    data = [fig2_arrays(trial_rng(seed, t), horizon, impulse_times) for t in trials]
    X = np.stack([d.inputs for d in data])
    y = np.stack([d.outputs for d in data])
    h = np.stack([d.truth for d in data])
    sums, terminal = {}, {}
    for alg in Algorithm:
        _, mis = run_filters_batch(X, y, alg, mu[alg], truth=h)
        sums[alg.value] = mis.sum(axis=0)
        terminal[alg.value] = mis[:, -1]
    return sums, terminal


def fig2_curves(trials: int = 100, seed: int = 0, mu=FIG2_MU, horizon: int = FIG2_HORIZON,
                impulses: bool = True, jobs: int = 1) -> Fig2Result:
    """Average LMS / TLS / MTLS learning curves on the impulse testbench.

    ``mu`` is either one step size for all three filters or a mapping from
    :class:`Algorithm` to step size.
    """
    if not isinstance(mu, dict):
        mu = {alg: float(mu) for alg in Algorithm}
    times = FIG2_IMPULSE_TIMES if impulses else ()
    tasks = [(seed, r, mu, horizon, times) for r in _chunks(trials)]
    parts = _run(_fig2_chunk, tasks, jobs)
    names = [alg.value for alg in Algorithm]
    curves = {k: sum(p[0][k] for p in parts) / trials for k in names}
    terminal = {k: np.concatenate([p[1][k] for p in parts]) for k in names}
    return Fig2Result(np.arange(1, horizon + 1), curves, terminal)


# -- STAR joint estimation ----------------------------------------------------

def _trial_data(scenario: StarScenario, seed: int, trials, extra: int = 0):
    """Stack channels and training blocks; ``extra`` appends a held-out block per trial."""
    chans, blocks, evals = [], [], []
    for t in trials:
        rng = trial_rng(seed, t)
        ch = gen_channels(scenario, rng)
        chans.append(ch)
        blocks.append(synthesize_block(scenario, ch, rng))
        if extra:
            evals.append(synthesize_block(scenario, ch, rng, count=extra))
    stack = lambda attr, src: np.stack([getattr(b, attr) for b in src])
    train = {k: stack(k, blocks) for k in ("y", "i_obs", "x")}
    truth = (np.stack([c.si_taps for c in chans]), np.stack([c.rt_taps for c in chans]))
    return train, truth, evals


def _mmse_terminal(train, truth, N, noise_var):
    out = []
    for t in range(train["y"].shape[0]):
        U = np.concatenate([train["i_obs"][t], train["x"][t]], axis=1)
        c = mmse_solve(U, train["y"][t], noise_var)
        d = c[N:] - truth[1][t]
        out.append(d @ d / (truth[1][t] @ truth[1][t]))
    return np.array(out)


def _estimate_chunk(task):
    config, scenario, seed, trials = task
    train, (w, h), _ = _trial_data(scenario, seed, trials)
    N = scenario.si_len
    res = {}
    for name, L in (("mmtls", config.layers), ("mtls", 1)):
        r = run_mmtls_batch(train["y"], train["i_obs"], train["x"], truth_si=w, truth_rt=h,
                            **config.estimator_kwargs(L))
        res[name] = misalignment(r.rt_estimate, h)
        # residual SI power through the clean reference: ||w - sum of w_hat||**2
        res[f"resid_{name}"] = np.sum((w - r.si_total) ** 2, axis=-1)
        if name == "mmtls":
            cum = np.cumsum(r.si_layers, axis=0)
            res["resid_layers"] = np.sum((w[None] - cum) ** 2, axis=-1).T
    res["mmse"] = _mmse_terminal(train, (w, h), N, scenario.noise_var)
    res["rt_power"] = np.sum(h * h, axis=-1)
    return res


def _gather(parts, key):
    return np.concatenate([p[key] for p in parts])


def star_terminal(config: Config, trials: int, jobs: int = 1, **overrides) -> dict[str, np.ndarray]:
    """Per-trial terminal RT misalignment for m-MTLS, single-layer MTLS and MMSE."""
    scenario = replace(config.scenario, **overrides)
    tasks = [(config, scenario, scenario.seed, r) for r in _chunks(trials)]
    parts = _run(_estimate_chunk, tasks, jobs)
    return {k: _gather(parts, k) for k in parts[0]}


def compare_snr(config: Config, trials: int, snr_points=SNR_POINTS, jobs: int = 1):
    rows = {"snr_db": [], "nmsd_mmse_db": [], "nmsd_mtls_db": [], "nmsd_mmtls_db": []}
    for snr in snr_points:
        r = star_terminal(config, trials, jobs, snr_db=float(snr))
        rows["snr_db"].append(float(snr))
        for name in ("mmse", "mtls", "mmtls"):
            rows[f"nmsd_{name}_db"].append(to_db(r[name].mean()))
    return {k: np.array(v) for k, v in rows.items()}


def sweep_isr(config: Config, trials: int, isr_points=ISR_POINTS, jobs: int = 1):
    rows = {k: [] for k in ("isr_db", "nmsd_mtls_db", "nmsd_mmtls_db",
                            "residual_si_mtls_db", "residual_si_mmtls_db")}
    for isr in isr_points:
        r = star_terminal(config, trials, jobs, isr_db=float(isr))
        rows["isr_db"].append(float(isr))
        for name in ("mtls", "mmtls"):
            rows[f"nmsd_{name}_db"].append(to_db(r[name].mean()))
            rows[f"residual_si_{name}_db"].append(to_db(r[f"resid_{name}"].mean()))
    return {k: np.array(v) for k, v in rows.items()}


# -- receiver spectra ---------------------------------------------------------

@dataclass
class SpectrumResult:
    freqs: np.ndarray
    psd: dict[str, np.ndarray]   # trial-averaged linear PSDs
    power: dict[str, float]      # trial-averaged mean powers

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "freq_hz": self.freqs,
            "psd_rx_db": to_db(self.psd["rx"]),
            "psd_rt_db": to_db(self.psd["rt"]),
            "psd_post_sic_db": to_db(self.psd["post_sic"]),
        }


def _welch(x, fs, segment_len, overlap):
    return signal.welch(x, fs=fs, window="hann", nperseg=segment_len,
                        noverlap=int(round(overlap * segment_len)), detrend=False,
                        scaling="density", axis=-1)


def _spectrum_chunk(task):
    config, seed, trials, n_eval, segment_len, overlap = task
    scenario = config.scenario
    train, (w, h), evals = _trial_data(scenario, seed, trials, extra=n_eval)
    r = run_mmtls_batch(train["y"], train["i_obs"], train["x"], **config.estimator_kwargs())
    y = np.stack([b.y for b in evals])
    i_obs = np.stack([b.i_obs for b in evals])
    sig = {
        "rx": y,
        "rt": np.stack([b.rt for b in evals]),
        "rt_noise": np.stack([b.rt + b.noise for b in evals]),
        "post_sic": y - np.einsum("tnk,tk->tn", i_obs, r.si_total),
    }
    fs = scenario.sample_rate_hz
    out = {}
    for name, x in sig.items():
        freqs, p = _welch(x, fs, segment_len, overlap)
        out[name] = p.sum(axis=0)
        out[f"pow_{name}"] = np.mean(x * x, axis=-1).sum()
    out["freqs"] = freqs
    return out


def spectrum(config: Config, trials: int, jobs: int = 1, n_eval: int = 8192,
             segment_len: int = 256, overlap: float = 0.5) -> SpectrumResult:
    """Receiver spectra before and after SIC on a held-out block per trial.

    The stack is trained on ``ns`` samples; its summed SI estimate is then
    frozen and subtracted from a fresh block of ``n_eval`` samples drawn
    from the same channel realization.
    """
    seed = config.scenario.seed
    tasks = [(config, seed, r, n_eval, segment_len, overlap) for r in _chunks(trials)]
    parts = _run(_spectrum_chunk, tasks, jobs)
    names = ("rx", "rt", "rt_noise", "post_sic")
    psd = {k: sum(p[k] for p in parts) / trials for k in names}
    power = {k: float(sum(p[f"pow_{k}"] for p in parts) / trials) for k in names}
    return SpectrumResult(parts[0]["freqs"], psd, power)
