"""Evaluation helpers: NMSD, Welch spectra, residual SI power and the MMSE baseline."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import signal

NMSD_FLOOR_DB = -300.0


def to_db(power, floor_db: float = NMSD_FLOOR_DB):
    """``10*log10`` with a lower clamp so exact zeros stay finite."""
    p = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p)
    out = np.maximum(out, floor_db)
    return float(out) if out.ndim == 0 else out


def nmsd(estimate, truth, floor_db: float = NMSD_FLOOR_DB) -> float:
    """Normalized mean squared difference ``||est - truth||**2 / ||truth||**2`` in dB."""
    est = np.asarray(estimate, dtype=float)
    h = np.asarray(truth, dtype=float)
    if est.shape != h.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {h.shape}")
    ref = float(h @ h)
    if ref == 0.0:
        raise ValueError("NMSD is undefined for an all-zero truth vector")
    d = est - h
    return to_db(float(d @ d) / ref, floor_db)


def misalignment(estimates: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Linear NMSD along the last axis, broadcasting over leading axes."""
    d = estimates - truth
    return np.sum(d * d, axis=-1) / np.sum(truth * truth, axis=-1)


def power_spectrum(x, sample_rate_hz: float, segment_len: int = 256, overlap: float = 0.5):
    """One-sided Welch PSD with a Hann window.

    Returns ``(freqs_hz, psd_db)`` where the PSD is in dB re unit power per Hz
    and integrates to the signal variance.
    """
    x = np.asarray(x, dtype=float)
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    if segment_len < 2 or x.size < segment_len:
        raise ValueError(f"signal of length {x.size} is too short for segments of {segment_len}")
    freqs, psd = signal.welch(
        x, fs=sample_rate_hz, window="hann", nperseg=segment_len,
        noverlap=int(round(overlap * segment_len)), detrend=False, scaling="density",
    )
    return freqs, to_db(psd)


def residual_si_power(records: Sequence, si_estimate) -> float:
    """Mean power of ``s(n) - w_hat.i(n)`` in dB, using the hidden clean reference."""
    if len(records) == 0:
        raise ValueError("no records")
    w_hat = np.asarray(si_estimate, dtype=float)
    s = np.array([r.si_component for r in records])
    i_clean = np.stack([r.i_clean for r in records])
    resid = s - i_clean @ w_hat
    return to_db(np.mean(resid * resid))


def mmse_baseline(records: Sequence, N: int, M: int, noise_var: float):
    """Ridge-regularised block estimate of the joint channel.

    Solves ``(U'U + noise_var I) c = U'y`` with rows ``u(n) = [i(n); x(n)]``
    and returns ``(w_hat, h_hat)``.
    """
    if len(records) < N + M:
        raise ValueError(f"need at least {N + M} records, got {len(records)}")
    U = np.stack([np.concatenate([r.i_vec, r.x_vec]) for r in records])
    y = np.array([r.y for r in records])
    c = mmse_solve(U, y, noise_var)
    return c[:N], c[N:]


def mmse_solve(U: np.ndarray, y: np.ndarray, noise_var: float) -> np.ndarray:
    if U.shape[1] == 0:
        raise ValueError("empty regressor")
    A = U.T @ U + noise_var * np.eye(U.shape[1])
    try:
        return np.linalg.solve(A, U.T @ y)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("regularised normal matrix is singular") from exc
