"""Independent reference implementations used only to check the library.

Everything here is deliberately written as plain loops / quadrature with
no helpers shared with the package, so a bug cannot cancel out.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad


def naive_dft(frame: np.ndarray) -> np.ndarray:
    """O(N^2) DFT, bins 0..K/2 of a real frame."""
    k_size = len(frame)
    n_bins = k_size // 2 + 1
    n = np.arange(k_size)
    out = np.empty(n_bins, dtype=complex)
    for k in range(n_bins):
        out[k] = np.sum(frame * np.exp(-2j * np.pi * k * n / k_size))
    return out


def hann_reference(k_size: int) -> list:
    return [0.5 * (1.0 - math.cos(2.0 * math.pi * k / (k_size - 1)))
            for k in range(k_size)]


def stats_reference(series) -> list:
    """mean, max, min, population std, rms via plain loops."""
    n = len(series)
    total = 0.0
    sq = 0.0
    hi = series[0]
    lo = series[0]
    for v in series:
        total += v
        sq += v * v
        hi = max(hi, v)
        lo = min(lo, v)
    mean = total / n
    var = sum((v - mean) ** 2 for v in series) / n
    return [mean, hi, lo, math.sqrt(var), math.sqrt(sq / n)]


def time_summary_reference(samples, frame_size: int, hop_size: int,
                           use_absolute: bool = False) -> list:
    """Straight-line recomputation of the 30-dim time summary."""
    n_frames = (len(samples) - frame_size) // hop_size + 1
    ae, rms, zcr = [], [], []
    for t in range(n_frames):
        frame = samples[t * hop_size : t * hop_size + frame_size]
        if use_absolute:
            ae.append(max(abs(v) for v in frame))
        else:
            ae.append(max(frame))
        rms.append(math.sqrt(sum(v * v for v in frame) / frame_size))
        crossings = 0.0
        for k in range(frame_size - 1):
            s0 = 1.0 if frame[k] >= 0 else -1.0
            s1 = 1.0 if frame[k + 1] >= 0 else -1.0
            crossings += abs(s0 - s1)
        zcr.append(crossings / 2.0)
    out = []
    for series in (ae, rms, zcr):
        deltas = [series[t] - series[t - 1] for t in range(1, n_frames)]
        out.extend(stats_reference(series))
        out.extend(stats_reference(deltas))
    return out


def spectral_summary_reference(samples, frame_size: int, hop_size: int,
                               sample_rate: int, split_hz: float) -> list:
    """Straight-line recomputation of the 50-dim frequency summary.

    Uses its own windowing and per-bin loops; the transform itself is
    numpy's FFT (the DFT is cross-checked separately against naive_dft).
    """
    n_frames = (len(samples) - frame_size) // hop_size + 1
    window = hann_reference(frame_size)
    mags = []
    for t in range(n_frames):
        frame = [samples[t * hop_size + k] * window[k] for k in range(frame_size)]
        spec = np.fft.rfft(frame)
        mags.append([abs(spec[b]) for b in range(1, frame_size // 2 + 1)])
    n_bins = frame_size // 2
    split_bin = max(1, round(split_hz / (sample_rate / frame_size)))

    ber, sc, sbw, sro = [], [], [], []
    for m in mags:
        low = sum(m[b] ** 2 for b in range(split_bin - 1))
        high = sum(m[b] ** 2 for b in range(split_bin - 1, n_bins))
        if high > 0.0:
            ber.append(low / max(high, 1e-10))
        else:
            ber.append(1e6)
        total = sum(m)
        denom = max(total, 1e-10)
        centroid = sum(m[b] * (b + 1) for b in range(n_bins)) / denom
        sc.append(centroid)
        sbw.append(sum(m[b] * abs((b + 1) - centroid) for b in range(n_bins)) / denom)
        run = 0.0
        roll = n_bins
        for b in range(n_bins):
            run += m[b]
            if run >= 0.85 * total - 1e-10:
                roll = b + 1
                break
        sro.append(float(roll))
    sf = []
    for t in range(1, n_frames):
        sf.append(sum(max(mags[t][b] - mags[t - 1][b], 0.0) for b in range(n_bins)))

    out = []
    for series in (ber, sc, sbw, sro, sf):
        deltas = [series[t] - series[t - 1] for t in range(1, len(series))]
        out.extend(stats_reference(series))
        out.extend(stats_reference(deltas))
    return out


def mfcc_reference(samples, sample_rate: int, frame_size: int, hop_size: int,
                   n_mels: int, n_coeffs: int) -> np.ndarray:
    """Straight-line MFCC (no deltas): [frames, n_coeffs]."""
    window = hann_reference(frame_size)
    n_frames = (len(samples) - frame_size) // hop_size + 1
    n_bins = frame_size // 2 + 1

    def mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def imel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = [imel(mel(0.0) + i * (mel(sample_rate / 2.0) - mel(0.0)) / (n_mels + 1))
             for i in range(n_mels + 2)]
    bank = np.zeros((n_mels, n_bins))
    for j in range(n_mels):
        lo, ce, hi = edges[j], edges[j + 1], edges[j + 2]
        for b in range(n_bins):
            f = b * sample_rate / frame_size
            up = (f - lo) / max(ce - lo, 1e-10)
            down = (hi - f) / max(hi - ce, 1e-10)
            bank[j, b] = max(0.0, min(up, down))

    dct_mat = np.zeros((n_coeffs, n_mels))
    for i in range(n_coeffs):
        for j in range(n_mels):
            dct_mat[i, j] = math.cos(math.pi * i * (2 * j + 1) / (2 * n_mels))
        scale = math.sqrt(1.0 / n_mels) if i == 0 else math.sqrt(2.0 / n_mels)
        dct_mat[i] *= scale

    out = np.zeros((n_frames, n_coeffs))
    for t in range(n_frames):
        frame = [samples[t * hop_size + k] * window[k] for k in range(frame_size)]
        spec = np.fft.rfft(frame)
        power = np.array([abs(v) ** 2 / frame_size for v in spec])
        energies = bank @ power
        log_e = np.log(np.maximum(energies, 1e-10))
        out[t] = dct_mat @ log_e
    return out


def chi2_cdf_quad(x: float, dof: int) -> float:
    """Chi-square CDF by numeric integration of the density."""
    if x <= 0:
        return 0.0

    def density(t):
        return math.exp((dof / 2.0 - 1.0) * math.log(t) - t / 2.0
                        - math.lgamma(dof / 2.0) - (dof / 2.0) * math.log(2.0))

    value, _ = quad(density, 0.0, x, limit=200)
    return value


def f_cdf_quad(x: float, d1: int, d2: int) -> float:
    """F-distribution CDF by numeric integration of the density."""
    if x <= 0:
        return 0.0
    log_norm = (math.lgamma((d1 + d2) / 2.0) - math.lgamma(d1 / 2.0)
                - math.lgamma(d2 / 2.0) + (d1 / 2.0) * math.log(d1 / d2))

    def density(t):
        return math.exp(log_norm + (d1 / 2.0 - 1.0) * math.log(t)
                        - ((d1 + d2) / 2.0) * math.log(1.0 + d1 * t / d2))

    value, _ = quad(density, 0.0, x, limit=200)
    return value


def covariance_eigen_reference(data: np.ndarray):
    """Explained-variance ratios via eigen-decomposition of the explicit
    covariance matrix (population normalization)."""
    data = np.asarray(data, dtype=np.float64)
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / data.shape[0]
    eigvals = np.linalg.eigvalsh(cov)[::-1]
    eigvals = np.clip(eigvals, 0.0, None)
    return eigvals / eigvals.sum()
