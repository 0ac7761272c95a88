"""Mel-frequency cepstral coefficients with delta and delta-delta channels.

Per frame: periodogram power spectrum -> triangular mel filterbank energies
-> natural log (floored) -> orthonormal DCT-II -> lowest coefficients.
Derivative channels come from a regression over a +/-2 frame window with
edge replication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio_dsp import EPS, AudioClip, FrameConfig, stft

DELTA_WINDOW = 2


def hz_to_mel(f: float | np.ndarray) -> float | np.ndarray:
    """Mel scale: 2595 * log10(1 + f/700)."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m: float | np.ndarray) -> float | np.ndarray:
    """Inverse mel scale."""
    m = np.asarray(m, dtype=np.float64)
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MelFilterBank:
    """Triangular filter weights [n_mels, n_fft_bins] plus band edges in Hz."""

    weights: np.ndarray
    edges_hz: np.ndarray

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class MfccConfig:
    n_mels: int = 26
    n_coeffs: int = 13
    include_deltas: bool = True
    f_min: float = 0.0
    f_max: float | None = None  # None = Nyquist

    def __post_init__(self):
        if self.n_mels < 2:
            raise ValueError("n_mels must be >= 2")
        if not 0 < self.n_coeffs <= self.n_mels:
            raise ValueError("n_coeffs must be in [1, n_mels]")

    @property
    def n_channels(self) -> int:
        return self.n_coeffs * (3 if self.include_deltas else 1)


def build_filterbank(
    sample_rate: int,
    n_fft: int,
    n_mels: int,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> MelFilterBank:
    """Triangular filters with band edges equally spaced on the mel scale."""
    nyquist = sample_rate / 2.0
    if f_max is None:
        f_max = nyquist
    if f_max > nyquist:
        raise ValueError(f"f_max {f_max} exceeds Nyquist {nyquist}")
    if not 0 <= f_min < f_max:
        raise ValueError(f"need 0 <= f_min < f_max, got {f_min}, {f_max}")
    if n_mels < 2:
        raise ValueError("n_mels must be >= 2")

    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

    lower = edges_hz[:-2][:, None]
    center = edges_hz[1:-1][:, None]
    upper = edges_hz[2:][:, None]
    rising = (bin_freqs[None, :] - lower) / np.maximum(center - lower, EPS)
    falling = (upper - bin_freqs[None, :]) / np.maximum(upper - center, EPS)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    return MelFilterBank(weights=weights, edges_hz=edges_hz)


def log_mel_energies(clip: AudioClip, frame_cfg: FrameConfig, cfg: MfccConfig) -> np.ndarray:
    """Log filterbank energies [frames, n_mels] from the periodogram."""
    spec = stft(clip, frame_cfg)
    power = (spec.magnitudes ** 2) / frame_cfg.frame_size
    bank = build_filterbank(
        clip.sample_rate, frame_cfg.frame_size, cfg.n_mels, cfg.f_min, cfg.f_max
    )
    energies = power @ bank.weights.T
    return np.log(np.maximum(energies, EPS))


def delta_features(coeffs: np.ndarray, window: int = DELTA_WINDOW) -> np.ndarray:
    """Regression-slope deltas over +/-window frames with edge replication.

    coeffs is [frames, channels]; the slope at frame t is
    sum_k k * (c_{t+k} - c_{t-k}) / (2 * sum_k k^2).
    """
    n = coeffs.shape[0]
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    padded = np.concatenate(
        [np.repeat(coeffs[:1], window, axis=0), coeffs, np.repeat(coeffs[-1:], window, axis=0)]
    )
    out = np.zeros_like(coeffs)
    for k in range(1, window + 1):
        out += k * (padded[window + k : window + k + n] - padded[window - k : window - k + n])
    return out / denom


def mfcc(clip: AudioClip, frame_cfg: FrameConfig | None = None,
         cfg: MfccConfig | None = None) -> np.ndarray:
    """MFCC matrix [channels, frames]; channels = n_coeffs x (1 or 3)."""
    if frame_cfg is None:
        frame_cfg = FrameConfig.for_rate(clip.sample_rate)
    if cfg is None:
        cfg = MfccConfig()
    log_e = log_mel_energies(clip, frame_cfg, cfg)
    coeffs = dct(log_e, type=2, norm="ortho", axis=1)[:, : cfg.n_coeffs]
    if not cfg.include_deltas:
        return coeffs.T
    d1 = delta_features(coeffs)
    d2 = delta_features(d1)
    return np.concatenate([coeffs, d1, d2], axis=1).T
