"""Time- and frequency-domain feature extraction from raw audio.

A clip is framed into fixed-size windows; per-frame series (amplitude
envelope, RMS energy, zero crossing rate, band energy ratio, spectral
centroid/bandwidth/roll-off/flux and their frame-to-frame deltas) are
reduced to {mean, max, min, std, rms} summaries: 6 x 5 = 30 values in the
time domain, 10 x 5 = 50 in the frequency domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample as _fourier_resample

EPS = 1e-10
# Band-energy ratio with an all-zero high band clamps here instead of inf.
BER_CAP = 1e6
ROLLOFF_FRACTION = 0.85
DEFAULT_SPLIT_HZ = 2000.0

# Frame geometry reference point; other rates scale proportionally.
BASE_SAMPLE_RATE = 22050
BASE_FRAME_SIZE = 1024
BASE_HOP_SIZE = 512

STAT_NAMES = ("mean", "max", "min", "std", "rms")
TIME_FEATURE_NAMES = ("ae", "delta_ae", "rms", "delta_rms", "zcr", "delta_zcr")
SPECTRAL_FEATURE_NAMES = (
    "ber", "delta_ber",
    "sc", "delta_sc",
    "sbw", "delta_sbw",
    "sro", "delta_sro",
    "sf", "delta_sf",
)


@dataclass(frozen=True)
class AudioClip:
    """Mono audio: sample amplitudes (nominally in [-1, 1]) plus rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("clip must be a non-empty 1-D sample sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("clip contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameConfig:
    """Analysis frame geometry: frame size K and hop H, in samples."""

    frame_size: int
    hop_size: int

    def __post_init__(self):
        if self.frame_size <= 0:
            raise ValueError(f"frame_size must be positive, got {self.frame_size}")
        if not 0 < self.hop_size <= self.frame_size:
            raise ValueError(
                f"hop_size must be in (0, frame_size], got {self.hop_size}"
            )

    @classmethod
    def for_rate(cls, sample_rate: int) -> "FrameConfig":
        """Default geometry: 1024/512 at 22050 Hz, scaled to other rates."""
        frame = max(2, int(round(BASE_FRAME_SIZE * sample_rate / BASE_SAMPLE_RATE)))
        return cls(frame_size=frame, hop_size=max(1, frame // 2))

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.frame_size:
            return 0
        return (n_samples - self.frame_size) // self.hop_size + 1


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT values indexed [frame, frequency bin 0..K/2]."""

    bins: np.ndarray
    frame_config: FrameConfig
    sample_rate: int

    def __post_init__(self):
        expected = self.frame_config.frame_size // 2 + 1
        if self.bins.ndim != 2 or self.bins.shape[1] != expected:
            raise ValueError(
                f"expected {expected} frequency bins per frame, got shape {self.bins.shape}"
            )

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def n_frames(self) -> int:
        return self.bins.shape[0]


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Downsample a clip to target_rate (Fourier-domain resampling)."""
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate > clip.sample_rate:
        raise ValueError(
            f"upsampling unsupported: {clip.sample_rate} Hz -> {target_rate} Hz"
        )
    if target_rate == clip.sample_rate:
        return clip
    n_out = int(round(len(clip) * target_rate / clip.sample_rate))
    out = _fourier_resample(clip.samples, n_out)
    return AudioClip(samples=np.asarray(out, dtype=np.float64), sample_rate=target_rate)


def frame_signal(clip: AudioClip, cfg: FrameConfig) -> np.ndarray:
    """Slice a clip into frames [t, k] covering samples [tH, tH+K).

    The trailing partial frame is discarded.
    """
    n_frames = cfg.frame_count(len(clip))
    if n_frames == 0:
        raise ValueError(
            f"clip of {len(clip)} samples is shorter than one frame ({cfg.frame_size})"
        )
    idx = np.arange(cfg.frame_size)[None, :] + cfg.hop_size * np.arange(n_frames)[:, None]
    return clip.samples[idx]


def _deltas(series: np.ndarray) -> np.ndarray:
    """Frame-to-frame differences x_t - x_{t-1}, defined for t >= 1."""
    return np.diff(series)


def time_domain_features(frames: np.ndarray, use_absolute_envelope: bool = False) -> dict:
    """Per-frame AE, RMS, ZCR series and their deltas.

    AE is the literal per-frame max of the signed samples by default;
    use_absolute_envelope switches to max of |samples|.  sign(0) counts
    as +1 in the zero crossing rate.
    """
    if frames.ndim != 2:
        raise ValueError(f"expected a 2-D frame array, got shape {frames.shape}")
    if frames.shape[0] < 2:
        raise ValueError("need at least 2 frames to form delta series")
    source = np.abs(frames) if use_absolute_envelope else frames
    ae = source.max(axis=1)
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    signs = np.where(frames >= 0.0, 1.0, -1.0)
    zcr = 0.5 * np.abs(np.diff(signs, axis=1)).sum(axis=1)
    return {
        "ae": ae,
        "delta_ae": _deltas(ae),
        "rms": rms,
        "delta_rms": _deltas(rms),
        "zcr": zcr,
        "delta_zcr": _deltas(zcr),
    }


def hann_window(frame_size: int) -> np.ndarray:
    """Symmetric Hann window w(k) = 0.5(1 - cos(2 pi k / (K-1)))."""
    if frame_size < 2:
        raise ValueError(f"frame_size must be >= 2, got {frame_size}")
    k = np.arange(frame_size)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (frame_size - 1)))


def stft(clip: AudioClip, cfg: FrameConfig) -> Spectrogram:
    """Short-time Fourier transform with a Hann window.

    Only the non-negative-frequency bins 0..K/2 are retained (the input
    is real).
    """
    frames = frame_signal(clip, cfg)
    windowed = frames * hann_window(cfg.frame_size)[None, :]
    bins = np.fft.rfft(windowed, n=cfg.frame_size, axis=1)
    return Spectrogram(bins=bins, frame_config=cfg, sample_rate=clip.sample_rate)


def split_frequency_bin(spec: Spectrogram, split_hz: float) -> int:
    """Map a split frequency in Hz to its STFT bin index."""
    nyquist = spec.sample_rate / 2.0
    if not 0.0 < split_hz < nyquist:
        raise ValueError(f"split frequency {split_hz} Hz outside (0, {nyquist})")
    bin_hz = spec.sample_rate / spec.frame_config.frame_size
    return max(1, int(round(split_hz / bin_hz)))


def frequency_domain_features(spec: Spectrogram, split_hz: float = DEFAULT_SPLIT_HZ) -> dict:
    """Per-frame BER, SC, SBW, SRO, SF series and deltas.

    Bins are 1-based (the DC bin is excluded from all summations, matching
    the n = 1..N ranges).  Spectral flux is the per-bin rectified magnitude
    increase summed over bins, defined from the second frame onwards.
    """
    if spec.n_frames < 2:
        raise ValueError("need at least 2 frames for spectral features")
    mags = spec.magnitudes[:, 1:]  # bins 1..N, N = K/2
    n_bins = mags.shape[1]
    bin_index = np.arange(1, n_bins + 1, dtype=np.float64)
    split_bin = split_frequency_bin(spec, split_hz)

    power = mags ** 2
    low = power[:, : split_bin - 1].sum(axis=1)   # bins 1..F-1
    high = power[:, split_bin - 1:].sum(axis=1)   # bins F..N
    ber = np.where(high > 0.0, low / np.maximum(high, EPS), BER_CAP)

    mag_sum = mags.sum(axis=1)
    denom = np.maximum(mag_sum, EPS)
    sc = (mags * bin_index[None, :]).sum(axis=1) / denom
    sbw = (mags * np.abs(bin_index[None, :] - sc[:, None])).sum(axis=1) / denom

    cum = np.cumsum(mags, axis=1)
    threshold = ROLLOFF_FRACTION * mag_sum
    # smallest 1-based bin whose cumulative magnitude reaches the threshold
    sro = np.argmax(cum >= threshold[:, None] - EPS, axis=1) + 1.0

    flux = np.maximum(np.diff(mags, axis=0), 0.0).sum(axis=1)  # t >= 1

    return {
        "ber": ber,
        "delta_ber": _deltas(ber),
        "sc": sc,
        "delta_sc": _deltas(sc),
        "sbw": sbw,
        "delta_sbw": _deltas(sbw),
        "sro": sro,
        "delta_sro": _deltas(sro),
        "sf": flux,
        "delta_sf": _deltas(flux),
    }


def summarize(series: np.ndarray) -> np.ndarray:
    """{mean, max, min, std, rms} of a per-frame series (population std)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise ValueError("cannot summarize an empty series")
    return np.array([
        series.mean(),
        series.max(),
        series.min(),
        series.std(),
        np.sqrt(np.mean(series ** 2)),
    ])


def extract_time_summary(
    clip: AudioClip,
    cfg: FrameConfig | None = None,
    use_absolute_envelope: bool = False,
) -> np.ndarray:
    """30-dim time-domain summary: 6 series x 5 statistics, row-major."""
    if cfg is None:
        cfg = FrameConfig.for_rate(clip.sample_rate)
    series = time_domain_features(frame_signal(clip, cfg), use_absolute_envelope)
    return np.concatenate([summarize(series[name]) for name in TIME_FEATURE_NAMES])


def extract_spectral_summary(
    clip: AudioClip,
    cfg: FrameConfig | None = None,
    split_hz: float = DEFAULT_SPLIT_HZ,
) -> np.ndarray:
    """50-dim frequency-domain summary: 10 series x 5 statistics, row-major."""
    if cfg is None:
        cfg = FrameConfig.for_rate(clip.sample_rate)
    spec = stft(clip, cfg)
    if spec.n_frames < 3:
        raise ValueError("need at least 3 frames for spectral-flux deltas")
    series = frequency_domain_features(spec, split_hz)
    return np.concatenate([summarize(series[name]) for name in SPECTRAL_FEATURE_NAMES])


def read_wav(path) -> AudioClip:
    """Load a mono PCM WAV file (16-bit int or 32-bit float)."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    return AudioClip(samples=samples, sample_rate=int(rate))


def write_wav(path, clip: AudioClip) -> None:
    """Write a clip as 32-bit float mono WAV."""
    wavfile.write(path, clip.sample_rate, clip.samples.astype(np.float32))
