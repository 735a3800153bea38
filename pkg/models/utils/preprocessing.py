"""
DirSeg — Spectral Preprocessing
================================
Shared preprocessing for every model: STFT magnitude spectrograms,
temporal-context super-frames and projection onto the unit hypersphere.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft, signal

from models.errors import ClipTooShort, EmptySpectrogram, InputError, InvalidSpec

# ─── Configuration ────────────────────────────────────────────────────────────

DEFAULT_FRAME_MS = 20.0
DEFAULT_OVERLAP = 0.5
DEFAULT_FFT_SIZE = 1024
DEFAULT_WINDOW = "hann"
DEFAULT_CONTEXT = 5
DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class StftParams:
    """STFT framing: 20 ms Hann frames, 50% overlap, 1024-point FFT."""

    frame_ms: float = DEFAULT_FRAME_MS
    overlap_fraction: float = DEFAULT_OVERLAP
    fft_size: int = DEFAULT_FFT_SIZE
    window_kind: str = DEFAULT_WINDOW

    def __post_init__(self):
        if self.frame_ms <= 0:
            raise InvalidSpec(f"frame_ms must be positive, got {self.frame_ms}")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise InvalidSpec(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        if self.fft_size < 2 or self.fft_size % 2:
            raise InvalidSpec(f"fft_size must be an even integer >= 2, got {self.fft_size}")

    def frame_length(self, sample_rate):
        return int(round(self.frame_ms * sample_rate / 1000.0))

    def hop_length(self, sample_rate):
        return max(1, int(round(self.frame_length(sample_rate) * (1.0 - self.overlap_fraction))))

    def validate_for(self, sample_rate):
        frame_len = self.frame_length(sample_rate)
        if frame_len < 1:
            raise InvalidSpec(f"{self.frame_ms} ms is shorter than one sample at {sample_rate} Hz")
        if frame_len > self.fft_size:
            raise InvalidSpec(
                f"frame length {frame_len} samples exceeds fft_size {self.fft_size}"
            )
        return frame_len, self.hop_length(sample_rate)

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    def to_dict(self):
        return {
            "frame_ms": self.frame_ms,
            "overlap": self.overlap_fraction,
            "fft_size": self.fft_size,
            "window": self.window_kind,
        }


@dataclass(frozen=True)
class FrameGrid:
    """Timing of the STFT frame grid in seconds."""

    n_frames: int
    hop_s: float
    frame_s: float

    def frame_start(self, k):
        return k * self.hop_s


def frame_grid(n_frames, params, sample_rate):
    frame_len, hop = params.validate_for(sample_rate)
    return FrameGrid(int(n_frames), hop / sample_rate, frame_len / sample_rate)


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude spectrogram, d = fft_size/2 + 1 bins by n frames."""

    mags: np.ndarray
    params: StftParams
    sample_rate: int

    @property
    def n_bins(self):
        return self.mags.shape[0]

    @property
    def n_frames(self):
        return self.mags.shape[1]

    @property
    def grid(self):
        return frame_grid(self.n_frames, self.params, self.sample_rate)

    def scaled(self, factor):
        return Spectrogram(self.mags * factor, self.params, self.sample_rate)


@dataclass(frozen=True)
class SuperFrameMatrix:
    """
    Stacked context windows: column k holds frames k-(w-1)/2 .. k+(w-1)/2
    one below the other, so ``data`` is (w·d) × K with K = n.

    ``unit_flags`` is None until :func:`unit_normalize` runs; afterwards a
    False entry marks a degenerate (all-zero) column.
    """

    data: np.ndarray
    w: int
    d: int
    unit_flags: Optional[np.ndarray] = field(default=None)

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def n_columns(self):
        return self.data.shape[1]

    @property
    def is_normalized(self):
        return self.unit_flags is not None


# ─── Spectrogram ──────────────────────────────────────────────────────────────

def stft_magnitude(clip, params=None):
    """
    Magnitude STFT of a clip.

    n = floor((len - frame_len) / hop) + 1 frames; each windowed frame is
    zero-padded to ``fft_size`` and bins 0..fft_size/2 are kept.
    """
    params = params or StftParams()
    frame_len, hop = params.validate_for(clip.sample_rate)
    if len(clip) < frame_len:
        raise ClipTooShort(
            f"clip has {len(clip)} samples, one frame needs {frame_len}"
        )

    frames = sliding_window_view(clip.samples, frame_len)[::hop]
    window = signal.get_window(params.window_kind, frame_len)
    mags = np.abs(fft.rfft(frames * window, n=params.fft_size, axis=1)).T
    return Spectrogram(np.ascontiguousarray(mags), params, clip.sample_rate)


def dump_spectrogram_csv(spec, path):
    """Write one frame per line (column-major) for debugging."""
    pd.DataFrame(spec.mags.T).to_csv(path, index=False, header=False, float_format="%.9g")
    return path


# ─── Super-frames ─────────────────────────────────────────────────────────────

def superframes(spec, w=DEFAULT_CONTEXT):
    """
    Concatenate each frame with its (w-1)/2 neighbours on either side.

    Out-of-range neighbours replicate the nearest edge frame, so the output
    keeps exactly one super-frame per frame.
    """
    if w < 1 or w % 2 == 0:
        raise InputError(f"context window w must be a positive odd integer, got {w}")
    mags = spec.mags if isinstance(spec, Spectrogram) else np.asarray(spec)
    if mags.ndim != 2 or mags.shape[1] == 0:
        raise EmptySpectrogram("spectrogram has no frames")

    d, n = mags.shape
    half = (w - 1) // 2
    padded = np.pad(mags, ((0, 0), (half, half)), mode="edge")
    data = np.vstack([padded[:, offset:offset + n] for offset in range(w)])
    return SuperFrameMatrix(data, w, d)


def unit_normalize(m, eps=DEGENERATE_EPS):
    """
    Project every super-frame onto the unit hypersphere.

    Columns whose norm does not exceed ``eps`` times the largest column norm
    are zeroed and flagged False.
    """
    data = np.asarray(m.data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=0)
    largest = norms.max() if norms.size else 0.0
    flags = norms > eps * largest

    out = np.zeros_like(data)
    out[:, flags] = data[:, flags] / norms[flags]
    return SuperFrameMatrix(out, m.w, m.d, flags)


def unit_superframes(clip, params=None, w=DEFAULT_CONTEXT):
    """Clip → spectrogram → unit-norm super-frames in one call."""
    spec = stft_magnitude(clip, params)
    return spec, unit_normalize(superframes(spec, w))
