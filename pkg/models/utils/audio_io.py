"""
DirSeg — Audio Ingestion & Noise Mixing
========================================
16-bit mono WAV reading/writing and SNR-controlled noise mixing used to
build noisy test corpora.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from models.errors import (
    CorruptHeader, InputError, IoFailure, SampleRateMismatch,
    SilentInput, UnsupportedFormat,
)

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0
PCM_MIN, PCM_MAX = -32768, 32767


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono recording with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate is None or int(self.sample_rate) <= 0:
            raise InputError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and np.max(np.abs(samples)) > 1.0 + 1e-12:
            raise InputError("samples must lie in [-1, 1]")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration_seconds(self):
        return self.samples.size / self.sample_rate

    def scaled(self, factor):
        """Return a copy with every sample multiplied by ``factor``."""
        return AudioClip(self.samples * factor, self.sample_rate)


@dataclass(frozen=True)
class MixDetails:
    """How a mixture was built: noise gain and the anti-clipping rescale."""

    noise_gain: float
    peak_rescale: float
    signal_power: float
    noise_power: float


# ─── WAV I/O ─────────────────────────────────────────────────────────────────

def read_wav(path):
    """
    Read a 16-bit PCM mono WAV file.

    Integer sample s maps to s / 32768.
    """
    try:
        sample_rate, data = wavfile.read(str(path))
    except FileNotFoundError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        message = str(exc)
        if "Unknown wave file format" in message or "Unsupported" in message:
            raise UnsupportedFormat(f"{path}: {message}") from exc
        raise CorruptHeader(f"{path}: {message}") from exc

    if data.ndim != 1:
        raise UnsupportedFormat(f"{path}: expected 1 channel, found {data.shape[1]}")
    if data.dtype != np.int16:
        raise UnsupportedFormat(f"{path}: expected 16-bit PCM, found {data.dtype}")

    return AudioClip(data.astype(np.float64) / PCM_SCALE, sample_rate)


def write_wav(clip, path):
    """Write a clip as 16-bit PCM mono; amplitude 1.0 saturates at 32767."""
    pcm = np.clip(np.rint(clip.samples * PCM_SCALE), PCM_MIN, PCM_MAX).astype(np.int16)
    try:
        wavfile.write(str(path), clip.sample_rate, pcm)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ─── SNR Mixing ──────────────────────────────────────────────────────────────

def mean_power(samples):
    """Mean squared amplitude over the full clip."""
    samples = np.asarray(samples, dtype=np.float64)
    return float(np.mean(samples ** 2)) if samples.size else 0.0


def measure_snr(signal, noise_component):
    """10·log10(P_signal / P_noise) in dB for two sample arrays."""
    p_signal, p_noise = mean_power(signal), mean_power(noise_component)
    if p_signal <= 0 or p_noise <= 0:
        raise SilentInput("SNR undefined for a silent component")
    return 10.0 * np.log10(p_signal / p_noise)


def loop_to_length(samples, n_samples):
    """Tile ``samples`` end-to-start (or truncate) to exactly ``n_samples``."""
    return np.resize(np.asarray(samples, dtype=np.float64), n_samples)


def mix_at_snr(signal, noise, snr_db, return_details=False):
    """
    Add ``noise`` to ``signal`` at a target SNR measured over the whole clip.

    The noise is looped/truncated to the signal length and scaled by g so
    that 10·log10(P_signal / (g²·P_noise)) equals ``snr_db``. If the mix
    peaks above 1 the whole mix is rescaled by 1/peak, which leaves the SNR
    unchanged.
    """
    if signal.sample_rate != noise.sample_rate:
        raise SampleRateMismatch(
            f"signal at {signal.sample_rate} Hz, noise at {noise.sample_rate} Hz"
        )
    if len(noise) == 0:
        raise SilentInput("noise clip is empty")

    noise_samples = loop_to_length(noise.samples, len(signal))
    p_signal = mean_power(signal.samples)
    p_noise = mean_power(noise_samples)
    if p_signal <= 0:
        raise SilentInput("signal has zero mean power")
    if p_noise <= 0:
        raise SilentInput("noise has zero mean power")

    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    mixed = signal.samples + gain * noise_samples

    peak = float(np.max(np.abs(mixed))) if mixed.size else 0.0
    rescale = 1.0
    if peak > 1.0:
        rescale = 1.0 / peak
        mixed = mixed * rescale
        logger.warning("mix peaked at %.4f; rescaled by %.6f", peak, rescale)

    clip = AudioClip(np.clip(mixed, -1.0, 1.0), signal.sample_rate)
    if return_details:
        return clip, MixDetails(float(gain), rescale, p_signal, p_noise)
    return clip
