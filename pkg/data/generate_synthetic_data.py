"""
DirSeg — Synthetic Vocalization Corpus Generator
=================================================
Generates desk-scale stand-ins for field recordings: non-overlapping
chirp / tone-burst / harmonic-stack events over white, pink or rain-like
noise, with exact onset/offset ground truth.
"""

import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft, signal

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from models.errors import InvalidSpec
from models.utils.audio_io import AudioClip, loop_to_length, mix_at_snr, read_wav, write_wav
from models.utils.evaluation import GroundTruth, write_labels

# ─── Configuration ────────────────────────────────────────────────────────────

OUTPUT_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "raw")

EVENT_KINDS = ("chirp", "tone-burst", "harmonic")
NOISE_KINDS = ("white", "pink", "rain", "clip")
EVENT_AMPLITUDE = 0.5
EVENT_TAPER = 0.1
MIN_EVENT_GAP_S = 0.05
NOISE_RMS = 0.05
RAIN_DROPS_PER_S = 60.0


@dataclass(frozen=True)
class SynthSpec:
    """One synthetic corpus: ``n_clips`` recordings sharing these settings."""

    duration_s: float = 10.0
    event_count: int = 5
    event_kind: str = "chirp"
    freq_range_hz: tuple = (2000.0, 8000.0)
    event_duration_range_ms: tuple = (150.0, 400.0)
    noise_kind: str = "white"
    snr_db: Optional[float] = 20.0
    sample_rate: int = 44100
    n_clips: int = 1
    seed: int = 42
    noise_path: Optional[str] = None

    def validate(self):
        nyquist = self.sample_rate / 2.0
        low, high = self.freq_range_hz
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise InvalidSpec("duration_s and sample_rate must be positive")
        if self.event_count < 0 or self.n_clips < 1:
            raise InvalidSpec("event_count must be >= 0 and n_clips >= 1")
        if self.event_kind not in EVENT_KINDS:
            raise InvalidSpec(f"event_kind must be one of {EVENT_KINDS}, got {self.event_kind!r}")
        if self.noise_kind not in NOISE_KINDS:
            raise InvalidSpec(f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")
        if self.noise_kind == "clip" and not self.noise_path:
            raise InvalidSpec("noise_kind 'clip' needs noise_path")
        if not 0 < low <= high < nyquist:
            raise InvalidSpec(f"freq_range_hz {self.freq_range_hz} must lie in (0, {nyquist})")
        shortest, longest = self.event_duration_range_ms
        if not 0 < shortest <= longest:
            raise InvalidSpec(f"invalid event_duration_range_ms {self.event_duration_range_ms}")
        needed = self.event_count * (longest / 1000.0 + MIN_EVENT_GAP_S)
        if needed > self.duration_s:
            raise InvalidSpec(
                f"{self.event_count} events of up to {longest} ms do not fit in {self.duration_s} s"
            )


# ─── Noise ────────────────────────────────────────────────────────────────────

def _to_clip(samples, sample_rate, rms=NOISE_RMS):
    samples = samples - samples.mean()
    power = np.sqrt(np.mean(samples ** 2))
    if power > 0:
        samples = samples * (rms / power)
    peak = np.max(np.abs(samples)) if samples.size else 0.0
    if peak > 1.0:
        samples = samples / peak
    return AudioClip(samples, sample_rate)


def _pink(rng, n_samples):
    spectrum = fft.rfft(rng.standard_normal(n_samples))
    freqs = np.arange(spectrum.size, dtype=np.float64)
    freqs[0] = 1.0
    return fft.irfft(spectrum / np.sqrt(freqs), n=n_samples)


def synth_noise(kind, n_samples, sample_rate, seed=None):
    """
    White, pink (1/f) or rain-like noise with rms ``NOISE_RMS``.

    Rain is a low pink bed with randomly timed, high-passed, fast-decaying
    droplet bursts on top.
    """
    rng = np.random.default_rng(seed)
    if kind == "white":
        samples = rng.standard_normal(n_samples)
    elif kind == "pink":
        samples = _pink(rng, n_samples)
    elif kind == "rain":
        bed = _pink(rng, n_samples)
        bed /= np.sqrt(np.mean(bed ** 2)) or 1.0
        drops = np.zeros(n_samples)
        n_drops = rng.poisson(RAIN_DROPS_PER_S * n_samples / sample_rate)
        length = max(8, int(0.004 * sample_rate))
        decay = np.exp(-np.arange(length) / (0.2 * length))
        for start in rng.integers(0, max(1, n_samples - length), size=n_drops):
            drops[start:start + length] += rng.uniform(0.5, 2.0) * decay * rng.standard_normal(length)
        sos = signal.butter(4, 1000.0, btype="highpass", fs=sample_rate, output="sos")
        samples = 0.3 * bed + signal.sosfilt(sos, drops)
    else:
        raise InvalidSpec(f"unknown noise kind {kind!r}")
    return _to_clip(samples, sample_rate)


# ─── Events ───────────────────────────────────────────────────────────────────

def synth_event(kind, n_samples, sample_rate, freq_range_hz, rng):
    """One tapered vocalization-like event of ``n_samples`` samples."""
    t = np.arange(n_samples) / sample_rate
    low, high = freq_range_hz
    if kind == "chirp":
        f0, f1 = rng.uniform(low, high, size=2)
        wave = signal.chirp(t, f0=f0, t1=max(t[-1], 1.0 / sample_rate), f1=f1, method="linear")
    elif kind == "tone-burst":
        wave = np.sin(2 * np.pi * rng.uniform(low, high) * t + rng.uniform(0, 2 * np.pi))
    elif kind == "harmonic":
        f0 = rng.uniform(low, max(low, high / 3.0))
        wave = np.zeros(n_samples)
        for k, gain in enumerate((1.0, 0.5, 0.25), start=1):
            if k * f0 < sample_rate / 2.0:
                wave += gain * np.sin(2 * np.pi * k * f0 * t)
        wave /= np.max(np.abs(wave)) or 1.0
    else:
        raise InvalidSpec(f"unknown event kind {kind!r}")
    return EVENT_AMPLITUDE * wave * signal.windows.tukey(n_samples, EVENT_TAPER)


def place_events(spec, rng):
    """Non-overlapping (onset_sample, n_samples) pairs inside the clip."""
    sr = spec.sample_rate
    lengths = np.rint(
        rng.uniform(*spec.event_duration_range_ms, size=spec.event_count) / 1000.0 * sr
    ).astype(int)
    gap = int(np.ceil(MIN_EVENT_GAP_S * sr))
    total = int(round(spec.duration_s * sr))
    slack = total - lengths.sum() - gap * spec.event_count
    shares = rng.dirichlet(np.ones(spec.event_count + 1)) * slack
    placements = []
    cursor = 0.0
    for share, length in zip(shares[:-1], lengths):
        cursor += share + gap
        start = int(np.floor(cursor))
        placements.append((start, int(length)))
        cursor = start + length
    return placements, total


def _noise_for(spec, n_samples, seed):
    if spec.noise_kind == "clip":
        noise = read_wav(spec.noise_path)
        return AudioClip(loop_to_length(noise.samples, n_samples), noise.sample_rate)
    return synth_noise(spec.noise_kind, n_samples, spec.sample_rate, seed)


def synth_clip(spec, seed):
    rng = np.random.default_rng(seed)
    placements, total = place_events(spec, rng)
    clean = np.zeros(total)
    for start, length in placements:
        clean[start:start + length] += synth_event(
            spec.event_kind, length, spec.sample_rate, spec.freq_range_hz, rng
        )
    truth = GroundTruth(tuple(
        (start / spec.sample_rate, (start + length) / spec.sample_rate)
        for start, length in placements
    ))

    clip = AudioClip(clean, spec.sample_rate)
    if spec.snr_db is None:
        return clip, truth
    noise = _noise_for(spec, total, int(rng.integers(2 ** 32)))
    if not placements:
        return noise, truth
    return mix_at_snr(clip, noise, spec.snr_db), truth


def synth_corpus(spec):
    """``n_clips`` (AudioClip, GroundTruth) pairs, deterministic in ``spec.seed``."""
    spec.validate()
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_clips)
    return [synth_clip(spec, seed) for seed in seeds]


def write_corpus(pairs, out_dir, prefix="clip"):
    """Write ``<prefix>_NNN.wav`` + ``<prefix>_NNN.csv`` pairs; returns the WAV paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, (clip, truth) in enumerate(pairs):
        stem = os.path.join(out_dir, f"{prefix}_{i:03d}")
        write_wav(clip, stem + ".wav")
        write_labels(truth, stem + ".csv")
        paths.append(stem + ".wav")
    return paths


# ─── Main ──────────────────────────────────────────────────────────────────────

def main():
    """Generate a small training corpus and a noisy test corpus under data/raw."""
    print("\n🚀 DirSeg — Synthetic Corpus Generator")
    print("=" * 50)

    train = synth_corpus(SynthSpec(n_clips=4, snr_db=30.0, seed=1))
    test = synth_corpus(SynthSpec(n_clips=16, snr_db=20.0, seed=2))
    train_paths = write_corpus(train, os.path.join(OUTPUT_DIR, "train"))
    test_paths = write_corpus(test, os.path.join(OUTPUT_DIR, "test"))

    print("\n✅ Corpus generated successfully!")
    print(f"   🐦 Training clips: {len(train_paths)} → {os.path.join(OUTPUT_DIR, 'train')}")
    print(f"   🐦 Test clips:     {len(test_paths)} → {os.path.join(OUTPUT_DIR, 'test')}")


if __name__ == "__main__":
    main()
