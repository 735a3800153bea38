import os

import numpy as np
import pytest

from data.generate_synthetic_data import (
    EVENT_KINDS, NOISE_RMS, SynthSpec, synth_clip, synth_corpus, synth_event, synth_noise,
    write_corpus,
)
from models.errors import InvalidSpec
from models.utils.audio_io import write_wav
from models.utils.evaluation import parse_labels

SMALL = dict(duration_s=3.0, event_count=3, sample_rate=16000, freq_range_hz=(1000.0, 5000.0))


class TestSynthCorpus:
    def test_deterministic(self):
        spec = SynthSpec(n_clips=2, **SMALL)
        first, second = synth_corpus(spec), synth_corpus(spec)
        for (clip_a, truth_a), (clip_b, truth_b) in zip(first, second):
            np.testing.assert_array_equal(clip_a.samples, clip_b.samples)
            assert truth_a.intervals == truth_b.intervals

    def test_clips_differ(self):
        (a, _), (b, _) = synth_corpus(SynthSpec(n_clips=2, **SMALL))
        assert not np.array_equal(a.samples, b.samples)

    def test_no_events_is_pure_noise(self):
        clip, truth = synth_corpus(SynthSpec(event_count=0, duration_s=2.0, sample_rate=16000))[0]
        assert len(truth) == 0
        assert np.sqrt(np.mean(clip.samples ** 2)) == pytest.approx(NOISE_RMS, rel=1e-6)

    def test_five_chirps_of_300ms(self):
        spec = SynthSpec(event_duration_range_ms=(300.0, 300.0))
        clip, truth = synth_corpus(spec)[0]
        assert len(truth) == 5
        assert truth.total_duration == pytest.approx(1.5, abs=1e-9)
        bounds = np.asarray(truth.intervals)
        assert np.all(bounds[1:, 0] > bounds[:-1, 1])
        assert bounds[-1, 1] <= clip.duration_seconds

    def test_clean_clip_silent_between_events(self):
        clip, truth = synth_corpus(SynthSpec(snr_db=None, **SMALL))[0]
        first_onset = int(truth.intervals[0][0] * 16000)
        assert not clip.samples[:first_onset].any()

    @pytest.mark.parametrize("kind", EVENT_KINDS)
    def test_event_kinds(self, kind):
        event = synth_event(kind, 1600, 16000, (1000.0, 4000.0), np.random.default_rng(0))
        assert event.size == 1600
        assert np.max(np.abs(event)) <= 0.5 + 1e-12
        assert event[0] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", ["white", "pink", "rain"])
    def test_noise_level(self, kind):
        noise = synth_noise(kind, 16000, 16000, seed=0)
        assert np.sqrt(np.mean(noise.samples ** 2)) == pytest.approx(NOISE_RMS, rel=1e-6)

    def test_recorded_noise_is_looped(self, tmp_path):
        noise_path = tmp_path / "noise.wav"
        write_wav(synth_noise("white", 4000, 16000, seed=5), noise_path)
        spec = SynthSpec(noise_kind="clip", noise_path=str(noise_path), **SMALL)
        clip, _ = synth_clip(spec, 1)
        assert len(clip) == 48000


class TestValidation:
    @pytest.mark.parametrize("overrides", [
        {"freq_range_hz": (2000.0, 9000.0)},
        {"event_kind": "whistle"},
        {"noise_kind": "clip"},
        {"event_count": 40},
        {"n_clips": 0},
    ])
    def test_invalid(self, overrides):
        spec = SynthSpec(**{**SMALL, **overrides})
        with pytest.raises(InvalidSpec):
            spec.validate()


class TestWriteCorpus:
    def test_pairs_on_disk(self, tmp_path):
        pairs = synth_corpus(SynthSpec(n_clips=2, **SMALL))
        paths = write_corpus(pairs, tmp_path / "corpus")
        assert [os.path.basename(p) for p in paths] == ["clip_000.wav", "clip_001.wav"]
        truth = parse_labels(str(tmp_path / "corpus" / "clip_001.csv"))
        np.testing.assert_allclose(truth.intervals, pairs[1][1].intervals, atol=1e-6)
