from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from data.generate_synthetic_data import synth_corpus
from models.directional.dictionary import DirectionDictionary, Provenance
from models.errors import ClipTooShort, DimensionMismatch, EvenMedianLength
from models.segmentation.pipeline import (
    PipelineParams, dump_decisions_csv, frames_to_segments, read_segments_csv, segment_file,
    segment_recording, segments_to_frames, smooth_decisions, write_segments_csv,
)
from models.utils.audio_io import AudioClip, write_wav
from models.utils.evaluation import GroundTruth, frame_f1, intervals_to_frame_labels
from models.utils.preprocessing import StftParams


class TestSmoothing:
    def test_isolated_positive_removed(self):
        decisions = np.zeros(11, dtype=bool)
        decisions[5] = True
        assert not smooth_decisions(decisions, 5).any()

    def test_all_positive_unchanged(self):
        np.testing.assert_array_equal(smooth_decisions(np.ones(8, dtype=bool), 5), np.ones(8, dtype=bool))

    def test_alternating_sliding_median(self):
        smoothed = smooth_decisions(np.array([0, 1, 0, 1, 0, 1], dtype=bool), 3)
        np.testing.assert_array_equal(smoothed, [False, False, True, False, True, True])

    def test_length_one_is_identity(self):
        decisions = np.array([1, 0, 1, 1, 0], dtype=bool)
        np.testing.assert_array_equal(smooth_decisions(decisions, 1), decisions)

    def test_even_length(self):
        with pytest.raises(EvenMedianLength):
            smooth_decisions(np.ones(4, dtype=bool), 4)
        with pytest.raises(EvenMedianLength):
            PipelineParams(median_len=4)


class TestSegments:
    def test_single_run(self):
        decisions = np.array([0, 0, 1, 1, 1, 0], dtype=bool)
        segments = frames_to_segments(decisions, hop_s=0.010, frame_s=0.020)
        assert len(segments) == 1
        assert segments[0] == pytest.approx((0.020, 0.060))

    def test_short_gap_merged(self):
        decisions = np.array([1, 1, 1, 1, 0, 1, 1, 1, 1], dtype=bool)
        segments = frames_to_segments(decisions, hop_s=0.010, frame_s=0.010, merge_gap_ms=20.0)
        assert len(segments) == 1
        assert segments[0] == pytest.approx((0.0, 0.090))

    def test_long_gap_kept_apart(self):
        decisions = np.array([1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1], dtype=bool)
        segments = frames_to_segments(decisions, hop_s=0.010, frame_s=0.010, merge_gap_ms=20.0)
        assert len(segments) == 2

    def test_short_segment_dropped(self):
        decisions = np.array([0, 1, 1, 0, 0], dtype=bool)
        assert frames_to_segments(decisions, 0.020, 0.020, min_segment_ms=50.0) == []

    def test_no_positives(self):
        assert frames_to_segments(np.zeros(10, dtype=bool), 0.01, 0.02) == []

    def test_rasterize_and_recover(self):
        truth = GroundTruth(((0.10, 0.40), (0.70, 0.95), (1.30, 1.62)))
        hop, frame = 0.010, 0.020
        labels = intervals_to_frame_labels(truth, 200, frame, hop)
        recovered = frames_to_segments(labels, hop, frame, min_segment_ms=0.0, merge_gap_ms=0.0)
        assert len(recovered) == len(truth)
        for (on, off), (t_on, t_off) in zip(recovered, truth.intervals):
            assert abs(on - t_on) <= frame
            assert abs(off - t_off) <= frame

    def test_segments_to_frames(self):
        frames = segments_to_frames([(0.02, 0.06)], 6, 0.01, 0.02)
        np.testing.assert_array_equal(frames, [False, False, True, True, True, False])

    def test_csv_round_trip(self, tmp_path):
        path = write_segments_csv([(0.02, 0.06), (1.5, 2.25)], tmp_path / "seg.csv")
        assert path.read_text().splitlines()[0] == "onset_s,offset_s"
        np.testing.assert_allclose(read_segments_csv(path), [(0.02, 0.06), (1.5, 2.25)])


class TestSegmentRecording:
    def test_matched_dictionary_f1(self, segmented, test_pair):
        grid = segmented.grid
        truth = intervals_to_frame_labels(test_pair[1], grid.n_frames, grid.frame_s, grid.hop_s)
        assert frame_f1(segmented.frame_decisions, truth).f1 >= 0.75

    def test_artifacts_exposed(self, segmented):
        n = segmented.diagnostics.n_frames
        assert n == 599
        assert segmented.diagnostics.effective_Q == 59
        assert not segmented.diagnostics.degenerate_fallback
        assert segmented.embedding.coeffs.shape == (10, n)
        assert segmented.normalized_embedding.probs.shape == (10, n)
        assert len(segmented.mi_curve) == n
        assert segmented.decision_values.shape == (n,)
        assert segmented.raw_decisions.shape == (n,)
        assert segmented.model is not None
        assert segmented.segments

    def test_segments_sorted_and_disjoint(self, segmented):
        bounds = np.asarray(segmented.segments)
        assert np.all(bounds[:, 1] > bounds[:, 0])
        assert np.all(bounds[1:, 0] >= bounds[:-1, 1])

    def test_silence_falls_back(self, dictionary, params):
        result = segment_recording(AudioClip(np.zeros(16000), 16000), dictionary, params)
        assert result.diagnostics.degenerate_fallback
        assert result.segments == []
        assert not result.frame_decisions.any()

    def test_pure_noise_falls_back(self, dictionary, params, chirp_spec):
        clip, truth = synth_corpus(replace(chirp_spec, event_count=0, seed=3))[0]
        assert len(truth) == 0
        result = segment_recording(clip, dictionary, params)
        assert result.diagnostics.degenerate_fallback
        assert result.segments == []

    def test_clip_shorter_than_window(self, dictionary, params):
        with pytest.raises(ClipTooShort):
            segment_recording(AudioClip(np.full(480, 0.1), 16000), dictionary, params)

    def test_single_frame_without_context(self):
        # w = 1 and 400 samples at 16 kHz give exactly one 320-sample frame
        stft = StftParams()
        provenance = Provenance(stft, w=1, sample_rate=16000)
        single = DirectionDictionary(np.eye(stft.n_bins)[:, :3], [3.0, 2.0, 1.0], [0.5, 0.3, 0.2], provenance)
        with pytest.raises(ClipTooShort):
            segment_recording(AudioClip(np.full(400, 0.1), 16000), single, PipelineParams(w=1))

    def test_window_mismatch(self, dictionary):
        with pytest.raises(DimensionMismatch):
            segment_recording(AudioClip(np.zeros(16000), 16000), dictionary, PipelineParams(w=3))

    @pytest.mark.parametrize("factor", [0.1, 0.9])
    def test_amplitude_invariance(self, segmented, test_pair, dictionary, params, factor):
        scaled = segment_recording(test_pair[0].scaled(factor), dictionary, params)
        np.testing.assert_array_equal(scaled.frame_decisions, segmented.frame_decisions)

    def test_deterministic(self, segmented, test_pair, dictionary, params):
        again = segment_recording(test_pair[0], dictionary, params)
        np.testing.assert_array_equal(again.decision_values, segmented.decision_values)
        assert again.segments == segmented.segments

    def test_degenerate_columns_are_background(self, test_pair, dictionary, params):
        samples = np.array(test_pair[0].samples)
        samples[:16000] = 0.0
        result = segment_recording(AudioClip(samples, 16000), dictionary, params)
        assert result.diagnostics.n_degenerate_columns > 0
        assert not result.raw_decisions[:90].any()

    def test_softmax_features(self, test_pair, dictionary):
        result = segment_recording(test_pair[0], dictionary, PipelineParams(feature_for_svm="softmax"))
        assert result.model.dim == 10

    def test_dump_decisions(self, segmented, tmp_path):
        path = dump_decisions_csv(segmented, tmp_path / "dec.csv")
        table = pd.read_csv(path)
        assert list(table.columns) == ["frame_index", "time_s", "decision_value", "bird"]
        assert len(table) == segmented.diagnostics.n_frames

    def test_segment_file(self, test_pair, dictionary, params, tmp_path):
        path = tmp_path / "clip.wav"
        write_wav(test_pair[0], path)
        result = segment_file(path, dictionary, params)
        assert result.diagnostics.n_frames == 599


def _runs(decisions):
    padded = np.concatenate([[False], decisions, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2], edges[1::2] - 1))


class TestSegmentFrameConsistency:
    """Segments re-rasterized onto the grid agree with the smoothed decisions."""

    @pytest.mark.parametrize("seed", [23, 29, 31])
    @pytest.mark.parametrize("merge_gap_ms,min_segment_ms", [(20.0, 30.0), (60.0, 120.0)])
    def test_segments_match_frame_decisions(
        self, dictionary, chirp_spec, seed, merge_gap_ms, min_segment_ms
    ):
        clip, _ = synth_corpus(replace(chirp_spec, seed=seed))[0]
        params = PipelineParams(merge_gap_ms=merge_gap_ms, min_segment_ms=min_segment_ms)
        result = segment_recording(clip, dictionary, params)
        grid = result.grid
        hop, frame = grid.hop_s, grid.frame_s
        decisions = result.frame_decisions
        frames = segments_to_frames(result.segments, decisions.size, hop, frame)

        runs = _runs(decisions)
        gaps = [runs[i + 1][0] * hop - (runs[i][1] * hop + frame) for i in range(len(runs) - 1)]
        bridged = [gap < merge_gap_ms / 1000.0 for gap in gaps]
        short = [(end * hop + frame) - start * hop < min_segment_ms / 1000.0 + 1e-9 for start, end in runs]

        for k in np.flatnonzero(frames & ~decisions):
            # only frames inside a bridged gap are added
            i = sum(end < k for _, end in runs) - 1
            assert 0 <= i < len(gaps) and bridged[i]
            assert runs[i][1] < k < runs[i + 1][0]

        for k in np.flatnonzero(decisions & ~frames):
            # only frames of runs too short to survive are removed
            i = next(i for i, (start, end) in enumerate(runs) if start <= k <= end)
            assert short[i]

        if not any(bridged) and not any(short):
            np.testing.assert_array_equal(frames, decisions)

    @pytest.mark.parametrize("seed", [23, 29, 31])
    def test_unmerged_runs_round_trip(self, dictionary, chirp_spec, params, seed):
        result = segment_recording(synth_corpus(replace(chirp_spec, seed=seed))[0][0], dictionary, params)
        grid = result.grid
        decisions = result.frame_decisions
        segments = frames_to_segments(decisions, grid.hop_s, grid.frame_s, min_segment_ms=0.0, merge_gap_ms=0.0)
        assert len(segments) == len(_runs(decisions))
        frames = segments_to_frames(segments, decisions.size, grid.hop_s, grid.frame_s)
        np.testing.assert_array_equal(frames, decisions)
