"""
DirSeg — Two-Pass Segmentation Pipeline
========================================
Spectrogram → super-frames → directional embedding → MI auto-labels
(pass 1) → per-recording SVM over every frame (pass 2) → smoothed frame
decisions → (onset, offset) segments.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.ndimage import median_filter

from models.directional.embedding import project, softmax_normalize
from models.errors import (
    ClipTooShort, DegenerateCurve, DimensionMismatch, EvenMedianLength, InputError,
)
from models.segmentation.auto_labeler import (
    DEFAULT_BINS, DEFAULT_BUDGET, auto_label, effective_budget, mi_curve,
)
from models.segmentation.frame_classifier import SvmParams, decision_value, train_svm
from models.utils.audio_io import read_wav
from models.utils.evaluation import parse_labels
from models.utils.preprocessing import (
    DEFAULT_CONTEXT, StftParams, stft_magnitude, superframes, unit_normalize,
)

logger = logging.getLogger(__name__)

SEGMENT_COLUMNS = ["onset_s", "offset_s"]
FEATURE_KINDS = ("raw", "softmax")
TIME_TOL = 1e-9


@dataclass(frozen=True)
class PipelineParams:
    stft: StftParams = StftParams()
    w: int = DEFAULT_CONTEXT
    Q: int = DEFAULT_BUDGET
    mi_bins: int = DEFAULT_BINS
    svm: SvmParams = SvmParams()
    median_len: int = 5
    min_segment_ms: float = 30.0
    merge_gap_ms: float = 20.0
    feature_for_svm: str = "raw"

    def __post_init__(self):
        if self.w < 1 or self.w % 2 == 0:
            raise InputError(f"w must be a positive odd integer, got {self.w}")
        if self.Q < 1:
            raise InputError(f"Q must be >= 1, got {self.Q}")
        if self.mi_bins < 2:
            raise InputError(f"mi_bins must be >= 2, got {self.mi_bins}")
        if self.median_len < 1 or self.median_len % 2 == 0:
            raise EvenMedianLength(f"median_len must be a positive odd integer, got {self.median_len}")
        if self.min_segment_ms < 0 or self.merge_gap_ms < 0:
            raise InputError("min_segment_ms and merge_gap_ms must be >= 0")
        if self.feature_for_svm not in FEATURE_KINDS:
            raise InputError(f"feature_for_svm must be one of {FEATURE_KINDS}")

    @property
    def wd(self):
        return self.w * self.stft.n_bins

    def to_dict(self):
        return asdict(self)


@dataclass
class Diagnostics:
    effective_Q: int = 0
    degenerate_fallback: bool = False
    svm_converged: bool = True
    peak_rescale: float = 1.0
    n_frames: int = 0
    n_degenerate_columns: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass
class SegmentationResult:
    """Frame decisions, segments and every intermediate artifact of one run."""

    frame_decisions: np.ndarray
    segments: list
    mi_curve: object
    diagnostics: Diagnostics
    raw_decisions: Optional[np.ndarray] = None
    decision_values: Optional[np.ndarray] = None
    auto_labels: Optional[object] = None
    model: Optional[object] = None
    spectrogram: Optional[object] = None
    embedding: Optional[object] = None
    normalized_embedding: Optional[object] = None
    grid: Optional[object] = field(default=None, repr=False)


# ─── Decisions → segments ─────────────────────────────────────────────────────

def smooth_decisions(decisions, median_len=5):
    """Sliding median (majority vote) with edge replication; length preserved."""
    if median_len < 1 or median_len % 2 == 0:
        raise EvenMedianLength(f"median_len must be a positive odd integer, got {median_len}")
    decisions = np.asarray(decisions, dtype=bool)
    if median_len == 1 or decisions.size == 0:
        return decisions.copy()
    return median_filter(decisions.astype(np.uint8), size=median_len, mode="nearest").astype(bool)


def _positive_runs(decisions):
    padded = np.concatenate([[False], np.asarray(decisions, dtype=bool), [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[0::2], edges[1::2] - 1))


def frames_to_segments(decisions, hop_s, frame_s, min_segment_ms=30.0, merge_gap_ms=20.0):
    """
    Maximal positive runs k_start..k_end become [k_start·hop, k_end·hop + frame_s].

    Segments closer than ``merge_gap_ms`` are merged first, then segments
    shorter than ``min_segment_ms`` are dropped.
    """
    merge_gap = merge_gap_ms / 1000.0
    min_duration = min_segment_ms / 1000.0

    merged = []
    for start, end in _positive_runs(decisions):
        onset, offset = start * hop_s, end * hop_s + frame_s
        if merged and onset - merged[-1][1] < merge_gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], offset))
        else:
            merged.append((onset, offset))

    return [(on, off) for on, off in merged if off - on >= min_duration - TIME_TOL]


def segments_to_frames(segments, n_frames, hop_s, frame_s):
    """Frames whose whole span lies inside a segment are positive."""
    starts = np.arange(int(n_frames)) * hop_s
    ends = starts + frame_s
    decisions = np.zeros(int(n_frames), dtype=bool)
    for onset, offset in segments:
        decisions |= (starts >= onset - TIME_TOL) & (ends <= offset + TIME_TOL)
    return decisions


def write_segments_csv(segments, path):
    pd.DataFrame(list(segments), columns=SEGMENT_COLUMNS).to_csv(
        path, index=False, float_format="%.6f"
    )
    return path


def read_segments_csv(path):
    """Segments CSV shares the label format; returns the interval list."""
    return list(parse_labels(path).intervals)


def dump_decisions_csv(result, path):
    grid = result.grid
    pd.DataFrame({
        "frame_index": np.arange(result.frame_decisions.size),
        "time_s": np.arange(result.frame_decisions.size) * grid.hop_s,
        "decision_value": (
            result.decision_values if result.decision_values is not None
            else np.zeros(result.frame_decisions.size)
        ),
        "bird": result.frame_decisions.astype(int),
    }).to_csv(path, index=False, float_format="%.6f")
    return path


# ─── Pipeline ─────────────────────────────────────────────────────────────────

def _features(params, embedding, normalized):
    if params.feature_for_svm == "softmax":
        return normalized.probs.T
    return embedding.coeffs.T


def segment_recording(clip, dictionary, params=None, peak_rescale=1.0):
    """Run both passes on one recording with a trained dictionary."""
    params = params or PipelineParams()
    if dictionary.wd != params.wd:
        raise DimensionMismatch(
            f"dictionary dimension {dictionary.wd} does not match w·d = {params.wd}"
        )

    spec = stft_magnitude(clip, params.stft)
    # MI pairs consecutive frames, so one frame is too short even when w = 1.
    min_frames = max(params.w, 2)
    if spec.n_frames < min_frames:
        raise ClipTooShort(f"{spec.n_frames} frames is fewer than the {min_frames} needed")
    grid = spec.grid

    sf = unit_normalize(superframes(spec, params.w))
    embedding = project(dictionary, sf, params.stft, clip.sample_rate)
    normalized = softmax_normalize(embedding)
    curve = mi_curve(normalized, params.mi_bins)

    diagnostics = Diagnostics(
        effective_Q=effective_budget(params.Q, spec.n_frames),
        peak_rescale=peak_rescale,
        n_frames=spec.n_frames,
        n_degenerate_columns=int(np.count_nonzero(~sf.unit_flags)),
    )
    result = SegmentationResult(
        frame_decisions=np.zeros(spec.n_frames, dtype=bool),
        segments=[],
        mi_curve=curve,
        diagnostics=diagnostics,
        spectrogram=spec,
        embedding=embedding,
        normalized_embedding=normalized,
        grid=grid,
    )

    try:
        labels = auto_label(curve, diagnostics.effective_Q)
    except DegenerateCurve as exc:
        logger.warning("no MI contrast (%s); emitting no segments", exc)
        diagnostics.degenerate_fallback = True
        result.raw_decisions = result.frame_decisions.copy()
        return result

    features = _features(params, embedding, normalized)
    indices, targets = labels.training_set()
    model = train_svm(features[indices], targets, params.svm)
    diagnostics.svm_converged = model.converged

    values = decision_value(model, features)
    raw = (values > 0) & sf.unit_flags
    smoothed = smooth_decisions(raw, params.median_len)

    result.auto_labels = labels
    result.model = model
    result.decision_values = values
    result.raw_decisions = raw
    result.frame_decisions = smoothed
    result.segments = frames_to_segments(
        smoothed, grid.hop_s, grid.frame_s, params.min_segment_ms, params.merge_gap_ms
    )
    logger.info(
        "segmented %d frames: %d bird frames, %d segments",
        spec.n_frames, int(smoothed.sum()), len(result.segments),
    )
    return result


def segment_file(path, dictionary, params=None):
    return segment_recording(read_wav(path), dictionary, params)
