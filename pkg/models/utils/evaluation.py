"""
DirSeg — Evaluation Utilities
==============================
Ground-truth label files, rasterization of onset/offset intervals onto the
STFT frame grid, frame-level precision/recall/F1 and report saving.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from models.errors import IoFailure, LengthMismatch, MalformedRow, NegativeDuration

logger = logging.getLogger(__name__)

LABEL_COLUMNS = ("onset_s", "offset_s")
MIN_OVERLAP = 0.5
OVERLAP_TOL = 1e-9


# ─── Ground truth ─────────────────────────────────────────────────────────────

def merge_intervals(intervals):
    """Sort intervals and merge any that overlap. Returns (merged, n_merges)."""
    merged = []
    n_merges = 0
    for onset, offset in sorted(intervals):
        if merged and onset < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], offset))
            n_merges += 1
        else:
            merged.append((onset, offset))
    return merged, n_merges


@dataclass(frozen=True)
class GroundTruth:
    """Sorted, disjoint (onset_s, offset_s) intervals of one recording."""

    intervals: tuple = ()
    recording_id: str = ""

    def __post_init__(self):
        intervals = tuple((float(a), float(b)) for a, b in self.intervals)
        for onset, offset in intervals:
            if offset <= onset:
                raise NegativeDuration(f"interval ({onset}, {offset}) has no positive duration")
        merged, n_merges = merge_intervals(intervals)
        if n_merges:
            logger.warning(
                "%s: merged %d overlapping label intervals", self.recording_id or "labels", n_merges
            )
        object.__setattr__(self, "intervals", tuple(merged))

    def __len__(self):
        return len(self.intervals)

    @property
    def total_duration(self):
        return sum(offset - onset for onset, offset in self.intervals)


def parse_labels(path, recording_id=None):
    """
    Read a label CSV with header ``onset_s,offset_s[,type]``.

    Extra columns are ignored; overlapping rows are merged with a warning.
    """
    recording_id = recording_id or os.path.splitext(os.path.basename(str(path)))[0]
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise MalformedRow(1, "missing header onset_s,offset_s") from exc
    except pd.errors.ParserError as exc:
        raise MalformedRow(1, str(exc)) from exc

    columns = [c.strip() for c in df.columns]
    if tuple(columns[:2]) != LABEL_COLUMNS:
        raise MalformedRow(1, f"expected header onset_s,offset_s, found {','.join(columns)}")
    df.columns = columns

    intervals = []
    for index, row in enumerate(df.itertuples(index=False)):
        line_number = index + 2
        onset_text, offset_text = row[0].strip(), row[1].strip()
        if not onset_text and not offset_text and all(not str(v).strip() for v in row):
            continue
        try:
            onset, offset = float(onset_text), float(offset_text)
        except ValueError as exc:
            raise MalformedRow(line_number, f"not a number: {onset_text!r}, {offset_text!r}") from exc
        if not (np.isfinite(onset) and np.isfinite(offset)) or onset < 0:
            raise MalformedRow(line_number, f"invalid times ({onset_text}, {offset_text})")
        if offset <= onset:
            raise NegativeDuration(f"line {line_number}: offset {offset} is not after onset {onset}")
        intervals.append((onset, offset))

    return GroundTruth(tuple(intervals), recording_id)


def write_labels(gt, path):
    df = pd.DataFrame(list(gt.intervals), columns=list(LABEL_COLUMNS))
    df.to_csv(path, index=False, float_format="%.6f")
    return path


def intervals_to_frame_labels(gt, n_frames, frame_s, hop_s, min_overlap=MIN_OVERLAP):
    """
    Rasterize intervals onto the frame grid.

    Frame k spans [k·hop, k·hop + frame_s] and is bird (True) when at least
    ``min_overlap`` of that span lies inside a single interval. Overlap is
    measured against each interval on its own, not against their union;
    :class:`GroundTruth` has already merged overlapping intervals, so an
    overlapping pair is scored as the one interval covering both.
    """
    labels = np.zeros(int(n_frames), dtype=bool)
    if n_frames <= 0 or not gt.intervals:
        return labels

    starts = np.arange(n_frames) * hop_s
    ends = starts + frame_s
    bounds = np.asarray(gt.intervals)
    overlap = (
        np.minimum(ends[:, None], bounds[None, :, 1])
        - np.maximum(starts[:, None], bounds[None, :, 0])
    )
    best = np.clip(overlap, 0.0, None).max(axis=1)
    return best >= min_overlap * frame_s - OVERLAP_TOL


# ─── Frame metrics ────────────────────────────────────────────────────────────

def _ratio(num, den):
    return num / den if den else 0.0


@dataclass(frozen=True)
class EvalReport:
    """Frame confusion counts with bird as the positive class."""

    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float = field(init=False)
    recall: float = field(init=False)
    f1: float = field(init=False)

    def __post_init__(self):
        precision = _ratio(self.true_positives, self.true_positives + self.false_positives)
        recall = _ratio(self.true_positives, self.true_positives + self.false_negatives)
        object.__setattr__(self, "precision", precision)
        object.__setattr__(self, "recall", recall)
        object.__setattr__(self, "f1", _ratio(2 * precision * recall, precision + recall))

    @property
    def n_frames(self):
        return self.true_positives + self.false_positives + self.false_negatives + self.true_negatives

    def to_dict(self):
        return asdict(self)


def frame_f1(pred, truth):
    """Precision, recall and F1 over per-frame decisions (True = bird)."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {truth.size} ground-truth frames")
    if pred.size == 0:
        return EvalReport(0, 0, 0, 0)

    tn, fp, fn, tp = confusion_matrix(truth, pred, labels=[False, True]).ravel()
    return EvalReport(int(tp), int(fp), int(fn), int(tn))


def pool_reports(reports):
    """Micro-average: sum confusion counts over recordings."""
    reports = list(reports)
    return EvalReport(
        sum(r.true_positives for r in reports),
        sum(r.false_positives for r in reports),
        sum(r.false_negatives for r in reports),
        sum(r.true_negatives for r in reports),
    )


# ─── Reporting ────────────────────────────────────────────────────────────────

def format_report(report, title):
    lines = [
        "=" * 60,
        f"  📊 {title} — Frame-level Report",
        "=" * 60,
        f"  Frames:     {report.n_frames:,}",
        f"  TP/FP/FN/TN {report.true_positives}/{report.false_positives}/"
        f"{report.false_negatives}/{report.true_negatives}",
        f"  Precision:  {report.precision:.4f}",
        f"  Recall:     {report.recall:.4f}",
        f"  F1 Score:   {report.f1:.4f}",
        "=" * 60,
    ]
    return "\n".join(lines)


def build_metrics(report, name, per_file=None):
    """Metrics dict in the shape written by :func:`save_metrics`."""
    metrics = {
        "name": name,
        "timestamp": datetime.now().isoformat(),
        **{k: (round(v, 6) if isinstance(v, float) else v) for k, v in report.to_dict().items()},
        "n_frames": report.n_frames,
    }
    if per_file is not None:
        metrics["per_file"] = {key: round(r.f1, 6) for key, r in per_file.items()}
    return metrics


def save_metrics(metrics, output_dir):
    """Save metrics to ``<output_dir>/<name>_metrics.json``."""
    os.makedirs(output_dir, exist_ok=True)
    filename = f"{metrics['name'].lower().replace(' ', '_')}_metrics.json"
    filepath = os.path.join(output_dir, filename)
    with open(filepath, "w") as f:
        json.dump(metrics, f, indent=2, default=str)
    logger.info("metrics saved to %s", filepath)
    return filepath
