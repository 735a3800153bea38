"""
DirSeg — Mutual-Information Auto-Labeler
=========================================
Pass 1 of the two-pass segmenter. Mutual information between consecutive
softmax-normalized embeddings is high on stationary background and low on
vocalizations; the Q lowest-MI frames become bird labels and the Q
highest-MI frames background labels.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import entropy as _entropy

from models.errors import (
    BudgetTooLarge, DegenerateCurve, InputError, LengthMismatch,
    NotADistribution, TooFewColumns,
)

logger = logging.getLogger(__name__)

# ─── Configuration ────────────────────────────────────────────────────────────

DEFAULT_BINS = 16
DEFAULT_BUDGET = 2000
BUDGET_FRACTION = 0.1
DISTRIBUTION_TOL = 1e-6
CONTRAST_EPS = 1e-9


@dataclass(frozen=True)
class MiCurve:
    """
    MI of pair (k−1, k) stored at frame k; frame 0 repeats frame 1.

    ``joint`` keeps the per-pair joint entropies (length K − 1) when the
    curve was computed from embeddings.
    """

    values: np.ndarray
    bins: int = DEFAULT_BINS
    joint: Optional[np.ndarray] = None

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class AutoLabels:
    positive_indices: np.ndarray
    negative_indices: np.ndarray
    Q: int

    def training_set(self):
        """Indices and ±1 labels, positives first."""
        indices = np.concatenate([self.positive_indices, self.negative_indices])
        labels = np.concatenate([np.ones(self.Q, dtype=int), -np.ones(self.Q, dtype=int)])
        return indices, labels


# ─── Entropies ────────────────────────────────────────────────────────────────

def entropy(col):
    """Shannon entropy in bits with 0·log 0 = 0."""
    col = np.asarray(col, dtype=np.float64)
    if col.size == 0 or np.any(col < 0) or abs(col.sum() - 1.0) > DISTRIBUTION_TOL:
        raise NotADistribution("entries must be non-negative and sum to 1")
    return float(_entropy(col, base=2))


def _bin_edges(bins):
    if bins < 2:
        raise InputError(f"bin count must be >= 2, got {bins}")
    return np.linspace(0.0, 1.0, bins + 1)


def _bin_index(values, edges):
    # Same bin assignment as np.histogram: half-open bins, last one closed.
    index = np.searchsorted(edges, values, side="right") - 1
    return np.clip(index, 0, edges.size - 2)


def joint_entropy(a, b, bins=DEFAULT_BINS):
    """
    Entropy (bits) of the joint histogram of coordinate pairs (a_j, b_j),
    each value quantized into ``bins`` uniform bins over [0, 1].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"distributions of length {a.size} and {b.size}")
    edges = _bin_edges(bins)
    counts, _, _ = np.histogram2d(a, b, bins=[edges, edges])
    return float(_entropy(counts.ravel() / a.size, base=2))


# ─── MI curve ─────────────────────────────────────────────────────────────────

def mi_curve(nde, bins=DEFAULT_BINS):
    """values[k] = H(f̂_k) + H(f̂_(k−1)) − H(f̂_k, f̂_(k−1)) for k ≥ 1."""
    probs = nde.probs if hasattr(nde, "probs") else np.asarray(nde, dtype=np.float64)
    n_atoms, n_columns = probs.shape
    if n_columns < 2:
        raise TooFewColumns(f"MI needs at least 2 columns, got {n_columns}")

    marginal = _entropy(probs, base=2, axis=0)

    edges = _bin_edges(bins)
    codes = _bin_index(probs, edges)
    cells = codes[:, 1:] * bins + codes[:, :-1]
    counts = np.zeros((n_columns - 1, bins * bins))
    pair = np.broadcast_to(np.arange(n_columns - 1), cells.shape)
    np.add.at(counts, (pair, cells), 1.0)
    joint = _entropy(counts / n_atoms, base=2, axis=1)

    values = np.empty(n_columns)
    values[1:] = marginal[1:] + marginal[:-1] - joint
    values[0] = values[1]
    return MiCurve(values, bins, joint)


def normalized_mi(curve, n_atoms):
    """MI / (2·log2 Z_kept), for plotting only."""
    return curve.values / (2.0 * math.log2(n_atoms))


def dump_mi_csv(curve, path):
    pd.DataFrame({
        "frame_index": np.arange(len(curve)),
        "mi_value": curve.values,
    }).to_csv(path, index=False, float_format="%.9g")
    return path


# ─── Labeling ─────────────────────────────────────────────────────────────────

def effective_budget(Q, K):
    """min(Q, floor(0.1·K)), never below one; warns when Q is reduced."""
    cap = max(1, int(math.floor(BUDGET_FRACTION * K)))
    if Q > cap:
        logger.warning("label budget reduced from %d to %d for %d frames", Q, cap, K)
        return cap
    return int(Q)


def auto_label(mi, Q):
    """
    Q lowest-MI frames → bird, Q highest-MI frames → background.

    Ties go to the lower frame index, and background is drawn only from
    frames not already labeled bird.
    """
    values = mi.values if hasattr(mi, "values") else np.asarray(mi, dtype=np.float64)
    K = values.size
    if Q < 1:
        raise InputError(f"budget must be >= 1, got {Q}")
    if 2 * Q > K:
        raise BudgetTooLarge(f"2·Q = {2 * Q} exceeds {K} frames")
    if values.max() - values.min() < CONTRAST_EPS:
        raise DegenerateCurve("MI curve is flat; no contrast between frames")
    joint = getattr(mi, "joint", None)
    if joint is not None and not np.any(joint > 0):
        raise DegenerateCurve("every frame pair falls in a single joint cell")

    ascending = np.argsort(values, kind="stable")
    positives = ascending[:Q]
    remaining = ascending[Q:]
    descending = remaining[np.lexsort((remaining, -values[remaining]))]
    negatives = descending[:Q]

    assert not np.intersect1d(positives, negatives).size
    return AutoLabels(np.sort(positives), np.sort(negatives), int(Q))
