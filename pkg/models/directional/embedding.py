"""
DirSeg — Directional Embedding
===============================
Projects unit super-frames onto the dictionary atoms (F = MᵀP) and
softmax-normalizes each column into a categorical distribution.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import softmax

from models.errors import DimensionMismatch, ProvenanceMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DEMatrix:
    """Raw embedding coefficients, Z_kept × K."""

    coeffs: np.ndarray
    provenance: Optional[object] = None

    @property
    def n_atoms(self):
        return self.coeffs.shape[0]

    @property
    def n_columns(self):
        return self.coeffs.shape[1]

    def max_magnitude(self):
        """max_j |f_jk| for every column k."""
        return np.abs(self.coeffs).max(axis=0)


@dataclass(frozen=True)
class NormalizedDE:
    """Column-wise softmax of a DEMatrix; every column sums to one."""

    probs: np.ndarray

    @property
    def n_atoms(self):
        return self.probs.shape[0]

    @property
    def n_columns(self):
        return self.probs.shape[1]


def _check_provenance(dictionary, sf, stft=None, sample_rate=None):
    prov = dictionary.provenance
    mismatched = []
    if sf.w != prov.w:
        mismatched.append(f"w {sf.w} vs {prov.w}")
    if stft is not None and stft != prov.stft:
        mismatched.append(f"stft {stft.to_dict()} vs {prov.stft.to_dict()}")
    if sample_rate is not None and sample_rate != prov.sample_rate:
        mismatched.append(f"sample rate {sample_rate} vs {prov.sample_rate}")
    if mismatched:
        message = "dictionary provenance differs from the recording: " + "; ".join(mismatched)
        logger.warning(message)
        warnings.warn(message, ProvenanceMismatch, stacklevel=3)


def project(dictionary, sf, stft=None, sample_rate=None):
    """
    Embedding coefficients Mᵀ·P for every super-frame column.

    Zeroed (degenerate) columns project to all-zero embeddings. A mismatch
    between the dictionary's STFT settings and ``stft``/``sample_rate``
    only warns; a dimension mismatch is an error.
    """
    data = sf.data if hasattr(sf, "data") else np.asarray(sf)
    if data.shape[0] != dictionary.wd:
        raise DimensionMismatch(
            f"super-frames have dimension {data.shape[0]}, dictionary has {dictionary.wd}"
        )
    if hasattr(sf, "w"):
        _check_provenance(dictionary, sf, stft, sample_rate)
    return DEMatrix(dictionary.atoms.T @ data, dictionary.provenance)


def softmax_normalize(de):
    """f̂_jk = exp(f_jk) / Σ_z exp(f_zk), per column."""
    coeffs = de.coeffs if isinstance(de, DEMatrix) else np.asarray(de, dtype=np.float64)
    return NormalizedDE(softmax(coeffs, axis=0))


# ─── Inspection ───────────────────────────────────────────────────────────────

def de_magnitude_summary(de, frame_labels):
    """
    Quartiles of the per-frame max |coefficient| for bird and background
    frames; the statistics behind a DE-magnitude box plot.
    """
    labels = np.asarray(frame_labels, dtype=bool)
    if labels.size != de.n_columns:
        raise DimensionMismatch(f"{labels.size} labels for {de.n_columns} DE columns")
    magnitude = de.max_magnitude()
    rows = []
    for name, mask in (("bird", labels), ("background", ~labels)):
        values = magnitude[mask]
        if values.size:
            q1, median, q3 = np.percentile(values, [25, 50, 75])
        else:
            q1 = median = q3 = np.nan
        rows.append({"class": name, "count": int(values.size), "q1": q1, "median": median, "q3": q3})
    return pd.DataFrame(rows).set_index("class")


def dump_de_csv(matrix, path):
    """One embedding column per line."""
    values = matrix.coeffs if isinstance(matrix, DEMatrix) else matrix.probs
    pd.DataFrame(values.T).to_csv(path, index=False, header=False, float_format="%.9g")
    return path
