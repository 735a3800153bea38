"""
DirSeg — Direction Dictionary
==============================
Turns a fitted vMF mixture into the dictionary M of dominant directions:
low-concentration components are discarded and the remaining mean
directions become the atoms. Also trains a dictionary end to end from
labeled recordings and persists it as versioned JSON.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from models.directional.vmf_mixture import EmConfig, fit
from models.errors import (
    DictionaryFormatError, IoFailure, KeepOutOfRange, NoVocalizationFrames,
    SampleRateMismatch,
)
from models.utils.evaluation import intervals_to_frame_labels
from models.utils.preprocessing import StftParams, stft_magnitude, superframes, unit_normalize

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
ATOM_TOL = 1e-9
DEFAULT_KEEP = 10


@dataclass(frozen=True)
class Provenance:
    """How the super-frames behind a dictionary were computed."""

    stft: StftParams
    w: int
    sample_rate: int
    metadata: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.stft.n_bins

    @property
    def wd(self):
        return self.w * self.d


@dataclass(frozen=True)
class DirectionDictionary:
    """Atoms as the columns of a wd × Z_kept matrix, sorted by descending κ."""

    atoms: np.ndarray
    kappas: np.ndarray
    weights: np.ndarray
    provenance: Provenance
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        kappas = np.array(self.kappas, dtype=np.float64).reshape(-1)
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        if atoms.ndim != 2 or atoms.shape[1] < 1:
            raise DictionaryFormatError("a dictionary needs at least one atom")
        if kappas.size != atoms.shape[1] or weights.size != atoms.shape[1]:
            raise DictionaryFormatError("kappas/weights do not match the atom count")
        if np.max(np.abs(np.linalg.norm(atoms, axis=0) - 1.0)) > ATOM_TOL:
            raise DictionaryFormatError("every atom must have unit norm")
        if np.any(np.diff(kappas) > 0):
            raise DictionaryFormatError("atoms must be sorted by descending kappa")
        for array in (atoms, kappas, weights):
            array.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "weights", weights)

    @property
    def wd(self):
        return self.atoms.shape[0]

    @property
    def n_atoms(self):
        return self.atoms.shape[1]


# ─── Construction ─────────────────────────────────────────────────────────────

def build_dictionary(mixture, keep, provenance):
    """
    Keep the ``keep`` most concentrated components, highest κ first.

    Equal κ values keep their component order, so at the cut the lower
    index wins.
    """
    if not 1 <= keep <= mixture.n_components:
        raise KeepOutOfRange(f"keep must be in [1, {mixture.n_components}], got {keep}")
    order = np.argsort(-mixture.kappas, kind="stable")[:keep]
    return DirectionDictionary(
        atoms=mixture.means[:, order],
        kappas=mixture.kappas[order],
        weights=mixture.weights[order],
        provenance=provenance,
    )


def concentration_summary(mixture, keep=None):
    """Per-component κ / π table, most concentrated first."""
    order = np.argsort(-mixture.kappas, kind="stable")
    table = pd.DataFrame({
        "component": order,
        "kappa": mixture.kappas[order],
        "weight": mixture.weights[order],
    })
    table["kept"] = np.arange(len(order)) < (keep if keep is not None else len(order))
    return table.reset_index(drop=True)


# ─── Training ─────────────────────────────────────────────────────────────────

def vocal_superframes(clip, truth, stft, w):
    """Unit super-frames of the labeled vocalization frames of one recording."""
    spec = stft_magnitude(clip, stft)
    sf = unit_normalize(superframes(spec, w))
    grid = spec.grid
    vocal = intervals_to_frame_labels(truth, grid.n_frames, grid.frame_s, grid.hop_s)
    return sf.data[:, vocal & sf.unit_flags]


def train_dictionary(recordings, labels, stft=None, w=5, em_config=None,
                     keep=DEFAULT_KEEP, threads=1):
    """
    Pool vocalization super-frames from labeled recordings, fit a vMF
    mixture and prune it. Background super-frames are discarded.

    Returns ``(dictionary, mixture, loglik_trace)``.
    """
    stft = stft or StftParams()
    em_config = em_config or EmConfig()
    recordings, labels = list(recordings), list(labels)
    if len(recordings) != len(labels):
        raise NoVocalizationFrames("every training recording needs a label set")
    if not recordings:
        raise NoVocalizationFrames("no training recordings")

    rates = {clip.sample_rate for clip in recordings}
    if len(rates) != 1:
        raise SampleRateMismatch(f"training recordings mix sample rates {sorted(rates)}")
    sample_rate = rates.pop()

    blocks = Parallel(n_jobs=threads)(
        delayed(vocal_superframes)(clip, truth, stft, w)
        for clip, truth in zip(recordings, labels)
    )
    pooled = np.hstack(blocks)
    if pooled.shape[1] == 0:
        raise NoVocalizationFrames("labels cover no usable frames")
    logger.info("pooled %d vocalization super-frames of dimension %d", pooled.shape[1], pooled.shape[0])

    mixture, trace = fit(pooled, em_config)
    provenance = Provenance(
        stft=stft,
        w=w,
        sample_rate=sample_rate,
        metadata={
            "n_recordings": len(recordings),
            "n_superframes": int(pooled.shape[1]),
            "num_components": em_config.num_components,
            "seed": em_config.seed,
            "em_iterations": len(trace) - 1,
            "log_likelihood": trace[-1],
        },
    )
    return build_dictionary(mixture, keep, provenance), mixture, trace


# ─── Persistence ──────────────────────────────────────────────────────────────

def dictionary_to_dict(dictionary):
    prov = dictionary.provenance
    return {
        "format_version": dictionary.format_version,
        "wd": dictionary.wd,
        "w": prov.w,
        "d": prov.d,
        "sample_rate": prov.sample_rate,
        "stft": prov.stft.to_dict(),
        "atoms": dictionary.atoms.T.tolist(),
        "kappas": dictionary.kappas.tolist(),
        "weights": dictionary.weights.tolist(),
        "metadata": prov.metadata,
    }


def save_dictionary(dictionary, path):
    """Write JSON; floats use repr so reading back is bit-exact."""
    try:
        with open(path, "w") as f:
            json.dump(dictionary_to_dict(dictionary), f, indent=1, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def dictionary_from_dict(doc):
    if not isinstance(doc, dict):
        raise DictionaryFormatError("dictionary document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DictionaryFormatError(f"unsupported format_version {version!r}")
    try:
        stft_doc = doc["stft"]
        stft = StftParams(
            frame_ms=float(stft_doc["frame_ms"]),
            overlap_fraction=float(stft_doc["overlap"]),
            fft_size=int(stft_doc["fft_size"]),
            window_kind=str(stft_doc["window"]),
        )
        w, d, wd = int(doc["w"]), int(doc["d"]), int(doc["wd"])
        atoms = np.asarray(doc["atoms"], dtype=np.float64)
        kappas = np.asarray(doc["kappas"], dtype=np.float64)
        weights = np.asarray(doc["weights"], dtype=np.float64)
        sample_rate = int(doc["sample_rate"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DictionaryFormatError(f"malformed dictionary: {exc}") from exc

    if d != stft.n_bins or wd != w * d:
        raise DictionaryFormatError(f"inconsistent shape: w={w}, d={d}, wd={wd}")
    if atoms.ndim != 2 or atoms.shape[1] != wd:
        raise DictionaryFormatError(f"atoms must be rows of length {wd}")

    provenance = Provenance(stft, w, sample_rate, dict(doc.get("metadata", {})))
    return DirectionDictionary(atoms.T, kappas, weights, provenance, version)


def load_dictionary(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DictionaryFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return dictionary_from_dict(doc)
