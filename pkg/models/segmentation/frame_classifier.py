"""
DirSeg — Per-Recording Frame Classifier
========================================
Pass 2 of the two-pass segmenter: a soft-margin SVM with a cubic
polynomial kernel, trained on the auto-labeled embedding vectors of one
recording and then applied to every frame of that same recording.

The dual is solved by libsvm's SMO solver (``sklearn.svm.SVC``); the
fitted support vectors, signed dual coefficients and bias are copied into
an immutable :class:`SvmModel` that evaluates decisions with numpy.
"""

import json
import logging
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC

from models.errors import DimensionMismatch, InputError, SingleClassInput, SvmConvergenceWarning

logger = logging.getLogger(__name__)

# ─── Configuration ────────────────────────────────────────────────────────────

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 100


@dataclass(frozen=True)
class KernelSpec:
    """K(x, y) = (gamma·⟨x, y⟩ + coef0)^degree; gamma None means 1/feature_dim."""

    kind: str = "poly"
    degree: int = 3
    gamma: Optional[float] = None
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind != "poly":
            raise InputError(f"only the polynomial kernel is supported, got {self.kind!r}")
        if self.degree < 1:
            raise InputError(f"degree must be >= 1, got {self.degree}")
        if self.gamma is not None and self.gamma <= 0:
            raise InputError(f"gamma must be > 0, got {self.gamma}")

    def resolved(self, dim):
        return self if self.gamma is not None else replace(self, gamma=1.0 / dim)

    def __call__(self, a, b):
        return (self.gamma * (a @ b.T) + self.coef0) ** self.degree


@dataclass(frozen=True)
class SvmParams:
    """Box constraint, kernel and SMO stopping rule; a pass is N pair updates."""

    C: float = DEFAULT_C
    kernel: KernelSpec = KernelSpec()
    tol: float = DEFAULT_TOL
    max_passes: int = DEFAULT_MAX_PASSES

    def __post_init__(self):
        if self.C <= 0:
            raise InputError(f"C must be > 0, got {self.C}")
        if self.tol <= 0:
            raise InputError(f"tol must be > 0, got {self.tol}")
        if self.max_passes < 1:
            raise InputError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass(frozen=True)
class FeatureScaler:
    """Per-dimension standardization; zero-variance dimensions get stddev 1."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features):
        scaler = StandardScaler().fit(features)
        return cls(scaler.mean_.copy(), scaler.scale_.copy())

    def transform(self, features):
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelSpec
    scaler: FeatureScaler
    C: float
    converged: bool = True
    n_iter: int = 0
    support_indices: Optional[np.ndarray] = None

    @property
    def dim(self):
        return self.support_vectors.shape[1]


# ─── Training ─────────────────────────────────────────────────────────────────

def _as_rows(features, dim=None):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[None, :] if features.size else features.reshape(0, dim or 0)
    if dim is not None and features.shape[1] != dim:
        raise DimensionMismatch(f"features have dimension {features.shape[1]}, model has {dim}")
    return features


def train_svm(features, labels, params=None):
    """
    Fit the soft-margin SVM on N × dim feature rows with ±1 labels.

    A solver that stops at its iteration cap still returns a usable model,
    flagged ``converged=False`` with an :class:`SvmConvergenceWarning`.
    """
    params = params or SvmParams()
    features = _as_rows(features)
    labels = np.asarray(labels).reshape(-1)
    if features.shape[0] != labels.size:
        raise DimensionMismatch(f"{features.shape[0]} feature rows but {labels.size} labels")
    if not np.all(np.isin(labels, (-1, 1))):
        raise InputError("labels must be +1 or -1")
    if np.unique(labels).size < 2:
        raise SingleClassInput("both classes are required to train the classifier")

    scaler = FeatureScaler.fit(features)
    scaled = scaler.transform(features)
    kernel = params.kernel.resolved(scaled.shape[1])

    svc = SVC(
        kernel="poly",
        degree=kernel.degree,
        gamma=kernel.gamma,
        coef0=kernel.coef0,
        C=params.C,
        tol=params.tol,
        max_iter=params.max_passes * scaled.shape[0],
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        svc.fit(scaled, labels)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    if not converged:
        message = f"SMO hit its iteration cap after {int(svc.n_iter_[0])} updates"
        logger.warning(message)
        warnings.warn(message, SvmConvergenceWarning, stacklevel=2)

    return SvmModel(
        support_vectors=svc.support_vectors_.copy(),
        alphas=svc.dual_coef_[0].copy(),
        bias=float(svc.intercept_[0]),
        kernel=kernel,
        scaler=scaler,
        C=params.C,
        converged=converged,
        n_iter=int(svc.n_iter_[0]),
        support_indices=svc.support_.copy(),
    )


# ─── Prediction ───────────────────────────────────────────────────────────────

def decision_value(model, features):
    """f(x) = Σ_i α_i y_i K(sv_i, scale(x)) + b for one vector or N rows."""
    single = np.ndim(features) == 1
    rows = _as_rows(features, model.dim)
    if rows.shape[0] == 0:
        return np.zeros(0)
    values = model.kernel(model.scaler.transform(rows), model.support_vectors) @ model.alphas + model.bias
    return float(values[0]) if single else values


def predict(model, features):
    """True (bird) where the decision value is strictly positive."""
    rows = _as_rows(features, model.dim)
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return decision_value(model, rows) > 0


def model_to_dict(model):
    return {
        "kernel": {
            "kind": model.kernel.kind,
            "degree": model.kernel.degree,
            "gamma": model.kernel.gamma,
            "coef0": model.kernel.coef0,
        },
        "C": model.C,
        "bias": model.bias,
        "converged": model.converged,
        "n_iter": model.n_iter,
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "support_vectors": model.support_vectors.tolist(),
        "alphas": model.alphas.tolist(),
    }


def dump_model_json(model, path=None):
    """Debug dump of a trained model; returns the JSON text."""
    text = json.dumps(model_to_dict(model), indent=1)
    if path is not None:
        with open(path, "w") as f:
            f.write(text + "\n")
    return text
