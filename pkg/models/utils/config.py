"""
DirSeg — Configuration
=======================
One ``Config`` tree for every command, loadable from JSON or TOML. Every
key is optional and defaults to the published parameter regime; unknown
keys are rejected with their dotted name.
"""

import json
import logging
import os
import sys
if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from dataclasses import dataclass, field, replace

from models.directional.vmf_mixture import EmConfig
from models.errors import ConfigError, InputError, IoFailure
from models.segmentation.frame_classifier import KernelSpec, SvmParams
from models.segmentation.pipeline import PipelineParams
from models.utils.preprocessing import StftParams

LOG_ENV_VAR = "DIRSEG_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_SEED = 42

# config key → dataclass field, per section
STFT_KEYS = {"frame_ms": "frame_ms", "overlap": "overlap_fraction", "fft_size": "fft_size", "window": "window_kind"}
PIPELINE_KEYS = {
    "w": "w", "Q": "Q", "mi_bins": "mi_bins", "median_len": "median_len",
    "min_segment_ms": "min_segment_ms", "merge_gap_ms": "merge_gap_ms",
    "feature_for_svm": "feature_for_svm",
}
SVM_KEYS = {"C": "C", "tol": "tol", "max_passes": "max_passes"}
KERNEL_KEYS = {"degree": "degree", "gamma": "gamma", "coef0": "coef0"}
EM_KEYS = {
    "num_components": "num_components", "max_iters": "max_iters", "rel_tol": "rel_tol",
    "kappa_max": "kappa_max", "min_resp_mass": "min_resp_mass",
}
TOP_KEYS = {"keep", "seed", "threads", "baseline_quantile", "output_dir"}
SECTIONS = {"stft": STFT_KEYS, "pipeline": PIPELINE_KEYS, "svm": {**SVM_KEYS, **KERNEL_KEYS}, "em": EM_KEYS}


@dataclass(frozen=True)
class Config:
    pipeline: PipelineParams = field(default_factory=PipelineParams)
    em: EmConfig = field(default_factory=EmConfig)
    keep: int = 10
    seed: int = DEFAULT_SEED
    threads: int = 1
    baseline_quantile: float = 0.5
    output_dir: str = "results"

    def __post_init__(self):
        if self.keep < 1 or self.keep > self.em.num_components:
            raise ConfigError(f"keep must be in [1, {self.em.num_components}], got {self.keep}")
        if self.threads == 0:
            raise ConfigError("threads must be non-zero")
        if self.em.seed != self.seed:
            object.__setattr__(self, "em", replace(self.em, seed=self.seed))

    def to_dict(self):
        p, stft, svm = self.pipeline, self.pipeline.stft, self.pipeline.svm
        return {
            "stft": {key: getattr(stft, attr) for key, attr in STFT_KEYS.items()},
            "pipeline": {key: getattr(p, attr) for key, attr in PIPELINE_KEYS.items()},
            "svm": {
                **{key: getattr(svm, attr) for key, attr in SVM_KEYS.items()},
                **{key: getattr(svm.kernel, attr) for key, attr in KERNEL_KEYS.items()},
            },
            "em": {key: getattr(self.em, attr) for key, attr in EM_KEYS.items()},
            "keep": self.keep,
            "seed": self.seed,
            "threads": self.threads,
            "baseline_quantile": self.baseline_quantile,
            "output_dir": self.output_dir,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def with_overrides(self, **overrides):
        """Apply flat overrides (``Q``, ``w``, ``num_components``, ``keep``, ...); None is ignored."""
        doc = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            section = next((name for name, keys in SECTIONS.items() if key in keys), None)
            if section is not None:
                doc[section][key] = value
            elif key in TOP_KEYS:
                doc[key] = value
            else:
                raise ConfigError(f"unknown override {key!r}")
        return config_from_dict(doc)


def _section(doc, name, keys):
    values = doc.get(name, {})
    if not isinstance(values, dict):
        raise ConfigError(f"{name} must be a table")
    unknown = sorted(set(values) - set(keys))
    if unknown:
        raise ConfigError(f"unknown config key {name}.{unknown[0]}")
    return {keys[key]: value for key, value in values.items()}


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a table/object")
    unknown = sorted(set(doc) - TOP_KEYS - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]}")

    try:
        stft = StftParams(**_section(doc, "stft", STFT_KEYS))
        svm_values = _section(doc, "svm", {**SVM_KEYS, **KERNEL_KEYS})
        kernel = KernelSpec(**{k: svm_values.pop(k) for k in list(svm_values) if k in KERNEL_KEYS})
        svm = SvmParams(kernel=kernel, **svm_values)
        pipeline = PipelineParams(stft=stft, svm=svm, **_section(doc, "pipeline", PIPELINE_KEYS))
        top = {key: doc[key] for key in TOP_KEYS if key in doc}
        seed = int(top.get("seed", DEFAULT_SEED))
        em = EmConfig(seed=seed, **_section(doc, "em", EM_KEYS))
        return Config(pipeline=pipeline, em=em, **top)
    except ConfigError:
        raise
    except (InputError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path=None):
    """Defaults when ``path`` is None, else the parsed ``.json`` / ``.toml`` file."""
    if path is None:
        return Config()
    try:
        if str(path).endswith(".toml"):
            with open(path, "rb") as f:
                doc = tomllib.load(f)
        else:
            with open(path) as f:
                doc = json.load(f)
    except FileNotFoundError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(doc)


def configure_logging(level=None):
    """Root logger to stderr at ``level`` or $DIRSEG_LOG (default WARNING)."""
    name = (level or os.environ.get(LOG_ENV_VAR) or "WARNING").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=numeric, format=LOG_FORMAT, force=True)
    logging.captureWarnings(True)
    return numeric
