"""
DirSeg — Experiment Harnesses
==============================
Noise-robustness sweep (noise kind × SNR, pipeline vs unsupervised
baselines), context-window / mixture-count ablation, and the
cross-family generalization run. Every harness returns a pandas table.
"""

import logging
from dataclasses import replace

import pandas as pd
from joblib import Parallel, delayed

from models.directional.dictionary import train_dictionary
from models.directional.vmf_mixture import EmConfig
from models.errors import InputError
from models.segmentation.baselines import BASELINES
from models.segmentation.pipeline import PipelineParams, segment_recording
from models.utils.audio_io import mix_at_snr
from models.utils.evaluation import frame_f1, intervals_to_frame_labels, pool_reports
from models.utils.preprocessing import frame_grid

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["noise", "snr_db", "method", "precision", "recall", "f1"]
DEFAULT_METHODS = ("pipeline", "energy")


def _truth_frames(truth, grid):
    return intervals_to_frame_labels(truth, grid.n_frames, grid.frame_s, grid.hop_s)


def evaluate_recording(clip, truth, dictionary, params, peak_rescale=1.0):
    result = segment_recording(clip, dictionary, params, peak_rescale=peak_rescale)
    return frame_f1(result.frame_decisions, _truth_frames(truth, result.grid)), result


def evaluate_baseline(clip, truth, method, params, quantile=0.5):
    decisions = BASELINES[method](clip, params.stft, quantile)
    grid = frame_grid(decisions.size, params.stft, clip.sample_rate)
    return frame_f1(decisions, _truth_frames(truth, grid))


def evaluate_corpus(pairs, dictionary, params):
    """Pooled report plus per-recording reports for a labeled corpus."""
    per_file = [evaluate_recording(clip, truth, dictionary, params)[0] for clip, truth in pairs]
    return pool_reports(per_file), per_file


def _row(report, **keys):
    return {**keys, "precision": report.precision, "recall": report.recall, "f1": report.f1}


# ─── SNR sweep ────────────────────────────────────────────────────────────────

def _sweep_cell(corpus, noise_name, noise, snr_db, dictionary, params, methods, quantile):
    reports = {method: [] for method in methods}
    for clip, truth in corpus:
        mixed, details = mix_at_snr(clip, noise, snr_db, return_details=True)
        for method in methods:
            if method == "pipeline":
                report, _ = evaluate_recording(mixed, truth, dictionary, params, details.peak_rescale)
            else:
                report = evaluate_baseline(mixed, truth, method, params, quantile)
            reports[method].append(report)
    return [
        _row(pool_reports(reports[method]), noise=noise_name, snr_db=snr_db, method=method)
        for method in methods
    ]


def snr_sweep(corpus, noises, snrs_db, dictionary, params=None, methods=DEFAULT_METHODS,
              quantile=0.5, threads=1):
    """
    Mix every clean recording with every noise at every SNR, segment with
    each method and pool frame counts over the corpus.

    ``noises`` maps a noise name to its AudioClip. Rows come back in
    (noise, snr, method) input order.
    """
    params = params or PipelineParams()
    corpus = list(corpus)
    if not corpus or not list(snrs_db):
        raise InputError("snr_sweep needs a non-empty corpus and SNR list")

    cells = [(name, noise, snr) for name, noise in noises.items() for snr in snrs_db]
    logger.info("running %d sweep cells over %d recordings", len(cells), len(corpus))
    results = Parallel(n_jobs=threads)(
        delayed(_sweep_cell)(corpus, name, noise, snr, dictionary, params, methods, quantile)
        for name, noise, snr in cells
    )
    return pd.DataFrame([row for rows in results for row in rows], columns=SWEEP_COLUMNS)


def relative_drop(table, method, high_snr, low_snr):
    """(F1_high − F1_low) / F1_high averaged over noise kinds."""
    rows = table[table["method"] == method].set_index(["noise", "snr_db"])["f1"]
    drops = []
    for noise in table["noise"].unique():
        high = rows.loc[(noise, high_snr)]
        drops.append((high - rows.loc[(noise, low_snr)]) / high if high > 0 else 0.0)
    return float(sum(drops) / len(drops))


# ─── Ablation ─────────────────────────────────────────────────────────────────

def _ablation_cell(train, test, w, n_components, params, em_config, keep):
    cell_params = replace(params, w=w)
    cell_em = replace(em_config, num_components=n_components)
    clips, labels = zip(*train)
    dictionary, _, _ = train_dictionary(
        clips, labels, cell_params.stft, w, cell_em, min(keep, n_components)
    )
    pooled, _ = evaluate_corpus(test, dictionary, cell_params)
    return _row(pooled, w=w, num_components=n_components, keep=min(keep, n_components))


def ablation_sweep(train, test, ws, zs, params=None, em_config=None, keep=10, threads=1):
    """Frame F1 for every (context window w, mixture count Z) pair."""
    params = params or PipelineParams()
    em_config = em_config or EmConfig()
    rows = Parallel(n_jobs=threads)(
        delayed(_ablation_cell)(list(train), list(test), w, z, params, em_config, keep)
        for w in ws for z in zs
    )
    return pd.DataFrame(rows, columns=["w", "num_components", "keep", "precision", "recall", "f1"])


# ─── Cross-family generalization ──────────────────────────────────────────────

def cross_species_eval(corpora_by_kind, params=None, em_config=None, keep=10, threads=1):
    """
    Train a dictionary on each event family and evaluate it on every family.

    ``corpora_by_kind`` maps a family name to ``(train_pairs, test_pairs)``.
    """
    params = params or PipelineParams()
    em_config = em_config or EmConfig()
    kinds = list(corpora_by_kind)

    def train_one(kind):
        clips, labels = zip(*corpora_by_kind[kind][0])
        return train_dictionary(clips, labels, params.stft, params.w, em_config, keep)[0]

    dictionaries = dict(zip(kinds, Parallel(n_jobs=threads, prefer="threads")(
        delayed(train_one)(kind) for kind in kinds
    )))
    rows = []
    for train_kind in kinds:
        for test_kind in kinds:
            pooled, _ = evaluate_corpus(corpora_by_kind[test_kind][1], dictionaries[train_kind], params)
            rows.append(_row(pooled, train_kind=train_kind, test_kind=test_kind))
    return pd.DataFrame(rows, columns=["train_kind", "test_kind", "precision", "recall", "f1"])

