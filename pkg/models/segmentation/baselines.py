"""
DirSeg — Unsupervised Baselines
================================
Per-frame thresholding detectors used as reference points in the noise
sweeps: frame log-energy above a recording quantile, and spectral entropy
below a recording quantile.
"""

import numpy as np
from scipy.stats import entropy

from models.errors import InputError
from models.utils.preprocessing import StftParams, stft_magnitude

ENERGY_FLOOR = 1e-20
DEFAULT_QUANTILE = 0.5


def _check_quantile(q):
    if not 0.0 <= q <= 1.0:
        raise InputError(f"threshold_quantile must be in [0, 1], got {q}")


def frame_log_energy(spec):
    return np.log(np.sum(spec.mags ** 2, axis=0) + ENERGY_FLOOR)


def frame_spectral_entropy(spec):
    """Entropy (bits) of each frame's normalized power spectrum; silent frames get the maximum."""
    power = spec.mags ** 2
    totals = power.sum(axis=0)
    result = np.full(spec.n_frames, np.log2(spec.n_bins))
    active = totals > 0
    result[active] = entropy(power[:, active], base=2, axis=0)
    return result


def baseline_energy(clip, stft=None, threshold_quantile=DEFAULT_QUANTILE):
    """Bird where frame log-energy is strictly above the recording's quantile."""
    _check_quantile(threshold_quantile)
    energy = frame_log_energy(stft_magnitude(clip, stft or StftParams()))
    return energy > np.quantile(energy, threshold_quantile)


def baseline_spectral_entropy(clip, stft=None, threshold_quantile=DEFAULT_QUANTILE):
    """Bird where spectral entropy is strictly below the recording's quantile."""
    _check_quantile(threshold_quantile)
    flatness = frame_spectral_entropy(stft_magnitude(clip, stft or StftParams()))
    return flatness < np.quantile(flatness, threshold_quantile)


BASELINES = {
    "energy": baseline_energy,
    "spectral_entropy": baseline_spectral_entropy,
}
