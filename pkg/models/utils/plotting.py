"""
DirSeg — SVG Plots
===================
Standalone SVG figures for one segmentation run: the MI curve with the
auto-labeled frames marked, the frame decision train against ground
truth, and the magnitude spectrogram.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from models.segmentation.auto_labeler import normalized_mi  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_mi_curve(result, path, n_atoms=None):
    """Normalized MI per frame; bird labels in red, background labels in blue."""
    curve = result.mi_curve
    times = np.arange(len(curve)) * result.grid.hop_s
    n_atoms = n_atoms or result.normalized_embedding.n_atoms
    values = normalized_mi(curve, n_atoms)

    fig, ax = plt.subplots(figsize=(10, 3))
    ax.plot(times, values, color="black", linewidth=0.8)
    if result.auto_labels is not None:
        pos, neg = result.auto_labels.positive_indices, result.auto_labels.negative_indices
        ax.scatter(times[pos], values[pos], s=6, color="tab:red", label="bird labels")
        ax.scatter(times[neg], values[neg], s=6, color="tab:blue", label="background labels")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("normalized MI")
    return _save(fig, path)


def plot_decisions(result, path, truth_frames=None):
    """Frame decisions as a step train, ground truth underneath when given."""
    times = np.arange(result.frame_decisions.size) * result.grid.hop_s
    fig, ax = plt.subplots(figsize=(10, 2.5))
    ax.step(times, result.frame_decisions.astype(int), where="post", color="tab:red", label="decision")
    if truth_frames is not None:
        ax.step(times, np.asarray(truth_frames, dtype=int) - 1.2, where="post",
                color="tab:green", label="ground truth")
    ax.set_yticks([])
    ax.set_xlabel("time (s)")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_spectrogram(spec, path):
    """Log-magnitude spectrogram heatmap."""
    grid = spec.grid
    extent = [0.0, spec.n_frames * grid.hop_s, 0.0, spec.sample_rate / 2.0]
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.imshow(20 * np.log10(spec.mags + 1e-10), origin="lower", aspect="auto",
              extent=extent, cmap="magma")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    return _save(fig, path)
