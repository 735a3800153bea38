"""
DirSeg — Command-Line Runner
=============================
Sub-commands for every workflow: train a dictionary, segment a recording,
evaluate segments, mix noise, synthesize a corpus, and run the SNR sweep,
the w/Z ablation and the cross-family evaluation.

Exit codes: 0 success, 1 runtime failure, 2 bad input, 3 no MI contrast
(an empty segments CSV is still written).
"""

import argparse
import glob
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace

from tqdm import tqdm

# Add project root
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, PROJECT_ROOT)

from data.generate_synthetic_data import EVENT_KINDS, SynthSpec, synth_corpus, synth_noise, write_corpus  # noqa: E402
from models.directional.dictionary import (  # noqa: E402
    concentration_summary, load_dictionary, save_dictionary, train_dictionary,
)
from models.errors import DirSegError, InputError, NoVocalizationFrames  # noqa: E402
from models.experiments.sweeps import ablation_sweep, cross_species_eval, snr_sweep  # noqa: E402
from models.segmentation.auto_labeler import dump_mi_csv  # noqa: E402
from models.segmentation.frame_classifier import dump_model_json  # noqa: E402
from models.segmentation.pipeline import (  # noqa: E402
    dump_decisions_csv, segment_file, write_segments_csv,
)
from models.utils.audio_io import measure_snr, mix_at_snr, read_wav, write_wav  # noqa: E402
from models.utils.config import configure_logging, load_config  # noqa: E402
from models.utils.evaluation import (  # noqa: E402
    build_metrics, frame_f1, format_report, intervals_to_frame_labels, parse_labels, save_metrics,
)
from models.utils.preprocessing import frame_grid, stft_magnitude  # noqa: E402

logger = logging.getLogger("dirseg")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


# ─── Helpers ──────────────────────────────────────────────────────────────────

def effective_config(args):
    config = load_config(args.config)
    config = config.with_overrides(
        seed=args.seed, Q=args.q, num_components=args.mixtures, w=args.window,
        threads=args.threads, keep=args.keep,
    )
    print(json.dumps({"effective_config": config.to_dict()}, sort_keys=True), file=sys.stderr)
    return config


def label_path_for(wav_path):
    return os.path.splitext(wav_path)[0] + ".csv"


def load_labeled_dir(directory, desc="loading"):
    """(clip, truth) pairs for every WAV in ``directory`` that has a label CSV."""
    pairs = []
    for wav in tqdm(sorted(glob.glob(os.path.join(directory, "*.wav"))), desc=desc, disable=None):
        labels = label_path_for(wav)
        if not os.path.exists(labels):
            raise InputError(f"{wav} has no label file {labels}")
        pairs.append((read_wav(wav), parse_labels(labels)))
    if not pairs:
        raise InputError(f"no WAV files in {directory}")
    return pairs


def sidecar(out_path, suffix):
    return os.path.splitext(out_path)[0] + suffix


def parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def parse_ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


# ─── Commands ─────────────────────────────────────────────────────────────────

def cmd_dict_train(args):
    config = effective_config(args)
    if args.labels and len(args.labels) != len(args.wavs):
        raise InputError(f"{len(args.wavs)} WAV files but {len(args.labels)} label files")
    print("\n🌱 Training direction dictionary")

    clips, labels = [], []
    for wav in tqdm(args.wavs, desc="loading", disable=None):
        labels_file = args.labels[len(clips)] if args.labels else label_path_for(wav)
        if not os.path.exists(labels_file):
            raise InputError(f"{wav} has no label file {labels_file}")
        clips.append(read_wav(wav))
        labels.append(parse_labels(labels_file))
    if sum(len(gt) for gt in labels) == 0:
        raise NoVocalizationFrames("no vocalization intervals in the training labels")

    start = time.time()
    dictionary, mixture, trace = train_dictionary(
        clips, labels, config.pipeline.stft, config.pipeline.w, config.em, config.keep, config.threads,
    )
    save_dictionary(dictionary, args.out)

    print(f"   Recordings: {len(clips)}")
    print(f"   Super-frames: {dictionary.provenance.metadata['n_superframes']:,}")
    print(f"   EM iterations: {len(trace) - 1} (log-likelihood {trace[-1]:.3f})")
    print("   Component concentrations:")
    print(concentration_summary(mixture, config.keep).to_string(index=False))
    print(f"  💾 Dictionary ({dictionary.n_atoms} atoms × {dictionary.wd}) saved to {args.out}")
    print(f"   ⏱️  {time.time() - start:.1f}s")
    return EXIT_OK


def cmd_segment(args):
    config = effective_config(args)
    dictionary = load_dictionary(args.dict)
    result = segment_file(args.wav, dictionary, config.pipeline)
    write_segments_csv(result.segments, args.out)

    if args.dump_mi:
        dump_mi_csv(result.mi_curve, sidecar(args.out, "_mi.csv"))
    if args.dump_decisions:
        dump_decisions_csv(result, sidecar(args.out, "_decisions.csv"))
    if args.dump_model and result.model is not None:
        dump_model_json(result.model, sidecar(args.out, "_model.json"))
    if args.plot:
        from models.utils.plotting import plot_decisions, plot_mi_curve, plot_spectrogram

        plot_mi_curve(result, sidecar(args.out, "_mi.svg"))
        plot_decisions(result, sidecar(args.out, "_decisions.svg"))
        plot_spectrogram(result.spectrogram, sidecar(args.out, "_spectrogram.svg"))

    print(json.dumps({"diagnostics": result.diagnostics.to_dict()}, sort_keys=True), file=sys.stderr)
    print(f"🐦 {len(result.segments)} segments → {args.out}")
    return EXIT_DEGENERATE if result.diagnostics.degenerate_fallback else EXIT_OK


def cmd_eval(args):
    config = effective_config(args)
    pred = parse_labels(args.pred)
    truth = parse_labels(args.truth)
    stft = config.pipeline.stft

    if args.audio:
        clip = read_wav(args.audio)
        sample_rate = clip.sample_rate
        n_frames = stft_magnitude(clip, stft).n_frames
    else:
        sample_rate = args.sample_rate
        grid = frame_grid(0, stft, sample_rate)
        end = max([off for _, off in pred.intervals + truth.intervals] or [0.0])
        n_frames = max(0, int(math.ceil((end - grid.frame_s) / grid.hop_s)) + 1)
    grid = frame_grid(n_frames, stft, sample_rate)

    report = frame_f1(
        intervals_to_frame_labels(pred, grid.n_frames, grid.frame_s, grid.hop_s),
        intervals_to_frame_labels(truth, grid.n_frames, grid.frame_s, grid.hop_s),
    )
    print(format_report(report, os.path.basename(args.pred)))
    if args.out:
        metrics = build_metrics(report, os.path.splitext(os.path.basename(args.out))[0])
        with open(args.out, "w") as f:
            json.dump(metrics, f, indent=2)
        print(f"  💾 Metrics saved to {args.out}")
    return EXIT_OK


def cmd_mix(args):
    effective_config(args)
    signal, noise = read_wav(args.signal), read_wav(args.noise)
    mixed, details = mix_at_snr(signal, noise, args.snr, return_details=True)
    write_wav(mixed, args.out)
    noise_component = mixed.samples / details.peak_rescale - signal.samples
    print(f"💧 Mixed at {args.snr:g} dB (noise gain {details.noise_gain:.6f}, "
          f"measured {measure_snr(signal.samples, noise_component):.6f} dB) → {args.out}")
    return EXIT_OK


def cmd_synth(args):
    config = effective_config(args)
    spec = SynthSpec(
        duration_s=args.duration,
        event_count=args.events,
        event_kind=args.kind,
        noise_kind=args.noise,
        noise_path=args.noise_path,
        snr_db=None if args.clean else args.snr,
        n_clips=args.clips,
        seed=config.seed,
    )
    paths = write_corpus(synth_corpus(spec), args.out_dir)
    print(f"✅ {len(paths)} clips written to {args.out_dir}")
    return EXIT_OK


def _load_noises(args, n_samples, sample_rate, seed):
    noises = {}
    if args.noise_dir:
        for path in sorted(glob.glob(os.path.join(args.noise_dir, "*.wav"))):
            noises[os.path.splitext(os.path.basename(path))[0]] = read_wav(path)
    for i, kind in enumerate(k for k in (args.noise_kinds or "").split(",") if k):
        noises[kind] = synth_noise(kind, n_samples, sample_rate, seed + i)
    if not noises:
        raise InputError("no noise given: use --noise-dir and/or --noise-kinds")
    return noises


def cmd_sweep(args):
    config = effective_config(args)
    corpus = load_labeled_dir(args.corpus_dir)
    dictionary = load_dictionary(args.dict)
    longest = max(len(clip) for clip, _ in corpus)
    noises = _load_noises(args, longest, corpus[0][0].sample_rate, config.seed)

    print(f"\n🌧️  SNR sweep: {len(noises)} noises × {len(args.snrs)} SNRs × {len(corpus)} clips")
    table = snr_sweep(
        corpus, noises, args.snrs, dictionary, config.pipeline,
        quantile=config.baseline_quantile, threads=config.threads,
    )
    table.to_csv(args.out, index=False, float_format="%.6f")
    print(table.to_string(index=False))
    print(f"  💾 Results saved to {args.out}")
    return EXIT_OK


def cmd_ablate(args):
    config = effective_config(args)
    train = load_labeled_dir(args.train_dir, "train")
    test = load_labeled_dir(args.test_dir, "test")
    print(f"\n🔬 Ablation over w ∈ {args.windows} and Z ∈ {args.mixture_counts}")
    table = ablation_sweep(
        train, test, args.windows, args.mixture_counts, config.pipeline, config.em,
        config.keep, config.threads,
    )
    table.to_csv(args.out, index=False, float_format="%.6f")
    print(table.to_string(index=False))
    print(f"  💾 Results saved to {args.out}")
    if args.metrics_dir:
        best = table.loc[table["f1"].idxmax()]
        save_metrics({"name": "ablation", **{k: float(best[k]) for k in table.columns}}, args.metrics_dir)
    return EXIT_OK


def cmd_cross(args):
    config = effective_config(args)
    corpora = {}
    for i, kind in enumerate(tqdm(args.kinds, desc="synthesizing", disable=None)):
        spec = SynthSpec(
            duration_s=args.duration, event_count=args.events, event_kind=kind,
            snr_db=args.snr, seed=config.seed + 2 * i,
        )
        corpora[kind] = (
            synth_corpus(replace(spec, n_clips=args.train_clips)),
            synth_corpus(replace(spec, n_clips=args.test_clips, seed=spec.seed + 1)),
        )

    print(f"\n🦜 Cross-family evaluation over {', '.join(args.kinds)}")
    table = cross_species_eval(corpora, config.pipeline, config.em, config.keep, config.threads)
    table.to_csv(args.out, index=False, float_format="%.6f")
    print(table.to_string(index=False))
    print(f"  💾 Results saved to {args.out}")
    return EXIT_OK


def parse_kinds(text):
    kinds = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [k for k in kinds if k not in EVENT_KINDS]
    if unknown or not kinds:
        raise argparse.ArgumentTypeError(f"event kinds must be drawn from {', '.join(EVENT_KINDS)}")
    return kinds


# ─── Parser ───────────────────────────────────────────────────────────────────

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML config file")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
    common.add_argument("--q", type=int, default=None, help="auto-label budget Q")
    common.add_argument("--mixtures", type=int, default=None, help="vMF mixture components Z")
    common.add_argument("--keep", type=int, default=None, help="dictionary atoms kept")
    common.add_argument("--window", type=int, default=None, help="super-frame context w")
    common.add_argument("--threads", type=int, default=None, help="worker processes")

    parser = argparse.ArgumentParser(prog="dirseg", description="Bird vocalization segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dict-train", parents=[common], help="train a direction dictionary")
    p.add_argument("wavs", nargs="+", help="training WAV files (labels: same stem .csv)")
    p.add_argument("--labels", nargs="+", help="label CSVs, one per WAV")
    p.add_argument("--out", required=True, help="dictionary JSON path")
    p.set_defaults(func=cmd_dict_train)

    p = sub.add_parser("segment", parents=[common], help="segment one recording")
    p.add_argument("wav")
    p.add_argument("--dict", required=True, help="dictionary JSON")
    p.add_argument("--out", required=True, help="segments CSV path")
    p.add_argument("--dump-mi", action="store_true", help="write <out>_mi.csv")
    p.add_argument("--dump-decisions", action="store_true", help="write <out>_decisions.csv")
    p.add_argument("--dump-model", action="store_true", help="write <out>_model.json")
    p.add_argument("--plot", action="store_true", help="write SVG plots next to <out>")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", parents=[common], help="frame-level F1 of predicted segments")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--audio", help="recording that defines the frame grid")
    p.add_argument("--sample-rate", type=int, default=44100)
    p.add_argument("--out", help="metrics JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mix", parents=[common], help="add noise at a target SNR")
    p.add_argument("signal")
    p.add_argument("noise")
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labeled corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--clips", type=int, default=4)
    p.add_argument("--events", type=int, default=5)
    p.add_argument("--kind", choices=EVENT_KINDS, default="chirp")
    p.add_argument("--noise", choices=("white", "pink", "rain", "clip"), default="white")
    p.add_argument("--noise-path", help="WAV used when --noise clip")
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--clean", action="store_true", help="write events without noise")
    p.add_argument("--duration", type=float, default=10.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", parents=[common], help="noise × SNR robustness sweep")
    p.add_argument("--corpus-dir", required=True, help="clean WAV + label CSV pairs")
    p.add_argument("--noise-dir", help="noise WAVs, named by file stem")
    p.add_argument("--noise-kinds", help="synthesized noises, e.g. white,rain")
    p.add_argument("--snrs", type=parse_floats, default=[0.0, 5.0, 10.0, 15.0, 20.0])
    p.add_argument("--dict", required=True)
    p.add_argument("--out", required=True, help="results CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", parents=[common], help="context window / mixture count ablation")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--windows", type=parse_ints, default=[1, 3, 5, 7])
    p.add_argument("--mixture-counts", type=parse_ints, default=[15, 20, 40])
    p.add_argument("--out", required=True)
    p.add_argument("--metrics-dir", help="also save the best cell as metrics JSON")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("cross", parents=[common], help="train on one event family, test on every family")
    p.add_argument("--kinds", type=parse_kinds, default=["chirp", "tone-burst"], help="e.g. chirp,harmonic")
    p.add_argument("--train-clips", type=int, default=4)
    p.add_argument("--test-clips", type=int, default=2)
    p.add_argument("--events", type=int, default=5)
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--out", required=True, help="results CSV")
    p.set_defaults(func=cmd_cross)
    return parser


def main(argv=None):
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DirSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        logger.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
