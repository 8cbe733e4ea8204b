"""Command-line front end.

Exit codes: 0 success, 2 usage error (bad flag or parameter value),
3 data-format error (malformed or inconsistent input), 4 numeric divergence,
5 missing input file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .classifier import ClfConfig, train_classifier
from .data import validate_dataset, check_embeddings
from .detect import ranked_classes, split_clean_noisy
from .exceptions import DataFormatError, DivergenceError
from .metrics import evaluate
from .pipeline import (
    PipelineConfig, StageError, format_eval, format_report, run_pipeline, run_synthetic,
)
from .relabel import RelabelConfig, a2s, smooth_labels
from .synth import SynthConfig, generate
from .val import ValConfig, train_val

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGENCE, EXIT_MISSING = 0, 2, 3, 4, 5

EPILOG = """exit codes:
  0  success
  2  usage error (unknown flag, invalid parameter value, bad config file)
  3  data-format error (bad magic/version, truncated file, dimension
     mismatch, non-finite value, label out of range)
  4  numeric divergence (non-finite training loss)
  5  missing input file
"""

logger = logging.getLogger("sgval")


class UsageError(Exception):
    pass


def _milestones(text):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid milestone list {text!r}") from None


def _add_common(p, threads=False):
    p.add_argument("--config", help="key=value file supplying defaults; flags override")
    p.add_argument("-v", "--verbose", action="store_true")
    if threads:
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for neighbour search (default: all cores)")


def _add_synth_flags(p, seed=True):
    g = p.add_argument_group("synthetic data")
    d = SynthConfig()
    g.add_argument("--n", type=int, default=d.n)
    g.add_argument("--c", type=int, default=d.c)
    g.add_argument("--z", type=int, default=d.z)
    g.add_argument("--d", type=int, default=d.d)
    g.add_argument("--max-positives", type=int, default=d.max_positives)
    g.add_argument("--noise-rate", type=float, default=d.noise_rate)
    g.add_argument("--flip-prob", type=float, default=d.flip_prob)
    g.add_argument("--feature-noise", type=float, default=d.feature_noise)
    g.add_argument("--test-n", type=int, default=0, help="also write a clean test split of this size")
    if seed:
        g.add_argument("--seed", type=int, default=0)


def _add_val_flags(p, prefix=""):
    d = ValConfig()
    g = p.add_argument_group("attribute learning")
    g.add_argument("--attributes", type=int, default=d.n_attributes, metavar="M")
    g.add_argument("--beta", type=float, default=d.beta)
    g.add_argument(f"--{prefix}lr", type=float, default=d.learning_rate)
    g.add_argument(f"--{prefix}epochs", type=int, default=d.epochs)
    g.add_argument(f"--{prefix}batch-size", type=int, default=d.batch_size)
    g.add_argument("--schedule", choices=("cosine", "constant"), default=d.lr_schedule)


def _add_clf_flags(p, prefix=""):
    d = ClfConfig()
    g = p.add_argument_group("classifier")
    g.add_argument(f"--{prefix}lr", type=float, default=d.learning_rate)
    g.add_argument(f"--{prefix}epochs", type=int, default=d.epochs)
    g.add_argument(f"--{prefix}batch-size", type=int, default=d.batch_size)
    g.add_argument("--milestones", type=_milestones, default=",".join(map(str, d.milestones)))
    g.add_argument("--decay", type=float, default=d.decay)


def _add_relabel_flags(p):
    d = RelabelConfig()
    g = p.add_argument_group("relabeling")
    g.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    g.add_argument("--k", type=int, default=d.k)
    g.add_argument("--epsilon", type=float, default=0.1, help="label-smoothing baseline")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sgval",
        description="Noisy multi-label learning with semantic virtual attributes.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    def add(name, help_):
        parser.subcommands[name] = sub.add_parser(
            name, help=help_, epilog=EPILOG,
            formatter_class=argparse.RawDescriptionHelpFormatter)
        return parser.subcommands[name]

    p = add("synth", "generate a synthetic dataset with injected label noise")
    p.add_argument("--out-dir", required=True)
    _add_synth_flags(p)
    _add_common(p)

    p = add("train-val", "train the virtual attribute projector")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="projector checkpoint to write")
    p.add_argument("--trace", help="optional CSV of per-epoch objective")
    p.add_argument("--seed", type=int, default=0)
    _add_val_flags(p)
    _add_common(p)

    p = add("detect", "flag each sample clean or noisy")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = add("relabel", "relabel noisy samples from the attribute graph")
    p.add_argument("--features")
    p.add_argument("--labels", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--model")
    p.add_argument("--out", required=True, help="soft label CSV to write")
    p.add_argument("--flags-out", help="sidecar CSV of sample_index,clean_flag")
    p.add_argument("--neighbors-out", help="debug CSV of neighbour images per noisy sample")
    p.add_argument("--method", choices=("a2s", "smooth"), default="a2s",
                   help="a2s (default) or the label-smoothing baseline")
    _add_relabel_flags(p)
    _add_common(p, threads=True)

    p = add("train-clf", "train the multi-label classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--seed", type=int, default=0)
    _add_clf_flags(p)
    _add_common(p)

    p = add("eval", "per-class and mean AUC-ROC of a classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--csv", help="machine-readable per-class output")
    _add_common(p)

    p = add("pipeline", "run every stage and report detection, recovery and AUC")
    p.add_argument("--synth-defaults", action="store_true",
                   help="generate the default synthetic scenario instead of reading files")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--embeddings")
    p.add_argument("--test-features")
    p.add_argument("--test-labels")
    p.add_argument("--true-labels", help="clean training labels, if known")
    p.add_argument("--corrupted", help="index file of corrupted samples, if known")
    p.add_argument("--out-dir", help="write report.csv and report.txt here")
    p.add_argument("--seed", type=int, default=0)
    _add_synth_flags(p, seed=False)
    p.set_defaults(test_n=1000)
    _add_val_flags(p, prefix="val-")
    _add_clf_flags(p, prefix="clf-")
    _add_relabel_flags(p)
    _add_common(p, threads=True)
    return parser


def _read_config(path):
    out = {}
    lines = Path(path).read_text().splitlines()
    for num, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = _read_config(args.config)
    subparser = parser.subcommands[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        key = "lam" if key == "lambda" else key
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _load_dataset(features, labels, embeddings=None):
    X = io.read_matrix(features, io.FEATURES_MAGIC)
    Y, names = io.read_labels_csv(labels)
    W = None
    if embeddings:
        W = check_embeddings(io.read_matrix(embeddings, io.EMBEDDINGS_MAGIC).astype(np.float64), Y.shape[1])
    return validate_dataset(X.astype(np.float64), Y, W, names), W


def _write_trace(path, trace, name):
    with open(path, "w", newline="") as fh:
        fh.write(f"epoch,{name}\n")
        for e, v in enumerate(trace):
            fh.write(f"{e},{float(v)!r}\n")


def cmd_synth(args):
    cfg = SynthConfig(args.n, args.c, args.z, args.d, args.max_positives, args.noise_rate,
                      args.flip_prob, args.feature_noise, args.seed)
    out = generate(cfg, test_n=args.test_n)
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    names = out.clean.class_names
    io.write_matrix(d / "features.sgvf", out.clean.features, io.FEATURES_MAGIC)
    io.write_matrix(d / "embeddings.sgvw", out.embeddings, io.EMBEDDINGS_MAGIC)
    io.write_labels_csv(d / "labels_clean.csv", out.clean.labels, names)
    io.write_labels_csv(d / "labels_noisy.csv", out.noisy.labels, names)
    io.write_index_csv(d / "corrupted.csv", out.corrupted_indices)
    if out.test is not None:
        io.write_matrix(d / "test_features.sgvf", out.test.features, io.FEATURES_MAGIC)
        io.write_labels_csv(d / "test_labels.csv", out.test.labels, names)
    print(f"wrote {cfg.n} samples ({len(out.corrupted_indices)} corrupted) to {d}")


def cmd_train_val(args):
    ds, W = _load_dataset(args.features, args.labels, args.embeddings)
    cfg = ValConfig(beta=args.beta, learning_rate=args.lr, epochs=args.epochs,
                    batch_size=args.batch_size, seed=args.seed, lr_schedule=args.schedule,
                    n_attributes=args.attributes)
    projector, trace = train_val(ds, W, cfg)
    io.save_projector(args.out, projector)
    if args.trace:
        _write_trace(args.trace, trace, "objective")
    if len(trace):
        print(f"objective: first epoch {trace[0]:.6f}, last epoch {trace[-1]:.6f}")


def cmd_detect(args):
    ds, W = _load_dataset(args.features, args.labels, args.embeddings)
    projector = io.load_projector(args.model)
    split = split_clean_noisy(ds, projector, W)
    io.write_flags_csv(args.out, split.clean_mask(), ranked_classes(ds, projector, W))
    print(f"clean: {split.n_clean}  noisy: {split.n_noisy}")


def cmd_relabel(args):
    if args.method == "smooth":
        Y, names = io.read_labels_csv(args.labels)
        io.write_labels_csv(args.out, smooth_labels(Y, args.epsilon), names)
        return
    missing = [f for f in ("features", "embeddings", "model") if not getattr(args, f)]
    if missing:
        raise UsageError("relabel needs " + ", ".join("--" + m for m in missing))
    ds, W = _load_dataset(args.features, args.labels, args.embeddings)
    projector = io.load_projector(args.model)
    result = a2s(ds, projector, W, RelabelConfig(args.lam, args.k), n_jobs=args.threads)
    io.write_labels_csv(args.out, result.dataset.labels, ds.class_names)
    if args.flags_out:
        io.write_flags_csv(args.flags_out, result.split.clean_mask())
    if args.neighbors_out:
        io.write_neighbors_csv(args.neighbors_out, result.neighbors)
    print(f"relabeled {result.split.n_noisy} of {ds.n_samples} samples")


def cmd_train_clf(args):
    ds, _ = _load_dataset(args.features, args.labels)
    cfg = ClfConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                    milestones=tuple(args.milestones), decay=args.decay, seed=args.seed)
    clf, trace = train_classifier(ds, cfg)
    io.save_classifier(args.out, clf)
    if args.trace:
        _write_trace(args.trace, trace, "bce")
    if len(trace):
        print(f"bce: first epoch {trace[0]:.6f}, last epoch {trace[-1]:.6f}")


def cmd_eval(args):
    ds, _ = _load_dataset(args.features, args.labels)
    rep = evaluate(io.load_classifier(args.model), ds)
    print(format_eval(rep))
    for j, reason in rep.skipped_classes:
        print(f"skipped {rep.class_names[j]}: {reason}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "auc"])
            for name, auc in zip(rep.class_names, rep.per_class_auc):
                w.writerow([name, "" if auc is None else repr(auc)])
            w.writerow(["mean", repr(rep.mean_auc)])


def _pipeline_config(args):
    synth = SynthConfig(args.n, args.c, args.z, args.d, args.max_positives, args.noise_rate,
                        args.flip_prob, args.feature_noise, args.seed)
    val = ValConfig(beta=args.beta, learning_rate=args.val_lr, epochs=args.val_epochs,
                    batch_size=args.val_batch_size, seed=args.seed, lr_schedule=args.schedule,
                    n_attributes=args.attributes)
    clf = ClfConfig(learning_rate=args.clf_lr, epochs=args.clf_epochs,
                    batch_size=args.clf_batch_size, milestones=tuple(args.milestones),
                    decay=args.decay, seed=args.seed)
    return PipelineConfig(val=val, relabel=RelabelConfig(args.lam, args.k), clf=clf,
                          synth=synth, epsilon=args.epsilon, test_n=args.test_n,
                          n_jobs=args.threads)


def cmd_pipeline(args):
    cfg = _pipeline_config(args)
    if args.synth_defaults:
        report = run_synthetic(cfg)
    else:
        needed = ("features", "labels", "embeddings", "test_features", "test_labels")
        missing = [f for f in needed if not getattr(args, f)]
        if missing:
            raise UsageError("pipeline needs --synth-defaults or " +
                             ", ".join("--" + m.replace("_", "-") for m in missing))
        train, W = _load_dataset(args.features, args.labels, args.embeddings)
        test, _ = _load_dataset(args.test_features, args.test_labels)
        truth = io.read_labels_csv(args.true_labels)[0] if args.true_labels else None
        corrupted = io.read_index_csv(args.corrupted) if args.corrupted else None
        report = run_pipeline(train, W, test, cfg, true_labels=truth, corrupted=corrupted)
    text = format_report(report)
    print(text)
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "report.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value"])
            for key, value in report.rows():
                w.writerow([key, value if isinstance(value, (int, str)) else repr(float(value))])
        (d / "report.txt").write_text(text + "\n")


COMMANDS = {
    "synth": cmd_synth,
    "train-val": cmd_train_val,
    "detect": cmd_detect,
    "relabel": cmd_relabel,
    "train-clf": cmd_train_clf,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def _exit_code(err):
    if isinstance(err, StageError):
        return _exit_code(err.cause)
    if isinstance(err, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(err, FileNotFoundError):
        return EXIT_MISSING
    if isinstance(err, DataFormatError):
        return EXIT_DATA
    if isinstance(err, (UsageError, ValueError, IndexError)):
        return EXIT_USAGE
    return None


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, FileNotFoundError) as err:
        print(f"sgval: error: {err}", file=sys.stderr)
        return _exit_code(err)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except Exception as err:
        code = _exit_code(err)
        if code is None:
            raise
        prefix = f"stage {err.stage}: " if isinstance(err, StageError) else ""
        cause = err.cause if isinstance(err, StageError) else err
        print(f"sgval {args.command}: error: {prefix}{cause}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
