"""Command-line interface: ``mcpart <subcommand> ...``.

Exit codes: 0 success, 1 usage or incompatible method, 2 data, format or
control-file error, 3 numeric or construction failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import coding, control
from .binary import TrainingConfig
from .errors import (
    CodingError,
    ConstructionError,
    ControlSyntaxError,
    DataError,
    MethodError,
    UndefinedDecisionError,
)
from .experiment import run_trials, score
from .libsvm import load_libsvm
from .metrics import format_report
from .model import METHODS, BatchPrediction, canonical_method, load_model_dir, save_model_dir, train_model

GENERATORS = ("1v1", "1vr", "exhaustive", "orthogonal", "adjacent", "tree-balanced", "random")
METHOD_CHOICES = METHODS + ("1v1-inverse",)


def generate_spec(kind: str, n_c: int, n_p: int | None = None, seed=None, prefix: str = "model") -> control.ControlSpec:
    if kind == "tree-balanced":
        return control.from_tree(coding.balanced_tree(range(n_c)), prefix)
    if kind == "1v1":
        matrix = coding.one_vs_one(n_c)
    elif kind == "1vr":
        matrix = coding.one_vs_rest(n_c)
    elif kind == "exhaustive":
        matrix = coding.exhaustive(n_c)
    elif kind == "adjacent":
        matrix = coding.adjacent(n_c)
    elif kind == "orthogonal":
        # default: the smallest power of two that can hold n_c orthogonal columns
        matrix = coding.orthogonal(n_c, n_p or 1 << (n_c - 1).bit_length(), seed)
    elif kind == "random":
        matrix = coding.random_code(n_c, n_p or min(2 * n_c, 2 ** (n_c - 1) - 1), seed=seed)
    else:
        raise MethodError(f"unknown generator {kind!r}")
    return control.from_matrix(matrix, prefix=prefix)


def _write(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_spec(path) -> control.ControlSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return control.parse(text)


def _config(args) -> TrainingConfig:
    return TrainingConfig(learning_rate=args.learning_rate, epochs=args.epochs, l2=args.l2, seed=args.seed)


def format_predictions(pred: BatchPrediction, header: bool = True) -> str:
    """One line per sample: class then probabilities, 6 significant digits."""
    lines = []
    if header:
        lines.append(f"# labels {' '.join(map(str, pred.class_labels))} method {pred.method}")
    for s, label in enumerate(pred.labels):
        if pred.probabilities is not None:
            values = " ".join(f"{v:.6g}" for v in pred.probabilities[s])
            lines.append(f"{label} {values}")
        elif pred.winner_prob is not None:
            lines.append(f"{label} {pred.winner_prob[s]:.6g}")
        else:
            lines.append(str(label))
    return "\n".join(lines) + "\n"


def read_predictions(path) -> BatchPrediction:
    """Inverse of :func:`format_predictions`; the header line is optional."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    class_labels = None
    method = ""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if words[:1] == ["labels"]:
                tail = words[1:]
                cut = tail.index("method") if "method" in tail else len(tail)
                class_labels = tuple(int(x) for x in tail[:cut])
                method = " ".join(tail[cut + 1 :])
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric field") from None
    if not rows:
        raise DataError(f"{path}: no predictions")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise DataError(f"{path}: inconsistent number of fields per line")
    width = width.pop()
    labels = np.array([r[0] for r in rows], dtype=np.int64)
    values = np.array([r[1:] for r in rows])
    if class_labels is None:
        class_labels = tuple(range(width - 1)) if width > 2 else tuple(sorted(set(labels.tolist())))
    if width == 1:
        return BatchPrediction(labels, class_labels, method=method)
    if width == 2:
        return BatchPrediction(labels, class_labels, winner_prob=values[:, 0], method=method)
    if width - 1 != len(class_labels):
        raise DataError(f"{path}: {width - 1} probabilities for {len(class_labels)} classes")
    winner = values[np.arange(len(rows)), [class_labels.index(int(v)) for v in labels]]
    return BatchPrediction(labels, class_labels, values, winner, method)


def cmd_gen_control(args) -> int:
    spec = generate_spec(args.kind, args.n_classes, args.n_p, args.seed, args.prefix)
    _write(control.format_spec(spec), args.out)
    return 0


def cmd_tree_build(args) -> int:
    from . import empirical

    data = load_libsvm(args.data)
    d = empirical.distance_matrix(data, args.metric, args.cap, args.seed)
    tree = empirical.build_dendrogram(d, data, args.linkage, args.cap, args.seed)
    _write(control.format_spec(control.from_tree(tree, args.prefix)), args.out)
    return 0


def cmd_train(args) -> int:
    spec = _read_spec(args.control)
    data = load_libsvm(args.data)
    model = train_model(spec, data, _config(args), calibrate=args.calibrate)
    save_model_dir(model, args.model)
    return 0


def cmd_predict(args) -> int:
    model = load_model_dir(args.model)
    model.check_method(args.method)
    data = load_libsvm(args.data, n_features=model.n_features)
    pred = model.predict(data.X, args.method)
    _write(format_predictions(pred, header=not args.no_header), args.out)
    return 0


def cmd_eval(args) -> int:
    pred = read_predictions(args.predictions)
    data = load_libsvm(args.data)
    if data.n_samples != pred.labels.size:
        raise DataError(f"{pred.labels.size} predictions for {data.n_samples} samples")
    _write(format_report(score(pred, data.y), args.format), args.out)
    return 0


def cmd_trials(args) -> int:
    data = load_libsvm(args.data)
    methods = [canonical_method(m) for m in args.method]
    if args.control:
        spec = _read_spec(args.control)
    else:
        spec = generate_spec(args.kind, data.n_classes, args.n_p, args.seed)
    results = run_trials(spec, data, methods, args.holdout, args.trials, args.seed, _config(args))
    out = []
    for t, result in enumerate(results):
        for method, metrics in result.items():
            out.append(format_report({"trial": t, "method": method, **metrics}, "kv").replace("\n", " ").strip())
    _write("\n".join(out) + "\n", args.out)
    return 0


def _add_training(p):
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--l2", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpart", description="Multi-class classification from binary partitions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-control", help="write a control file for a standard coding matrix")
    p.add_argument("kind", choices=GENERATORS)
    p.add_argument("n_classes", type=int)
    p.add_argument("--n-p", type=int, help="number of partitions (orthogonal, random)")
    p.add_argument("--seed", type=int)
    p.add_argument("--prefix", default="model")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen_control)

    p = sub.add_parser("tree-build", help="build a control file from a class dendrogram")
    p.add_argument("data")
    p.add_argument("--metric", choices=("centroid", "hausdorff"), default="hausdorff")
    p.add_argument("--linkage", choices=("single", "complete", "pooled-hausdorff"), default="pooled-hausdorff")
    p.add_argument("--cap", type=int, default=500, help="samples per class used for distances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="model")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_tree_build)

    p = sub.add_parser("train", help="train the binary classifiers named in a control file")
    p.add_argument("control")
    p.add_argument("data")
    p.add_argument("model", help="output model directory")
    p.add_argument("--calibrate", type=float, default=0.0, help="held-out fraction for logistic recalibration")
    p.add_argument("--seed", type=int, default=0)
    _add_training(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a dataset with a trained model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--method", choices=METHOD_CHOICES, default="constrained")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a predictions file against labelled data")
    p.add_argument("predictions")
    p.add_argument("data")
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trials", help="repeated stratified holdout experiments")
    p.add_argument("data")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--control")
    src.add_argument("--kind", choices=GENERATORS)
    p.add_argument("--n-p", type=int)
    p.add_argument("--method", action="append", choices=METHOD_CHOICES, help="repeatable")
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    _add_training(p)
    p.set_defaults(func=cmd_trials, method=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if getattr(args, "method", None) is None and args.command == "trials":
        args.method = ["constrained"]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except MethodError as exc:
        print(f"mcpart: {exc}", file=sys.stderr)
        return 1
    except (DataError, ControlSyntaxError, OSError) as exc:
        print(f"mcpart: {exc}", file=sys.stderr)
        return 2
    except (ConstructionError, UndefinedDecisionError, np.linalg.LinAlgError) as exc:
        print(f"mcpart: {exc}", file=sys.stderr)
        return 3
    except CodingError as exc:
        print(f"mcpart: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
