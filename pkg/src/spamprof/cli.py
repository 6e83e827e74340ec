"""Command-line pipelines over the library.

Subcommands: ``extract`` (corpus -> profile CSV), ``train`` (profiles ->
model file + OOB report), ``evaluate`` (model + test rows -> metrics, ROC
CSV and figure), ``importance`` (feature ranking), ``reduce`` (top-k
retrain comparison), ``headerhist`` (header line count distribution), and
``generate`` (synthetic corpora). All randomness flows from ``--seed``;
identical inputs and seed give byte-identical outputs. Exit status is 0 on
success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import figures, metrics
from .corpus import Dataset, chronological_split, generate_synthetic, preset_spec, read_index
from .email_model import Scope
from .forest import (
    Forest,
    ForestParams,
    deserialize,
    oob_error,
    permutation_importance,
    predict_scores_matrix,
    select_top_k,
    serialize,
    train,
)
from .profiles import ProfileKind

DEFAULT_TARGET_FPRS = (0.005, 0.01)
CONFUSION_THRESHOLD = 0.5


class UsageError(Exception):
    """Bad flag combination or out-of-range parameter; exits with status 2."""


@dataclass
class RunConfig:
    """Validated per-invocation options; nothing is written before this
    object is built successfully."""

    command: str
    index: str | None = None
    root: str | None = None
    profiles: str | None = None
    kind: ProfileKind = ProfileKind.LP
    scope: Scope = Scope.FULL
    k: int = 100
    n_train: int | None = None
    params: ForestParams | None = None
    target_fprs: tuple[float, ...] = DEFAULT_TARGET_FPRS
    model: str | None = None
    out: str | None = None
    top: int | None = None
    seed: int = 0
    preset: str | None = None
    n_emails: int = 0

    def require_data_source(self) -> None:
        have_corpus = self.index is not None and self.root is not None
        if self.profiles is not None and have_corpus:
            raise UsageError("pass either --profiles or --index/--root, not both")
        if self.profiles is None and not have_corpus:
            raise UsageError("a data source is required: --profiles or --index with --root")

    def require(self, name: str) -> None:
        if getattr(self, name.replace("-", "_")) is None:
            raise UsageError(f"--{name} is required for '{self.command}'")


def _forest_params(args) -> ForestParams:
    try:
        return ForestParams(
            n_trees=args.trees,
            mtry=args.mtry,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, command: str) -> RunConfig:
    cfg = RunConfig(command=command, seed=getattr(args, "seed", 0))
    for name in ("index", "root", "profiles", "n_train", "model", "out", "top", "preset"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "kind"):
        cfg.kind = ProfileKind(args.kind)
    if hasattr(args, "scope"):
        cfg.scope = Scope(args.scope)
    if hasattr(args, "k"):
        if args.k < 1:
            raise UsageError(f"--k must be positive, got {args.k}")
        cfg.k = args.k
    if hasattr(args, "target_fpr"):
        targets = tuple(args.target_fpr) if args.target_fpr else DEFAULT_TARGET_FPRS
        for t in targets:
            if not 0.0 < t < 1.0:
                raise UsageError(f"--target-fpr must be in (0, 1), got {t}")
        cfg.target_fprs = targets
    if hasattr(args, "trees"):
        cfg.params = _forest_params(args)
    if hasattr(args, "n"):
        cfg.n_emails = args.n
    return cfg


def _load_dataset(cfg: RunConfig) -> Dataset:
    cfg.require_data_source()
    if cfg.profiles is not None:
        return Dataset.from_csv(cfg.profiles)
    index = read_index(cfg.index)
    ds = corpus_mod.load(index, cfg.root, cfg.kind, cfg.scope, cfg.k)
    if ds.skipped:
        print(f"warning: skipped {len(ds.skipped)} unreadable files", file=sys.stderr)
    return ds


def _split_train(ds: Dataset, cfg: RunConfig) -> Dataset:
    """Training rows: the first --n-train in corpus order, or everything."""
    if cfg.n_train is None:
        return ds
    if not 0 < cfg.n_train < len(ds):
        raise UsageError(f"--n-train must be in 1..{len(ds) - 1}, got {cfg.n_train}")
    return chronological_split(ds, cfg.n_train)[0]


def _split_test(ds: Dataset, cfg: RunConfig) -> Dataset:
    if cfg.n_train is None:
        return ds
    if not 0 < cfg.n_train < len(ds):
        raise UsageError(f"--n-train must be in 1..{len(ds) - 1}, got {cfg.n_train}")
    return chronological_split(ds, cfg.n_train)[1]


def _print_class_counts(counts: dict[str, int]) -> None:
    width = max([len("class")] + [len(c) for c in counts])
    print(f"{'class'.ljust(width)}  count")
    for cls in sorted(counts):
        print(f"{cls.ljust(width)}  {counts[cls]}")
    print(f"{'total'.ljust(width)}  {sum(counts.values())}")


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def _feature_name(kind: ProfileKind | None, j: int) -> str:
    if kind is ProfileKind.LP:
        return f"line {j + 1}"
    if kind is ProfileKind.CP:
        return f"byte {j}"
    return f"f{j}"


def _spam_scores(forest: Forest, features) -> np.ndarray:
    pos = forest.classes.index(metrics.POSITIVE_CLASS)
    return predict_scores_matrix(forest, features)[:, pos]


def _load_model(cfg: RunConfig) -> Forest:
    cfg.require("model")
    return deserialize(Path(cfg.model).read_bytes())


# --------------------------------------------------------------------------
# subcommands


def cmd_extract(args) -> int:
    cfg = _config(args, "extract")
    cfg.require("out")
    ds = _load_dataset(cfg)
    ds.to_csv(cfg.out)
    _print_class_counts(ds.class_counts())
    print(f"profiles: {cfg.out} ({len(ds)} rows, {ds.m} features)")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args, "train")
    cfg.require("model")
    ds = _load_dataset(cfg)
    train_ds = _split_train(ds, cfg)
    try:  # flag-level problem, not a data problem: usage error
        cfg.params.resolve_mtry(train_ds.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    forest = train(train_ds.features, train_ds.labels, cfg.params)
    Path(cfg.model).write_bytes(serialize(forest))
    report = oob_error(forest, train_ds.features, train_ds.labels)
    print(f"trained on {len(train_ds)} emails, {forest.m} features, "
          f"{forest.n_trees} trees, classes: {' '.join(forest.classes)}")
    print(f"oob error: {_pct(report.error)} "
          f"(evaluated {report.n_evaluated}, skipped {report.n_skipped})")
    print(f"model: {cfg.model}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args, "evaluate")
    forest = _load_model(cfg)
    ds = _load_dataset(cfg)
    test = _split_test(ds, cfg)
    unknown = sorted(set(test.labels) - set(forest.classes))
    if unknown:
        raise ValueError(f"test labels {unknown} not among model classes {forest.classes}")

    scores = predict_scores_matrix(forest, test.features)
    print(f"test emails: {len(test)}")
    _print_class_counts(test.class_counts())

    if forest.n_classes == 2 and metrics.POSITIVE_CLASS in forest.classes:
        spam_scores = _spam_scores(forest, test.features)
        pos = forest.classes.index(metrics.POSITIVE_CLASS)
        neg_label = forest.classes[1 - pos]
        predicted = [metrics.POSITIVE_CLASS if s >= CONFUSION_THRESHOLD else neg_label
                     for s in spam_scores]
        cm = metrics.confusion(test.labels, predicted, forest.classes)
        print(f"confusion at threshold {CONFUSION_THRESHOLD:.2f}:")
        print(cm.format())
        rates = metrics.fpr_fnr(cm)
        print(f"fpr: {_pct(rates.fpr)}  fnr: {_pct(rates.fnr)}")
        curve = metrics.roc(spam_scores, test.labels)
        print(f"auc: {curve.auc:.6f}")
        for target in cfg.target_fprs:
            op = metrics.fnr_at_fpr(spam_scores, test.labels, target)
            print(f"fnr at fpr <= {_pct(op.target_fpr)}: {_pct(op.fnr)} "
                  f"(achieved fpr {_pct(op.achieved_fpr)}, threshold {op.threshold:g})")
        if cfg.out:
            metrics.write_roc_csv(curve, cfg.out)
            fig = figures.save_roc_figure(curve, figures.sibling_figure_path(cfg.out))
            print(f"roc csv: {cfg.out}")
            print(f"roc figure: {fig}")
    else:
        predicted = [forest.classes[i] for i in np.argmax(scores, axis=1)]
        cm = metrics.confusion(test.labels, predicted, forest.classes)
        print("confusion (argmax):")
        print(cm.format())
        accuracy = float(np.trace(cm.counts)) / cm.total if cm.total else 0.0
        print(f"accuracy: {_pct(accuracy)}")
        if cfg.out:
            with open(cfg.out, "w", encoding="ascii", newline="") as fh:
                fh.write("true,predicted,count\n")
                for i, ti in enumerate(cm.classes):
                    for j, pj in enumerate(cm.classes):
                        fh.write(f"{ti},{pj},{int(cm.counts[i, j])}\n")
            fig = figures.save_confusion_figure(
                cm.counts, cm.classes, figures.sibling_figure_path(cfg.out))
            print(f"confusion csv: {cfg.out}")
            print(f"confusion figure: {fig}")
    return 0


def _importance_for_model(cfg: RunConfig, forest: Forest):
    ds = _load_dataset(cfg)
    train_ds = _split_train(ds, cfg)
    report = permutation_importance(forest, train_ds.features, train_ds.labels, seed=cfg.seed)
    return ds, train_ds, report


def cmd_importance(args) -> int:
    cfg = _config(args, "importance")
    forest = _load_model(cfg)
    if cfg.top is not None and not 1 <= cfg.top <= forest.m:
        raise UsageError(f"--top must be in 1..{forest.m}, got {cfg.top}")
    _, _, report = _importance_for_model(cfg, forest)

    # 256 features can only be the byte histogram; otherwise trust --kind
    kind = ProfileKind.CP if forest.m == 256 else cfg.kind
    top5 = ", ".join(str(int(j) + 1) if kind is ProfileKind.LP else str(int(j))
                     for j in report.ranking[:5])
    noun = "lines" if kind is ProfileKind.LP else "bytes"
    print(f"top 5 {noun}: ({top5})")
    print("rank feature importance")
    for rank, j in enumerate(report.ranking, start=1):
        print(f"{rank:4d} {_feature_name(kind, int(j)):>9s} {report.importances[j]:+.6f}")
    if cfg.out:
        with open(cfg.out, "w", encoding="ascii", newline="") as fh:
            fh.write("rank,feature,importance\n")
            for rank, j in enumerate(report.ranking, start=1):
                fh.write(f"{rank},{int(j)},{float(report.importances[j])!r}\n")
        names = [_feature_name(kind, j) for j in range(forest.m)]
        fig = figures.save_importance_figure(
            report, figures.sibling_figure_path(cfg.out), names, top=cfg.top or 20)
        print(f"importance csv: {cfg.out}")
        print(f"importance figure: {fig}")
    return 0


def cmd_reduce(args) -> int:
    cfg = _config(args, "reduce")
    forest = _load_model(cfg)
    k = cfg.top if cfg.top is not None else 20
    if not 1 <= k <= forest.m:
        raise UsageError(f"--top must be in 1..{forest.m}, got {k}")
    ds, train_ds, report = _importance_for_model(cfg, forest)
    test = _split_test(ds, cfg)

    selected = select_top_k(report, k)
    print(f"selected top {k} of {forest.m} features (ranking order): "
          + ", ".join(str(int(j)) for j in selected))
    # slice in ascending index order so k == m reproduces the full model
    columns = np.sort(selected)
    reduced = train(train_ds.features[:, columns], train_ds.labels, forest.params)

    full_scores = _spam_scores(forest, test.features)
    reduced_scores = _spam_scores(reduced, test.features[:, columns])
    rows = []
    for target in cfg.target_fprs:
        op_full = metrics.fnr_at_fpr(full_scores, test.labels, target)
        op_red = metrics.fnr_at_fpr(reduced_scores, test.labels, target)
        rows.append({
            "target_fpr": target,
            "fnr_full": op_full.fnr,
            "fnr_reduced": op_red.fnr,
            "achieved_fpr_full": op_full.achieved_fpr,
            "achieved_fpr_reduced": op_red.achieved_fpr,
        })
        print(f"fnr at fpr <= {_pct(target)}: all {_pct(op_full.fnr)}  "
              f"top-{k} {_pct(op_red.fnr)}")
    if cfg.out:
        with open(cfg.out, "w", encoding="ascii", newline="") as fh:
            fh.write("target_fpr,fnr_full,fnr_reduced,achieved_fpr_full,achieved_fpr_reduced\n")
            for row in rows:
                fh.write(",".join(repr(float(row[c])) for c in (
                    "target_fpr", "fnr_full", "fnr_reduced",
                    "achieved_fpr_full", "achieved_fpr_reduced")) + "\n")
        fig = figures.save_reduction_figure(rows, figures.sibling_figure_path(cfg.out))
        print(f"reduction csv: {cfg.out}")
        print(f"reduction figure: {fig}")
    return 0


def cmd_headerhist(args) -> int:
    cfg = _config(args, "headerhist")
    cfg.require("index")
    cfg.require("root")
    cfg.require("out")
    index = read_index(cfg.index)
    hists = metrics.header_line_histograms(corpus_mod.iter_emails(index, cfg.root))
    metrics.write_header_histogram_csv(hists, cfg.out)
    fig = figures.save_header_histogram_figure(hists, figures.sibling_figure_path(cfg.out))
    for cls in sorted(hists):
        n = sum(hists[cls].values())
        lines = sorted(hists[cls])
        span = f"{lines[0]}..{lines[-1]}" if lines else "-"
        print(f"{cls}: {n} emails, header lines {span}")
    print(f"histogram csv: {cfg.out}")
    print(f"histogram figure: {fig}")
    return 0


def cmd_generate(args) -> int:
    cfg = _config(args, "generate")
    cfg.require("out")
    cfg.require("preset")
    if cfg.n_emails < 1:
        raise UsageError(f"--n must be positive, got {cfg.n_emails}")
    try:
        spec = preset_spec(cfg.preset, seed=cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    index = generate_synthetic(spec, cfg.n_emails, cfg.out)
    _print_class_counts(index.class_counts())
    print(f"corpus: {cfg.out} (index: {Path(cfg.out) / corpus_mod.INDEX_FILENAME})")
    return 0


# --------------------------------------------------------------------------
# parser


def _add_profile_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=["cp", "lp"], default="lp",
                   help="profile kind: byte histogram (cp) or line lengths (lp)")
    p.add_argument("--scope", choices=["full", "header", "body"], default="full",
                   help="profile the whole email, header only, or body only")
    p.add_argument("--k", type=int, default=100,
                   help="line profile dimension (max lines kept)")


def _add_data_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--index", help="corpus index file ('label path' per line)")
    p.add_argument("--root", help="directory index paths are resolved under")
    p.add_argument("--profiles", help="profile CSV produced by 'extract'")
    _add_profile_opts(p)


def _add_forest_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=500, help="number of trees")
    p.add_argument("--mtry", type=int, default=None,
                   help="features tried per split (default: floor(sqrt(m)))")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spamprof",
        description="Spam filtering and email categorization from byte-level profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="profile a corpus into a CSV")
    p.add_argument("--index", required=True)
    p.add_argument("--root", required=True)
    _add_profile_opts(p)
    p.add_argument("--out", required=True, help="output profile CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a forest and write the model file")
    _add_data_opts(p)
    p.add_argument("--n-train", type=int, default=None,
                   help="train on the first N rows (default: all)")
    _add_forest_opts(p)
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confusion, AUC, fnr at target fpr, ROC csv+figure")
    _add_data_opts(p)
    p.add_argument("--n-train", type=int, default=None,
                   help="skip the first N rows (the training split)")
    p.add_argument("--model", required=True)
    p.add_argument("--target-fpr", type=float, action="append", default=None,
                   help="operating point target, repeatable (default 0.005 and 0.01)")
    p.add_argument("--out", help="ROC csv path (figure lands next to it)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation importance ranking")
    _add_data_opts(p)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0, help="permutation seed")
    p.add_argument("--top", type=int, default=None, help="features shown in the figure")
    p.add_argument("--out", help="ranking csv path (figure lands next to it)")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("reduce", help="retrain on top-k features and compare")
    _add_data_opts(p)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0, help="permutation seed")
    p.add_argument("--top", type=int, default=20, help="number of features kept")
    p.add_argument("--target-fpr", type=float, action="append", default=None)
    p.add_argument("--out", help="comparison csv path (figure lands next to it)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("headerhist", help="per-class header line count distribution")
    p.add_argument("--index", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True, help="histogram csv path")
    p.set_defaults(func=cmd_headerhist)

    p = sub.add_parser("generate", help="write a synthetic labeled corpus")
    p.add_argument("--preset", required=True, choices=list(corpus_mod.PRESETS))
    p.add_argument("--n", type=int, required=True, help="number of emails")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message
        if isinstance(exc.code, int):
            return exc.code
        return 0 if exc.code is None else 2
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report and exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
