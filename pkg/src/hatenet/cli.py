"""Command-line entry point.

Subcommands: train, weak-train, tune, predict, evaluate, gradcheck,
preprocess.  Runs are reproducible: the fully resolved configuration is
echoed into the output directory before any training starts, and a rerun
with the same configuration, seed and single thread writes byte-identical
checkpoints and reports.

Exit codes: 0 success; 2 usage errors; 3 data/configuration errors;
4 numeric failures (non-finite losses, failed gradient checks).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import gradcheck as gradcheck_mod
from .corpus import (
    LabeledCorpus,
    SplitSpec,
    combine,
    load_hon,
    load_labeled_lines,
    load_olid,
    load_unlabeled,
    split,
)
from .embeddings import load_table, synthetic_table
from .ensemble import (
    SUPERVISED,
    WEAK,
    TrainConfig,
    evaluate,
    load_bundle,
    predict,
    save_bundle,
    train_ensemble,
    tune,
)
from .errors import HatenetError, NonFiniteValue, NumericError
from .metrics import format_report
from .model import TopologyConfig
from .text import RawPost, preprocess
from .weaksup import ClassWeights, imbalance_weights, load_lexicon, weak_label_stats

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _add_embedding_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--embeddings",
        default="synthetic:0:64",
        help="word-vector source: a text file path, or synthetic:<seed>:<dim>",
    )
    p.add_argument("--emb-dim", type=int, default=None,
                   help="vector dimension (required for file-backed tables)")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hon", help="comma-separated corpus with numeric class codes")
    p.add_argument("--olid", help="tab-separated corpus with hierarchical labels")
    p.add_argument("--labeled-lines", help="code<TAB>text corpus, one post per line")
    p.add_argument("--split-seed", type=int, default=0)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", required=True, help="output directory for the run")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--ensemble-size", "-k", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--tune-lr", type=float, default=None)
    p.add_argument("--tune-epochs", type=int, default=None)
    p.add_argument("--variant", choices=["cnn_rnn_fc", "cnn_fc"], default=None)
    p.add_argument("--rnn", choices=["gru", "lstm"], default=None)
    p.add_argument("--conv-axis", choices=["sequence", "embedding"], default=None)
    p.add_argument("--seq-len", type=int, default=None)
    p.add_argument("--trials", type=int, default=1,
                   help="rerun T times with seeds seed+1000*t and report mean metrics")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers across ensemble members")


def _add_lexicon_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lex-hate", help="hate lexicon, one term per line")
    p.add_argument("--lex-offensive", help="offensive lexicon, one term per line")
    p.add_argument("--lex-positive", help="positive lexicon, one term per line")
    p.add_argument("--bounds-k", type=float, default=None,
                   help="scale on lexicon evidence ratios (default 1.0)")
    p.add_argument("--class-weights", default=None,
                   help='"uniform", "imbalance", or three comma-separated reals')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatenet",
        description="Tunable CNN-RNN ensembles for Hate/Offensive/Neither "
                    "short-text classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="supervised ensemble training")
    _add_train_args(p)
    _add_data_args(p)
    _add_embedding_args(p)

    p = sub.add_parser("weak-train", help="weak-supervised training on unlabeled posts")
    _add_train_args(p)
    _add_embedding_args(p)
    _add_lexicon_args(p)
    p.add_argument("--unlabeled", required=True, help="text file, one post per line")
    p.add_argument("--test", help="optional labeled file (code<TAB>text) to evaluate on")
    p.add_argument("--split-seed", type=int, default=0)

    p = sub.add_parser("tune", help="freeze features, retrain the classifier head")
    _add_train_args(p)
    _add_embedding_args(p)
    p.add_argument("--bundle", required=True, help="directory of a saved ensemble")
    p.add_argument("--target", required=True,
                   help="balanced labeled tuning set (code<TAB>text)")
    p.add_argument("--test", help="labeled file for the before/after reports "
                                  "(defaults to the target set)")

    p = sub.add_parser("predict", help="label posts with a saved ensemble")
    _add_embedding_args(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True, help="text file, one post per line")
    p.add_argument("--output", help="write JSON lines here instead of stdout")

    p = sub.add_parser("evaluate", help="metrics of a saved ensemble on labeled posts")
    _add_embedding_args(p)
    _add_data_args(p)
    p.add_argument("--bundle", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--layer", help="run one registered check by name")
    p.add_argument("--all", action="store_true", help="run every registered check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)

    p = sub.add_parser("preprocess", help="dump normalized token sequences")
    p.add_argument("--input", required=True, help="text file, one post per line")

    return parser


def _load_config_file(path: "str | None") -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _resolve_topology(args, file_cfg: dict) -> TopologyConfig:
    merged = dict(file_cfg.get("topology", {}))
    for flag, key in (("variant", "variant"), ("rnn", "rnn_kind"),
                      ("conv_axis", "conv_axis"), ("seq_len", "seq_len")):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    try:
        return TopologyConfig(**{**TopologyConfig().__dict__, **merged})
    except TypeError as exc:
        raise HatenetError(f"bad topology config: {exc}") from exc


def _resolve_train(args, file_cfg: dict, loss_mode: str) -> TrainConfig:
    merged = dict(file_cfg.get("train", {}))
    for flag, key in (("seed", "seed"), ("epochs", "epochs"),
                      ("ensemble_size", "ensemble_size"),
                      ("batch_size", "batch_size"), ("lr", "base_lr"),
                      ("tune_lr", "tune_lr"), ("tune_epochs", "tune_epochs"),
                      ("bounds_k", "bounds_k")):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    merged["loss_mode"] = loss_mode
    try:
        cfg = TrainConfig(**{**TrainConfig().__dict__, **merged, "class_weights": None})
    except TypeError as exc:
        raise HatenetError(f"bad training config: {exc}") from exc
    cfg.validate()
    return cfg


def _parse_class_weights(spec: "str | None", stats) -> "ClassWeights | None":
    if spec is None or spec == "uniform":
        return None
    if spec == "imbalance":
        return imbalance_weights(stats)
    parts = [float(x) for x in spec.split(",")]
    return ClassWeights(np.array(parts))


def _make_table(args):
    spec = args.embeddings
    if spec.startswith("synthetic:"):
        _, seed, dim = spec.split(":")
        return synthetic_table(int(seed), int(dim))
    if args.emb_dim is None:
        raise HatenetError("--emb-dim is required for file-backed embeddings")
    return load_table(spec, args.emb_dim)


def _load_labeled(args) -> LabeledCorpus:
    corpora = []
    if getattr(args, "hon", None):
        corpora.append(load_hon(args.hon))
    if getattr(args, "olid", None):
        corpora.append(load_olid(args.olid))
    if getattr(args, "labeled_lines", None):
        corpora.append(load_labeled_lines(args.labeled_lines))
    if not corpora:
        raise HatenetError(
            "no dataset given: pass --hon, --olid and/or --labeled-lines"
        )
    return corpora[0] if len(corpora) == 1 else combine(corpora)


def _echo_config(out: Path, payload: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_report(out: Path, rep: dict, name: str = "report") -> None:
    (out / f"{name}.json").write_text(
        json.dumps(rep, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_telemetry(out: Path, traces) -> None:
    lines = []
    for member, trace in enumerate(traces):
        for rec in trace.epochs:
            for split_name, loss in (("train", rec.train_loss),
                                     ("valid", rec.valid_loss)):
                entry = {
                    "member": member,
                    "epoch": rec.epoch,
                    "split": split_name,
                    "loss": loss,
                    "hate_recall": rec.valid_hate_recall
                    if split_name == "valid" else None,
                }
                lines.append(json.dumps(entry, sort_keys=True))
        lines.append(json.dumps(
            {"member": member, "best_epoch": trace.best_epoch}, sort_keys=True
        ))
    (out / "telemetry.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _mean_reports(reports: list[dict]) -> dict:
    keys = [k for k, v in reports[0].items() if isinstance(v, (int, float))]
    return {k: float(np.mean([r[k] for r in reports])) for k in keys}


def cmd_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    topo = _resolve_topology(args, file_cfg)
    table = _make_table(args)
    topo.emb_dim = table.dim
    topo.validate()
    cfg = _resolve_train(args, file_cfg, SUPERVISED)
    corpus = _load_labeled(args)
    spec = SplitSpec(seed=args.split_seed)
    train_split, valid_split, test_split = split(corpus, spec)
    if len(test_split) == 0:
        print("warning: corpus too small for a non-empty 10% test split; "
              "the test report will be all zeros", file=sys.stderr)
    out = Path(args.out)
    _echo_config(out, {
        "command": "train",
        "topology": topo.to_dict(),
        "train": {k: v for k, v in asdict(cfg).items() if k != "class_weights"},
        "data": {"hon": args.hon, "olid": args.olid,
                 "labeled_lines": args.labeled_lines},
        "embeddings": table.name,
        "split_seed": args.split_seed,
        "trials": args.trials,
    })
    reports = []
    for trial in range(args.trials):
        trial_cfg = TrainConfig(**{**asdict(cfg), "seed": cfg.seed + 1000 * trial,
                                   "class_weights": None})
        bundle, traces = train_ensemble(
            trial_cfg, topo, table, train_split, valid_split, jobs=args.jobs
        )
        trial_dir = out if args.trials == 1 else out / f"trial_{trial}"
        trial_dir.mkdir(parents=True, exist_ok=True)
        save_bundle(bundle, trial_dir)
        _write_telemetry(trial_dir, traces)
        rep = evaluate(bundle, test_split, table)
        _write_report(trial_dir, rep)
        reports.append(rep)
        print(f"trial {trial} (seed {trial_cfg.seed}) test metrics:")
        print(format_report(rep))
    if args.trials > 1:
        mean_rep = _mean_reports(reports)
        _write_report(out, mean_rep, name="report_mean")
        print(f"mean over {args.trials} trials:")
        print(format_report({**reports[0], **mean_rep}))
    return EXIT_OK


def cmd_weak_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    topo = _resolve_topology(args, file_cfg)
    table = _make_table(args)
    topo.emb_dim = table.dim
    topo.validate()
    cfg = _resolve_train(args, file_cfg, WEAK)
    if not (args.lex_hate and args.lex_offensive and args.lex_positive):
        print("weak training needs --lex-hate, --lex-offensive and --lex-positive",
              file=sys.stderr)
        return EXIT_USAGE
    lexicon = load_lexicon(args.lex_hate, args.lex_offensive, args.lex_positive)
    pool = load_unlabeled(args.unlabeled)
    if not pool:
        raise HatenetError(f"no posts in {args.unlabeled}")
    stats = weak_label_stats(pool, lexicon, cfg.bounds_k)
    if not stats.any_evidence():
        print("every post has vacuous bounds: the lexicons match no tokens, "
              "so the weak loss is identically 0; aborting", file=sys.stderr)
        return EXIT_DATA
    cfg.class_weights = _parse_class_weights(args.class_weights, stats)
    rng = np.random.default_rng(args.split_seed)
    order = rng.permutation(len(pool))
    n_valid = max(1, len(pool) // 10)
    valid_posts = [pool[i] for i in order[:n_valid]]
    train_posts = [pool[i] for i in order[n_valid:]] or valid_posts
    out = Path(args.out)
    _echo_config(out, {
        "command": "weak-train",
        "topology": topo.to_dict(),
        "train": {k: v for k, v in asdict(cfg).items() if k != "class_weights"},
        "class_weights": None if cfg.class_weights is None
        else list(cfg.class_weights.w),
        "data": {"unlabeled": args.unlabeled, "test": args.test},
        "lexicons": {"hate": args.lex_hate, "offensive": args.lex_offensive,
                     "positive": args.lex_positive},
        "embeddings": table.name,
        "split_seed": args.split_seed,
    })
    bundle, traces = train_ensemble(
        cfg, topo, table, train_posts, valid_posts, lexicon=lexicon, jobs=args.jobs
    )
    save_bundle(bundle, out)
    _write_telemetry(out, traces)
    print(f"trained {bundle.size()} member(s) on {len(train_posts)} unlabeled posts")
    if args.test:
        rep = evaluate(bundle, load_labeled_lines(args.test), table)
        _write_report(out, rep)
        print(format_report(rep))
    return EXIT_OK


def cmd_tune(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve_train(args, file_cfg, SUPERVISED)
    bundle = load_bundle(args.bundle)
    table = _make_table(args)
    target = load_labeled_lines(args.target)
    test = load_labeled_lines(args.test) if args.test else target
    out = Path(args.out)
    _echo_config(out, {
        "command": "tune",
        "bundle": args.bundle,
        "target": args.target,
        "test": args.test,
        "train": {k: v for k, v in asdict(cfg).items() if k != "class_weights"},
        "embeddings": table.name,
    })
    before = evaluate(bundle, test, table)
    tuned = tune(bundle, target, cfg, table)
    after = evaluate(tuned, test, table)
    save_bundle(tuned, out)
    _write_report(out, {"pre_tuning": before, "post_tuning": after})
    print("pre-tuning:")
    print(format_report(before))
    print("post-tuning:")
    print(format_report(after))
    return EXIT_OK


def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    table = _make_table(args)
    posts = load_unlabeled(args.input)
    sink = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for post in posts:
            result = predict(bundle, post, table)
            record = {
                "source_id": post.source_id,
                "label": ["H", "O", "N"][result.label],
                "votes": [["H", "O", "N"][v] for v in result.votes],
                "mean_probs": [round(p, 6) for p in result.mean_probs.tolist()],
            }
            print(json.dumps(record, sort_keys=True), file=sink)
    finally:
        if args.output:
            sink.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    table = _make_table(args)
    corpus = _load_labeled(args)
    rep = evaluate(bundle, corpus, table)
    print(format_report(rep))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if not args.layer and not args.all:
        print("pass --layer <name> or --all", file=sys.stderr)
        return EXIT_USAGE
    if args.layer:
        if args.layer not in gradcheck_mod.REGISTRY:
            known = ", ".join(sorted(gradcheck_mod.REGISTRY))
            print(f"unknown layer {args.layer!r}; registered: {known}", file=sys.stderr)
            return EXIT_USAGE
        reports = [gradcheck_mod.check(args.layer, seed=args.seed, trials=args.trials)]
    else:
        reports = gradcheck_mod.run_all(seed=args.seed, trials=args.trials)
    failed = False
    for rep in reports:
        print(rep)
        failed = failed or not rep.passed
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_preprocess(args) -> int:
    for post in load_unlabeled(args.input):
        seq = preprocess(post)
        print(json.dumps(
            {"source_id": post.source_id, "tokens": seq.tokens}, sort_keys=True
        ))
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "weak-train": cmd_weak_train,
    "tune": cmd_tune,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "gradcheck": cmd_gradcheck,
    "preprocess": cmd_preprocess,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NumericError, NonFiniteValue) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HatenetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
