"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 resource / oracle cap, 4 task
precondition (including malformed input data).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    FeatureError,
    IsolatedNodeError,
    MusaeError,
    OracleCapError,
    ParseError,
    TaskPreconditionError,
)
from .graph import (
    DEFAULT_ORACLE_CAP,
    FeatureStore,
    Graph,
    align_feature_universe,
    dense_view,
    ego_augment,
    identity_features,
    load_edge_list,
    load_features,
)
from .pipeline import embed
from .sgns import (
    AE,
    MUSAE,
    TrainConfig,
    export_embeddings,
    load_embedding_set,
    read_embedding_csv,
    sidecar,
)
from .walker import WalkRegime

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_TASK = 0, 2, 3, 4

logger = logging.getLogger("musae")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _open_input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _load_graph(path: str, allow_isolated: bool = False) -> Graph:
    with _open_input(path).open(encoding="utf-8") as fh:
        return load_edge_list(fh, allow_isolated=allow_isolated)


def _load_features(path: str | None, graph: Graph) -> FeatureStore:
    if path is None:
        return identity_features(graph)
    with _open_input(path).open(encoding="utf-8") as fh:
        return load_features(fh, graph)


def _config_from(args) -> TrainConfig:
    try:
        return TrainConfig(
            dim=args.dim, walk_length=args.walk_length, walks_per_node=args.walks_per_node,
            epochs=args.epochs, window=args.window, negatives=args.negatives,
            lr_max=args.lr_max, lr_min=args.lr_min, mode=args.mode, ego=args.ego,
            neg_exponent=args.neg_exponent, seed=args.seed, threads=args.threads,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _regime(args) -> WalkRegime:
    if args.starts is not None:
        return WalkRegime.sampled(args.starts)
    return WalkRegime.per_node(args.walks_per_node)


def _write_manifest(out: Path, args, argv, config: dict | None, inputs: list[str],
                    outputs: list[Path], started: float) -> None:
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "cwd": str(Path.cwd()),
        "config": config,
        "seed": args.seed,
        "inputs": {p: _digest(Path(p)) for p in inputs if p},
        "version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        "outputs": [str(p) for p in outputs],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_targets(path: str) -> dict[str, str]:
    with _open_input(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise TaskPreconditionError(f"{path}: expected a header 'id,target'")
        return {row[0]: row[1] for row in reader if row}


def _write_rows(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), ".6f")


# ---------------------------------------------------------------- commands

def cmd_embed(args, argv) -> int:
    started = time.perf_counter()
    config = _config_from(args)
    graph = _load_graph(args.edges, args.allow_isolated)
    features = _load_features(args.features, graph)
    run = embed(graph, features, config, regime=_regime(args))
    out = _out_dir(args)
    node_path, feat_path, side_path = out / "nodes.csv", out / "features.csv", out / "embedding.json"
    with node_path.open("w", newline="") as nf, feat_path.open("w", newline="") as ff:
        export_embeddings(run.embeddings, graph.node_ids, run.features.feature_ids, nf, ff)
    meta = sidecar(run.embeddings, config, graph.node_ids, run.features.feature_ids)
    side_path.write_text(json.dumps(meta, indent=2) + "\n")
    outputs = [node_path, feat_path, side_path]
    if args.dump_walks:
        with (out / "walks.txt").open("w") as fh:
            run.walks.dump(fh)
        outputs.append(out / "walks.txt")
    if args.dump_corpus:
        for r in range(run.corpus.num_scales):
            scale = r + 1 if config.mode == MUSAE else None
            name = out / (f"corpus_r{r + 1}.txt" if scale else "corpus.txt")
            with name.open("w") as fh:
                run.corpus.dump(fh, scale)
            outputs.append(name)
    _write_manifest(out, args, argv, config.to_dict(), [args.edges, args.features], outputs, started)
    return EXIT_OK


def _load_embeddings_dir(path: str):
    d = Path(path)
    if not (d / "nodes.csv").is_file() or not (d / "features.csv").is_file():
        raise UsageError(f"{path} must contain nodes.csv and features.csv from 'musae embed'")
    side = d / "embedding.json"
    with (d / "nodes.csv").open() as nf, (d / "features.csv").open() as ff:
        if side.is_file():
            with side.open() as sf:
                return load_embedding_set(nf, ff, sf)
        return load_embedding_set(nf, ff)


def cmd_oracle(args, argv) -> int:
    from .pmi import ae_target, factorization_fit, musae_target

    started = time.perf_counter()
    if args.pooled == bool(args.scale):
        raise UsageError("give --scale R (repeatable) or --pooled")
    graph = _load_graph(args.edges)
    features = _load_features(args.features, graph)
    if args.ego:
        features = ego_augment(features, graph)
    view = dense_view(graph, features, cap=args.cap)
    targets = []
    if args.pooled:
        targets.append(("target_pooled.csv", ae_target(view, args.window, args.negatives), None))
    else:
        for r in args.scale:
            targets.append((f"target_r{r}.csv", musae_target(view, r, args.negatives), r))

    out = _out_dir(args)
    outputs = []
    for name, target, _ in targets:
        with (out / name).open("w") as fh:
            target.to_csv(fh, graph.node_ids, features.feature_ids)
        outputs.append(out / name)

    if args.embeddings:
        emb, node_ids, feature_ids = _load_embeddings_dir(args.embeddings)
        if list(node_ids) != list(graph.node_ids) or list(feature_ids) != list(features.feature_ids):
            raise TaskPreconditionError("embedding ids do not match the graph / feature ids")
        rows = []
        for name, target, r in targets:
            scale = r if (r is not None and len(emb.scale_blocks) > 1) else None
            fit = factorization_fit(emb, target, scale)
            rows.append([name, r if r is not None else "pooled", _fmt(fit["pearson"]),
                         _fmt(fit["masked_rmse"]), fit["entries"]])
        _write_rows(out / "fit.csv", ["target", "scale", "pearson", "masked_rmse", "entries"], rows)
        outputs.append(out / "fit.csv")
    _write_manifest(out, args, argv, None, [args.edges, args.features], outputs, started)
    return EXIT_OK


def _joined(emb_path: str, targets_path: str):
    with _open_input(emb_path).open() as fh:
        ids, X = read_embedding_csv(fh)
    targets = _read_targets(targets_path)
    rows = [i for i, name in enumerate(ids) if name in targets]
    if not rows:
        raise TaskPreconditionError("no embedding id appears in the target file")
    return X[rows], [targets[ids[i]] for i in rows]


def cmd_eval(args, argv) -> int:
    from .evaluation.classification import classification_scores, kshot_eval, mean_stderr
    from .evaluation.regression import regression_scores

    started = time.perf_counter()
    X, raw = _joined(args.embeddings, args.targets)
    seeds = [args.seed + i for i in range(args.repeats)]
    if args.task == "regress":
        try:
            y = np.asarray([float(v) for v in raw])
        except ValueError as exc:
            raise TaskPreconditionError(f"regression targets must be numeric: {exc}") from exc
        scores = regression_scores(X, y, seeds, args.lam, args.gamma, args.train_fraction)
        metric = "r2"
    elif args.task == "classify":
        scores = classification_scores(X, np.asarray(raw), seeds, args.lam, args.train_fraction)
        metric = "micro_f1"
    else:
        if args.k is None:
            raise UsageError("--task kshot needs --k")
        scores = kshot_eval(X, np.asarray(raw), args.k, seeds, args.lam)["scores"]
        metric = f"micro_f1_k{args.k}"
    out = _out_dir(args)
    dataset = args.dataset or Path(args.targets).stem
    _write_rows(out / "results.csv", ["task", "dataset", "seed", "metric", "value"],
                [[args.task, dataset, s, metric, _fmt(v)] for s, v in zip(seeds, scores)])
    mean, se = mean_stderr(scores)
    _write_rows(out / "summary.csv", ["task", "dataset", "metric", "mean", "stderr", "runs"],
                [[args.task, dataset, metric, _fmt(mean), _fmt(se), len(scores)]])
    _write_manifest(out, args, argv, None, [args.embeddings, args.targets],
                    [out / "results.csv", out / "summary.csv"], started)
    return EXIT_OK


def cmd_linkpred(args, argv) -> int:
    from .evaluation.linkpred import OPERATORS, linkpred_eval

    started = time.perf_counter()
    config = _config_from(args)
    graph = _load_graph(args.edges)
    features = _load_features(args.features, graph)
    seeds = [args.seed + i for i in range(args.repeats)]
    report = linkpred_eval(graph, features, config, seeds, args.fraction, args.lam)
    out = _out_dir(args)
    dataset = args.dataset or Path(args.edges).stem
    rows = [["linkpred", dataset, s, f"auc_{op}", _fmt(per[op])]
            for s, per in zip(seeds, report["per_seed"]) for op in OPERATORS]
    _write_rows(out / "results.csv", ["task", "dataset", "seed", "metric", "value"], rows)
    summary = [["linkpred", dataset, op, _fmt(report["summary"][op]["mean"]),
                _fmt(report["summary"][op]["stderr"]), int(op == report["best"])] for op in OPERATORS]
    _write_rows(out / "summary.csv", ["task", "dataset", "operator", "mean_auc", "stderr", "best"], summary)
    _write_manifest(out, args, argv, config.to_dict(), [args.edges, args.features],
                    [out / "results.csv", out / "summary.csv"], started)
    return EXIT_OK


def cmd_transfer(args, argv) -> int:
    from .evaluation.transfer import transfer_eval

    started = time.perf_counter()
    config = _config_from(args)
    sg = _load_graph(args.source_edges)
    tg = _load_graph(args.target_edges)
    sf, tf = align_feature_universe(_load_features(args.source_features, sg),
                                    _load_features(args.target_features, tg))
    if args.test_feature not in sf.feature_ids:
        raise TaskPreconditionError(f"test feature {args.test_feature!r} not found")
    f = sf.feature_ids.index(args.test_feature)
    seeds = [args.seed + i for i in range(args.repeats)]
    res = transfer_eval((sg, sf), (tg, tf), f, config, seeds, args.lam)
    out = _out_dir(args)
    dataset = f"{Path(args.source_edges).stem}->{Path(args.target_edges).stem}"
    _write_rows(out / "results.csv", ["task", "dataset", "seed", "metric", "value"],
                [["transfer", dataset, s, "micro_f1", _fmt(v)] for s, v in zip(seeds, res.scores)])
    _write_rows(out / "summary.csv",
                ["task", "dataset", "metric", "mean", "stderr", "majority_baseline", "frozen_h_intact"],
                [["transfer", dataset, "micro_f1", _fmt(res.mean), _fmt(res.stderr),
                  _fmt(res.majority_baseline), int(res.frozen_h_intact)]])
    _write_manifest(out, args, argv, config.to_dict(),
                    [args.source_edges, args.source_features, args.target_edges, args.target_features],
                    [out / "results.csv", out / "summary.csv"], started)
    return EXIT_OK


def cmd_bench(args, argv) -> int:
    from .evaluation.benchmark import parse_range, runtime_benchmark, write_timings

    started = time.perf_counter()
    config = _config_from(args)
    try:
        nodes = parse_range(args.nodes) if args.nodes else []
        feats = parse_range(args.features_per_node) if args.features_per_node else []
        threads = parse_range(args.thread_counts) if args.thread_counts else [args.threads]
    except ValueError as exc:
        raise UsageError(f"bad range: {exc}") from exc
    if not nodes and not feats:
        raise UsageError("give --nodes and/or --features-per-node")
    rows = runtime_benchmark(nodes, feats, config, fixed_nodes=args.fixed_nodes,
                             fixed_features=args.fixed_features, threads=threads,
                             repeats=args.repeats, seed=args.seed)
    out = _out_dir(args)
    with (out / "timings.csv").open("w", newline="") as fh:
        write_timings(rows, fh)
    _write_manifest(out, args, argv, config.to_dict(), [], [out / "timings.csv"], started)
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    manifest = json.loads(_open_input(args.manifest).read_text())
    replay = list(manifest["argv"])
    if args.out:
        replay = _replace_flag(replay, "--out", str(Path(args.out).resolve()))
    if args.seed is not None:
        replay = _replace_flag(replay, "--seed", str(args.seed))
    # relative input paths in the manifest are relative to the original cwd
    here = Path.cwd()
    os.chdir(manifest.get("cwd", here))
    try:
        return main(replay)
    finally:
        os.chdir(here)


def _replace_flag(argv: list[str], flag: str, value: str) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == flag:
            skip = True
            continue
        if tok.startswith(flag + "="):
            continue
        out.append(tok)
    return out + [flag, value]


# ---------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1, help="worker threads (1 = deterministic)")
    p.add_argument("--out", default="out", help="output directory")


def _add_embedding(p):
    p.add_argument("--mode", choices=[AE, MUSAE], default=MUSAE)
    p.add_argument("--ego", action="store_true", help="append one identity feature per node")
    p.add_argument("--dim", type=int, default=None, help="dimensions d (default 128 for ae, 126 for musae)")
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--walks-per-node", type=int, default=10)
    p.add_argument("--starts", type=int, default=None,
                   help="sample this many degree-proportional start nodes instead of walks per node")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--lr-max", type=float, default=0.05)
    p.add_argument("--lr-min", type=float, default=0.025)
    p.add_argument("--neg-exponent", type=float, default=0.75)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="musae", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="learn node and feature embeddings")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--allow-isolated", action="store_true")
    p.add_argument("--dump-walks", action="store_true")
    p.add_argument("--dump-corpus", action="store_true")
    _add_embedding(p)
    _add_common(p)

    p = sub.add_parser("oracle", help="closed-form PMI targets and embedding fit")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", default=None, help="omit for identity features")
    p.add_argument("--ego", action="store_true")
    p.add_argument("--scale", type=int, action="append", default=[])
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--embeddings", default=None, help="directory written by 'musae embed'")
    _add_common(p)

    p = sub.add_parser("eval", help="node classification / regression on embeddings")
    p.add_argument("--embeddings", required=True, help="node embedding CSV")
    p.add_argument("--targets", required=True, help="CSV 'id,target'")
    p.add_argument("--task", choices=["classify", "regress", "kshot"], default="classify")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--dataset", default=None)
    _add_common(p)

    p = sub.add_parser("linkpred", help="link prediction with the four edge operators")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--dataset", default=None)
    _add_embedding(p)
    _add_common(p)

    p = sub.add_parser("transfer", help="transfer a feature classifier between graphs")
    p.add_argument("--source-edges", required=True)
    p.add_argument("--source-features", required=True)
    p.add_argument("--target-edges", required=True)
    p.add_argument("--target-features", required=True)
    p.add_argument("--test-feature", required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    _add_embedding(p)
    _add_common(p)

    p = sub.add_parser("bench", help="runtime on synthetic Erdos-Renyi graphs")
    p.add_argument("--nodes", default=None, help="e.g. 2^7..2^14")
    p.add_argument("--features-per-node", default=None, help="e.g. 2^0..2^4")
    p.add_argument("--fixed-nodes", type=int, default=2 ** 10)
    p.add_argument("--fixed-features", type=int, default=2 ** 2)
    p.add_argument("--thread-counts", default=None, help="e.g. 1,2,4")
    p.add_argument("--repeats", type=int, default=1)
    _add_embedding(p)
    _add_common(p)
    p.set_defaults(epochs=1)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    return parser


COMMANDS = {
    "embed": cmd_embed, "oracle": cmd_oracle, "eval": cmd_eval, "linkpred": cmd_linkpred,
    "transfer": cmd_transfer, "bench": cmd_bench, "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"musae {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleCapError as exc:
        print(f"musae {args.command}: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (TaskPreconditionError, ParseError, FeatureError, IsolatedNodeError, MusaeError) as exc:
        print(f"musae {args.command}: {exc}", file=sys.stderr)
        return EXIT_TASK


if __name__ == "__main__":
    sys.exit(main())
