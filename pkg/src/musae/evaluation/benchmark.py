from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from ..graph import generate_erdos_renyi
from ..pipeline import embed
from ..sgns import TrainConfig


@dataclass(frozen=True)
class TimingRow:
    n: int
    features_per_node: int
    threads: int
    seconds: float


def time_embedding(n: int, features_per_node: int, config: TrainConfig, *, edges_per_node: int = 8,
                   feature_pool: int = 2 ** 11, repeats: int = 1, seed: int = 0) -> float:
    """Best-of-``repeats`` wall clock of one full embedding run (walks, corpus, one epoch)."""
    graph, features = generate_erdos_renyi(n, edges_per_node, feature_pool, features_per_node, seed)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        embed(graph, features, config)
        best = min(best, time.perf_counter() - start)
    return best


def runtime_benchmark(node_range: Iterable[int], feature_range: Iterable[int], config: TrainConfig, *,
                      fixed_nodes: int = 2 ** 10, fixed_features: int = 2 ** 2,
                      threads: Sequence[int] = (1,), repeats: int = 1, seed: int = 0,
                      edges_per_node: int = 8, feature_pool: int = 2 ** 11) -> list[TimingRow]:
    """Timings for a node sweep at ``fixed_features`` and a feature sweep at ``fixed_nodes``."""
    config = replace(config, epochs=1)
    kw = dict(edges_per_node=edges_per_node, feature_pool=feature_pool, repeats=repeats, seed=seed)
    # compile kernels before anything is timed
    time_embedding(64, 1, replace(config, threads=1), edges_per_node=2, feature_pool=8, seed=seed)
    rows = []
    for th in threads:
        cfg = replace(config, threads=th)
        for n in node_range:
            rows.append(TimingRow(n, fixed_features, th, time_embedding(n, fixed_features, cfg, **kw)))
        for k in feature_range:
            rows.append(TimingRow(fixed_nodes, k, th, time_embedding(fixed_nodes, k, cfg, **kw)))
    return rows


def loglog_slope(x, seconds) -> float:
    """Least-squares slope of log2(seconds) against log2(x)."""
    return float(np.polyfit(np.log2(np.asarray(x, float)), np.log2(np.asarray(seconds, float)), 1)[0])


def write_timings(rows: Sequence[TimingRow], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["n", "features_per_node", "threads", "seconds"])
    for r in rows:
        writer.writerow([r.n, r.features_per_node, r.threads, f"{r.seconds:.6f}"])


def parse_range(text: str) -> list[int]:
    """``"2^7..2^12"`` -> [128, 256, ..., 4096]; also plain ``"1,2,4"``."""
    def value(tok: str) -> int:
        tok = tok.strip()
        if "^" in tok:
            base, exp = tok.split("^")
            return int(base) ** int(exp)
        return int(tok)

    if ".." in text:
        lo, hi = (value(t) for t in text.split(".."))
        out, x = [], lo
        while x <= hi:
            out.append(x)
            x *= 2
        return out
    return [value(t) for t in text.split(",") if t.strip()]
