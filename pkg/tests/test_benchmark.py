import io
import os

import pytest

from musae.evaluation.benchmark import TimingRow, loglog_slope, parse_range, runtime_benchmark, time_embedding, write_timings
from musae.sgns import TrainConfig


def test_parse_range():
    assert parse_range("2^7..2^14") == [2 ** k for k in range(7, 15)]
    assert parse_range("1,2, 4") == [1, 2, 4]
    assert parse_range("3") == [3]
    assert parse_range("4..16") == [4, 8, 16]


def test_loglog_slope():
    xs = [1, 2, 4, 8]
    assert loglog_slope(xs, [3 * x for x in xs]) == pytest.approx(1.0)
    assert loglog_slope(xs, [x * x for x in xs]) == pytest.approx(2.0)
    assert loglog_slope(xs, [5.0] * 4) == pytest.approx(0.0, abs=1e-12)


def test_write_timings_format():
    buf = io.StringIO()
    write_timings([TimingRow(128, 4, 1, 0.1234567)], buf)
    assert buf.getvalue() == "n,features_per_node,threads,seconds\n128,4,1,0.123457\n"


def test_benchmark_rows():
    cfg = TrainConfig(dim=8, walk_length=10, walks_per_node=1, window=2)
    rows = runtime_benchmark([32, 64], [1, 2, 4], cfg, fixed_nodes=32, fixed_features=1,
                             edges_per_node=2, feature_pool=16)
    assert [(r.n, r.features_per_node) for r in rows] == [(32, 1), (64, 1), (32, 1), (32, 2), (32, 4)]
    assert all(r.threads == 1 and r.seconds > 0 for r in rows)


@pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="needs at least 4 cores")
def test_threads_speed_up_ae():
    cfg = TrainConfig(mode="ae", dim=32, walk_length=40, walks_per_node=5)
    one = time_embedding(2 ** 12, 4, cfg, repeats=2)
    four = time_embedding(2 ** 12, 4, TrainConfig(mode="ae", dim=32, walk_length=40, walks_per_node=5, threads=4),
                          repeats=2)
    assert four < one


@pytest.mark.slow
def test_doubling_ratios():
    cfg = TrainConfig(dim=48, window=3, walks_per_node=2, walk_length=40, epochs=1)
    time_embedding(64, 1, cfg, edges_per_node=2, feature_pool=8)  # compile
    by_n = time_embedding(2 ** 12, 4, cfg, repeats=3) / time_embedding(2 ** 11, 4, cfg, repeats=3)
    by_f = time_embedding(2 ** 10, 8, cfg, repeats=3) / time_embedding(2 ** 10, 4, cfg, repeats=3)
    assert 1.8 <= by_n <= 2.6
    assert 1.6 <= by_f <= 2.6
