import json

import numpy as np
import pytest

from lcemd.errors import ListTooShort
from lcemd.evaluation import (
    CSV_COLUMNS,
    RunConfig,
    bench_scaling,
    parse_queries,
    precision_at_l,
    run_eval,
    tile_database,
    time_phases,
)
from lcemd.histcore import EmbeddingVocabulary, Histogram, build_database

from conftest import random_database


def test_precision_examples():
    labels = [0, 0, 0, 1]
    assert precision_at_l([[1, 2]], labels, 2) == 1.0
    assert precision_at_l([[1, 3]], labels, 2) == 0.5
    assert precision_at_l([[3, 1], [0, 1]], labels, 1, queries=[0, 2]) == 0.5
    with pytest.raises(ListTooShort):
        precision_at_l([[1]], labels, 2)


def test_precision_random_labels():
    r = np.random.default_rng(7)
    labels = np.repeat(np.arange(10), 500)
    lists = [r.choice(np.delete(np.arange(5000), u), 16, replace=False) for u in range(2000)]
    assert precision_at_l(lists, labels, 16) == pytest.approx(0.1, abs=0.02)


def test_precision_permutation_invariant(rng):
    labels = rng.integers(0, 4, size=50)
    lists = [rng.permutation(np.delete(np.arange(50), u))[:5] for u in range(50)]
    perm = rng.permutation(50)
    inv = np.argsort(perm)
    # row u moves to position inv[u]; relabel neighbor indices accordingly
    plabels = labels[perm]
    plists = [inv[lists[perm[i]]] for i in range(50)]
    assert precision_at_l(plists, plabels, 5) == precision_at_l(lists, labels, 5)


def test_parse_queries():
    assert parse_queries(None, 4).tolist() == [0, 1, 2, 3]
    assert parse_queries("1:3", 4).tolist() == [1, 2]
    assert parse_queries("0,3", 4).tolist() == [0, 3]
    with pytest.raises(ValueError):
        parse_queries("7", 4)


def test_run_config_validation():
    assert RunConfig("ACT-3").j_iters == 3
    assert RunConfig("bow").smaller_is_closer is False
    with pytest.raises(ValueError):
        RunConfig("act--1")
    with pytest.raises(ValueError):
        RunConfig(ells=(16, 1))


def three_docs():
    vocab = EmbeddingVocabulary(np.eye(3))
    hists = [Histogram([0, 1], [0.5, 0.5]), Histogram([0], [1.0]), Histogram([2], [1.0])]
    return build_database(hists, ["a", "a", "b"], vocab)


def test_bow_hand_example():
    # cosines: (0,1)=0.707, (0,2)=0, (1,2)=0
    report = run_eval(RunConfig("bow", ells=(1, 2), threads=1), three_docs())
    assert report.neighbors == {0: [1, 2], 1: [0, 2], 2: [0, 1]}
    assert report.precision == [pytest.approx(2 / 3), pytest.approx(1 / 3)]


def test_act0_equals_rwmd(rng):
    db = random_database(rng, 60, 80, 3, 10)
    a = run_eval(RunConfig("act-0", ells=(1, 5), threads=2), db)
    b = run_eval(RunConfig("rwmd", ells=(1, 5), threads=2), db)
    assert a.precision == b.precision


def test_eval_permutation_invariant(rng):
    db = random_database(rng, 40, 60, 3, 8)
    perm = rng.permutation(db.n)
    pdb = db.take(perm)
    for m in ("act-1", "wcd", "bow"):
        a = run_eval(RunConfig(m, ells=(1, 4)), db)
        b = run_eval(RunConfig(m, ells=(1, 4)), pdb)
        np.testing.assert_allclose(a.precision, b.precision, atol=1e-12)


def test_report_outputs(tmp_path):
    report = run_eval(RunConfig("act-1", ells=(1, 2)), three_docs())
    report.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("act-1,1,1,")
    report.write_json(tmp_path / "r.json", with_neighbors=True)
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["schema_version"] == 1 and d["measure"] == "act-1" and d["neighbors"]["0"]
    assert "precision" in report.table()


def test_deterministic_across_threads(rng):
    db = random_database(rng, 80, 100, 4, 12)
    base = run_eval(RunConfig("act-2", ells=(1, 8), threads=1), db)
    for t in (2, 4):
        r = run_eval(RunConfig("act-2", ells=(1, 8), threads=t), db)
        assert r.neighbors == base.neighbors and r.precision == base.precision


def test_tile_database(rng):
    db = random_database(rng, 7, 20, 2, 5)
    t = tile_database(db, 17)
    assert t.n == 17
    assert t.row(9) == db.row(2)
    assert tile_database(db, 3) == db.head(3)


def test_bench_and_phases(rng):
    db = random_database(rng, 50, 60, 3, 8)
    rows = bench_scaling(db, RunConfig("act-1"), [50, 100], queries=2, repeats=1)
    assert [r["n"] for r in rows] == [50, 100] and rows[0]["ratio"] is None and rows[1]["ratio"] > 0
    t = time_phases(db, db.row(0), 1)
    assert set(t) == {"phase1", "phase23"}
