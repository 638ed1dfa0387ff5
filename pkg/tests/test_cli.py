import json

import numpy as np
import pytest

from lcemd.cli import main
from lcemd.histcore import load_database
from lcemd.ingest import save_embeddings, write_idx


@pytest.fixture
def mnist_files(tmp_path):
    r = np.random.default_rng(3)
    imgs = ((r.random((30, 28, 28)) > 0.85) * r.integers(1, 256, size=(30, 28, 28))).astype(np.uint8)
    write_idx(tmp_path / "img.idx", imgs)
    write_idx(tmp_path / "lab.idx", (np.arange(30) % 3).astype(np.uint8))
    return tmp_path / "img.idx", tmp_path / "lab.idx"


def test_ingest_mnist_and_eval(tmp_path, mnist_files, capsys):
    out = tmp_path / "m.emdg"
    main(["ingest-mnist", "--images", str(mnist_files[0]), "--labels", str(mnist_files[1]),
          "--out", str(out), "--jsonl", str(tmp_path / "m.jsonl")])
    assert "n=30" in capsys.readouterr().out
    assert load_database(out).n == 30
    assert len((tmp_path / "m.jsonl").read_text().splitlines()) == 30

    main(["eval", "--db", str(out), "--measure", "act", "--iters", "2", "--topl", "1,4",
          "--queries", "0:10", "--threads", "2", "--csv", str(tmp_path / "r.csv"), "--json", str(tmp_path / "r.json")])
    text = capsys.readouterr().out
    assert "measure=act-2" in text
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "measure,j_iters,ell,precision,seconds" and len(rows) == 3
    assert json.loads((tmp_path / "r.json").read_text())["query_count"] == 10


def test_ingest_background(tmp_path, mnist_files, capsys):
    out = tmp_path / "bg.emdg"
    main(["ingest-mnist", "--images", str(mnist_files[0]), "--labels", str(mnist_files[1]),
          "--out", str(out), "--include-background", "--limit", "5"])
    assert load_database(out).row_lengths.tolist() == [784] * 5


def test_query_and_bench(tmp_path, mnist_files, capsys):
    out = tmp_path / "m.emdg"
    main(["ingest-mnist", "--images", str(mnist_files[0]), "--labels", str(mnist_files[1]), "--out", str(out)])
    main(["query", "--db", str(out), "--index", "4", "--measure", "omr", "--topl", "3",
          "--json", str(tmp_path / "q.json")])
    res = json.loads((tmp_path / "q.json").read_text())
    assert [r["rank"] for r in res["neighbors"]] == [1, 2, 3]
    assert 4 not in [r["index"] for r in res["neighbors"]]
    qfile = tmp_path / "q.jsonl"
    qfile.write_text(json.dumps({"indices": [0, 5], "weights": [0.5, 0.5]}) + "\n")
    main(["query", "--db", str(out), "--file", str(qfile), "--measure", "bow", "--topl", "2"])
    main(["bench", "--db", str(out), "--sizes", "30,60", "--queries", "1", "--repeats", "1",
          "--csv", str(tmp_path / "b.csv")])
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 3
    capsys.readouterr()


def test_text_pipeline(tmp_path, capsys):
    emb = tmp_path / "emb.bin"
    words = ["the", "of", "cat", "dog", "car", "engine", "new_york"]
    save_embeddings(emb, words, np.random.default_rng(0).normal(size=(7, 5)), format="binary")
    main(["load-embeddings", str(emb), "--format", "binary"])
    assert "v=7 m=5 phrases=1" in capsys.readouterr().out
    corpus = tmp_path / "c.tsv"
    corpus.write_text("pets\tThe cat and the dog\nautos\tcar engine\nnone\tthe of\n")
    out = tmp_path / "t.emdg"
    main(["ingest-text", "--embeddings", str(emb), "--embeddings-format", "binary", "--docs", str(corpus),
          "--out", str(out), "--stop-words", "2"])
    assert "skipped=1" in capsys.readouterr().out
    assert load_database(out).labels.tolist() == ["pets", "autos"]


def test_measure_flag_conflicts(tmp_path, mnist_files):
    out = tmp_path / "m.emdg"
    main(["ingest-mnist", "--images", str(mnist_files[0]), "--labels", str(mnist_files[1]), "--out", str(out)])
    with pytest.raises(SystemExit):
        main(["eval", "--db", str(out), "--measure", "act"])
    with pytest.raises(SystemExit):
        main(["eval", "--db", str(out), "--measure", "act-1", "--iters", "2"])
