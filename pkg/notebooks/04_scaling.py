"""
Query time against database size
================================

Wall time of a few ACT-1 queries as the database doubles. The
vocabulary is fixed (784 pixels), so the distance matrix costs the same at
every size and only the per-entry transfer work grows with n.
"""

from pathlib import Path

from lcemd.evaluation import RunConfig, bench_scaling, time_phases
from lcemd.ingest import load_mnist

data = Path(__file__).resolve().parents[1] / "data" / "mnist5k"
db = load_mnist(data / "train-images-idx3-ubyte.gz", data / "train-labels-idx1-ubyte.gz")

for direction in ("forward", "symmetric"):
    rows = bench_scaling(db, RunConfig("act-1", direction=direction, threads=1),
                         [2500, 5000, 10000, 20000], queries=3, repeats=3)
    for r in rows:
        ratio = "" if r["ratio"] is None else f"x{r['ratio']:.2f}"
        print(f"{direction:>9} n={r['n']:>6} {r['seconds']:.4f}s {ratio}")

# %%
# Split of one forward query between building the distance matrix with its
# top-k selection and the sparse transfer rounds.
for j in (1, 3, 7):
    t = time_phases(db, db.row(0), j)
    print(f"act-{j}: phase 1 {t['phase1'] * 1e3:.1f} ms, phases 2-3 {t['phase23'] * 1e3:.1f} ms")
