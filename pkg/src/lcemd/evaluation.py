"""Leave-one-out nearest-neighbor evaluation and runtime benchmarks."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import bow_cosine, build_centroids, query_centroid, wcd
from .errors import ListTooShort, VocabularyMismatch
from .grounddist import vocab_query_distances
from .histcore import Histogram, HistogramDatabase
from .lcengine import (
    DIRECTIONS,
    _forward_chunk,
    lc_distances,
    phase1_topk,
    resolve_threads,
    topk_neighbors,
)
from .pairwise import parse_measure

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "RunConfig",
    "EvalReport",
    "parse_queries",
    "precision_at_l",
    "query_distances",
    "run_eval",
    "bench_scaling",
    "time_phases",
    "tile_database",
]

REPORT_SCHEMA_VERSION = 1
CSV_COLUMNS = ("measure", "j_iters", "ell", "precision", "seconds")
BASELINES = ("bow", "wcd")


@dataclass(frozen=True)
class RunConfig:
    measure: str = "act-1"
    direction: str = "symmetric"
    ells: tuple[int, ...] = (1, 16, 128)
    queries: str | None = None
    threads: int | None = None
    block_size: int | None = None

    def __post_init__(self):
        m = str(self.measure).lower()
        if m not in BASELINES:
            m = str(parse_measure(m))
        object.__setattr__(self, "measure", m)
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        ells = tuple(int(x) for x in self.ells)
        if not ells or any(x < 1 for x in ells) or list(ells) != sorted(set(ells)):
            raise ValueError("ells must be increasing positive integers")
        object.__setattr__(self, "ells", ells)

    @property
    def j_iters(self) -> int | None:
        return None if self.measure in BASELINES else parse_measure(self.measure).iters

    @property
    def smaller_is_closer(self) -> bool:
        return self.measure != "bow"


@dataclass
class EvalReport:
    measure: str
    j_iters: int | None
    direction: str
    ells: list[int]
    precision: list[float]
    query_count: int
    seconds: dict[str, float] = field(default_factory=dict)
    neighbors: dict[int, list[int]] = field(default_factory=dict, repr=False)

    def to_dict(self, with_neighbors=False):
        d = asdict(self)
        d["schema_version"] = REPORT_SCHEMA_VERSION
        if with_neighbors:
            d["neighbors"] = {str(k): v for k, v in self.neighbors.items()}
        else:
            d.pop("neighbors")
        return d

    def csv_rows(self):
        total = self.seconds.get("total", 0.0)
        return [
            {"measure": self.measure, "j_iters": "" if self.j_iters is None else self.j_iters,
             "ell": ell, "precision": prec, "seconds": total}
            for ell, prec in zip(self.ells, self.precision)
        ]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.csv_rows())

    def write_json(self, path, with_neighbors=False):
        with open(path, "w") as fh:
            json.dump(self.to_dict(with_neighbors), fh, indent=2)

    def table(self) -> str:
        lines = [f"measure={self.measure} direction={self.direction} queries={self.query_count} "
                 f"seconds={self.seconds.get('total', 0.0):.3f}",
                 f"{'ell':>6}  {'precision':>9}"]
        lines += [f"{ell:>6}  {prec:9.4f}" for ell, prec in zip(self.ells, self.precision)]
        return "\n".join(lines)


def parse_queries(spec, n: int) -> np.ndarray:
    """Query rows from ``None``/``all``, ``a:b``, ``a:b:s``, ``i`` or ``i,j,k``."""
    if spec is None or str(spec).strip().lower() in ("", "all"):
        return np.arange(n)
    s = str(spec).strip()
    if ":" in s:
        parts = [int(x) if x else None for x in s.split(":")]
        out = np.arange(n)[slice(*parts)]
    else:
        out = np.array([int(x) for x in s.split(",")], dtype=np.int64)
    if out.size == 0 or out.min() < 0 or out.max() >= n:
        raise ValueError(f"query spec {spec!r} selects rows outside [0, {n})")
    return out


def precision_at_l(neighbor_lists, labels, ell: int, queries=None) -> float:
    """Mean fraction of each query's first ``ell`` neighbors sharing its label.

    ``neighbor_lists[i]`` belongs to database row ``queries[i]`` (default ``i``).
    """
    labels = np.asarray(labels)
    queries = range(len(neighbor_lists)) if queries is None else queries
    fractions = []
    for qi, nb in zip(queries, neighbor_lists):
        if len(nb) < ell:
            raise ListTooShort(f"query {qi}: {len(nb)} neighbors, need {ell}")
        nb = np.asarray(nb[:ell])
        fractions.append(np.count_nonzero(labels[nb] == labels[qi]) / ell)
    if not fractions:
        raise ValueError("no queries")
    return float(np.mean(fractions))


def query_distances(db: HistogramDatabase, q: Histogram, config: RunConfig, centroids=None,
                    threads=1) -> np.ndarray:
    """Scores of ``q`` against every row; see ``config.smaller_is_closer``."""
    if config.measure == "bow":
        return bow_cosine(db, q)
    if config.measure == "wcd":
        centroids = build_centroids(db) if centroids is None else centroids
        return wcd(centroids, query_centroid(q, db.vocab))
    return lc_distances(db, q, config.measure, config.direction,
                        threads=threads, block_size=config.block_size)


def run_eval(config: RunConfig, db: HistogramDatabase, vocab=None) -> EvalReport:
    """Leave-one-out precision@top-ell, each selected row queried against all others."""
    if vocab is not None and vocab.fingerprint != db.vocab_ref:
        raise VocabularyMismatch("database was built over a different vocabulary")
    queries = parse_queries(config.queries, db.n)
    max_ell = config.ells[-1]
    threads = resolve_threads(config.threads)
    centroids = build_centroids(db) if config.measure == "wcd" else None

    def one(u):
        t0 = time.perf_counter()
        d = query_distances(db, db.row(u), config, centroids, threads=1)
        t1 = time.perf_counter()
        nb = topk_neighbors(d, max_ell, exclude=u, largest=not config.smaller_is_closer)
        return nb.tolist(), t1 - t0, time.perf_counter() - t1

    start = time.perf_counter()
    if threads > 1 and queries.size > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, queries.tolist()))
    else:
        results = [one(u) for u in queries.tolist()]
    total = time.perf_counter() - start

    lists = [r[0] for r in results]
    precision = [precision_at_l(lists, db.labels, ell, queries) for ell in config.ells]
    return EvalReport(
        measure=config.measure,
        j_iters=config.j_iters,
        direction=config.direction,
        ells=list(config.ells),
        precision=precision,
        query_count=int(queries.size),
        seconds={"distances": float(sum(r[1] for r in results)),
                 "topk": float(sum(r[2] for r in results)),
                 "total": total},
        neighbors={int(u): nb for u, nb in zip(queries.tolist(), lists)},
    )


def tile_database(db: HistogramDatabase, n: int) -> HistogramDatabase:
    """Database of ``n`` rows cycling through the rows of ``db``."""
    if n <= db.n:
        return db.head(n)
    reps = -(-n // db.n)
    lengths = np.tile(db.row_lengths, reps)[:n]
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    end = offsets[-1]
    cols = np.tile(db.col_indices, reps)[:end]
    vals = np.tile(db.values, reps)[:end]
    labels = np.tile(db.labels, reps)[:n]
    return HistogramDatabase(offsets, cols, vals, labels, db.vocab)


def time_phases(db: HistogramDatabase, q: Histogram, j_iters: int, block_size=None) -> dict:
    """Wall time of Phase 1 (distances and top-k) and Phases 2-3, forward direction."""
    t0 = time.perf_counter()
    D = vocab_query_distances(db.vocab, db.vocab.coords[q.indices], block_size=block_size)
    plan = phase1_topk(db.vocab, q, j_iters + 1, D=D)
    t1 = time.perf_counter()
    _forward_chunk(db.col_indices, db.values, db.row_offsets, plan, omr=False)
    t2 = time.perf_counter()
    return {"phase1": t1 - t0, "phase23": t2 - t1}


def bench_scaling(db: HistogramDatabase, config: RunConfig, sizes, queries=3, repeats=3):
    """Best-of-``repeats`` wall time of ``queries`` queries against prefixes of ``db``.

    Sizes beyond ``db.n`` tile the database.  One untimed warm-up pass runs
    per size.  Returns a list of dicts with ``n``, ``seconds`` and ``ratio``
    to the previous size.
    """
    qrows = list(range(min(queries, db.n)))
    qs = [db.row(u) for u in qrows]
    rows = []
    prev = None
    for n in sizes:
        sub = tile_database(db, int(n))
        centroids = build_centroids(sub) if config.measure == "wcd" else None

        def run():
            for q in qs:
                query_distances(sub, q, config, centroids, threads=config.threads or 1)

        run()
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            run()
            best = min(best, time.perf_counter() - t0)
        rows.append({"n": int(n), "seconds": best, "ratio": None if prev is None else best / prev})
        prev = best
    return rows
