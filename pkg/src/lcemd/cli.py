"""Command-line interface: ``lcemd <subcommand>`` or ``python -m lcemd``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import ingest
from .evaluation import RunConfig, bench_scaling, query_distances, run_eval
from .histcore import Histogram, export_jsonl, load_database, save_database
from .lcengine import topk_neighbors


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _measure(args):
    m = args.measure.lower()
    if m == "act":
        if args.iters is None:
            raise SystemExit("--measure act needs --iters J")
        return f"act-{args.iters}"
    if args.iters is not None and m.startswith("act-") and int(m[4:]) != args.iters:
        raise SystemExit(f"--measure {m} conflicts with --iters {args.iters}")
    return m


def _config(args, **extra):
    return RunConfig(measure=_measure(args), direction=args.direction,
                     threads=args.threads, block_size=args.block_size, **extra)


def _add_measure_flags(p):
    p.add_argument("--db", required=True, help="database container")
    p.add_argument("--measure", default="act-1", help="rwmd, omr, ict, act, act-J, bow or wcd")
    p.add_argument("--iters", type=int, default=None, metavar="J", help="ACT transfer rounds")
    p.add_argument("--direction", default="symmetric", choices=("forward", "reverse", "symmetric"))
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $EMDG_THREADS or CPU count)")
    p.add_argument("--block-size", type=int, default=None,
                   help="vocabulary rows per distance block")
    p.add_argument("--csv", default=None, metavar="PATH")
    p.add_argument("--json", default=None, metavar="PATH")


def cmd_ingest_mnist(args):
    opts = ingest.MnistOptions(include_background=args.include_background,
                               normalize=not args.no_normalize)
    db = ingest.load_mnist(args.images, args.labels, opts, limit=args.limit)
    save_database(db, args.out)
    if args.jsonl:
        export_jsonl(db, args.jsonl)
    s = db.stats()
    print(f"n={s.n} avg_h={s.avg_h:.1f} v={db.vocab.v} v_used={s.v_used} -> {args.out}")


def cmd_ingest_text(args):
    vocab = ingest.load_embeddings(args.embeddings, args.embeddings_format)
    docs, labels = ingest.read_documents(args.docs, lowercase=not args.no_lowercase)
    opts = ingest.TextOptions(stop_word_count=args.stop_words, max_words_per_doc=args.max_words,
                              lowercase=not args.no_lowercase)
    db, skipped = ingest.corpus_to_database(docs, labels, vocab, opts)
    save_database(db, args.out)
    if args.jsonl:
        export_jsonl(db, args.jsonl)
    s = db.stats()
    print(f"n={s.n} avg_h={s.avg_h:.1f} v={vocab.v} v_used={s.v_used} skipped={len(skipped)} -> {args.out}")


def cmd_load_embeddings(args):
    vocab = ingest.load_embeddings(args.path, args.format)
    phrases = sum("_" in t for t in vocab.tokens)
    print(f"v={vocab.v} m={vocab.m} phrases={phrases} first={list(vocab.tokens[:5])}")


def cmd_eval(args):
    db = load_database(args.db)
    report = run_eval(_config(args, ells=_int_list(args.topl), queries=args.queries), db)
    print(report.table())
    if args.csv:
        report.write_csv(args.csv)
    if args.json:
        report.write_json(args.json)


def _read_query(args, db):
    if args.index is not None:
        return db.row(args.index), args.index
    with open(args.file) as fh:
        rec = json.loads(fh.readline())
    return Histogram(rec["indices"], rec["weights"]), None


def cmd_query(args):
    db = load_database(args.db)
    q, exclude = _read_query(args, db)
    config = _config(args)
    d = query_distances(db, q, config, threads=config.threads)
    nb = topk_neighbors(d, args.topl, exclude=exclude, largest=not config.smaller_is_closer)
    rows = [{"rank": r + 1, "index": int(u), "label": db.labels[u].item(), "distance": float(d[u])}
            for r, u in enumerate(nb)]
    print(f"{'rank':>4}  {'index':>7}  {'label':>8}  {'distance':>12}")
    for row in rows:
        print(f"{row['rank']:>4}  {row['index']:>7}  {str(row['label']):>8}  {row['distance']:12.6f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"measure": config.measure, "neighbors": rows}, fh, indent=2)


def cmd_bench(args):
    db = load_database(args.db)
    config = _config(args)
    rows = bench_scaling(db, config, _int_list(args.sizes), queries=args.queries, repeats=args.repeats)
    print(f"{'n':>8}  {'seconds':>10}  {'ratio':>6}")
    for r in rows:
        ratio = "" if r["ratio"] is None else f"{r['ratio']:.2f}"
        print(f"{r['n']:>8}  {r['seconds']:10.4f}  {ratio:>6}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["measure", "n", "seconds", "ratio"])
            writer.writeheader()
            writer.writerows({"measure": config.measure, **r} for r in rows)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"measure": config.measure, "points": rows}, fh, indent=2)


def build_parser():
    parser = argparse.ArgumentParser(prog="lcemd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-mnist", help="MNIST IDX files -> database container")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-background", action="store_true",
                   help="keep all 784 pixels as bins, zero-weight ones included")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--jsonl", default=None, help="also write a JSON-lines debug export")
    p.set_defaults(func=cmd_ingest_mnist)

    p = sub.add_parser("ingest-text", help="text corpus + embeddings -> database container")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--embeddings-format", default="text", choices=("text", "binary"))
    p.add_argument("--docs", required=True, help="directory (one doc per file) or file (one per line)")
    p.add_argument("--out", required=True)
    p.add_argument("--stop-words", type=int, default=100)
    p.add_argument("--max-words", type=int, default=500)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--jsonl", default=None)
    p.set_defaults(func=cmd_ingest_text)

    p = sub.add_parser("load-embeddings", help="validate an embedding file and print a summary")
    p.add_argument("path")
    p.add_argument("--format", default="text", choices=("text", "binary"))
    p.set_defaults(func=cmd_load_embeddings)

    p = sub.add_parser("eval", help="leave-one-out precision@top-l")
    _add_measure_flags(p)
    p.add_argument("--topl", default="1,16,128")
    p.add_argument("--queries", default=None, metavar="RANGE", help="e.g. 0:200, 5, 1,4,9 or all")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("query", help="nearest neighbors of one histogram")
    _add_measure_flags(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--index", type=int, help="database row used as query (excluded from results)")
    group.add_argument("--file", help="JSON line with 'indices' and 'weights'")
    p.add_argument("--topl", type=int, default=10)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="wall time against growing database prefixes")
    _add_measure_flags(p)
    p.add_argument("--sizes", default="5000,10000,20000")
    p.add_argument("--queries", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
