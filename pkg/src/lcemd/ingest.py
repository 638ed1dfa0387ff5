"""Dataset ingestion: MNIST IDX images, word-embedding files and text corpora."""
from __future__ import annotations

import gzip
import logging
import re
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CountMismatch,
    DimensionDrift,
    MalformedHeader,
    NonFiniteValue,
    TruncatedFile,
)
from .histcore import (
    EmbeddingVocabulary,
    Histogram,
    HistogramDatabase,
    build_database,
    export_jsonl,
    load_database,
    save_database,
)

__all__ = [
    "MnistOptions",
    "TextOptions",
    "read_idx",
    "write_idx",
    "mnist_vocabulary",
    "images_to_database",
    "load_mnist",
    "load_embeddings",
    "save_embeddings",
    "tokenize",
    "corpus_to_database",
    "read_documents",
    "save_database",
    "load_database",
    "export_jsonl",
]

log = logging.getLogger(__name__)

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


@dataclass(frozen=True)
class MnistOptions:
    include_background: bool = False
    normalize: bool = True


@dataclass(frozen=True)
class TextOptions:
    stop_word_count: int = 100
    max_words_per_doc: int = 500
    lowercase: bool = True


def _open(path, mode="rb"):
    path = Path(path)
    return gzip.open(path, mode) if path.suffix == ".gz" else open(path, mode)


def read_idx(path):
    """Read an IDX file.  Returns ``(magic, array)``."""
    with _open(path) as fh:
        data = fh.read()
    if len(data) < 4:
        raise TruncatedFile(f"{path}: missing IDX header")
    (magic,) = struct.unpack(">I", data[:4])
    zero, code, ndim = magic >> 16, (magic >> 8) & 0xFF, magic & 0xFF
    if zero != 0 or code not in _IDX_DTYPES or ndim == 0:
        raise BadMagic(f"{path}: bad IDX magic {magic:#010x}")
    header = 4 + 4 * ndim
    if len(data) < header:
        raise TruncatedFile(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    dtype = _IDX_DTYPES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(data) - header < expected:
        raise TruncatedFile(f"{path}: expected {expected} payload bytes, found {len(data) - header}")
    if len(data) - header > expected:
        raise CountMismatch(f"{path}: {len(data) - header - expected} trailing bytes after payload")
    arr = np.frombuffer(data, dtype=dtype, count=int(np.prod(dims)), offset=header)
    return magic, arr.reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array) -> None:
    array = np.asarray(array)
    codes = {v.newbyteorder("=").str: k for k, v in _IDX_DTYPES.items()}
    code = codes.get(array.dtype.newbyteorder("=").str)
    if code is None:
        raise ValueError(f"dtype {array.dtype} has no IDX type code")
    header = struct.pack(">I", (code << 8) | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    with _open(path, "wb") as fh:
        fh.write(header + array.astype(_IDX_DTYPES[code]).tobytes())


def mnist_vocabulary(rows: int = 28, cols: int = 28) -> EmbeddingVocabulary:
    """Pixel grid as 2-D coordinates ``(row, col)``, in row-major pixel order."""
    r, c = np.divmod(np.arange(rows * cols), cols)
    return EmbeddingVocabulary(np.column_stack([r, c]).astype(np.float64))


def images_to_database(images, labels, opts: MnistOptions = MnistOptions()) -> HistogramDatabase:
    """One histogram per image, bins at pixel coordinates, weights from intensities."""
    images = np.asarray(images)
    n, rows, cols = images.shape
    flat = images.reshape(n, rows * cols).astype(np.float64)
    totals = flat.sum(axis=1)
    if np.any(totals <= 0):
        bad = np.nonzero(totals <= 0)[0][:5].tolist()
        raise ValueError(f"blank images cannot be normalized: {bad}")
    if opts.normalize:
        flat /= totals[:, None]
    if opts.include_background:
        col_idx = np.tile(np.arange(rows * cols, dtype=np.int64), n)
        values = flat.reshape(-1)
        counts = np.full(n, rows * cols, dtype=np.int64)
    else:
        mask = images.reshape(n, -1) > 0
        col_idx = np.nonzero(mask)[1].astype(np.int64)
        values = flat[mask]
        counts = mask.sum(axis=1)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return HistogramDatabase(offsets, col_idx, values, np.asarray(labels).astype(np.int64),
                             mnist_vocabulary(rows, cols))


def load_mnist(images_path, labels_path, opts: MnistOptions = MnistOptions(),
               limit: int | None = None) -> HistogramDatabase:
    """MNIST IDX image/label files (optionally gzipped) as a histogram database."""
    magic, images = read_idx(images_path)
    if magic != IMAGES_MAGIC:
        raise BadMagic(f"{images_path}: magic {magic}, expected {IMAGES_MAGIC}")
    magic, labels = read_idx(labels_path)
    if magic != LABELS_MAGIC:
        raise BadMagic(f"{labels_path}: magic {magic}, expected {LABELS_MAGIC}")
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return images_to_database(images, labels, opts)


def _finish_vocabulary(tokens, rows, normalize):
    coords = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(coords)):
        raise NonFiniteValue("embedding contains non-finite values")
    if normalize:
        norms = np.linalg.norm(coords, axis=1)
        if np.any(norms == 0):
            bad = [tokens[i] for i in np.nonzero(norms == 0)[0][:5]]
            raise NonFiniteValue(f"zero vectors cannot be L2-normalized: {bad}")
        coords = coords / norms[:, None]
    return EmbeddingVocabulary(coords, tokens)


def _parse_header(line, path):
    parts = line.split()
    if len(parts) != 2:
        raise MalformedHeader(f"{path}: expected 'count dim' header, got {line[:60]!r}")
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise MalformedHeader(f"{path}: non-integer header {line[:60]!r}") from None
    if count < 1 or dim < 1:
        raise MalformedHeader(f"{path}: header declares {count} x {dim}")
    return count, dim


def load_embeddings(path, format: str = "text", normalize: bool = True) -> EmbeddingVocabulary:
    """Word2Vec-style embeddings; rows are L2-normalized and file order is kept."""
    if format == "text":
        with _open(path, "rt") as fh:
            count, dim = _parse_header(fh.readline(), path)
            tokens, rows = [], []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if not line.strip():
                    continue
                if len(parts) != dim + 1:
                    raise DimensionDrift(f"{path}:{lineno}: {len(parts) - 1} values, expected {dim}")
                tokens.append(parts[0])
                try:
                    rows.append([float(x) for x in parts[1:]])
                except ValueError:
                    raise NonFiniteValue(f"{path}:{lineno}: unparseable value") from None
        if len(tokens) != count:
            raise MalformedHeader(f"{path}: header declares {count} rows, found {len(tokens)}")
        return _finish_vocabulary(tokens, rows, normalize)
    if format == "binary":
        with _open(path) as fh:
            data = fh.read()
        nl = data.find(b"\n")
        if nl < 0:
            raise MalformedHeader(f"{path}: no header line")
        count, dim = _parse_header(data[:nl].decode("ascii", "replace"), path)
        pos = nl + 1
        tokens = []
        coords = np.empty((count, dim), dtype=np.float32)
        width = 4 * dim
        for i in range(count):
            while pos < len(data) and data[pos:pos + 1] in (b"\n", b"\r"):
                pos += 1
            end = data.find(b" ", pos)
            if end < 0 or end + 1 + width > len(data):
                raise TruncatedFile(f"{path}: row {i} of {count} is truncated")
            tokens.append(data[pos:end].decode("utf-8", "replace"))
            coords[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=end + 1)
            pos = end + 1 + width
        return _finish_vocabulary(tokens, coords.astype(np.float64), normalize)
    raise ValueError(f"unknown embedding format {format!r}")


def save_embeddings(path, tokens, coords, format: str = "text") -> None:
    coords = np.asarray(coords, dtype=np.float64)
    if format == "text":
        with _open(path, "wt") as fh:
            fh.write(f"{coords.shape[0]} {coords.shape[1]}\n")
            for tok, row in zip(tokens, coords):
                fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")
    elif format == "binary":
        with _open(path, "wb") as fh:
            fh.write(f"{coords.shape[0]} {coords.shape[1]}\n".encode())
            for tok, row in zip(tokens, coords):
                fh.write(tok.encode("utf-8") + b" " + row.astype("<f4").tobytes() + b"\n")
    else:
        raise ValueError(f"unknown embedding format {format!r}")


_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split on anything that is not a letter or digit."""
    return _TOKEN_RE.findall(text.lower() if lowercase else text)


def _is_phrase(token: str) -> bool:
    return "_" in token


def corpus_to_database(docs, labels, vocab: EmbeddingVocabulary, opts: TextOptions = TextOptions()):
    """Word-frequency histograms for tokenized documents.

    Out-of-vocabulary tokens, the first ``stop_word_count`` vocabulary entries
    and multi-word phrases are dropped; each document keeps its
    ``max_words_per_doc`` most frequent words (ties to the lower vocabulary
    index) and is then L1-normalized.  Documents left empty are skipped.

    Returns ``(database, skipped_indices)``.
    """
    if vocab.tokens is None:
        raise ValueError("text ingestion needs a vocabulary with tokens")
    if opts.stop_word_count > vocab.v:
        raise ValueError(f"stop_word_count={opts.stop_word_count} exceeds v={vocab.v}")
    index = vocab.token_index
    ref = vocab.fingerprint
    histograms, kept_labels, skipped = [], [], []
    labels = list(labels)
    if len(labels) != len(docs):
        raise ValueError(f"{len(labels)} labels for {len(docs)} documents")
    for d, tokens in enumerate(docs):
        if opts.lowercase:
            tokens = [t.lower() for t in tokens]
        counts = Counter()
        for tok in tokens:
            i = index.get(tok)
            if i is None or i < opts.stop_word_count or _is_phrase(tok):
                continue
            counts[i] += 1
        if not counts:
            log.warning("document %d is empty after filtering; skipped", d)
            skipped.append(d)
            continue
        kept = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:opts.max_words_per_doc]
        kept.sort()
        idx = np.array([i for i, _ in kept], dtype=np.int64)
        w = np.array([c for _, c in kept], dtype=np.float64)
        histograms.append(Histogram(idx, w / w.sum(), ref))
        kept_labels.append(labels[d])
    if not histograms:
        raise ValueError("no document survived filtering")
    return build_database(histograms, np.asarray(kept_labels), vocab), skipped


def read_documents(path, lowercase: bool = True):
    """Generic corpus reader returning ``(token_lists, labels)``.

    A directory is read as one document per file, labelled by the name of
    its parent directory (the usual ``class/doc`` layout).  A file is read
    as one document per line, ``label<TAB>text`` or bare text labelled by
    line number.
    """
    path = Path(path)
    docs, labels = [], []
    if path.is_dir():
        for f in sorted(p for p in path.rglob("*") if p.is_file()):
            docs.append(tokenize(f.read_text(encoding="utf-8", errors="replace"), lowercase))
            labels.append(f.parent.name)
    else:
        with _open(path, "rt") as fh:
            for lineno, line in enumerate(fh):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                label, sep, text = line.partition("\t")
                if not sep:
                    label, text = str(lineno), line
                docs.append(tokenize(text, lowercase))
                labels.append(label)
    return docs, labels
