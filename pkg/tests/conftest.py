from pathlib import Path

import numpy as np
import pytest

from lcemd.histcore import EmbeddingVocabulary, Histogram, build_database

DATA = Path(__file__).resolve().parents[1] / "data" / "mnist5k"
MNIST_IMAGES = DATA / "train-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "train-labels-idx1-ubyte.gz"


def random_histogram(rng, v, h, zero_frac=0.0, ref=None):
    idx = np.sort(rng.choice(v, size=h, replace=False))
    w = rng.random(h) + 1e-3
    if zero_frac:
        w[rng.random(h) < zero_frac] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
    return Histogram(idx, w / w.sum(), ref)


def random_database(rng, n, v, m, h_max, h_min=1, labels=None):
    vocab = EmbeddingVocabulary(rng.normal(size=(v, m)))
    hists = [random_histogram(rng, v, int(rng.integers(h_min, h_max + 1)), ref=vocab.fingerprint)
             for _ in range(n)]
    labels = rng.integers(0, 3, size=n) if labels is None else labels
    return build_database(hists, labels, vocab)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mnist_paths():
    if not MNIST_IMAGES.exists():
        pytest.skip("bundled MNIST subset missing")
    return MNIST_IMAGES, MNIST_LABELS


# Acceptance criteria report: one PASS/FAIL line per criterion at the end of the run.

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        prev = _ACCEPTANCE.get(number)
        if prev is None or prev[1] == "PASS":
            _ACCEPTANCE[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
