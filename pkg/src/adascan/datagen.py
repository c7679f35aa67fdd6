"""Synthetic data at the experiment scales, plus the plain-text file formats.

All generators are deterministic functions of an explicit random stream. The
file formats are whitespace-delimited text with LF endings: labeled feature
matrices carry an ``n d`` header (d features per row plus one label column),
point clouds carry an ``N dim`` header with an optional trailing ground-truth
label column, and corpora are one document per line of integer word ids.
"""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError, UnknownWordError
from .rng import as_generator

PROBIT_W_PATTERN = (2.0, -3.0, 0.0, 1.5)
DOC_LENGTH_RANGE = (60, 120)
TEST_DOC_STRIDE = 10  # every stride-th document (index % stride == stride-1) held out


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def default_probit_weights(d: int) -> np.ndarray:
    """The pattern (2, -3, 0, 1.5) cycled out to d entries."""
    return np.array([PROBIT_W_PATTERN[j % len(PROBIT_W_PATTERN)] for j in range(d)])


def gen_probit_data(n: int, d: int, w_true=None, noise_sd: float = 1.0, rng=None):
    """Binary-response design: X rows are i.i.d. standard normal and
    y = sign(X w_true + noise), with sign(0) mapped to +1. Returns
    (X, y, w_true)."""
    if not (n >= d >= 1):
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    gen = as_generator(rng)
    w = default_probit_weights(d) if w_true is None else np.asarray(w_true, dtype=float)
    if w.shape != (d,):
        raise ValueError(f"w_true must have shape ({d},), got {w.shape}")
    X = gen.standard_normal((n, d))
    margin = X @ w + noise_sd * gen.standard_normal(n)
    y = np.where(margin >= 0, 1.0, -1.0)
    return X, y, w


def gmm_centers(k: int, dim: int, separation: float) -> np.ndarray:
    """K cluster centers: evenly spaced on a circle of radius ``separation``
    in the first two coordinates, or on a line when dim == 1."""
    centers = np.zeros((k, dim))
    if dim == 1:
        centers[:, 0] = separation * (np.arange(k) - (k - 1) / 2.0)
    else:
        angles = 2.0 * np.pi * np.arange(k) / k
        centers[:, 0] = separation * np.cos(angles)
        centers[:, 1] = separation * np.sin(angles)
    return centers


def gen_gmm_data(n: int, k: int, dim: int, separation: float = 10.0, rng=None):
    """Gaussian mixture sample with unit isotropic components and near-equal
    cluster sizes (the remainder goes to the lowest-index clusters). Returns
    (X, labels, centers)."""
    if k < 1 or n < k or dim < 1:
        raise ValueError(f"need n >= k >= 1 and dim >= 1, got n={n}, k={k}, dim={dim}")
    gen = as_generator(rng)
    centers = gmm_centers(k, dim, separation)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    labels = np.repeat(np.arange(k), sizes)
    X = centers[labels] + gen.standard_normal((n, dim))
    return X, labels, centers


def gen_synthetic_corpus(n_docs: int, n_topics: int, vocab_size: int,
                         length_range=DOC_LENGTH_RANGE, alpha: float = 0.5,
                         eta: float = 0.05, rng=None):
    """Admixture corpus: beta_k ~ Dir(eta 1_V), theta_d ~ Dir(alpha 1_K),
    document lengths uniform over ``length_range`` inclusive; every
    ``TEST_DOC_STRIDE``-th document is held out. Returns
    (train_docs, test_docs, beta_true)."""
    if n_docs < 1 or n_topics < 1 or vocab_size < 1:
        raise ValueError("all counts must be positive")
    lo, hi = int(length_range[0]), int(length_range[1])
    if not 1 <= lo <= hi:
        raise ValueError(f"bad document length range {length_range}")
    if alpha <= 0 or eta <= 0:
        raise ValueError("alpha and eta must be positive")
    gen = as_generator(rng)
    beta = gen.dirichlet(np.full(vocab_size, eta), size=n_topics)
    train, test = [], []
    for d in range(n_docs):
        theta = gen.dirichlet(np.full(n_topics, alpha))
        length = int(gen.integers(lo, hi + 1))
        z = gen.choice(n_topics, size=length, p=theta)
        words = np.array([gen.choice(vocab_size, p=beta[kk]) for kk in z],
                         dtype=np.int64)
        (test if d % TEST_DOC_STRIDE == TEST_DOC_STRIDE - 1 else train).append(words)
    return train, test, beta


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _parse_fields(line: str, path, ln: int, want: int | None = None):
    parts = line.split()
    if want is not None and len(parts) != want:
        raise DataFormatError(f"expected {want} fields, found {len(parts)}",
                              path=str(path), line=ln)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise DataFormatError(str(exc), path=str(path), line=ln) from None


def _read_header(fh, path, n_fields: int = 2) -> list[int]:
    line = fh.readline()
    if not line.strip():
        raise DataFormatError("missing header row", path=str(path), line=1)
    parts = line.split()
    if len(parts) != n_fields:
        raise DataFormatError(f"header must have {n_fields} fields, found {len(parts)}",
                              path=str(path), line=1)
    try:
        vals = [int(p) for p in parts]
    except ValueError as exc:
        raise DataFormatError(str(exc), path=str(path), line=1) from None
    if any(v < 0 for v in vals):
        raise DataFormatError("header counts must be nonnegative", path=str(path), line=1)
    return vals


def save_probit_data(path, X, y) -> None:
    """Header ``n d`` then n rows of d features followed by the label."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{n} {d}\n")
        for i in range(n):
            fields = [f"{v:.17g}" for v in X[i]] + [f"{y[i]:.17g}"]
            fh.write(" ".join(fields) + "\n")


def load_probit_data(path):
    """Inverse of ``save_probit_data``; returns (X, y)."""
    with open(path) as fh:
        n, d = _read_header(fh, path)
        X = np.empty((n, d))
        y = np.empty(n)
        row = 0
        for ln, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if row >= n:
                raise DataFormatError(f"more than the declared {n} rows",
                                      path=str(path), line=ln)
            vals = _parse_fields(line, path, ln, want=d + 1)
            X[row] = vals[:d]
            y[row] = vals[d]
            row += 1
    if row != n:
        raise DataFormatError(f"expected {n} rows, found {row}", path=str(path))
    return X, y


def save_points(path, X, labels=None) -> None:
    """Header ``N dim`` then N rows, each dim coordinates plus an optional
    trailing integer ground-truth label."""
    X = np.asarray(X, dtype=float)
    n, dim = X.shape
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{n} {dim}\n")
        for i in range(n):
            fields = [f"{v:.17g}" for v in X[i]]
            if labels is not None:
                fields.append(str(int(labels[i])))
            fh.write(" ".join(fields) + "\n")


def load_points(path):
    """Inverse of ``save_points``; returns (X, labels-or-None). Rows must all
    carry dim fields, or all dim + 1 when the label column is present."""
    with open(path) as fh:
        n, dim = _read_header(fh, path)
        X = np.empty((n, dim))
        labels: np.ndarray | None = None
        width: int | None = None
        row = 0
        for ln, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if row >= n:
                raise DataFormatError(f"more than the declared {n} rows",
                                      path=str(path), line=ln)
            parts = line.split()
            if width is None:
                if len(parts) not in (dim, dim + 1):
                    raise DataFormatError(
                        f"expected {dim} or {dim + 1} fields, found {len(parts)}",
                        path=str(path), line=ln)
                width = len(parts)
                if width == dim + 1:
                    labels = np.empty(n, dtype=np.int64)
            vals = _parse_fields(line, path, ln, want=width)
            X[row] = vals[:dim]
            if labels is not None:
                labels[row] = int(vals[dim])
            row += 1
    if row != n:
        raise DataFormatError(f"expected {n} rows, found {row}", path=str(path))
    return X, labels


def save_corpus(path, docs) -> None:
    """One document per line: whitespace-separated integer word ids. Empty
    documents become empty lines."""
    with open(path, "w", newline="\n") as fh:
        for doc in docs:
            fh.write(" ".join(str(int(w)) for w in doc) + "\n")


def load_corpus(path, vocab_size: int | None = None):
    """Inverse of ``save_corpus``. With ``vocab_size``, out-of-range ids raise
    UnknownWordError; parse problems carry the offending line number."""
    docs = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.split()
            try:
                doc = np.array([int(p) for p in parts], dtype=np.int64)
            except ValueError as exc:
                raise DataFormatError(str(exc), path=str(path), line=ln) from None
            if np.any(doc < 0):
                raise DataFormatError("word ids must be nonnegative",
                                      path=str(path), line=ln)
            docs.append(doc)
    if vocab_size is not None:
        bad = set()
        for doc in docs:
            bad.update(int(w) for w in doc[doc >= vocab_size])
        if bad:
            raise UnknownWordError(bad)
    return docs


def save_doc_indices(path, indices) -> None:
    """One integer document index per line (the held-out set)."""
    with open(path, "w", newline="\n") as fh:
        for i in indices:
            fh.write(f"{int(i)}\n")


def load_doc_indices(path):
    idx = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                idx.append(int(line))
            except ValueError as exc:
                raise DataFormatError(str(exc), path=str(path), line=ln) from None
    return idx


def heldout_indices(n_docs: int) -> list[int]:
    """Document indices the generator's split holds out."""
    return [d for d in range(n_docs)
            if d % TEST_DOC_STRIDE == TEST_DOC_STRIDE - 1]


def interleave_corpus(train, test):
    """Inverse of the generator's split: weave the held-out documents back in
    at every ``TEST_DOC_STRIDE``-th position."""
    total = len(train) + len(test)
    if len(test) != len(heldout_indices(total)):
        raise ValueError(
            f"{len(test)} held-out docs cannot come from a corpus of {total}")
    tr, te = iter(train), iter(test)
    return [next(te) if d % TEST_DOC_STRIDE == TEST_DOC_STRIDE - 1 else next(tr)
            for d in range(total)]


def split_corpus(docs, test_indices):
    """Partition ``docs`` into (train, test) by the held-out index list."""
    test_set = set(int(i) for i in test_indices)
    bad = [i for i in test_set if not 0 <= i < len(docs)]
    if bad:
        raise ValueError(f"test indices out of range: {sorted(bad)}")
    train = [doc for i, doc in enumerate(docs) if i not in test_set]
    test = [doc for i, doc in enumerate(docs) if i in test_set]
    return train, test
