"""Ground-truth evaluation: matched clustering error, purity, perplexity.

Cluster matching solves an optimal assignment between inferred and true
centers on the Euclidean-distance cost matrix; unequal set sizes are handled
by padding the matrix to square with a large constant (1e3 times the largest
finite distance) so that real pairs are always preferred, and the padding
penalty is reported separately from the matched mean squared error.

Held-out perplexity evaluates S chain snapshots: each test document is folded
in per chain by clamped Gibbs passes (topic-word table frozen), the smoothed
document-topic and topic-word estimates of every chain are mixture-averaged
inside the log, and the per-document mean per-token log score is exponentiated.
Fold-in replays a common random stream across chains, so averaging identical
chains changes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import UnknownWordError
from .models.lda import LdaState, topic_word_estimate, validate_word_ids
from .rng import RandomStream

PAD_FACTOR = 1e3

NORMALIZATIONS = ("per_document", "total_tokens")


# ---------------------------------------------------------------------------
# optimal assignment
# ---------------------------------------------------------------------------


def _optimal_cost(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def hungarian_min_cost(cost) -> tuple[tuple[int, ...], float]:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns (perm, total) where perm[i] is the column assigned to row i and
    the permutation is the lexicographically smallest one attaining the
    minimum (ties are common with integer-valued costs).
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
        raise ValueError(f"cost must be a nonempty square matrix, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost entries must be finite")
    k = c.shape[0]
    best = _optimal_cost(c)
    tol = 1e-9 * (1.0 + abs(best))
    # rebuild the lexicographically smallest optimizer: fix rows in order,
    # taking the smallest column that still completes to an optimal total
    perm: list[int] = []
    avail = list(range(k))
    prefix = 0.0
    for i in range(k):
        for j in avail:
            rest_cols = [col for col in avail if col != j]
            rest = _optimal_cost(c[np.ix_(range(i + 1, k), rest_cols)])
            if prefix + c[i, j] + rest <= best + tol:
                perm.append(j)
                prefix += float(c[i, j])
                avail.remove(j)
                break
    return tuple(perm), best


@dataclass(frozen=True)
class CenterMatch:
    """Matched center pairs plus what the padding absorbed."""

    pairs: tuple[tuple[int, int], ...]  # (inferred index, true index)
    mse: float
    padding_penalty: float
    n_unmatched: int


def match_centers(inferred, true) -> CenterMatch:
    """Optimal matching of inferred to true centers on Euclidean distance.

    ``mse`` is the mean squared distance over the min(K_inf, K_true) matched
    pairs; with unequal counts the excess clusters match padding entries whose
    total cost is reported as ``padding_penalty`` and excluded from the mse.
    """
    inf_c = np.atleast_2d(np.asarray(inferred, dtype=float))
    true_c = np.atleast_2d(np.asarray(true, dtype=float))
    if inf_c.size == 0 or true_c.size == 0:
        raise ValueError("center sets must be nonempty")
    if inf_c.shape[1] != true_c.shape[1]:
        raise ValueError(f"center dimensions differ: {inf_c.shape[1]} vs {true_c.shape[1]}")
    if not (np.all(np.isfinite(inf_c)) and np.all(np.isfinite(true_c))):
        raise ValueError("centers must be finite")
    ni, nt = inf_c.shape[0], true_c.shape[0]
    dist = np.sqrt(((inf_c[:, None, :] - true_c[None, :, :]) ** 2).sum(axis=-1))
    side = max(ni, nt)
    pad = PAD_FACTOR * max(float(dist.max()), 1.0)
    c = np.full((side, side), pad)
    c[:ni, :nt] = dist
    perm, _ = hungarian_min_cost(c)
    pairs = []
    padding = 0.0
    for i, j in enumerate(perm):
        if i < ni and j < nt:
            pairs.append((i, j))
        else:
            padding += pad
    sq = [float(dist[i, j] ** 2) for i, j in pairs]
    return CenterMatch(pairs=tuple(pairs), mse=float(np.mean(sq)),
                       padding_penalty=padding, n_unmatched=side - len(pairs))


def cluster_mse(inferred, true) -> float:
    """Mean squared Euclidean distance over optimally matched center pairs."""
    return match_centers(inferred, true).mse


# ---------------------------------------------------------------------------
# purity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContingencyTable:
    """Cluster-by-class co-occurrence counts."""

    counts: np.ndarray  # (n_clusters, n_classes)
    cluster_ids: np.ndarray
    class_ids: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_labels(cls, assignments, labels) -> "ContingencyTable":
        a = np.asarray(assignments).reshape(-1)
        b = np.asarray(labels).reshape(-1)
        if a.size == 0:
            raise ValueError("label vectors must be nonempty")
        if a.size != b.size:
            raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
        cluster_ids, ai = np.unique(a, return_inverse=True)
        class_ids, bi = np.unique(b, return_inverse=True)
        counts = np.zeros((cluster_ids.size, class_ids.size), dtype=np.int64)
        np.add.at(counts, (ai, bi), 1)
        return cls(counts=counts, cluster_ids=cluster_ids, class_ids=class_ids)


def purity(assignments, labels) -> float:
    """Weighted majority-class fraction: sum_i (N_i / N) max_j N_ij / N_i,
    which collapses to (1/N) sum_i max_j N_ij. In (0, 1]; 1 iff every cluster
    is class-pure."""
    table = ContingencyTable.from_labels(assignments, labels)
    return float(table.counts.max(axis=1).sum() / table.total)


# ---------------------------------------------------------------------------
# held-out perplexity
# ---------------------------------------------------------------------------


def _fold_in_theta(doc: np.ndarray, phi: np.ndarray, alpha: np.ndarray,
                   gen: np.random.Generator, n_passes: int) -> np.ndarray:
    """Smoothed topic proportions of one held-out document: token topics are
    Gibbs-sampled with the topic-word table frozen, counts read off at the
    end."""
    k = phi.shape[0]
    counts = np.zeros(k)
    z = np.empty(doc.size, dtype=np.int64)
    phi_doc = phi[:, doc]  # (K, n_d)
    for t in range(doc.size):  # sequential init, then full clamped passes
        wt = phi_doc[:, t] * (alpha + counts)
        cum = np.cumsum(wt)
        z[t] = min(int(np.searchsorted(cum, gen.random() * cum[-1], side="right")), k - 1)
        counts[z[t]] += 1
    for _ in range(n_passes):
        for t in range(doc.size):
            counts[z[t]] -= 1
            wt = phi_doc[:, t] * (alpha + counts)
            cum = np.cumsum(wt)
            z[t] = min(int(np.searchsorted(cum, gen.random() * cum[-1], side="right")), k - 1)
            counts[z[t]] += 1
    return (alpha + counts) / (alpha.sum() + doc.size)


def perplexity(test_docs, chains, rng: RandomStream, n_passes: int = 50,
               normalization: str = "per_document") -> float:
    """Held-out perplexity of ``test_docs`` under S chain snapshots.

    Per chain, each document's topic proportions come from clamped-Gibbs
    fold-in; the per-token word probability is the average over chains of
    theta-hat'phi-hat, averaged inside the log. ``normalization`` is
    "per_document" (mean over documents of the per-token mean log score,
    exponentiated) or "total_tokens" (single corpus-level token mean).
    Empty test documents are skipped.
    """
    chains = list(chains)
    if not chains:
        raise ValueError("need at least one chain snapshot")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    if n_passes < 0:
        raise ValueError(f"n_passes must be >= 0, got {n_passes}")
    if not isinstance(rng, RandomStream):
        raise TypeError("perplexity needs a RandomStream so chain fold-ins can replay a common stream")
    vocab = chains[0].vocab_size
    for st in chains:
        if not isinstance(st, LdaState):
            raise TypeError(f"chains must be LdaState snapshots, got {type(st).__name__}")
        if st.vocab_size != vocab or st.n_topics != chains[0].n_topics:
            raise ValueError("chain snapshots disagree on vocabulary or topic count")
    docs = [np.asarray(doc, dtype=np.int64).reshape(-1) for doc in test_docs]
    validate_word_ids(docs, vocab)
    docs = [doc for doc in docs if doc.size]
    if not docs:
        raise ValueError("test corpus has no tokens")

    # the estimator is defined on counts: both plug-ins are the smoothed
    # count ratios regardless of whether the chain carries an explicit beta
    phis = [topic_word_estimate(st) for st in chains]
    tiny = np.finfo(float).tiny
    doc_means = []
    total_log = 0.0
    total_tokens = 0
    for doc in docs:
        q = np.zeros(doc.size)
        for st, phi in zip(chains, phis):
            # common random numbers across chains: identical snapshots must
            # fold in identically, so averaging them is a no-op
            gen = RandomStream(rng.seed, rng.stream).generator
            theta = _fold_in_theta(doc, phi, st.alpha, gen, n_passes)
            q += theta @ phi[:, doc]
        logq = np.log(np.maximum(q / len(chains), tiny))
        doc_means.append(float(logq.mean()))
        total_log += float(logq.sum())
        total_tokens += doc.size
    if normalization == "per_document":
        return math.exp(-float(np.mean(doc_means)))
    return math.exp(-total_log / total_tokens)
