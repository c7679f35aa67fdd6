"""Latent Dirichlet allocation with document-level mini-batches.

Every token carries a topic id. The per-document proportions theta_d are
always handled inside the document update (count-collapsed in the conditional,
optionally refreshed by a Dirichlet draw after the sweep), so the only
parameter shared across batches is the topic-word table beta. Two modes:

* ``collapsed``: beta is integrated out as well; the token conditional is the
  usual product of smoothed word and document count ratios and the global
  update is a no-op. Small instances of this mode are checked against exact
  enumeration of all K^T assignment configurations.
* ``instantiated``: beta is explicit; the token conditional replaces the word
  ratio by beta_k[w] and the global update redraws every row as
  Dirichlet(eta + word-topic counts). This is the variant whose global cost
  the mini-batch scheduler amortizes.

The local unit seen by the scan core is the document, so N = D.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..errors import UnknownWordError
from ..rng import as_generator, sample_dirichlet
from ..scan import GibbsModel

MODES = ("collapsed", "instantiated")


def _hyper_vector(value, size: int, name: str) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = np.full(size, float(v))
    if v.shape != (size,):
        raise ValueError(f"{name} must be a scalar or length-{size} vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError(f"{name} entries must be positive and finite")
    return v


def validate_word_ids(docs, vocab_size: int) -> None:
    """Raise UnknownWordError listing every id outside [0, vocab_size)."""
    bad = set()
    for doc in docs:
        arr = np.asarray(doc)
        if arr.size:
            bad.update(int(w) for w in arr[(arr < 0) | (arr >= vocab_size)])
    if bad:
        raise UnknownWordError(bad)


@dataclass
class LdaState:
    """Token topics plus the count tables the conditionals read.

    ``n_kd`` is topics-by-documents, ``n_wk`` words-by-topics and ``n_k``
    tokens per topic; the three must always equal their recomputation from
    ``z`` (see ``verify_counts``). ``beta`` (rows summing to 1) exists only in
    instantiated mode, ``theta`` only when per-document draws are enabled.
    """

    docs: list[np.ndarray]
    z: list[np.ndarray]
    n_kd: np.ndarray
    n_wk: np.ndarray
    n_k: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    beta: np.ndarray | None = None
    theta: np.ndarray | None = None

    @property
    def n_topics(self) -> int:
        return self.alpha.size

    @property
    def vocab_size(self) -> int:
        return self.eta.size

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def n_tokens(self) -> int:
        return int(self.n_k.sum())

    def copy(self) -> "LdaState":
        return LdaState(
            docs=self.docs, z=[zd.copy() for zd in self.z],
            n_kd=self.n_kd.copy(), n_wk=self.n_wk.copy(), n_k=self.n_k.copy(),
            alpha=self.alpha, eta=self.eta,
            beta=None if self.beta is None else self.beta.copy(),
            theta=None if self.theta is None else self.theta.copy())


def collapsed_conditional(state: LdaState, d: int, t: int) -> np.ndarray:
    """Unnormalized topic weights for token t of document d with beta and
    theta integrated out, assuming the token is already decremented from the
    count tables: per topic k,

        (n_wk[w, k] + eta_w) / (n_k[k] + sum eta)
      * (n_kd[k, d] + alpha_k) / (n_d + sum alpha).
    """
    w = int(state.docs[d][t])
    word_part = (state.n_wk[w] + state.eta[w]) / (state.n_k + state.eta.sum())
    doc_counts = state.n_kd[:, d]
    doc_part = (doc_counts + state.alpha) / (doc_counts.sum() + state.alpha.sum())
    return word_part * doc_part


def doc_topic_estimate(state: LdaState) -> np.ndarray:
    """Smoothed per-document topic proportions (D, K):
    (alpha_k + n_kd) / (sum alpha + n_d)."""
    counts = state.n_kd.T  # (D, K)
    return (state.alpha + counts) / (state.alpha.sum() + counts.sum(axis=1, keepdims=True))


def topic_word_estimate(state: LdaState) -> np.ndarray:
    """Smoothed topic-word table (K, V): (eta_w + n_wk) / (sum eta + n_k)."""
    counts = state.n_wk.T  # (K, V)
    return (state.eta + counts) / (state.eta.sum() + state.n_k[:, None])


def verify_counts(state: LdaState) -> None:
    """Recompute all count tables from z and require exact integer equality,
    plus the marginal identity sum_d n_kd = n_k = sum_w n_wk per topic."""
    K, V, D = state.n_topics, state.vocab_size, state.n_docs
    n_kd = np.zeros((K, D), dtype=np.int64)
    n_wk = np.zeros((V, K), dtype=np.int64)
    for d, (doc, zd) in enumerate(zip(state.docs, state.z)):
        for w, k in zip(doc, zd):
            n_kd[k, d] += 1
            n_wk[w, k] += 1
    if not np.array_equal(n_kd, state.n_kd):
        raise ValueError("topic-document counts disagree with assignments")
    if not np.array_equal(n_wk, state.n_wk):
        raise ValueError("word-topic counts disagree with assignments")
    n_k = n_wk.sum(axis=0)
    if not np.array_equal(n_k, state.n_k):
        raise ValueError("per-topic totals disagree with assignments")
    if not (np.array_equal(state.n_kd.sum(axis=1), state.n_k)
            and np.array_equal(state.n_wk.sum(axis=0), state.n_k)):
        raise ValueError("count-table marginals are inconsistent")
    if np.any(state.n_kd < 0) or np.any(state.n_wk < 0):
        raise ValueError("negative counts")


class LdaTopicModel(GibbsModel):
    """Scan-core adapter for the topic model.

    ``resample_theta`` (instantiated mode only) draws theta_d from
    Dirichlet(alpha + document topic counts) after each document sweep;
    otherwise theta stays collapsed into the counts everywhere.
    """

    def __init__(self, mode: str = "instantiated", resample_theta: bool = False):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if resample_theta and mode != "instantiated":
            raise ValueError("resample_theta requires instantiated mode")
        self.mode = mode
        self.resample_theta = resample_theta

    # -- construction -----------------------------------------------------

    def initial_state(self, docs, n_topics: int, vocab_size: int, alpha=None,
                      eta=0.01, rng=None, init: str = "uniform") -> LdaState:
        """Build a state over ``docs`` (iterables of word ids in
        [0, vocab_size)). ``init`` is "uniform" (random topics, needs rng) or
        an explicit list of per-document topic vectors. ``alpha`` defaults to
        the common 50 / n_topics."""
        K = int(n_topics)
        V = int(vocab_size)
        if K < 1 or V < 1:
            raise ValueError(f"need n_topics >= 1 and vocab_size >= 1, got {K}, {V}")
        docs = [np.asarray(doc, dtype=np.int64).reshape(-1) for doc in docs]
        validate_word_ids(docs, V)
        alpha_v = _hyper_vector(50.0 / K if alpha is None else alpha, K, "alpha")
        eta_v = _hyper_vector(eta, V, "eta")

        if isinstance(init, str):
            if init != "uniform":
                raise ValueError(f"unknown init {init!r}")
            if rng is None:
                raise ValueError("random topic init needs rng")
            gen = as_generator(rng)
            z = [gen.integers(0, K, size=doc.size) for doc in docs]
        else:
            z = [np.asarray(zd, dtype=np.int64).reshape(-1) for zd in init]
            if len(z) != len(docs) or any(zd.size != doc.size for zd, doc in zip(z, docs)):
                raise ValueError("init topic vectors must match document lengths")
            if any(zd.size and (zd.min() < 0 or zd.max() >= K) for zd in z):
                raise ValueError(f"init topics must lie in [0, {K})")

        n_kd = np.zeros((K, len(docs)), dtype=np.int64)
        n_wk = np.zeros((V, K), dtype=np.int64)
        for d, (doc, zd) in enumerate(zip(docs, z)):
            for w, k in zip(doc, zd):
                n_kd[k, d] += 1
                n_wk[w, k] += 1
        state = LdaState(docs=docs, z=z, n_kd=n_kd, n_wk=n_wk,
                         n_k=n_wk.sum(axis=0), alpha=alpha_v, eta=eta_v)
        if self.mode == "instantiated":
            if rng is None:
                raise ValueError("instantiated mode needs rng to draw beta")
            gen = as_generator(rng)
            self._draw_beta(state, gen)
            if self.resample_theta:
                state.theta = np.vstack([
                    sample_dirichlet(state.alpha + state.n_kd[:, d], gen)
                    for d in range(len(docs))]) if docs else np.zeros((0, K))
        return state

    # -- scan-core interface ----------------------------------------------

    def num_local_units(self, state: LdaState) -> int:
        return state.n_docs

    def local_update(self, state: LdaState, index: int, gen) -> None:
        """Resample the topic of every token of one document in sequence."""
        gen = as_generator(gen)
        d = int(index)
        doc = state.docs[d]
        zd = state.z[d]
        n_kd_col = state.n_kd[:, d]
        collapsed = self.mode == "collapsed"
        beta = state.beta
        for t in range(doc.size):
            w = int(doc[t])
            k_old = int(zd[t])
            n_kd_col[k_old] -= 1
            state.n_wk[w, k_old] -= 1
            state.n_k[k_old] -= 1
            if collapsed:
                wt = collapsed_conditional(state, d, t)
            else:
                wt = beta[:, w] * (n_kd_col + state.alpha)
            # inline one-uniform categorical (first index with cumsum > u)
            cum = np.cumsum(wt)
            u = gen.random() * cum[-1]
            k_new = min(int(np.searchsorted(cum, u, side="right")), wt.size - 1)
            n_kd_col[k_new] += 1
            state.n_wk[w, k_new] += 1
            state.n_k[k_new] += 1
            zd[t] = k_new
        if self.resample_theta:
            state.theta[d] = sample_dirichlet(state.alpha + n_kd_col, gen)

    def global_update(self, state: LdaState, gen) -> None:
        if self.mode == "instantiated":
            self._draw_beta(state, as_generator(gen))

    def summary(self, state: LdaState) -> float:
        """Mean per-token log likelihood of the corpus under the current
        (theta, beta), falling back to smoothed count estimates for whichever
        of the two is not instantiated. Empty corpus gives 0."""
        total_tokens = state.n_tokens
        if total_tokens == 0:
            return 0.0
        theta = state.theta if state.theta is not None else doc_topic_estimate(state)
        beta = state.beta if state.beta is not None else topic_word_estimate(state)
        tiny = np.finfo(float).tiny
        total = 0.0
        for d, doc in enumerate(state.docs):
            if doc.size:
                p = theta[d] @ beta[:, doc]
                total += float(np.log(np.maximum(p, tiny)).sum())
        return total / total_tokens

    def log_joint(self, state: LdaState) -> float:
        """Collapsed log p(w, z) with theta and beta integrated out (valid in
        either mode); used for convergence monitoring."""
        a, e = state.alpha, state.eta
        n_d = state.n_kd.sum(axis=0)
        lp = state.n_docs * float(gammaln(a.sum()) - gammaln(a).sum())
        lp += float(gammaln(a[:, None] + state.n_kd).sum() - gammaln(a.sum() + n_d).sum())
        lp += state.n_topics * float(gammaln(e.sum()) - gammaln(e).sum())
        lp += float(gammaln(e[:, None] + state.n_wk).sum()
                    - gammaln(e.sum() + state.n_k).sum())
        return lp

    # -- helpers ------------------------------------------------------------

    def _draw_beta(self, state: LdaState, gen: np.random.Generator) -> None:
        K = state.n_topics
        state.beta = np.vstack([
            sample_dirichlet(state.eta + state.n_wk[:, k], gen) for k in range(K)])
