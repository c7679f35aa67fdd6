"""Independent numerical oracles the model tests aim at.

Everything here is derived directly from the closed-form posteriors, never
from the sampler code: lasso checks integrate the scale-mixture-marginalized
(w, sigma2) density on a grid, mixture checks enumerate partitions under the
CRP-times-marginal-likelihood posterior, and topic-model checks enumerate
token-assignment configurations under the collapsed Dirichlet-multinomial
joint.
"""

import itertools
import math

import numpy as np
from scipy.special import gammaln, multigammaln

# ---------------------------------------------------------------------------
# Bayesian lasso (linear mode): quadrature over the marginalized density
# ---------------------------------------------------------------------------


def lasso_marginal_logpdf(w, sigma2, X, y, lam):
    """log of the unnormalized posterior with the normal-mixture scales
    integrated out: the weights see a Laplace(lam/sigma) prior and sigma2 the
    improper (sigma2)^(-1/2) prior.

    w has shape (..., d); sigma2 broadcasts against the leading axes.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    n, d = X.shape
    resid = y - w @ X.T
    quad = np.sum(resid**2, axis=-1)
    return (-0.5 * (n + d + 1) * np.log(sigma2)
            - 0.5 * quad / sigma2
            - lam * np.sum(np.abs(w), axis=-1) / np.sqrt(sigma2))


def lasso_box_means(X, y, lam, w_grids, s2_grid):
    """Posterior means of (w, sigma2) restricted to the grid's bounding box,
    by trapezoid quadrature. Returns (mean_w vector, mean_sigma2).

    Restriction matters: on very small instances the untruncated sigma2 mean
    does not exist, so both quadrature and chain must average over the same
    box for the comparison to be meaningful. The w-dependent terms are formed
    once on the w mesh and combined with the sigma2 axis by broadcasting, so
    memory stays O(grid size) rather than O(grid size * n).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    grids_w = [np.asarray(g, dtype=float) for g in w_grids]
    s2 = np.asarray(s2_grid, dtype=float)
    n, d = X.shape
    mesh_w = np.meshgrid(*grids_w, indexing="ij")
    w_pts = np.stack(mesh_w, axis=-1)
    quad = np.sum((y - w_pts @ X.T) ** 2, axis=-1)
    absw = np.sum(np.abs(w_pts), axis=-1)
    logp = (-0.5 * (n + d + 1) * np.log(s2)
            - 0.5 * quad[..., None] / s2
            - lam * absw[..., None] / np.sqrt(s2))
    p = np.exp(logp - logp.max())

    def integrate(f):
        f = np.trapezoid(f, s2, axis=-1)
        for g in reversed(grids_w):
            f = np.trapezoid(f, g, axis=-1)
        return f

    z = integrate(p)
    mean_w = np.array([integrate(p * mesh_w[j][..., None]) / z for j in range(d)])
    mean_s2 = integrate(p * s2) / z
    return mean_w, float(mean_s2)


# ---------------------------------------------------------------------------
# assignment problem: exhaustive minimum over permutations
# ---------------------------------------------------------------------------


def brute_force_assignment(cost):
    """Exhaustive minimum-cost perfect matching of a square matrix.

    Scans permutations in lexicographic order keeping strict improvements, so
    ties resolve to the lexicographically smallest minimizer.
    """
    c = np.asarray(cost, dtype=float)
    k = c.shape[0]
    best_perm, best_cost = None, math.inf
    for perm in itertools.permutations(range(k)):
        total = 0.0
        for i in range(k):
            total += float(c[i, perm[i]])
        if total < best_cost:
            best_cost, best_perm = total, perm
    return best_perm, best_cost


# ---------------------------------------------------------------------------
# DP mixture: exact posterior over partitions of a tiny data set
# ---------------------------------------------------------------------------


def set_partitions(items):
    """All set partitions of ``items`` (Bell(n) of them), each a list of lists."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def crp_log_prob(block_sizes, alpha, n):
    """log CRP probability of a partition with the given block sizes."""
    lp = len(block_sizes) * math.log(alpha)
    for s in block_sizes:
        lp += gammaln(s)
    lp += gammaln(alpha) - gammaln(alpha + n)
    return lp


def niw_log_marginal(points, m0, k0, nu0, psi0):
    """log marginal likelihood of ``points`` under the normal inverse-Wishart
    conjugate prior (mean m0, scale k0, dof nu0, scale matrix psi0)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    xbar = pts.mean(axis=0)
    centered = pts - xbar
    s_matrix = centered.T @ centered
    kn = k0 + n
    nun = nu0 + n
    dev = (xbar - m0).reshape(d, 1)
    psin = psi0 + s_matrix + (k0 * n / kn) * (dev @ dev.T)
    return (-0.5 * n * d * math.log(math.pi)
            + 0.5 * d * (math.log(k0) - math.log(kn))
            + 0.5 * nu0 * np.linalg.slogdet(psi0)[1]
            - 0.5 * nun * np.linalg.slogdet(psin)[1]
            + multigammaln(0.5 * nun, d) - multigammaln(0.5 * nu0, d))


def dpmm_partition_posterior(X, alpha, m0, k0, nu0, psi0):
    """Exact posterior over set partitions of the rows of X: returns a dict
    mapping a canonical partition key to its probability."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    keys, logps = [], []
    for part in set_partitions(range(n)):
        lp = crp_log_prob([len(b) for b in part], alpha, n)
        for block in part:
            lp += niw_log_marginal(X[block], m0, k0, nu0, psi0)
        keys.append(partition_key([tuple(b) for b in part]))
        logps.append(lp)
    logps = np.array(logps)
    probs = np.exp(logps - logps.max())
    probs /= probs.sum()
    return dict(zip(keys, probs))


def partition_key(blocks):
    """Canonical hashable form of a partition: sorted tuple of sorted tuples."""
    return tuple(sorted(tuple(sorted(b)) for b in blocks))


def assignments_to_partition_key(z):
    """Partition key induced by an assignment vector (labels are arbitrary)."""
    blocks = {}
    for i, zi in enumerate(z):
        blocks.setdefault(zi, []).append(i)
    return partition_key(blocks.values())


# ---------------------------------------------------------------------------
# LDA: exact posterior over token-topic configurations of a tiny corpus
# ---------------------------------------------------------------------------


def lda_config_posterior(docs, n_topics, vocab_size, alpha, eta):
    """Exact collapsed posterior over all K^T topic assignments of a corpus.

    ``docs`` is a list of word-id lists. Returns a dict mapping a flat
    assignment tuple (tokens in document order) to its probability, using the
    Dirichlet-multinomial collapsed joint:

        p(z) propto prod_d [prod_k Gamma(alpha + n_kd) / Gamma(K alpha + n_d)]
                  * prod_k [prod_w Gamma(eta + n_wk) / Gamma(V eta + n_k)]

    (document-constant and corpus-constant Gamma factors drop out in the
    normalization).
    """
    flat_words = [w for doc in docs for w in doc]
    doc_of = [j for j, doc in enumerate(docs) for _ in doc]
    n_tokens = len(flat_words)
    n_docs = len(docs)
    configs, logps = [], []
    for z in itertools.product(range(n_topics), repeat=n_tokens):
        n_kd = np.zeros((n_topics, n_docs))
        n_wk = np.zeros((vocab_size, n_topics))
        for tok, k in enumerate(z):
            n_kd[k, doc_of[tok]] += 1
            n_wk[flat_words[tok], k] += 1
        lp = float(np.sum(gammaln(alpha + n_kd)))
        lp += float(np.sum(gammaln(eta + n_wk)))
        lp -= float(np.sum(gammaln(vocab_size * eta + n_wk.sum(axis=0))))
        configs.append(z)
        logps.append(lp)
    logps = np.array(logps)
    probs = np.exp(logps - logps.max())
    probs /= probs.sum()
    return dict(zip(configs, probs))
