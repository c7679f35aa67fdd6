"""Dirichlet-process Gaussian mixture with a conjugate NIW base measure.

Assignments follow the Chinese-restaurant-process prior: removing point i,
an existing cluster k attracts it with weight N_{k,-i} * (data term) and a
fresh cluster with weight alpha * (data term). Two modes differ in the data
term and in what the global block does:

* ``collapsed``: data term is the NIW posterior predictive (a multivariate
  Student t) given the cluster's current members; nothing is instantiated and
  the global update is a no-op. This is the exactness workhorse the
  enumeration oracles check.
* ``instantiated``: every live cluster carries explicit (mu_k, Sigma_k); the
  data term is the Gaussian density at those parameters, a fresh cluster is
  weighted by the prior predictive and given parameters drawn from the prior
  when accepted, and the global update redraws every cluster's parameters
  from its NIW posterior. This is the variant whose global updates the
  mini-batch scheduler amortizes.

Cluster ids come from a monotone counter and are never reused, so a cluster
id appearing twice in a trace always means the same cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import invwishart

from ..errors import NotPositiveDefiniteError
from ..rng import as_generator, chol_or_raise, sample_categorical_log, sample_mvn
from ..scan import GibbsModel

MODES = ("collapsed", "instantiated")

LOG_2PI = math.log(2.0 * math.pi)

_LGAMMA_RATIO_CACHE: dict[float, float] = {}


def _t_lgamma_ratio(df: float) -> float:
    """lgamma((df+1)/2) - lgamma(df/2), cached: collapsed 1-dim runs hit the
    same handful of degrees of freedom millions of times."""
    v = _LGAMMA_RATIO_CACHE.get(df)
    if v is None:
        v = math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df)
        _LGAMMA_RATIO_CACHE[df] = v
    return v


@dataclass(frozen=True)
class NiwPrior:
    """Normal inverse-Wishart hyperparameters (m0, k0, nu0, psi0)."""

    m0: np.ndarray
    k0: float
    nu0: float
    psi0: np.ndarray

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=float).reshape(-1)
        psi0 = np.asarray(self.psi0, dtype=float)
        d = m0.size
        if psi0.shape != (d, d):
            raise ValueError(f"psi0 must be {d}x{d}, got {psi0.shape}")
        if not self.k0 > 0:
            raise ValueError(f"k0 must be positive, got {self.k0}")
        if not self.nu0 > d - 1:
            raise ValueError(f"nu0 must exceed dim - 1 = {d - 1}, got {self.nu0}")
        if not np.allclose(psi0, psi0.T):
            raise ValueError("psi0 must be symmetric")
        chol_or_raise(psi0, "psi0")
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "psi0", psi0)

    @property
    def dim(self) -> int:
        return self.m0.size

    @classmethod
    def from_data(cls, X, k0: float = 0.01, nu_extra: float = 3.0) -> "NiwPrior":
        """Weak data-anchored default: m0 = mean, psi0 = covariance,
        nu0 = dim + nu_extra."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1]
        cov = np.cov(X, rowvar=False).reshape(d, d)
        return cls(m0=X.mean(axis=0), k0=k0, nu0=d + nu_extra, psi0=cov)

    def posterior(self, n: int, s: np.ndarray, outer: np.ndarray):
        """NIW posterior (mn, kn, nun, psin) given n points with sum ``s`` and
        raw second moment ``outer`` = sum of x x'."""
        kn = self.k0 + n
        nun = self.nu0 + n
        xbar = s / n
        scatter = outer - np.outer(s, xbar)  # sum (x - xbar)(x - xbar)'
        dev = xbar - self.m0
        psin = self.psi0 + scatter + (self.k0 * n / kn) * np.outer(dev, dev)
        mn = (self.k0 * self.m0 + s) / kn
        return mn, kn, nun, psin


@dataclass
class ClusterStats:
    """Incremental sufficient statistics of one cluster."""

    n: int
    s: np.ndarray
    outer: np.ndarray

    @classmethod
    def empty(cls, d: int) -> "ClusterStats":
        return cls(0, np.zeros(d), np.zeros((d, d)))

    def add(self, x: np.ndarray) -> None:
        self.n += 1
        self.s += x
        self.outer += np.outer(x, x)

    def remove(self, x: np.ndarray) -> None:
        self.n -= 1
        self.s -= x
        self.outer -= np.outer(x, x)

    def copy(self) -> "ClusterStats":
        return ClusterStats(self.n, self.s.copy(), self.outer.copy())


@dataclass
class GaussParams:
    """Instantiated cluster parameters with cached density pieces."""

    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray = field(init=False)
    logdet: float = field(init=False)

    def __post_init__(self):
        self.chol = chol_or_raise(self.sigma, "cluster covariance")
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def logpdf(self, x: np.ndarray) -> float:
        v = solve_triangular(self.chol, x - self.mu, lower=True)
        return -0.5 * (x.size * LOG_2PI + self.logdet + float(v @ v))

    def copy(self) -> "GaussParams":
        return GaussParams(self.mu.copy(), self.sigma.copy())


@dataclass
class DpmmState:
    X: np.ndarray
    assignments: np.ndarray
    clusters: dict[int, ClusterStats]
    params: dict[int, GaussParams]
    alpha: float
    prior: NiwPrior
    next_id: int
    # per-point prior-predictive log densities, filled lazily (X and the
    # prior are fixed for the life of a state, so entries never go stale)
    prior_pred_cache: dict[int, float] = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def copy(self) -> "DpmmState":
        return DpmmState(
            X=self.X, assignments=self.assignments.copy(),
            clusters={k: c.copy() for k, c in self.clusters.items()},
            params={k: p.copy() for k, p in self.params.items()},
            alpha=self.alpha, prior=self.prior, next_id=self.next_id,
            prior_pred_cache=dict(self.prior_pred_cache))


def crp_weights(state: DpmmState, i: int) -> tuple[list[int], np.ndarray]:
    """Normalized prior assignment weights for point i: per existing cluster
    N_{k,-i} / (alpha + N - 1), plus alpha / (alpha + N - 1) for a new one
    (last entry). Assumes i currently counted in its cluster."""
    zi = int(state.assignments[i])
    ids = sorted(state.clusters)
    n = state.assignments.size
    w = np.empty(len(ids) + 1)
    for j, k in enumerate(ids):
        w[j] = state.clusters[k].n - (1 if k == zi else 0)
    w[-1] = state.alpha
    return ids, w / (state.alpha + n - 1)


def predictive_logdensity(stats: ClusterStats | None, prior: NiwPrior, x) -> float:
    """Log NIW posterior-predictive density at x: Student t with nun - d + 1
    degrees of freedom, location mn, scale psin (kn + 1) / (kn (nun - d + 1)).
    ``stats=None`` (or an empty cluster) gives the prior predictive."""
    x = np.asarray(x, dtype=float).reshape(-1)
    d = prior.dim
    if stats is None or stats.n == 0:
        mn, kn, nun = prior.m0, prior.k0, prior.nu0
        psin = prior.psi0
    else:
        mn, kn, nun, psin = prior.posterior(stats.n, stats.s, stats.outer)
    df = nun - d + 1
    scale_factor = (kn + 1.0) / (kn * df)
    if d == 1:
        # scalar path: this is the hot loop of collapsed runs
        s2 = float(psin[0, 0]) * scale_factor
        if s2 <= 0:
            raise NotPositiveDefiniteError(0, "posterior scatter is not positive")
        dx = float(x[0]) - float(mn[0])
        return (math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df)
                - 0.5 * math.log(df * math.pi * s2)
                - 0.5 * (df + 1) * math.log1p(dx * dx / (df * s2)))
    scale = psin * scale_factor
    L = chol_or_raise(scale, "predictive scale")
    v = solve_triangular(L, x - mn, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return (math.lgamma(0.5 * (df + d)) - math.lgamma(0.5 * df)
            - 0.5 * d * math.log(df * math.pi) - 0.5 * logdet
            - 0.5 * (df + d) * math.log1p(float(v @ v) / df))


def sample_niw(prior_or_params, gen: np.random.Generator):
    """(mu, Sigma) with Sigma ~ InvWishart(nu, psi), mu ~ N(m, Sigma / k)."""
    m, k, nu, psi = prior_or_params
    sigma = np.atleast_2d(invwishart.rvs(df=nu, scale=psi, random_state=gen))
    mu = sample_mvn(m, sigma / k, gen)
    return mu, sigma


def log_marginal_likelihood(stats: ClusterStats, prior: NiwPrior) -> float:
    """Log marginal likelihood of one cluster's members under the NIW prior
    (ratio of prior to posterior normalizers); used for monitoring."""
    from scipy.special import multigammaln

    d = prior.dim
    mn, kn, nun, psin = prior.posterior(stats.n, stats.s, stats.outer)
    return (-0.5 * stats.n * d * math.log(math.pi)
            + 0.5 * d * (math.log(prior.k0) - math.log(kn))
            + 0.5 * prior.nu0 * np.linalg.slogdet(prior.psi0)[1]
            - 0.5 * nun * np.linalg.slogdet(psin)[1]
            + multigammaln(0.5 * nun, d) - multigammaln(0.5 * prior.nu0, d))


class DpNormalMixture(GibbsModel):
    """Scan-core adapter for the DP Gaussian mixture.

    ``verify_every > 0`` recomputes the sufficient statistics from scratch
    every that many global updates and raises if the incremental tables have
    drifted; tests and long experiment runs turn it on.
    """

    def __init__(self, mode: str = "instantiated", verify_every: int = 0):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.verify_every = int(verify_every)
        self._global_calls = 0

    # -- construction -----------------------------------------------------

    def initial_state(self, X, alpha: float = 1.0, prior: NiwPrior | None = None,
                      rng=None, init: str = "single") -> DpmmState:
        """Build a fresh state. ``init`` is "single" (one big cluster),
        "singletons" (one cluster per point), or an assignment vector.
        Instantiated mode draws initial cluster parameters from each
        cluster's NIW posterior and therefore needs ``rng``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, d = X.shape
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if prior is None:
            prior = NiwPrior.from_data(X)
        if prior.dim != d:
            raise ValueError(f"prior dimension {prior.dim} does not match data dimension {d}")
        if isinstance(init, str):
            if init == "single":
                assignments = np.zeros(n, dtype=np.int64)
            elif init == "singletons":
                assignments = np.arange(n, dtype=np.int64)
            else:
                raise ValueError(f"unknown init {init!r}")
        else:
            assignments = np.asarray(init, dtype=np.int64).copy()
            if assignments.shape != (n,):
                raise ValueError(f"init assignments must have shape ({n},)")
        clusters: dict[int, ClusterStats] = {}
        for i in range(n):
            k = int(assignments[i])
            if k not in clusters:
                clusters[k] = ClusterStats.empty(d)
            clusters[k].add(X[i])
        state = DpmmState(X=X, assignments=assignments, clusters=clusters,
                          params={}, alpha=float(alpha), prior=prior,
                          next_id=int(assignments.max()) + 1)
        if self.mode == "instantiated":
            if rng is None:
                raise ValueError("instantiated mode needs rng to draw initial parameters")
            self._redraw_all_params(state, as_generator(rng))
        return state

    # -- scan-core interface ----------------------------------------------

    def num_local_units(self, state: DpmmState) -> int:
        return state.assignments.size

    def local_update(self, state: DpmmState, index: int, gen) -> None:
        gen = as_generator(gen)
        if self.mode == "collapsed" and state.X.shape[1] == 1:
            self._local_update_collapsed_1d(state, index, gen)
            return
        self._local_update_general(state, index, gen)

    def _local_update_general(self, state: DpmmState, index: int,
                              gen: np.random.Generator) -> None:
        x = state.X[index]
        old = int(state.assignments[index])
        stats = state.clusters[old]
        stats.remove(x)
        if stats.n == 0:
            del state.clusters[old]
            state.params.pop(old, None)

        ids = sorted(state.clusters)
        logw = np.empty(len(ids) + 1)
        if self.mode == "collapsed":
            for j, k in enumerate(ids):
                c = state.clusters[k]
                logw[j] = math.log(c.n) + predictive_logdensity(c, state.prior, x)
        else:
            for j, k in enumerate(ids):
                logw[j] = math.log(state.clusters[k].n) + state.params[k].logpdf(x)
        logw[-1] = math.log(state.alpha) + self._prior_predictive(state, index)

        choice = sample_categorical_log(logw, gen)
        if choice == len(ids):
            new = state.next_id
            state.next_id += 1
            state.clusters[new] = ClusterStats.empty(x.size)
            if self.mode == "instantiated":
                mu, sigma = sample_niw(
                    (state.prior.m0, state.prior.k0, state.prior.nu0, state.prior.psi0), gen)
                state.params[new] = GaussParams(mu, sigma)
        else:
            new = ids[choice]
        state.clusters[new].add(x)
        state.assignments[index] = new

    def _local_update_collapsed_1d(self, state: DpmmState, index: int,
                                   gen: np.random.Generator) -> None:
        # Scalar mirror of the general collapsed path. Long exact-oracle runs
        # spend nearly all their time here, so this avoids numpy temporaries;
        # the math (and the single uniform consumed) is identical.
        x0 = float(state.X[index, 0])
        old = int(state.assignments[index])
        stats = state.clusters[old]
        stats.n -= 1
        stats.s[0] -= x0
        stats.outer[0, 0] -= x0 * x0
        if stats.n == 0:
            del state.clusters[old]

        prior = state.prior
        m0 = float(prior.m0[0])
        k0, nu0 = prior.k0, prior.nu0
        psi0 = float(prior.psi0[0, 0])
        ids = sorted(state.clusters)
        logw = []
        for k in ids:
            c = state.clusters[k]
            n = c.n
            s = float(c.s[0])
            kn = k0 + n
            df = nu0 + n  # d = 1: t dof is nun - d + 1 = nun
            xbar = s / n
            dev = xbar - m0
            psin = psi0 + (float(c.outer[0, 0]) - s * xbar) + (k0 * n / kn) * (dev * dev)
            s2 = psin * ((kn + 1.0) / (kn * df))
            if s2 <= 0:
                raise NotPositiveDefiniteError(0, f"cluster {k}: posterior scatter not positive")
            dx = x0 - (k0 * m0 + s) / kn
            t_logpdf = (_t_lgamma_ratio(df)
                        - 0.5 * math.log(df * math.pi * s2)
                        - 0.5 * (df + 1) * math.log1p(dx * dx / (df * s2)))
            logw.append(math.log(n) + t_logpdf)
        logw.append(math.log(state.alpha) + self._prior_predictive(state, index))

        mx = max(logw)
        total = 0.0
        cum = []
        for lw in logw:
            total += math.exp(lw - mx)
            cum.append(total)
        u = gen.random() * total
        choice = 0
        while choice < len(cum) - 1 and cum[choice] <= u:
            choice += 1

        if choice == len(ids):
            new = state.next_id
            state.next_id += 1
            state.clusters[new] = ClusterStats.empty(1)
        else:
            new = ids[choice]
        c = state.clusters[new]
        c.n += 1
        c.s[0] += x0
        c.outer[0, 0] += x0 * x0
        state.assignments[index] = new

    def _prior_predictive(self, state: DpmmState, index: int) -> float:
        v = state.prior_pred_cache.get(index)
        if v is None:
            v = predictive_logdensity(None, state.prior, state.X[index])
            state.prior_pred_cache[index] = v
        return v

    def global_update(self, state: DpmmState, gen) -> None:
        if self.mode == "instantiated":
            self._redraw_all_params(state, as_generator(gen))
        self._global_calls += 1
        if self.verify_every and self._global_calls % self.verify_every == 0:
            verify_stats(state)

    def summary(self, state: DpmmState) -> float:
        return float(len(state.clusters))

    def log_joint(self, state: DpmmState) -> float:
        """CRP log prior of the partition plus per-cluster NIW marginal
        likelihoods (parameters marginalized in either mode); monitoring only."""
        n = state.assignments.size
        lp = len(state.clusters) * math.log(state.alpha)
        lp += math.lgamma(state.alpha) - math.lgamma(state.alpha + n)
        for c in state.clusters.values():
            lp += math.lgamma(c.n)
            lp += log_marginal_likelihood(c, state.prior)
        return float(lp)

    # -- helpers ------------------------------------------------------------

    def _redraw_all_params(self, state: DpmmState, gen: np.random.Generator) -> None:
        state.params = {}
        for k in sorted(state.clusters):
            c = state.clusters[k]
            try:
                state.params[k] = GaussParams(*sample_niw(
                    state.prior.posterior(c.n, c.s, c.outer), gen))
            except NotPositiveDefiniteError as err:
                raise NotPositiveDefiniteError(err.pivot, f"cluster {k}: {err}") from err


def verify_stats(state: DpmmState, rtol: float = 1e-8) -> None:
    """Recompute sufficient statistics from assignments and compare with the
    incremental tables; raises ValueError on drift beyond ``rtol``."""
    d = state.X.shape[1]
    fresh: dict[int, ClusterStats] = {}
    for i in range(state.assignments.size):
        k = int(state.assignments[i])
        if k not in fresh:
            fresh[k] = ClusterStats.empty(d)
        fresh[k].add(state.X[i])
    if set(fresh) != set(state.clusters):
        raise ValueError(f"live cluster ids {sorted(state.clusters)} != "
                         f"recomputed {sorted(fresh)}")
    for k, c in fresh.items():
        inc = state.clusters[k]
        if inc.n != c.n:
            raise ValueError(f"cluster {k}: count {inc.n} != recomputed {c.n}")
        scale = max(1.0, float(np.abs(c.s).max()))
        if np.abs(inc.s - c.s).max() > rtol * scale:
            raise ValueError(f"cluster {k}: sum vector drifted")
        scale = max(1.0, float(np.abs(c.outer).max()))
        if np.abs(inc.outer - c.outer).max() > rtol * scale:
            raise ValueError(f"cluster {k}: second-moment table drifted")
