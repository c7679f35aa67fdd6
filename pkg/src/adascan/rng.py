"""Seeded random streams and the distribution draws used by the samplers.

Parameterizations are spelled out here once because the literature is
inconsistent:

* truncated normal: location ``mu``, scale ``sigma``, constrained to one side
  of zero (``side`` in ``{"nonnegative", "nonpositive"}``);
* inverse Gaussian IG(mu, lam): mean ``mu``, shape ``lam``, variance
  ``mu**3 / lam``;
* inverse gamma IGamma(shape, scale): X such that 1/X ~ Gamma(shape,
  rate=scale); mean ``scale / (shape - 1)`` for shape > 1;
* Dirichlet, categorical and multivariate normal follow the usual
  conventions.

All draws consume a ``numpy.random.Generator`` so that a fixed
``(seed, stream)`` pair replays byte-identical sequences.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import NotPositiveDefiniteError

TRUNC_TAIL_CUTOFF = 5.0
_SIDES = ("nonnegative", "nonpositive")


class RandomStream:
    """A replayable RNG stream identified by a (seed, stream) pair.

    Distinct pairs yield independent PCG64 streams; the same pair replays the
    same draw sequence on every run.
    """

    def __init__(self, seed: int, stream: int = 0):
        seed = int(seed)
        stream = int(stream)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream < 0:
            raise ValueError(f"stream id must be nonnegative, got {stream}")
        self.seed = seed
        self.stream = stream
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, stream: int) -> "RandomStream":
        """A sibling stream with the same seed and a different stream id."""
        return RandomStream(self.seed, stream)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream={self.stream})"


def as_generator(rng) -> np.random.Generator:
    """Accept either a RandomStream or a raw numpy Generator."""
    if isinstance(rng, RandomStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


def _trunc_lower_scalar(a: float, gen: np.random.Generator) -> float:
    # standard normal conditioned on z >= a
    if a <= TRUNC_TAIL_CUTOFF:
        # upper-tail inverse CDF; q in (0, Phi(-a)] avoids cancellation for any a
        q = ndtr(-a) * (1.0 - gen.random())
        return -float(ndtri(q))
    # exponential-proposal rejection for the far tail; acceptance stays near 1
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + gen.standard_exponential() / alpha
        w = z - alpha
        if gen.random() <= math.exp(-0.5 * w * w):
            return z


def _trunc_lower_vector(a: float, gen: np.random.Generator, size: int) -> np.ndarray:
    if a <= TRUNC_TAIL_CUTOFF:
        q = ndtr(-a) * (1.0 - gen.random(size))
        return -ndtri(q)
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    out = np.empty(size)
    need = np.arange(size)
    while need.size:
        z = a + gen.standard_exponential(need.size) / alpha
        accept = gen.random(need.size) <= np.exp(-0.5 * (z - alpha) ** 2)
        out[need[accept]] = z[accept]
        need = need[~accept]
    return out


def sample_truncated_normal(mu, sigma, side: str, rng, size: int | None = None):
    """Draw from N(mu, sigma^2) restricted to one side of zero.

    ``side="nonnegative"`` keeps x >= 0, ``side="nonpositive"`` keeps x <= 0.
    The easy regime uses the (cancellation-free) upper-tail inverse CDF; past a
    standardized cutoff of 5 an exponential-proposal rejection step takes over,
    so the tail regime (e.g. |mu|/sigma = 10 against the constraint) stays
    exact and never stalls.
    """
    mu = float(mu)
    sigma = float(sigma)
    if not (sigma > 0.0) or not math.isfinite(sigma) or not math.isfinite(mu):
        raise ValueError(f"require finite mu and sigma > 0, got mu={mu}, sigma={sigma}")
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}, got {side!r}")
    flip = side == "nonpositive"
    loc = -mu if flip else mu
    a = -loc / sigma  # standardized lower bound for x >= 0
    if size is None:
        z = _trunc_lower_scalar(a, as_generator(rng))
        x = loc + sigma * z
        x = max(x, 0.0)
        return -x if flip else x
    z = _trunc_lower_vector(a, as_generator(rng), int(size))
    x = np.maximum(loc + sigma * z, 0.0)
    return -x if flip else x


def sample_inverse_gaussian(mu, lam, rng, size: int | None = None):
    """Inverse Gaussian with mean ``mu`` and shape ``lam`` (variance mu^3/lam).

    Backed by the generator's Wald sampler, which implements the exact
    constant-time transformation method. Output is clamped strictly positive
    against underflow. ``mu``/``lam`` may be arrays (numpy broadcasting).
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(mu <= 0) or np.any(lam <= 0) or not (np.all(np.isfinite(mu)) and np.all(np.isfinite(lam))):
        raise ValueError("require finite mu > 0 and lam > 0")
    gen = as_generator(rng)
    if size is None and mu.ndim == 0 and lam.ndim == 0:
        return max(float(gen.wald(float(mu), float(lam))), np.finfo(float).tiny)
    shape = size if size is not None else np.broadcast(mu, lam).shape
    return np.maximum(gen.wald(mu, lam, shape), np.finfo(float).tiny)


def sample_inverse_gamma(shape, scale, rng, size: int | None = None):
    """Inverse gamma: X with 1/X ~ Gamma(shape, rate=scale); mean scale/(shape-1)."""
    shape = float(shape)
    scale = float(scale)
    if not (shape > 0 and scale > 0) or not (math.isfinite(shape) and math.isfinite(scale)):
        raise ValueError(f"require finite shape > 0 and scale > 0, got {shape}, {scale}")
    gen = as_generator(rng)
    g = gen.gamma(shape, 1.0 / scale, size)
    g = np.maximum(g, np.finfo(float).tiny)
    out = 1.0 / g
    return float(out) if size is None else out


def _first_bad_pivot(cov: np.ndarray) -> int:
    # first leading minor with nonpositive determinant
    for k in range(1, cov.shape[0] + 1):
        sign, _ = np.linalg.slogdet(cov[:k, :k])
        if sign <= 0:
            return k - 1
    return cov.shape[0] - 1


def chol_or_raise(cov: np.ndarray, what: str = "covariance") -> np.ndarray:
    """Cholesky factor of ``cov``; raises NotPositiveDefiniteError with the
    failing pivot index when the factorization breaks down."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(_first_bad_pivot(cov), f"{what} matrix is not positive definite") from None


def sample_mvn(mean, cov, rng, size: int | None = None):
    """Multivariate normal via Cholesky factorization (no explicit inverse)."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = mean.shape[0]
    if cov.shape != (d, d):
        raise ValueError(f"cov must be {d}x{d}, got {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-12):
        raise ValueError("cov must be symmetric")
    L = chol_or_raise(cov)
    gen = as_generator(rng)
    if size is None:
        return mean + L @ gen.standard_normal(d)
    return mean + gen.standard_normal((size, d)) @ L.T


def _as_flat_sequence(values, what: str) -> list:
    # per-call numpy overhead dominates at the small sizes these scalar
    # samplers see, so everything funnels into a plain python list
    if isinstance(values, np.ndarray):
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"{what} must be a nonempty vector")
        return values.tolist()
    if isinstance(values, (tuple, list)):
        if not values:
            raise ValueError(f"{what} must be a nonempty vector")
        return values
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a nonempty vector")
    return arr.tolist()


def sample_dirichlet(alpha, rng) -> np.ndarray:
    """Dirichlet draw; components are nonnegative and sum to 1."""
    seq = _as_flat_sequence(alpha, "alpha")
    try:
        ok = all(a > 0.0 and a < math.inf for a in seq)
    except TypeError:
        ok = False
    if not ok:
        raise ValueError("alpha must be a nonempty vector of positive finite reals")
    return as_generator(rng).dirichlet(seq)


def sample_categorical(weights, rng) -> int:
    """Index draw proportional to nonnegative ``weights`` (not normalized)."""
    seq = _as_flat_sequence(weights, "weights")
    total = 0.0
    try:
        for w in seq:
            if not (w >= 0.0 and w < math.inf):
                raise ValueError("weights must be finite and nonnegative")
            total += w
    except TypeError:
        raise ValueError("weights must be finite and nonnegative") from None
    if total <= 0.0:
        raise ValueError("weights sum to zero")
    u = as_generator(rng).random() * total
    acc = 0.0
    k = len(seq) - 1
    for i, w in enumerate(seq):
        acc += w
        if u < acc:
            return i
    return k


def sample_categorical_log(log_weights, rng) -> int:
    """Categorical draw from unnormalized log weights (max subtracted first)."""
    seq = _as_flat_sequence(log_weights, "log weights")
    m = -math.inf
    try:
        for v in seq:
            if v != v or v == math.inf:
                raise ValueError("log weights must be finite or -inf")
            if v > m:
                m = v
    except TypeError:
        raise ValueError("log weights must be finite or -inf") from None
    if m == -math.inf:
        raise ValueError("all log weights are -inf")
    return sample_categorical([math.exp(v - m) for v in seq], rng)
