"""Bayesian lasso probit regression.

Latent-variable probit: y_i = sign(z_i) with z_i | w ~ N(w . x_i, 1). The
weights carry a Laplace prior realized as a scale mixture of normals,
w_j | sigma2, tau2_j ~ N(0, sigma2 tau2_j) with tau2_j ~ Exp(lambda^2 / 2),
so the global block stays conjugate: sigma2 inverse gamma, 1/tau2_j inverse
Gaussian, w multivariate normal through a Cholesky solve of
A = X'X + diag(1/tau2). Local moves resample one probit latent z_i from its
truncated-normal full conditional.

Two modes:

* ``probit`` (default): y in {-1, +1}, z latent, and z stands in for the
  continuous response inside the sigma2 and w conditionals.
* ``linear``: y continuous and observed, z pinned to y, local moves are
  no-ops. This is the conjugate target the quadrature oracles check against.

Marginalizing the tau2 mixture gives the density quadrature integrates:

    p(w, sigma2 | y) propto (sigma2)^{-(n + d + 1)/2}
        * exp(-||y - Xw||^2 / (2 sigma2)) * prod_j exp(-lambda |w_j| / sigma)

with sigma = sqrt(sigma2); the implied prior on sigma2 is (sigma2)^{-1/2}.
The sampler itself never evaluates that marginal form; it only exists so an
integration check has something analytic to aim at.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ..rng import (as_generator, chol_or_raise, sample_inverse_gamma,
                   sample_inverse_gaussian, sample_truncated_normal)
from ..scan import GibbsModel

# stand-in magnitude when a weight is exactly zero in the 1/tau2 mean
W_ZERO_EPS = 1e-12

MODES = ("probit", "linear")


@dataclass
class BlassoState:
    """All latent and fixed quantities of one chain.

    ``z`` always holds the continuous response the conjugate algebra sees: the
    probit latents in probit mode, a pinned copy of ``y`` in linear mode.
    ``zero_w_count`` counts weight coordinates perturbed away from exact zero
    before the inverse-Gaussian draw.
    """

    X: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray
    sigma2: float
    tau2: np.ndarray
    lam: float
    w_true: np.ndarray | None = None
    zero_w_count: int = 0

    def copy(self) -> "BlassoState":
        return BlassoState(
            X=self.X, y=self.y, z=self.z.copy(), w=self.w.copy(),
            sigma2=self.sigma2, tau2=self.tau2.copy(), lam=self.lam,
            w_true=self.w_true, zero_w_count=self.zero_w_count)


def draw_sigma2(state: BlassoState, gen: np.random.Generator) -> None:
    """sigma2 ~ InvGamma((n-1)/2 + d/2, ||z - Xw||^2/2 + w'diag(1/tau2)w/2)."""
    n, d = state.X.shape
    resid = state.z - state.X @ state.w
    shape = 0.5 * (n - 1) + 0.5 * d
    scale = 0.5 * float(resid @ resid) + 0.5 * float(np.sum(state.w**2 / state.tau2))
    state.sigma2 = sample_inverse_gamma(shape, max(scale, np.finfo(float).tiny), gen)


def draw_tau2(state: BlassoState, gen: np.random.Generator) -> None:
    """1/tau2_j ~ InvGaussian(sqrt(lambda^2 sigma2 / w_j^2), lambda^2).

    Exactly-zero weights would put the mean at infinity; they are replaced by
    a sign-preserving 1e-12 for the draw and counted in ``zero_w_count``.
    """
    w = state.w
    zeros = w == 0.0
    if np.any(zeros):
        state.zero_w_count += int(np.count_nonzero(zeros))
        w = np.where(zeros, W_ZERO_EPS, w)
    mean = state.lam * np.sqrt(state.sigma2) / np.abs(w)
    inv_tau2 = sample_inverse_gaussian(mean, state.lam**2, gen)
    state.tau2 = 1.0 / inv_tau2


def draw_w(state: BlassoState, gen: np.random.Generator) -> None:
    """w ~ N(A^{-1} X'z, sigma2 A^{-1}) with A = X'X + diag(1/tau2).

    Both the mean and the noise come from triangular solves against the
    Cholesky factor of A; A is never inverted explicitly.
    """
    X = state.X
    d = X.shape[1]
    A = X.T @ X + np.diag(1.0 / state.tau2)
    L = chol_or_raise(A, "weight precision")
    mean = solve_triangular(L.T, solve_triangular(L, X.T @ state.z, lower=True), lower=False)
    noise = solve_triangular(L.T, gen.standard_normal(d), lower=False)
    state.w = mean + np.sqrt(state.sigma2) * noise


class BayesianLassoProbit(GibbsModel):
    """Scan-core adapter for the lasso probit (or linear) sampler."""

    def __init__(self, mode: str = "probit"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode

    def initial_state(self, X, y, lam: float = 1.0, w_true=None) -> BlassoState:
        """Fresh chain state: w = 0, sigma2 = 1, tau2 = 1, z matching y's signs."""
        X = np.ascontiguousarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError(f"need X (n, d) and y (n,), got {X.shape} and {y.shape}")
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        if self.mode == "probit" and not np.all(np.abs(y) == 1.0):
            raise ValueError("probit mode requires labels in {-1, +1}")
        d = X.shape[1]
        if w_true is not None:
            w_true = np.asarray(w_true, dtype=float)
            if w_true.shape != (d,):
                raise ValueError(f"w_true must have shape ({d},), got {w_true.shape}")
        return BlassoState(X=X, y=y, z=y.astype(float).copy(), w=np.zeros(d),
                           sigma2=1.0, tau2=np.ones(d), lam=float(lam), w_true=w_true)

    def num_local_units(self, state: BlassoState) -> int:
        return state.z.size

    def local_update(self, state: BlassoState, index: int, gen) -> None:
        if self.mode == "linear":
            return  # responses observed, nothing latent per unit
        mu = float(state.X[index] @ state.w)
        side = "nonnegative" if state.y[index] > 0 else "nonpositive"
        state.z[index] = sample_truncated_normal(mu, 1.0, side, as_generator(gen))

    def global_update(self, state: BlassoState, gen) -> None:
        gen = as_generator(gen)
        draw_sigma2(state, gen)
        draw_tau2(state, gen)
        draw_w(state, gen)

    def summary(self, state: BlassoState) -> float:
        """||w - w_true||^2 when the truth is known, else the first weight."""
        if state.w_true is not None:
            diff = state.w - state.w_true
            return float(diff @ diff)
        return float(state.w[0])

    def log_joint(self, state: BlassoState) -> float:
        """Unnormalized log posterior over (w, sigma2, tau2, z); monitoring only."""
        n, d = state.X.shape
        resid = state.z - state.X @ state.w
        s2, t2, lam = state.sigma2, state.tau2, state.lam
        lp = -(0.5 * n + 0.5 * d + 0.5) * np.log(s2)
        lp -= 0.5 * float(resid @ resid) / s2
        lp -= 0.5 * float(np.sum(np.log(t2)))
        lp -= 0.5 * float(np.sum(state.w**2 / t2)) / s2
        lp += d * np.log(0.5 * lam**2) - 0.5 * lam**2 * float(np.sum(t2))
        return float(lp)
