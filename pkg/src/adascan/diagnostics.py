"""Chain diagnostics: autocorrelation, integrated autocorrelation time,
effective sample size, estimator variance and the cross-chain EPSR.

Two autocorrelation normalizations are exposed. ``"paper_exact"`` divides the
lag-t autocovariance by ``1/(n-t)`` and the variance by ``1/(n-1)``; those
mixed normalizers make rho_0 = (n-1)/n and allow |rho| > 1 at small n.
``"standard"`` uses matching normalizers (the plain ratio of sums), giving
rho_0 = 1 and |rho| <= 1; the integrated autocorrelation time is built on the
standard form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .errors import DegenerateSeriesError

TAU_INT_FLOOR = 0.1

ACF_MODES = ("paper_exact", "standard")


def _as_series(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def _centered_or_raise(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean()
    if not np.any(xc != 0.0):
        raise DegenerateSeriesError("constant series: autocorrelation undefined")
    return xc


def autocorrelation(samples, t: int, mode: str = "paper_exact") -> float:
    """Sample autocorrelation at integer lag ``t`` (see module docstring)."""
    if mode not in ACF_MODES:
        raise ValueError(f"mode must be one of {ACF_MODES}, got {mode!r}")
    x = _as_series(samples)
    n = x.size
    if not 0 <= t < n:
        raise ValueError(f"lag must satisfy 0 <= t < n={n}, got {t}")
    xc = _centered_or_raise(x)
    num = float(xc[: n - t] @ xc[t:])
    den = float(xc @ xc)
    if mode == "standard":
        return num / den
    return (num / (n - t)) / (den / (n - 1))


@dataclass(frozen=True)
class AcfSeries:
    """Standard-normalized autocorrelation for lags 0..t_max (rho[0] = 1)."""

    lags: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        if self.rho[0] != 1.0:
            raise ValueError("standard ACF must have rho[0] = 1")
        if np.any(np.abs(self.rho) > 1.0 + 1e-9):
            raise ValueError("standard ACF must satisfy |rho| <= 1")


def _acvf_fft(xc: np.ndarray, t_max: int) -> np.ndarray:
    # linear (non-circular) autocovariance sums via zero-padded FFT
    n = xc.size
    nfft = next_fast_len(2 * n)
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: t_max + 1]
    return acov


def acf(samples, t_max: int) -> AcfSeries:
    """Standard ACF for lags 0..t_max, computed in O(n log n)."""
    x = _as_series(samples)
    n = x.size
    if not 1 <= t_max < n:
        raise ValueError(f"require 1 <= t_max < n={n}, got {t_max}")
    xc = _centered_or_raise(x)
    acov = _acvf_fft(xc, t_max)
    rho = acov / acov[0]
    rho[0] = 1.0
    rho = np.clip(rho, -1.0, 1.0)
    return AcfSeries(lags=np.arange(t_max + 1), rho=rho)


def default_t_max(n: int) -> int:
    return min(n // 4, 1000)


def integrated_autocorrelation_time(samples, t_max: int | None = None) -> float:
    """tau = 1 + 2 * sum of standard-ACF values, truncated at the first
    negative estimate (excluded) or ``t_max`` (default min(n/4, 1000)).

    Only nonnegative terms enter the sum, so tau >= 1; the floor of 0.1 is a
    numerical guard only.
    """
    x = _as_series(samples)
    n = x.size
    if n < 10:
        raise ValueError(f"need at least 10 samples, got {n}")
    if t_max is None:
        t_max = default_t_max(n)
    if not 1 <= t_max < n:
        raise ValueError(f"require 1 <= t_max < n={n}, got {t_max}")
    series = acf(x, t_max)
    tail = series.rho[1:]
    neg = np.nonzero(tail < 0.0)[0]
    cut = neg[0] if neg.size else tail.size
    tau = 1.0 + 2.0 * float(tail[:cut].sum())
    return max(tau, TAU_INT_FLOOR)


def effective_sample_size(samples, t_max: int | None = None) -> float:
    """ESS = n / tau_int, so ESS * tau_int = n exactly."""
    x = _as_series(samples)
    return x.size / integrated_autocorrelation_time(x, t_max)


def asymptotic_variance(samples, m: int, w_z: float, w_theta: float, budget_seconds: float,
                        t_max: int | None = None) -> float:
    """Estimator variance (sigma^2 / T) * (m w_z + w_theta) * tau_int for a
    wall-clock budget T: the quantity the batch-size objective minimizes."""
    x = _as_series(samples)
    if m < 1:
        raise ValueError(f"batch size must be >= 1, got {m}")
    if w_z < 0 or w_theta < 0 or not (math.isfinite(w_z) and math.isfinite(w_theta)):
        raise ValueError("per-update costs must be finite and nonnegative")
    if not budget_seconds > 0:
        raise ValueError(f"budget must be positive, got {budget_seconds}")
    sigma2 = float(np.var(x, ddof=1))
    tau = integrated_autocorrelation_time(x, t_max)
    return (sigma2 / budget_seconds) * (m * w_z + w_theta) * tau


def epsr(chains) -> float:
    """Estimated potential scale reduction across parallel chains.

    W is the mean within-chain variance (ddof=1), B = n * variance of the
    chain means (ddof=1 across chains), and
    R-hat = sqrt(((n-1)/n  W + B/n) / W).
    """
    arrs = [np.asarray(c, dtype=float).ravel() for c in chains]
    if len(arrs) < 2:
        raise ValueError(f"need at least 2 chains, got {len(arrs)}")
    n = arrs[0].size
    if any(a.size != n for a in arrs):
        raise ValueError("chains must have equal length")
    if n < 10:
        raise ValueError(f"need at least 10 samples per chain, got {n}")
    if not all(np.all(np.isfinite(a)) for a in arrs):
        raise ValueError("chain values must be finite")
    within = np.array([np.var(a, ddof=1) for a in arrs])
    w = float(within.mean())
    if w == 0.0:
        raise DegenerateSeriesError("all chains constant: EPSR undefined")
    means = np.array([a.mean() for a in arrs])
    b = n * float(np.var(means, ddof=1))
    var_hat = (n - 1) / n * w + b / n
    return math.sqrt(var_hat / w)


@dataclass
class DiagnosticsReport:
    """Per-chain diagnostics row; ``m``, ``epsr`` and ``objective`` are
    optional because a bare trace carries no schedule or timing context."""

    tau_int: float
    ess: float
    sigma2: float
    m: int | None = None
    epsr_value: float | None = None
    objective: float | None = None

    CSV_HEADER = "m,tau_int,ess,sigma2,epsr,objective"

    def csv_row(self) -> str:
        def fmt(v):
            if v is None:
                return ""
            return f"{v:.17g}"

        m = "" if self.m is None else str(int(self.m))
        return ",".join([m, fmt(self.tau_int), fmt(self.ess), fmt(self.sigma2),
                         fmt(self.epsr_value), fmt(self.objective)])


def report_for(samples, m: int | None = None, w_z: float | None = None,
               w_theta: float | None = None, epsr_value: float | None = None,
               t_max: int | None = None) -> DiagnosticsReport:
    """Build a DiagnosticsReport for one chain's scalar summaries."""
    x = _as_series(samples)
    tau = integrated_autocorrelation_time(x, t_max)
    obj = None
    if m is not None and w_z is not None and w_theta is not None:
        obj = (m * w_z + w_theta) * tau
    return DiagnosticsReport(
        tau_int=tau,
        ess=x.size / tau,
        sigma2=float(np.var(x, ddof=1)),
        m=m,
        epsr_value=epsr_value,
        objective=obj,
    )
