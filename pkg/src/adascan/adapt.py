"""Batch-size adaptation: evaluate a grid of mini-batch sizes and pick the one
minimizing cost-per-effective-sample.

For each arm m the chain runs ``n_per_arm`` cycles (state carrying over from
arm to arm, visit order randomized), the integrated autocorrelation time of
the recorded summaries is estimated, and the objective

    f(m) = (m * w_z + w_theta) * tau_int(m)

is formed from the measured per-update costs. The argmin arm wins; ties go to
the smaller m. Burn-in happens once, before the first visited arm. The
full-batch arm m = N is always evaluated so the systematic-sweep baseline is
on the table.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import integrated_autocorrelation_time
from .errors import AdaptationError, DegenerateSeriesError
from .rng import RandomStream, as_generator
from .scan import ChainTrace, GibbsModel, IndexPolicy, ScanSchedule, run_scan

MIN_CYCLES_PER_ARM = 50


@dataclass(frozen=True)
class BatchGrid:
    """Strictly increasing batch sizes to evaluate."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.sizes:
            raise ValueError("grid must be nonempty")
        if any(m < 1 for m in self.sizes):
            raise ValueError("batch sizes must be >= 1")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("batch sizes must be strictly increasing")

    def __iter__(self):
        return iter(self.sizes)

    def __len__(self):
        return len(self.sizes)


def make_log_grid(n_units: int, ratio: float = 4.0, max_arms: int = 8) -> BatchGrid:
    """Geometric ladder round(ratio^k) capped at ``n_units`` and ``max_arms``
    entries; ``n_units`` itself is appended when the ladder runs out early."""
    if n_units < 1:
        raise ValueError(f"n_units must be >= 1, got {n_units}")
    if not ratio > 1.0:
        raise ValueError(f"ratio must be > 1, got {ratio}")
    if max_arms < 1:
        raise ValueError(f"max_arms must be >= 1, got {max_arms}")
    sizes: list[int] = []
    k = 0
    while len(sizes) < max_arms:
        v = int(round(ratio**k))
        k += 1
        if v > n_units:
            break
        if not sizes or v > sizes[-1]:
            sizes.append(v)
    if n_units not in sizes and len(sizes) < max_arms:
        sizes.append(n_units)
    return BatchGrid(tuple(sizes))


def objective(m: int, w_z: float, w_theta: float, tau_int: float) -> float:
    """Cost per effective sample, (m w_z + w_theta) * tau_int."""
    vals = (m, w_z, w_theta, tau_int)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"objective inputs must be finite, got {vals}")
    if m < 1:
        raise ValueError(f"batch size must be >= 1, got {m}")
    if w_z < 0 or w_theta < 0:
        raise ValueError("per-update costs must be nonnegative")
    if not tau_int > 0:
        raise ValueError(f"tau_int must be positive, got {tau_int}")
    return (m * w_z + w_theta) * tau_int


@dataclass(frozen=True)
class ArmResult:
    m: int
    w_z: float
    w_theta: float
    tau_int: float
    objective: float
    degenerate: bool = False


@dataclass
class AdaptationResult:
    """Per-arm measurements (sorted by m), the winning batch size, and the
    concatenated adaptation trace (|grid| * n_per_arm summaries)."""

    per_arm: list[ArmResult]
    m_star: int
    adaptation_trace: ChainTrace
    visit_order: tuple[int, ...]
    warnings: list[str] = field(default_factory=list)

    CSV_HEADER = "m,w_z,w_theta,tau_int,objective"

    def arm(self, m: int) -> ArmResult:
        for a in self.per_arm:
            if a.m == m:
                return a
        raise KeyError(f"no arm with m={m}")

    def to_csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for a in self.per_arm:
            lines.append(f"{a.m},{a.w_z:.17g},{a.w_theta:.17g},{a.tau_int:.17g},{a.objective:.17g}")
        lines.append(f"m_star,{self.m_star},,,")
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv_text())


def adapt_batch_size(model: GibbsModel, state, grid: BatchGrid,
                     rng: RandomStream | np.random.Generator, *,
                     burnin_cycles: int = 500, n_per_arm: int = 200,
                     index_policy: IndexPolicy = IndexPolicy.CYCLIC_PERMUTATION,
                     tau_estimator=None, clock=time.perf_counter) -> AdaptationResult:
    """Measure every arm of ``grid`` (plus m = N if absent) and pick m*.

    ``tau_estimator(summaries) -> float`` defaults to the integrated
    autocorrelation time; it is injectable so selection logic can be tested
    with scripted mixing behavior. Arms whose summaries are degenerate get an
    infinite objective and a warning; if every arm degenerates, adaptation
    fails hard.
    """
    if n_per_arm < MIN_CYCLES_PER_ARM:
        raise ValueError(f"n_per_arm must be >= {MIN_CYCLES_PER_ARM}, got {n_per_arm}")
    if burnin_cycles < 0:
        raise ValueError(f"burnin_cycles must be >= 0, got {burnin_cycles}")
    n_units = model.num_local_units(state)
    sizes = list(grid.sizes)
    if any(m > n_units for m in sizes):
        raise ValueError(f"grid contains batch sizes above N={n_units}")
    if n_units not in sizes:
        sizes.append(n_units)
    if tau_estimator is None:
        tau_estimator = integrated_autocorrelation_time

    gen = as_generator(rng)
    order = [sizes[i] for i in gen.permutation(len(sizes))]

    if burnin_cycles:
        run_scan(model, state, ScanSchedule(order[0], index_policy=index_policy),
                 n_cycles=burnin_cycles, rng=rng, clock=clock)

    arms: dict[int, ArmResult] = {}
    traces: list[ChainTrace] = []
    warnings: list[str] = []
    for m in order:
        trace = run_scan(model, state, ScanSchedule(m, index_policy=index_policy),
                         n_cycles=n_per_arm, rng=rng, clock=clock)
        traces.append(trace)
        try:
            tau = float(tau_estimator(trace.summaries))
            f = objective(m, trace.w_z, trace.w_theta, tau)
            arms[m] = ArmResult(m, trace.w_z, trace.w_theta, tau, f)
        except DegenerateSeriesError:
            warnings.append(f"arm m={m}: degenerate summary series, excluded from selection")
            arms[m] = ArmResult(m, trace.w_z, trace.w_theta, math.nan, math.inf, degenerate=True)

    usable = [a for a in arms.values() if not a.degenerate]
    if not usable:
        raise AdaptationError("all arms produced degenerate summary series")
    best = min(usable, key=lambda a: (a.objective, a.m))

    return AdaptationResult(
        per_arm=sorted(arms.values(), key=lambda a: a.m),
        m_star=best.m,
        adaptation_trace=ChainTrace.concat(traces),
        visit_order=tuple(order),
        warnings=warnings,
    )


@dataclass(frozen=True)
class TwoPhaseBudgets:
    """Cycle counts for adaptation plus either a cycle count or a wall-clock
    budget (seconds) for the sampling phase."""

    burnin_cycles: int = 500
    n_per_arm: int = 200
    sampling_cycles: int | None = None
    sampling_seconds: float | None = None

    def __post_init__(self):
        if (self.sampling_cycles is None) == (self.sampling_seconds is None):
            raise ValueError("exactly one of sampling_cycles and sampling_seconds must be set")


def run_two_phase(model: GibbsModel, state, grid: BatchGrid,
                  rng: RandomStream | np.random.Generator,
                  budgets: TwoPhaseBudgets = TwoPhaseBudgets(sampling_cycles=1000), *,
                  index_policy: IndexPolicy = IndexPolicy.CYCLIC_PERMUTATION,
                  tau_estimator=None, clock=time.perf_counter,
                  recorder=None) -> tuple[AdaptationResult, ChainTrace]:
    """Adaptation followed by the sampling phase at m*; the adapted state is
    the sampling phase's initialization (no second burn-in)."""
    adaptation = adapt_batch_size(model, state, grid, rng,
                                  burnin_cycles=budgets.burnin_cycles,
                                  n_per_arm=budgets.n_per_arm,
                                  index_policy=index_policy,
                                  tau_estimator=tau_estimator, clock=clock)
    schedule = ScanSchedule(adaptation.m_star, index_policy=index_policy)
    trace = run_scan(model, state, schedule, n_cycles=budgets.sampling_cycles,
                     rng=rng, budget_seconds=budgets.sampling_seconds,
                     clock=clock, recorder=recorder)
    return adaptation, trace
