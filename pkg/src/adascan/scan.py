"""Mini-batch scan scheduling for two-block Gibbs samplers.

A model exposes N exchangeable local units (latent variables tied to single
observations) and a global parameter block. One cycle of the scan performs
``m`` local updates followed by ``g`` global updates; ``m = 1`` is the
stochastic limit, ``m = N`` the full systematic sweep, and ``g > 1`` realizes
fractional schedules (several global refreshes per local batch). A scalar
summary of the state is recorded after the last global update of each cycle,
and per-update wall-clock costs are kept so the batch-size objective
``(m w_z + w_theta) tau_int`` can be evaluated downstream.
"""

from __future__ import annotations

import abc
import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ScanError
from .rng import RandomStream, as_generator


class IndexPolicy(enum.Enum):
    """How local-unit indices are chosen for each batch."""

    CYCLIC_PERMUTATION = "cyclic"
    UNIFORM_WITH_REPLACEMENT = "uniform"


@dataclass(frozen=True)
class ScanSchedule:
    """Batch size, global-update repeats and the index policy for one chain.

    At most one of ``batch_size > 1`` and ``global_repeats > 1`` may hold:
    large batches and repeated global refreshes pull in opposite directions
    and combining them has no schedule interpretation.
    """

    batch_size: int
    global_repeats: int = 1
    index_policy: IndexPolicy = IndexPolicy.CYCLIC_PERMUTATION

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.global_repeats < 1:
            raise ValueError(f"global_repeats must be >= 1, got {self.global_repeats}")
        if self.batch_size > 1 and self.global_repeats > 1:
            raise ValueError("at most one of batch_size, global_repeats may exceed 1")
        if not isinstance(self.index_policy, IndexPolicy):
            raise ValueError(f"index_policy must be an IndexPolicy, got {self.index_policy!r}")


class GibbsModel(abc.ABC):
    """Interface a model implements to be driven by the scan."""

    @abc.abstractmethod
    def num_local_units(self, state) -> int:
        """Number N of local units in ``state`` (data-set size)."""

    @abc.abstractmethod
    def local_update(self, state, index: int, gen: np.random.Generator) -> None:
        """Resample the local variable of unit ``index`` in place."""

    @abc.abstractmethod
    def global_update(self, state, gen: np.random.Generator) -> None:
        """Resample the global parameter block in place."""

    @abc.abstractmethod
    def summary(self, state) -> float:
        """Scalar functional of the state used for diagnostics; must not mutate."""

    @abc.abstractmethod
    def log_joint(self, state) -> float:
        """Unnormalized log posterior, for convergence monitoring."""


class IndexSelector:
    """Stateful batch-index source implementing the schedule's policy.

    The cyclic policy walks a per-epoch random permutation so every unit is
    updated exactly once per ceil(N/m) batches; when m does not divide N the
    final batch of an epoch is padded from the head of the next epoch's fresh
    permutation, so batches always contain exactly m indices.
    """

    def __init__(self, policy: IndexPolicy, n_units: int, batch_size: int):
        if batch_size > n_units:
            raise ValueError(f"batch_size {batch_size} exceeds number of units {n_units}")
        self.policy = policy
        self.n = n_units
        self.m = batch_size
        self._perm: np.ndarray | None = None
        self._cursor = 0

    def next_batch(self, gen: np.random.Generator) -> np.ndarray:
        if self.policy is IndexPolicy.UNIFORM_WITH_REPLACEMENT:
            return gen.integers(0, self.n, size=self.m)
        if self._perm is None:
            self._perm = gen.permutation(self.n)
            self._cursor = 0
        end = self._cursor + self.m
        if end < self.n:
            batch = self._perm[self._cursor:end]
            self._cursor = end
            return batch
        head = self._perm[self._cursor:]
        self._perm = gen.permutation(self.n)
        self._cursor = self.m - head.size
        if self._cursor == 0:
            return head
        return np.concatenate([head, self._perm[: self._cursor]])


@dataclass
class ChainTrace:
    """Recorded scalar summaries of one chain plus measured update costs.

    ``seconds`` is wall-clock time since the end of burn-in and is the only
    environment-dependent column; ``w_z``/``w_theta`` are medians of the
    per-update local/global durations over the whole run (burn-in included).
    """

    cycles: np.ndarray
    seconds: np.ndarray
    summaries: np.ndarray
    w_z: float | None
    w_theta: float | None
    seed: int | None = None

    CSV_HEADER = "cycle,seconds,summary"

    def __len__(self) -> int:
        return self.summaries.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for c, s, v in zip(self.cycles, self.seconds, self.summaries):
                fh.write(f"{int(c)},{s:.17g},{v:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "ChainTrace":
        cycles, seconds, values = [], [], []
        with open(path) as fh:
            header = fh.readline().strip()
            if header != cls.CSV_HEADER:
                raise DataFormatError(f"expected header {cls.CSV_HEADER!r}, got {header!r}",
                                      path=str(path), line=1)
            for ln, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise DataFormatError(f"expected 3 fields, got {len(parts)}",
                                          path=str(path), line=ln)
                try:
                    cycles.append(int(parts[0]))
                    seconds.append(float(parts[1]))
                    values.append(float(parts[2]))
                except ValueError as exc:
                    raise DataFormatError(str(exc), path=str(path), line=ln) from None
        if not values:
            raise DataFormatError("trace contains no rows", path=str(path))
        return cls(cycles=np.array(cycles), seconds=np.array(seconds),
                   summaries=np.array(values), w_z=None, w_theta=None)

    @classmethod
    def concat(cls, traces) -> "ChainTrace":
        traces = list(traces)
        if not traces:
            raise ValueError("no traces to concatenate")
        cycles, seconds = [], []
        c_off = 0
        t_off = 0.0
        for tr in traces:
            cycles.append(tr.cycles + c_off)
            seconds.append(tr.seconds + t_off)
            c_off += len(tr)
            t_off += float(tr.seconds[-1]) if len(tr) else 0.0
        wz = [tr.w_z for tr in traces if tr.w_z is not None]
        wt = [tr.w_theta for tr in traces if tr.w_theta is not None]
        return cls(
            cycles=np.concatenate(cycles),
            seconds=np.concatenate(seconds),
            summaries=np.concatenate([tr.summaries for tr in traces]),
            w_z=float(np.median(wz)) if wz else None,
            w_theta=float(np.median(wt)) if wt else None,
            seed=traces[0].seed,
        )


def run_scan(model: GibbsModel, state, schedule: ScanSchedule, n_cycles: int | None = None,
             rng: RandomStream | np.random.Generator | None = None, *, burnin: int = 0,
             budget_seconds: float | None = None, clock=time.perf_counter,
             recorder=None) -> ChainTrace:
    """Run the scan and return the post-burn-in trace.

    Exactly one of ``n_cycles`` (count mode) and ``budget_seconds`` (wall-clock
    mode, at least one cycle) must be given. ``burnin`` cycles run first and
    are discarded, though their update timings still feed the cost medians.
    ``recorder(cycle, seconds, state)``, if given, is invoked after each
    recorded cycle.
    """
    if rng is None:
        raise ValueError("rng is required")
    if (n_cycles is None) == (budget_seconds is None):
        raise ValueError("exactly one of n_cycles and budget_seconds must be given")
    if n_cycles is not None and n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    if budget_seconds is not None and not budget_seconds > 0:
        raise ValueError(f"budget_seconds must be positive, got {budget_seconds}")
    if burnin < 0:
        raise ValueError(f"burnin must be >= 0, got {burnin}")

    gen = as_generator(rng)
    seed = rng.seed if isinstance(rng, RandomStream) else None
    n_units = model.num_local_units(state)
    selector = IndexSelector(schedule.index_policy, n_units, schedule.batch_size)

    local_durs: list[float] = []
    global_durs: list[float] = []
    cycles: list[int] = []
    seconds: list[float] = []
    summaries: list[float] = []

    def one_cycle(cycle_label: int) -> None:
        batch = selector.next_batch(gen)
        for i in batch:
            t0 = clock()
            try:
                model.local_update(state, int(i), gen)
            except Exception as exc:  # noqa: BLE001 - re-raised with context
                raise ScanError(cycle_label, "local", f"unit {int(i)}: {exc}") from exc
            local_durs.append(clock() - t0)
        for _ in range(schedule.global_repeats):
            t0 = clock()
            try:
                model.global_update(state, gen)
            except Exception as exc:  # noqa: BLE001
                raise ScanError(cycle_label, "global", str(exc)) from exc
            global_durs.append(clock() - t0)

    for b in range(burnin):
        one_cycle(b - burnin)

    t_start = clock()
    k = 0
    while True:
        if n_cycles is not None:
            if k >= n_cycles:
                break
        elif k > 0 and clock() - t_start >= budget_seconds:
            break
        one_cycle(k)
        now = clock() - t_start
        cycles.append(k)
        seconds.append(now)
        summaries.append(float(model.summary(state)))
        if recorder is not None:
            recorder(k, now, state)
        k += 1

    return ChainTrace(
        cycles=np.array(cycles, dtype=int),
        seconds=np.array(seconds, dtype=float),
        summaries=np.array(summaries, dtype=float),
        w_z=float(np.median(local_durs)),
        w_theta=float(np.median(global_durs)),
        seed=seed,
    )
