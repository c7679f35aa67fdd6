"""Shared scripted models and fake clocks for scheduler-level tests."""

from __future__ import annotations

import numpy as np

from adascan.scan import GibbsModel


def canonical_labels(assignments):
    """Relabel an assignment vector by order of first appearance, so any two
    vectors inducing the same partition map to the same tuple."""
    mapping = {}
    out = []
    for v in list(assignments):
        v = int(v)
        if v not in mapping:
            mapping[v] = len(mapping)
        out.append(mapping[v])
    return tuple(out)


class FakeClock:
    """Deterministic clock advanced explicitly by scripted model updates."""

    def __init__(self):
        self.t = 0.0

    def __call__(self) -> float:
        return self.t

    def advance(self, dt: float) -> None:
        self.t += dt


class CountingModel(GibbsModel):
    """No-op updates; summary counts completed global updates."""

    def __init__(self, n_units: int = 10):
        self.n = n_units
        self.calls: list[tuple] = []

    def num_local_units(self, state) -> int:
        return self.n

    def local_update(self, state, index, gen) -> None:
        self.calls.append(("local", index))

    def global_update(self, state, gen) -> None:
        self.calls.append(("global",))
        state["globals"] = state.get("globals", 0) + 1

    def summary(self, state) -> float:
        return float(state.get("globals", 0))

    def log_joint(self, state) -> float:
        return 0.0


class ScriptedCostModel(GibbsModel):
    """Model with scripted per-update costs (via a FakeClock) whose summary
    encodes the batch size it is being run at.

    Local updates count; each global update records how many local updates
    happened since the previous global one, which equals the schedule's m.
    The summary reports that value, so an injected tau estimator can map a
    trace to a scripted tau(m) exactly.
    """

    def __init__(self, n_units: int, local_cost: float, global_cost: float,
                 clock: FakeClock):
        self.n = n_units
        self.local_cost = local_cost
        self.global_cost = global_cost
        self.clock = clock
        self._locals_since_global = 0
        self._last_m = 1

    def num_local_units(self, state) -> int:
        return self.n

    def local_update(self, state, index, gen) -> None:
        self._locals_since_global += 1
        self.clock.advance(self.local_cost)

    def global_update(self, state, gen) -> None:
        if self._locals_since_global:
            self._last_m = self._locals_since_global
        self._locals_since_global = 0
        self.clock.advance(self.global_cost)

    def summary(self, state) -> float:
        return float(self._last_m)

    def log_joint(self, state) -> float:
        return 0.0


def scripted_tau(samples, tau_of_m=lambda m: 100.0 / m) -> float:
    """Tau estimator pairing with ScriptedCostModel: summaries hold m."""
    return tau_of_m(float(np.asarray(samples)[-1]))


class BusyModel(GibbsModel):
    """Real-time workload model: each update burns a roughly fixed amount of
    CPU so wall-clock timing behavior can be sanity-checked."""

    def __init__(self, n_units: int = 50, local_size: int = 4_000, global_size: int = 20_000):
        self.n = n_units
        self.local_size = local_size
        self.global_size = global_size

    def num_local_units(self, state) -> int:
        return self.n

    def _burn(self, size: int) -> None:
        np.arange(size, dtype=float).sum()

    def local_update(self, state, index, gen) -> None:
        self._burn(self.local_size)
        state["x"] = gen.standard_normal()

    def global_update(self, state, gen) -> None:
        self._burn(self.global_size)
        state["theta"] = gen.standard_normal() + state.get("x", 0.0)

    def summary(self, state) -> float:
        return float(state.get("theta", 0.0))

    def log_joint(self, state) -> float:
        return 0.0


class TwoVarToyModel(GibbsModel):
    """Explicitly enumerable joint over (theta, z), both binary.

    The scan's systematic limit (m = N = 1, g = 1) is an ordinary two-block
    Gibbs sampler whose stationary law is the given joint table.
    """

    def __init__(self, joint: np.ndarray):
        joint = np.asarray(joint, dtype=float)
        assert joint.shape == (2, 2) and np.all(joint > 0)
        self.joint = joint / joint.sum()

    def num_local_units(self, state) -> int:
        return 1

    def local_update(self, state, index, gen) -> None:
        w = self.joint[state["theta"], :]
        state["z"] = int(gen.random() * w.sum() > w[0])

    def global_update(self, state, gen) -> None:
        w = self.joint[:, state["z"]]
        state["theta"] = int(gen.random() * w.sum() > w[0])

    def summary(self, state) -> float:
        return float(2 * state["theta"] + state["z"])

    def log_joint(self, state) -> float:
        return float(np.log(self.joint[state["theta"], state["z"]]))
