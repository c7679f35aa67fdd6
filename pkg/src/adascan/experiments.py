"""End-to-end figure pipelines: generate data, adapt the batch size, sample,
and evaluate against ground truth. Each figure writes one CSV and one SVG per
panel into an output directory and returns the numbers behind them.

Per-iteration metric CSVs use the shared row schema ``metric,value,iteration,
chain``; wall-clock curves keep their seconds in a dedicated column so timing
can be masked when comparing runs byte for byte.

Random-stream allocation for a given experiment seed: stream 0 generates the
data, stream 1 drives adaptation, stream 2 draws chain initializations,
stream 5 runs held-out fold-in, and race arm i / chain j samples on stream
16 + 8 i + j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plotting
from .adapt import AdaptationResult, adapt_batch_size, make_log_grid
from .datagen import gen_gmm_data, gen_probit_data, gen_synthetic_corpus
from .metrics import cluster_mse, perplexity, purity
from .models.blasso import BayesianLassoProbit
from .models.dpmm import DpNormalMixture, DpmmState, NiwPrior
from .models.lda import LdaTopicModel
from .rng import RandomStream, as_generator
from .scan import ScanSchedule, run_scan

METRIC_CSV_HEADER = "metric,value,iteration,chain"


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def write_table(path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_metric_rows(path, rows) -> None:
    """Rows of (metric, value, iteration, chain)."""
    write_table(path, METRIC_CSV_HEADER, rows)


def _thin_indices(n: int, max_rows: int) -> np.ndarray:
    if n <= max_rows:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, max_rows)).astype(int))


@dataclass
class RaceCurve:
    """One budgeted sampler run: cycle index, cumulative seconds, and the
    tracked value after each recorded cycle."""

    m: int
    chain: int
    cycles: np.ndarray
    seconds: np.ndarray
    values: np.ndarray

    def thinned(self, max_rows: int) -> "RaceCurve":
        idx = _thin_indices(len(self.cycles), max_rows)
        return RaceCurve(self.m, self.chain, self.cycles[idx],
                         self.seconds[idx], self.values[idx])


def _final_values(curves, m: int) -> list[float]:
    vals = [float(c.values[-1]) for c in curves if c.m == m and len(c.values)]
    if not vals:
        raise KeyError(f"no race curve for m={m}")
    return vals


def _save_objective_artifacts(out: Path, stem: str, adaptation: AdaptationResult,
                              paths: dict, title: str) -> None:
    csv_path = out / f"{stem}_objective.csv"
    adaptation.to_csv(csv_path)
    paths["objective_csv"] = csv_path
    usable = [a for a in adaptation.per_arm if math.isfinite(a.objective)]
    svg_path = out / f"{stem}_objective.svg"
    plotting.save_objective_panel(svg_path, [a.m for a in usable],
                                  [a.objective for a in usable],
                                  adaptation.m_star, title=title)
    paths["objective_svg"] = svg_path


# ---------------------------------------------------------------------------
# probit regression: estimator error against wall clock, plus the objective
# ---------------------------------------------------------------------------


class _RunningMeanError:
    """Recorder tracking the MSE of the running posterior-mean weight
    estimate against the generating weights."""

    def __init__(self, w_true):
        self.w_true = np.asarray(w_true, dtype=float)
        self._sum = np.zeros_like(self.w_true)
        self._count = 0
        self.cycles: list[int] = []
        self.seconds: list[float] = []
        self.values: list[float] = []

    def __call__(self, cycle, seconds, state) -> None:
        self._sum += state.w
        self._count += 1
        diff = self._sum / self._count - self.w_true
        self.cycles.append(cycle)
        self.seconds.append(seconds)
        self.values.append(float(diff @ diff) / self.w_true.size)


@dataclass
class Fig3Result:
    adaptation: AdaptationResult
    curves: list[RaceCurve]
    paths: dict[str, Path]

    def final_mse(self, m: int) -> float:
        return float(np.mean(_final_values(self.curves, m)))


def run_fig3(out_dir, seed: int = 0, *, n: int = 1200, d: int = 4,
             grid_ratio: float = 4.0, lam: float = 1.0,
             burnin_cycles: int = 500, n_per_arm: int = 200,
             budget_seconds: float = 10.0, race_sizes=None, chains: int = 1,
             max_rows: int = 400) -> Fig3Result:
    """Regression-weight MSE against wall clock for every batch size in the
    grid (left panel) and the objective that picks m* (right panel)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    X, y, w_true = gen_probit_data(n, d, rng=RandomStream(seed, 0))
    model = BayesianLassoProbit()
    grid = make_log_grid(n, ratio=grid_ratio)
    adaptation = adapt_batch_size(
        model, model.initial_state(X, y, lam, w_true=w_true), grid,
        RandomStream(seed, 1), burnin_cycles=burnin_cycles, n_per_arm=n_per_arm)

    paths: dict[str, Path] = {}
    _save_objective_artifacts(out, "fig3", adaptation, paths,
                              title="cost per effective sample")

    if race_sizes is None:
        race_sizes = tuple(a.m for a in adaptation.per_arm)
    else:
        # entries may name the arms resolved by adaptation
        named = {"m_star": adaptation.m_star, "N": n}
        race_sizes = tuple(dict.fromkeys(named.get(m, m) for m in race_sizes))
    curves: list[RaceCurve] = []
    for i, m in enumerate(race_sizes):
        for j in range(chains):
            state = model.initial_state(X, y, lam, w_true=w_true)
            rec = _RunningMeanError(w_true)
            run_scan(model, state, ScanSchedule(int(m)),
                     budget_seconds=budget_seconds,
                     rng=RandomStream(seed, 16 + 8 * i + j), recorder=rec)
            curves.append(RaceCurve(int(m), j, np.array(rec.cycles),
                                    np.array(rec.seconds), np.array(rec.values)))

    thin = [c.thinned(max_rows) for c in curves]
    mse_csv = out / "fig3_mse.csv"
    write_table(mse_csv, "m,chain,cycle,seconds,mse",
                [(c.m, c.chain, int(cy), float(s), float(v))
                 for c in thin for cy, s, v in zip(c.cycles, c.seconds, c.values)])
    paths["mse_csv"] = mse_csv
    mse_svg = out / "fig3_mse.svg"
    plotting.save_line_panel(
        mse_svg, [(f"m={c.m}", c.seconds, c.values) for c in thin],
        xlabel="seconds", ylabel="MSE of running weight estimate",
        title="estimator error vs wall clock", logy=True)
    paths["mse_svg"] = mse_svg
    return Fig3Result(adaptation, curves, paths)


# ---------------------------------------------------------------------------
# Gaussian mixture: posterior clustering scatter and per-iteration scores
# ---------------------------------------------------------------------------


def relabel_first_appearance(assignments) -> np.ndarray:
    """Map arbitrary cluster ids to 0, 1, ... in order of first appearance."""
    out = np.empty(len(assignments), dtype=np.int64)
    seen: dict[int, int] = {}
    for i, a in enumerate(assignments):
        out[i] = seen.setdefault(int(a), len(seen))
    return out


def _inferred_centers(state: DpmmState) -> np.ndarray:
    return np.stack([st.s / st.n for st in state.clusters.values()])


def component_scale_prior(X, cluster_scale: float) -> NiwPrior:
    """Weak NIW prior whose expected component covariance is
    cluster_scale^2 * I. The data-scatter default is far too diffuse here:
    it happily fits one blob across well-separated unit components, while a
    unit-tight prior keeps shedding short-lived singleton clusters."""
    d = X.shape[1]
    nu0 = d + 3.0
    psi0 = cluster_scale**2 * (nu0 - d - 1) * np.eye(d)
    return NiwPrior(m0=X.mean(axis=0), k0=0.01, nu0=nu0, psi0=psi0)


@dataclass
class DpmmRun:
    """One sampler's trajectory: final state plus per-iteration metric series
    (an iteration is one full pass over the data, ceil(N / m) cycles)."""

    name: str
    m: int
    state: DpmmState
    series: dict[str, np.ndarray]


def _run_dpmm(name: str, mode: str, m: int, X, labels, centers, alpha: float,
              iterations: int, rng, *, track: bool, init_rng, prior) -> DpmmRun:
    model = DpNormalMixture(mode=mode)
    state = model.initial_state(X, alpha=alpha, prior=prior, rng=init_rng,
                                init="single")
    gen = as_generator(rng)
    cycles_per_iteration = math.ceil(X.shape[0] / m)
    series: dict[str, list[float]] = {"mse": [], "purity": [], "n_clusters": []}
    for _ in range(iterations):
        run_scan(model, state, ScanSchedule(m), n_cycles=cycles_per_iteration,
                 rng=gen)
        if track:
            series["mse"].append(cluster_mse(_inferred_centers(state), centers))
            series["purity"].append(purity(state.assignments, labels))
            series["n_clusters"].append(float(state.n_clusters))
    return DpmmRun(name, m, state,
                   {k: np.array(v) for k, v in series.items()})


@dataclass
class Fig5Result:
    X: np.ndarray
    labels: np.ndarray
    runs: dict[str, DpmmRun]
    paths: dict[str, Path]


def run_fig5(out_dir, seed: int = 0, *, n: int = 1000, k_true: int = 5,
             dim: int = 2, separation: float = 10.0, alpha: float = 1.0,
             m_batch: int = 100, iterations: int = 200,
             cluster_scale: float = 3.0) -> Fig5Result:
    """Posterior clustering scatter after a fixed number of full passes:
    full-sweep collapsed sampler (left) and mini-batch sampler (right)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    X, labels, centers = gen_gmm_data(n, k_true, dim, separation,
                                      rng=RandomStream(seed, 0))
    prior = component_scale_prior(X, cluster_scale)
    runs = {
        "collapsed": _run_dpmm("collapsed", "collapsed", n, X, labels, centers,
                               alpha, iterations, RandomStream(seed, 3),
                               track=False, init_rng=RandomStream(seed, 2),
                               prior=prior),
        "minibatch": _run_dpmm("minibatch", "instantiated", m_batch, X, labels,
                               centers, alpha, iterations, RandomStream(seed, 4),
                               track=False, init_rng=RandomStream(seed, 2),
                               prior=prior),
    }
    paths: dict[str, Path] = {}
    for name, run in runs.items():
        flat = relabel_first_appearance(run.state.assignments)
        csv_path = out / f"fig5_{name}.csv"
        write_table(csv_path, "x1,x2,cluster",
                    [(float(X[i, 0]), float(X[i, 1]), int(flat[i]))
                     for i in range(n)])
        paths[f"{name}_csv"] = csv_path
        svg_path = out / f"fig5_{name}.svg"
        plotting.save_scatter_panel(svg_path, X, flat,
                                    title=f"{name} clustering, {iterations} passes")
        paths[f"{name}_svg"] = svg_path
    return Fig5Result(X, labels, runs, paths)


@dataclass
class Fig6Result:
    runs: dict[str, DpmmRun]
    paths: dict[str, Path]

    def series(self, name: str, metric: str) -> np.ndarray:
        return self.runs[name].series[metric]


def run_fig6(out_dir, seed: int = 0, *, n: int = 1000, k_true: int = 5,
             dim: int = 2, separation: float = 10.0, alpha: float = 1.0,
             m_batch: int = 100, iterations: int = 200,
             cluster_scale: float = 3.0,
             samplers=("collapsed", "minibatch")) -> Fig6Result:
    """Center-matching MSE (left) and purity (right) after each full pass,
    for the full-sweep collapsed and mini-batch samplers."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    X, labels, centers = gen_gmm_data(n, k_true, dim, separation,
                                      rng=RandomStream(seed, 0))
    prior = component_scale_prior(X, cluster_scale)
    runs: dict[str, DpmmRun] = {}
    for name in samplers:
        if name == "collapsed":
            runs[name] = _run_dpmm(name, "collapsed", n, X, labels, centers,
                                   alpha, iterations, RandomStream(seed, 3),
                                   track=True, init_rng=RandomStream(seed, 2),
                                   prior=prior)
        elif name == "minibatch":
            runs[name] = _run_dpmm(name, "instantiated", m_batch, X, labels,
                                   centers, alpha, iterations,
                                   RandomStream(seed, 4), track=True,
                                   init_rng=RandomStream(seed, 2), prior=prior)
        else:
            raise ValueError(f"unknown sampler {name!r}")

    paths: dict[str, Path] = {}
    for metric, logy in (("mse", True), ("purity", False)):
        rows = []
        curves = []
        for name, run in runs.items():
            vals = run.series[metric]
            rows.extend((f"{metric}[{name}]", float(v), it + 1, 0)
                        for it, v in enumerate(vals))
            curves.append((name, np.arange(1, len(vals) + 1), vals))
        csv_path = out / f"fig6_{metric}.csv"
        write_metric_rows(csv_path, rows)
        paths[f"{metric}_csv"] = csv_path
        svg_path = out / f"fig6_{metric}.svg"
        plotting.save_line_panel(svg_path, curves, xlabel="iteration (full passes)",
                                 ylabel=metric, title=f"{metric} vs ground truth",
                                 logy=logy)
        paths[f"{metric}_svg"] = svg_path
    return Fig6Result(runs, paths)


# ---------------------------------------------------------------------------
# topic model: held-out perplexity against wall clock, plus the objective
# ---------------------------------------------------------------------------


class _SnapshotRecorder:
    """Copies the chain state the first time cumulative seconds cross each
    requested checkpoint."""

    def __init__(self, times):
        self._pending = sorted(times)
        self.snaps: list[tuple[int, float, object]] = []

    def __call__(self, cycle, seconds, state) -> None:
        taken = False
        while self._pending and seconds >= self._pending[0]:
            self._pending.pop(0)
            if not taken:  # one copy serves every checkpoint this cycle passed
                self.snaps.append((cycle, seconds, state.copy()))
                taken = True


@dataclass
class Fig8Result:
    adaptation: AdaptationResult
    curves: list[RaceCurve]
    paths: dict[str, Path]

    def final_perplexity(self, m: int) -> float:
        return float(np.mean(_final_values(self.curves, m)))


def run_fig8(out_dir, seed: int = 0, *, n_docs: int = 250, n_topics: int = 4,
             vocab_size: int = 6000, grid_ratio: float = 4.0, alpha=None,
             eta: float = 0.01, burnin_cycles: int = 100, n_per_arm: int = 60,
             budget_seconds: float = 20.0, race_sizes=None,
             checkpoints: int = 8, fold_passes: int = 50) -> Fig8Result:
    """Held-out perplexity against wall clock for the selected batch size and
    the full-sweep baseline (left panel), objective over the grid (right).
    Both race arms start from one shared fresh initialization."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test, _ = gen_synthetic_corpus(n_docs, n_topics, vocab_size,
                                          rng=RandomStream(seed, 0))
    n_train = len(train)
    model = LdaTopicModel("instantiated")
    adapt_state = model.initial_state(train, n_topics, vocab_size, alpha=alpha,
                                      eta=eta, rng=RandomStream(seed, 2))
    grid = make_log_grid(n_train, ratio=grid_ratio)
    adaptation = adapt_batch_size(model, adapt_state, grid, RandomStream(seed, 1),
                                  burnin_cycles=burnin_cycles,
                                  n_per_arm=n_per_arm)

    paths: dict[str, Path] = {}
    _save_objective_artifacts(out, "fig8", adaptation, paths,
                              title="cost per effective sample")

    if race_sizes is None:
        race_sizes = (adaptation.m_star, n_train)
        if adaptation.m_star == n_train:
            race_sizes = (n_train,)
    init_state = model.initial_state(train, n_topics, vocab_size, alpha=alpha,
                                     eta=eta, rng=RandomStream(seed, 2))
    times = [budget_seconds * (k + 1) / checkpoints for k in range(checkpoints)]
    curves: list[RaceCurve] = []
    for i, m in enumerate(race_sizes):
        state = init_state.copy()
        rec = _SnapshotRecorder(times)
        trace = run_scan(model, state, ScanSchedule(int(m)),
                         budget_seconds=budget_seconds,
                         rng=RandomStream(seed, 16 + 8 * i), recorder=rec)
        snaps = rec.snaps
        if not snaps or snaps[-1][0] != int(trace.cycles[-1]):
            snaps.append((int(trace.cycles[-1]), float(trace.seconds[-1]), state.copy()))
        scores = [perplexity(test, [snap], rng=RandomStream(seed, 5),
                             n_passes=fold_passes)
                  for _, _, snap in snaps]
        curves.append(RaceCurve(int(m), 0,
                                np.array([c for c, _, _ in snaps]),
                                np.array([s for _, s, _ in snaps]),
                                np.array(scores)))

    perp_csv = out / "fig8_perplexity.csv"
    write_table(perp_csv, "m,chain,cycle,seconds,perplexity",
                [(c.m, c.chain, int(cy), float(s), float(v))
                 for c in curves for cy, s, v in zip(c.cycles, c.seconds, c.values)])
    paths["perplexity_csv"] = perp_csv
    perp_svg = out / "fig8_perplexity.svg"
    plotting.save_line_panel(
        perp_svg, [(f"m={c.m}", c.seconds, c.values) for c in curves],
        xlabel="seconds", ylabel="held-out perplexity",
        title="perplexity vs wall clock")
    paths["perplexity_svg"] = perp_svg
    return Fig8Result(adaptation, curves, paths)


FIGURES = {
    "fig3": run_fig3,
    "fig5": run_fig5,
    "fig6": run_fig6,
    "fig8": run_fig8,
}
