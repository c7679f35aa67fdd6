"""Command-line driver: synthetic data generation, batch-size adaptation,
budgeted sampling with diagnostics, figure-scale experiments, and trace
diagnosis.

Option values resolve as flags > config file > built-in defaults. The config
file is INI-style with one section per subcommand ([generate], [adapt], ...)
and keys named like the long options with underscores; boolean switches are
flag-only. ADASCAN_OUTDIR, when set, supplies the default output directory
for subcommands that write files without an explicit destination.

Stream allocation per seed: stream 0 generates data, stream 1 drives
adaptation, stream 2 initializes single-chain state; ``sample`` chain j
initializes on stream 1000 + j and samples on stream 16 + j.

Exit codes: 0 success, 1 usage, 2 data/format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import threading
from pathlib import Path

import numpy as np

from .adapt import BatchGrid, adapt_batch_size, make_log_grid
from .datagen import (gen_gmm_data, gen_probit_data, gen_synthetic_corpus,
                      heldout_indices, interleave_corpus, load_corpus,
                      load_points, load_probit_data, save_corpus,
                      save_doc_indices, save_points, save_probit_data)
from .diagnostics import DiagnosticsReport, epsr, report_for
from .errors import AdascanError, DataFormatError, NumericError
from .experiments import FIGURES, component_scale_prior
from .models.blasso import BayesianLassoProbit
from .models.dpmm import DpNormalMixture
from .models.lda import LdaTopicModel
from .rng import RandomStream
from .scan import ChainTrace, GibbsModel, ScanSchedule, run_scan

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

OUTDIR_ENV = "ADASCAN_OUTDIR"

MODELS = ("blasso", "dpmm", "lda")
SAMPLER_MODES = {
    "blasso": ("probit", "linear"),
    "dpmm": ("instantiated", "collapsed"),
    "lda": ("instantiated", "collapsed"),
}


class UsageError(Exception):
    """Bad invocation; mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 on bad usage; 2 is reserved for data errors here
        raise UsageError(message)


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------


def seed_value(text: str):
    v = int(text)
    if not 0 <= v < 2**64:
        raise ValueError(f"seed must fit in uint64, got {v}")
    return v


def grid_value(text: str):
    return tuple(int(p) for p in text.split(",") if p.strip())


def batch_value(text: str):
    if text in ("N", "full"):
        return "full"
    return int(text)


# dest -> (converter, default); used both for argparse and for coercing
# config-file strings, so flags > config > defaults holds uniformly
GENERATE_OPTS = {
    "seed": (seed_value, 0),
    "out": (str, None),
    "n": (int, None),
    "d": (int, None),
    "k": (int, None),
    "dim": (int, None),
    "v": (int, None),
    "separation": (float, None),
    "noise_sd": (float, None),
    "alpha_gen": (float, 0.5),
    "eta_gen": (float, 0.05),
}

MODEL_OPTS = {
    "lam": (float, 1.0),
    "alpha": (float, None),
    "cluster_scale": (float, None),
    "topics": (int, None),
    "vocab_size": (int, None),
    "eta": (float, 0.01),
    "sampler_mode": (str, None),
}

ADAPT_OPTS = {
    "model": (str, None),
    "data": (str, None),
    "grid": (grid_value, None),
    "grid_ratio": (float, None),
    "n_per_arm": (int, 200),
    "burnin": (int, 500),
    "seed": (seed_value, 0),
    "out": (str, None),
    **MODEL_OPTS,
}

SAMPLE_OPTS = {
    "model": (str, None),
    "data": (str, None),
    "m": (batch_value, None),
    "cycles": (int, None),
    "budget_seconds": (float, None),
    "chains": (int, 1),
    "burnin": (int, 500),
    "seed": (seed_value, 0),
    "out_dir": (str, None),
    "t_max": (int, None),
    **MODEL_OPTS,
}

DIAGNOSE_OPTS = {
    "t_max": (int, None),
    "out": (str, None),
}

EXPERIMENT_OPTS = {
    "seed": (seed_value, 0),
    "out_dir": (str, None),
    "budget_seconds": (float, None),
    "iterations": (int, None),
    "n_per_arm": (int, None),
    "burnin": (int, None),
    "chains": (int, None),
}

# which overrides each figure understands, and the keyword it maps to
EXPERIMENT_KW = {
    "fig3": {"budget_seconds": "budget_seconds", "n_per_arm": "n_per_arm",
             "burnin": "burnin_cycles", "chains": "chains"},
    "fig5": {"iterations": "iterations"},
    "fig6": {"iterations": "iterations"},
    "fig8": {"budget_seconds": "budget_seconds", "n_per_arm": "n_per_arm",
             "burnin": "burnin_cycles"},
}

OPTION_TABLES = {
    "generate": GENERATE_OPTS,
    "adapt": ADAPT_OPTS,
    "sample": SAMPLE_OPTS,
    "diagnose": DIAGNOSE_OPTS,
    "experiment": EXPERIMENT_OPTS,
}


def _add_table_options(sub, table) -> None:
    for dest, (conv, _default) in table.items():
        flag = "--" + dest.replace("_", "-")
        sub.add_argument(flag, dest=dest, type=conv, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="adascan", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=None,
                        help="INI config file, one section per subcommand")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = subs.add_parser("generate", help="write a synthetic data file")
    gen.add_argument("model", choices=MODELS)
    _add_table_options(gen, GENERATE_OPTS)

    ad = subs.add_parser("adapt", help="pick the batch size minimizing cost per effective sample")
    _add_table_options(ad, ADAPT_OPTS)
    ad.add_argument("--self-test", action="store_true",
                    help="run the scripted-cost selection check instead of a model")

    sa = subs.add_parser("sample", help="run chains at a fixed batch size and report diagnostics")
    _add_table_options(sa, SAMPLE_OPTS)

    di = subs.add_parser("diagnose", help="diagnostics for existing trace CSVs")
    di.add_argument("--trace", nargs="+", required=False, default=None)
    _add_table_options(di, DIAGNOSE_OPTS)

    ex = subs.add_parser("experiment", help="end-to-end figure reproduction")
    ex.add_argument("figure", choices=sorted(FIGURES))
    _add_table_options(ex, EXPERIMENT_OPTS)

    return parser


def load_config(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"bad config file: {exc}") from None
    return {section: dict(cp[section]) for section in cp.sections()}


def resolve_options(args, config: dict[str, dict[str, str]]) -> None:
    """Fill argparse Namespace holes from the config section, then defaults."""
    table = OPTION_TABLES.get(args.command, {})
    section = config.get(args.command, {})
    for dest, (conv, default) in table.items():
        if getattr(args, dest, None) is not None:
            continue
        if dest in section:
            try:
                setattr(args, dest, conv(section[dest]))
            except ValueError as exc:
                raise UsageError(
                    f"config [{args.command}] {dest}: {exc}") from None
        else:
            setattr(args, dest, default)


def _out_dir(value) -> Path:
    path = Path(value if value is not None else os.environ.get(OUTDIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sampler_mode(args) -> str:
    allowed = SAMPLER_MODES[args.model]
    mode = args.sampler_mode if args.sampler_mode is not None else allowed[0]
    if mode not in allowed:
        raise UsageError(f"--sampler-mode for {args.model} must be one of {allowed}")
    return mode


def _build_model_state(args, init_stream: int):
    """Load the data file and construct (model, fresh chain state)."""
    if args.model is None:
        raise UsageError("--model is required")
    if args.data is None:
        raise UsageError("--data is required")
    mode = _sampler_mode(args)
    if args.model == "blasso":
        X, y = load_probit_data(args.data)
        model = BayesianLassoProbit(mode)
        return model, model.initial_state(X, y, lam=args.lam)
    if args.model == "dpmm":
        X, _labels = load_points(args.data)
        prior = None
        if args.cluster_scale is not None:
            prior = component_scale_prior(X, args.cluster_scale)
        model = DpNormalMixture(mode=mode)
        alpha = args.alpha if args.alpha is not None else 1.0
        return model, model.initial_state(
            X, alpha=alpha, prior=prior,
            rng=RandomStream(args.seed, init_stream), init="single")
    if args.model == "lda":
        docs = load_corpus(args.data, vocab_size=args.vocab_size)
        if args.topics is None:
            raise UsageError("lda requires --topics")
        vocab = args.vocab_size
        if vocab is None:
            vocab = max((int(d.max()) for d in docs if len(d)), default=-1) + 1
            if vocab < 1:
                raise DataFormatError("corpus has no tokens", path=args.data)
        model = LdaTopicModel(mode)
        return model, model.initial_state(
            docs, args.topics, vocab, alpha=args.alpha, eta=args.eta,
            rng=RandomStream(args.seed, init_stream))
    raise UsageError(f"unknown model {args.model!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.out is None:
        raise UsageError("generate requires --out")
    rng = RandomStream(args.seed, 0)
    if args.model == "blasso":
        n = args.n if args.n is not None else 1200
        d = args.d if args.d is not None else 4
        noise = args.noise_sd if args.noise_sd is not None else 1.0
        X, y, _ = gen_probit_data(n, d, noise_sd=noise, rng=rng)
        save_probit_data(args.out, X, y)
        print(f"wrote {args.out}: {n} rows, {d} features + label")
    elif args.model == "dpmm":
        n = args.n if args.n is not None else 1000
        k = args.k if args.k is not None else 5
        dim = args.dim if args.dim is not None else 2
        sep = args.separation if args.separation is not None else 10.0
        X, labels, _ = gen_gmm_data(n, k, dim, sep, rng=rng)
        save_points(args.out, X, labels)
        print(f"wrote {args.out}: {n} points in {dim} dims, {k} clusters")
    else:
        n_docs = args.d if args.d is not None else 250
        k = args.k if args.k is not None else 4
        v = args.v if args.v is not None else 6000
        train, test, _ = gen_synthetic_corpus(
            n_docs, k, v, alpha=args.alpha_gen, eta=args.eta_gen, rng=rng)
        save_corpus(args.out, interleave_corpus(train, test))
        split_path = Path(str(args.out) + ".heldout")
        save_doc_indices(split_path, heldout_indices(n_docs))
        print(f"wrote {args.out}: {n_docs} docs, {k} topics, vocab {v}")
        print(f"wrote {split_path}: {len(test)} held-out document indices")
    return EXIT_OK


class _ScriptedModel(GibbsModel):
    """Self-test model: no-op updates whose scripted costs advance an injected
    counter clock; the summary encodes the batch size in effect so a scripted
    tau estimator can look arms up deterministically."""

    def __init__(self, n_units: int, clock):
        self.n = n_units
        self.clock = clock
        self._since_global = 0
        self._last_m = 1

    def num_local_units(self, state) -> int:
        return self.n

    def local_update(self, state, index, gen) -> None:
        self._since_global += 1
        self.clock.t += 1.0

    def global_update(self, state, gen) -> None:
        if self._since_global:
            self._last_m = self._since_global
        self._since_global = 0
        self.clock.t += 1.0

    def summary(self, state) -> float:
        return float(self._last_m)

    def log_joint(self, state) -> float:
        return 0.0


class _CounterClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self) -> float:
        return self.t


SELF_TEST_EXPECTED_M = 4


def _self_test_tau(samples) -> float:
    # tau(m) = 256/m + m; with unit costs f(m) = (m+1)(256/m + m), argmin 4
    m = float(np.asarray(samples)[-1])
    return 256.0 / m + m


def cmd_adapt_self_test(args) -> int:
    clock = _CounterClock()
    model = _ScriptedModel(64, clock)
    result = adapt_batch_size(model, {}, BatchGrid((1, 2, 4, 8, 16, 32, 64)),
                              RandomStream(args.seed, 1), burnin_cycles=0,
                              n_per_arm=50, tau_estimator=_self_test_tau,
                              clock=clock)
    for a in result.per_arm:
        print(f"m={a.m}: tau_int={a.tau_int:.6g} objective={a.objective:.6g}")
    if args.out is not None:
        result.to_csv(args.out)
        print(f"wrote {args.out}")
    if result.m_star != SELF_TEST_EXPECTED_M:
        print(f"self-test FAILED: m_star={result.m_star}, "
              f"expected {SELF_TEST_EXPECTED_M}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"self-test ok: m_star={result.m_star}")
    return EXIT_OK


def cmd_adapt(args) -> int:
    if args.self_test:
        return cmd_adapt_self_test(args)
    if args.grid is not None and args.grid_ratio is not None:
        raise UsageError("give --grid or --grid-ratio, not both")
    model, state = _build_model_state(args, init_stream=2)
    n_units = model.num_local_units(state)
    if args.grid is not None:
        grid = BatchGrid(args.grid)
    else:
        ratio = args.grid_ratio if args.grid_ratio is not None else 4.0
        grid = make_log_grid(n_units, ratio=ratio)
    result = adapt_batch_size(model, state, grid, RandomStream(args.seed, 1),
                              burnin_cycles=args.burnin,
                              n_per_arm=args.n_per_arm)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for a in result.per_arm:
        print(f"m={a.m}: w_z={a.w_z:.4g} w_theta={a.w_theta:.4g} "
              f"tau_int={a.tau_int:.4g} objective={a.objective:.4g}")
    print(f"m_star={result.m_star}")
    out = Path(args.out) if args.out is not None else _out_dir(None) / "adaptation.csv"
    result.to_csv(out)
    print(f"wrote {out}")
    return EXIT_OK


def _run_one_chain(args, j: int, m: int, out_dir: Path, results: list, errors: list):
    try:
        model, state = _build_model_state(args, init_stream=1000 + j)
        trace = run_scan(model, state, ScanSchedule(m),
                         n_cycles=args.cycles, rng=RandomStream(args.seed, 16 + j),
                         burnin=args.burnin, budget_seconds=args.budget_seconds)
        path = out_dir / f"trace_chain{j}.csv"
        trace.to_csv(path)
        results[j] = (trace, path)
    except BaseException as exc:  # noqa: BLE001 - propagated to the main thread
        errors[j] = exc


def cmd_sample(args) -> int:
    if args.cycles is not None and args.budget_seconds is not None:
        raise UsageError("give --cycles or --budget-seconds, not both")
    if args.cycles is None and args.budget_seconds is None:
        args.cycles = 1000
    if args.chains < 1:
        raise UsageError("--chains must be >= 1")

    # resolve m against the data size with a throwaway state
    model, probe = _build_model_state(args, init_stream=2)
    n_units = model.num_local_units(probe)
    if args.m is None:
        raise UsageError("--m is required (an integer, or N for full batch)")
    m = n_units if args.m == "full" else int(args.m)
    if not 1 <= m <= n_units:
        raise UsageError(f"--m must be in [1, {n_units}], got {m}")

    out_dir = _out_dir(args.out_dir)
    results: list = [None] * args.chains
    errors: list = [None] * args.chains
    threads = [threading.Thread(target=_run_one_chain,
                                args=(args, j, m, out_dir, results, errors))
               for j in range(args.chains)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for exc in errors:
        if exc is not None:
            raise exc

    traces = [tr for tr, _ in results]
    for _, path in results:
        print(f"wrote {path}")

    epsr_value = None
    if args.chains >= 2:
        shortest = min(len(tr) for tr in traces)
        epsr_value = epsr([tr.summaries[:shortest] for tr in traces])
    reports = [report_for(tr.summaries, m=m, w_z=tr.w_z, w_theta=tr.w_theta,
                          epsr_value=epsr_value, t_max=args.t_max)
               for tr in traces]
    print(DiagnosticsReport.CSV_HEADER)
    for rep in reports:
        print(rep.csv_row())
    diag_path = out_dir / "diagnostics.csv"
    with open(diag_path, "w", newline="\n") as fh:
        fh.write(DiagnosticsReport.CSV_HEADER + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")
    print(f"wrote {diag_path}")

    if args.budget_seconds is not None:
        tr = traces[0]
        predicted = args.budget_seconds / (m * tr.w_z + tr.w_theta)
        print(f"cycles={len(tr)} predicted={predicted:.1f} "
              f"(budget / (m w_z + w_theta))")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if not args.trace:
        raise UsageError("diagnose requires --trace with at least one file")
    traces = [ChainTrace.from_csv(p) for p in args.trace]
    epsr_value = None
    if len(traces) >= 2:
        shortest = min(len(tr) for tr in traces)
        epsr_value = epsr([tr.summaries[:shortest] for tr in traces])
    reports = [report_for(tr.summaries, epsr_value=epsr_value, t_max=args.t_max)
               for tr in traces]
    print(DiagnosticsReport.CSV_HEADER)
    for rep in reports:
        print(rep.csv_row())
    if args.out is not None:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(DiagnosticsReport.CSV_HEADER + "\n")
            for rep in reports:
                fh.write(rep.csv_row() + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    out_dir = _out_dir(args.out_dir)
    kwargs = {}
    for dest, kw in EXPERIMENT_KW[args.figure].items():
        value = getattr(args, dest)
        if value is not None:
            kwargs[kw] = value
    result = FIGURES[args.figure](out_dir, seed=args.seed, **kwargs)
    adaptation = getattr(result, "adaptation", None)
    if adaptation is not None:
        print(f"m_star={adaptation.m_star}")
    for path in result.paths.values():
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "adapt": cmd_adapt,
    "sample": cmd_sample,
    "diagnose": cmd_diagnose,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        config = load_config(args.config) if args.config else {}
        resolve_options(args, config)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, AdascanError) as exc:
        if isinstance(exc, NumericError):
            print(f"numeric error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
