"""Experiment runner: resolved solve, DMD and POD-DEIM fits, errors, CSV reports.

Output directory layout of :func:`run_experiment`::

    config.txt                  resolved configuration (key=value)
    reference.traj              reference trajectory, binary
    reference.csv               reference field, one row per snapshot
    prediction_dmd_<obs>.csv    DMD field prediction
    error_dmd_<obs>.csv         step, t, tau, e_measured, e_bound
    prediction_pod_deim.csv     POD-DEIM field
    error_pod_deim.csv          step, t, e_measured
    timings.csv                 every repeat of every method
    comparison.csv              one ComparisonRow per method/observable
    summary.csv                 comparison sorted by total time, with ranks
    summary_by_error.csv        comparison sorted by max error, with ranks

Errors in the comparison table are state-space 2-norms over the
prediction steps ``m .. n_snapshots_total - 1``.
"""
import csv
import statistics
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dmd import fit_dmd, predict
from .error_analysis import ErrorReport, error_report, write_error_report_csv
from .exceptions import InvariantViolation
from .pod_deim import build_rom, rom_integrate
from .snapshots import (
    Trajectory,
    build_snapshot_pair,
    get_observable,
    save_trajectory,
    write_trajectory_csv,
)
from .solvers import TEST_IDS, make_problem, solve

METHODS = ("resolved", "dmd", "pod_deim")
CSV_SCHEMA_VERSION = 1

COMPARISON_HEADER = (
    "method", "observable", "rank", "fit_time_s", "predict_time_s", "total_time_s",
    "max_error", "final_error",
)
SUMMARY_HEADER = COMPARISON_HEADER + ("time_rank", "error_rank")
TIMINGS_HEADER = ("method", "observable", "repeat", "fit_time_s", "predict_time_s",
                  "total_time_s")
POD_ERROR_HEADER = ("step", "t", "e_measured")
TIMING_COLUMNS = frozenset({"fit_time_s", "predict_time_s", "total_time_s", "time_rank"})

# per-test defaults that differ from (n_grid=500, n_snapshots_total=500, m=200)
_TEST_DEFAULTS = {"4": {"n_grid": 512, "n_snapshots_total": 41, "m": 20}}

#: "g2" for each test: the observable whose span closes the dynamics
_RICH_OBSERVABLE = {"1a": "cubic", "1b": "cubic", "2a": "cubic", "2b": "cubic",
                    "3": "kirchhoff", "4": "nls_cubic"}


def resolve_observable(alias, test_id):
    """Map ``g1``/``g2`` to a registered observable name; other names pass through."""
    if alias == "g1":
        return "identity"
    if alias == "g2":
        return _RICH_OBSERVABLE[str(test_id)]
    return get_observable(alias).name


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``None`` fields take the per-test default."""

    test_id: str = "1a"
    n_grid: Optional[int] = None
    n_snapshots_total: Optional[int] = None
    m: Optional[int] = None
    rank_eps: float = 1e-8
    observables: tuple = ("g1", "g2")
    methods: tuple = METHODS
    output_dir: str = "out"
    repeats: int = 3
    amplitudes: str = "shifted"
    assert_bound: bool = False

    def resolved(self):
        """Copy with defaults filled in and aliases expanded; validates."""
        tid = str(self.test_id).lower()
        if tid not in TEST_IDS:
            raise ValueError(f"unknown test id {self.test_id!r}; expected one of {TEST_IDS}")
        base = {"n_grid": 500, "n_snapshots_total": 500, "m": 200}
        base.update(_TEST_DEFAULTS.get(tid, {}))
        vals = {k: getattr(self, k) if getattr(self, k) is not None else v
                for k, v in base.items()}
        methods = tuple(dict.fromkeys(self.methods))
        bad = [x for x in methods if x not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; known: {METHODS}")
        obs = tuple(dict.fromkeys(resolve_observable(o, tid) for o in self.observables))
        cfg = replace(self, test_id=tid, observables=obs, methods=methods, **vals)
        if not 0.0 < cfg.rank_eps < 1.0:
            raise ValueError(f"rank_eps must lie in (0, 1), got {cfg.rank_eps}")
        if not 2 <= cfg.m < cfg.n_snapshots_total:
            raise ValueError(f"need 2 <= m < n_snapshots_total, got m={cfg.m}, "
                             f"n_snapshots_total={cfg.n_snapshots_total}")
        if cfg.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {cfg.repeats}")
        return cfg


_LIST_KEYS = ("observables", "methods")
_KEY_ALIASES = {"test": "test_id", "out": "output_dir", "n_snapshots": "n_snapshots_total"}


def _coerce(name, text):
    if name in _LIST_KEYS:
        return tuple(s.strip() for s in text.split(",") if s.strip())
    if name in ("n_grid", "n_snapshots_total", "m", "repeats"):
        return None if text.lower() == "none" else int(text)
    if name == "rank_eps":
        return float(text)
    if name == "assert_bound":
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"assert_bound must be a boolean, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    return text


def config_from_mapping(values, base=None):
    """Build a config from string values (file or flags); unknown keys are errors."""
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for key, text in values.items():
        name = _KEY_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in known:
            raise ValueError(f"unknown config key {key!r}")
        out[name] = _coerce(name, str(text).strip())
    return replace(base or ExperimentConfig(), **out)


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            values[key.strip()] = value.strip()
    return config_from_mapping(values)


def write_config(path, cfg):
    with open(path, "w") as fh:
        for k, v in asdict(cfg).items():
            if isinstance(v, tuple):
                v = ",".join(v)
            fh.write(f"{k}={v}\n")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    observable: str
    rank: int
    fit_time_s: float
    predict_time_s: float
    total_time_s: float
    max_error: float
    final_error: float

    def __post_init__(self):
        if min(self.fit_time_s, self.predict_time_s, self.total_time_s) < 0:
            raise ValueError("times must be nonnegative")
        if not (np.isfinite(self.max_error) and np.isfinite(self.final_error)):
            raise ValueError(f"{self.method}/{self.observable}: non-finite error")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reference: Trajectory
    reports: dict = field(default_factory=dict)  # observable -> ErrorReport
    predictions: dict = field(default_factory=dict)  # (method, observable) -> states
    rows: list = field(default_factory=list)
    timings: list = field(default_factory=list)  # (method, obs, repeat, fit, pred)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _timed(fit, run, repeats):
    """Run ``fit`` then ``run(fitted)`` ``repeats`` times; keep the first outputs."""
    times, first = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        fitted = fit()
        t1 = time.perf_counter()
        out = run(fitted)
        t2 = time.perf_counter()
        times.append((t1 - t0, t2 - t1))
        if first is None:
            first = (fitted, out)
    return first, times


def _row(method, obs, rank, times, errors, m):
    fit_s = statistics.median(t[0] for t in times)
    pred_s = statistics.median(t[1] for t in times)
    total_s = statistics.median(t[0] + t[1] for t in times)
    window = errors[m:]
    return ComparisonRow(method, obs, int(rank), fit_s, pred_s, total_s,
                         float(window.max()), float(errors[-1]))


def _state_errors(reference, states):
    return np.linalg.norm(np.asarray(states) - reference.states, axis=1)


def run_experiment(cfg):
    """Run one experiment and write its CSVs to ``cfg.output_dir``.

    Returns
    -------
    ExperimentResult

    Raises
    ------
    InvariantViolation
        If ``cfg.assert_bound`` is set and a DMD bound fails at some step.
        All reports are written first.
    """
    cfg = cfg.resolved()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config(out / "config.txt", cfg)
    n_total, m = cfg.n_snapshots_total, cfg.m
    problem = make_problem(cfg.test_id, cfg.n_grid, step_multiple=n_total - 1)

    t0 = time.perf_counter()
    reference = solve(problem, n_total)
    solve_s = time.perf_counter() - t0
    result = ExperimentResult(config=cfg, reference=reference)
    save_trajectory(out / "reference.traj", reference)
    write_trajectory_csv(out / "reference.csv", reference)

    try:
        if "resolved" in cfg.methods:
            times = [(0.0, solve_s)]
            for _ in range(cfg.repeats - 1):
                t0 = time.perf_counter()
                solve(problem, n_total)
                times.append((0.0, time.perf_counter() - t0))
            result.timings += [("resolved", "", i, *t) for i, t in enumerate(times)]
            result.rows.append(_row("resolved", "", problem.n_dof, times,
                                    np.zeros(n_total), m))

        if "dmd" in cfg.methods:
            steps = np.arange(n_total)
            for obs in cfg.observables:
                g = get_observable(obs)
                (model, states), times = _timed(
                    lambda: fit_dmd(build_snapshot_pair(reference, m), g, cfg.rank_eps,
                                    amplitudes=cfg.amplitudes),
                    lambda mod: predict(mod, steps).T,
                    cfg.repeats,
                )
                report = error_report(model, reference)
                result.reports[obs] = report
                result.predictions[("dmd", obs)] = states
                write_trajectory_csv(out / f"prediction_dmd_{obs}.csv",
                                     Trajectory(states, reference.dt, reference.t0))
                write_error_report_csv(out / f"error_dmd_{obs}.csv", report)
                result.timings += [("dmd", obs, i, *t) for i, t in enumerate(times)]
                result.rows.append(_row("dmd", obs, model.rank, times,
                                        _state_errors(reference, states), m))

        if "pod_deim" in cfg.methods:
            training = reference.states[: m + 1].T
            (rom, traj), times = _timed(
                lambda: build_rom(training, problem, cfg.rank_eps),
                lambda r: rom_integrate(r, n_total),
                cfg.repeats,
            )
            result.predictions[("pod_deim", "")] = traj.states
            write_trajectory_csv(out / "prediction_pod_deim.csv", traj)
            errors = _state_errors(reference, traj.states)
            _write_rows(out / "error_pod_deim.csv", POD_ERROR_HEADER,
                        zip(range(n_total), reference.times, errors))
            result.timings += [("pod_deim", "", i, *t) for i, t in enumerate(times)]
            result.rows.append(_row("pod_deim", "", rom.pod.r, times, errors, m))
    finally:
        _write_tables(out, result)

    if cfg.assert_bound:
        bad = {o: int(np.sum(r.e_bound < r.e_measured)) for o, r in result.reports.items()}
        bad = {o: k for o, k in bad.items() if k}
        if bad:
            raise InvariantViolation(f"error bound violated (steps per observable: {bad})")
    return result


def _write_tables(out, result):
    _write_rows(out / "timings.csv", TIMINGS_HEADER,
                ((meth, obs, rep, f, p, f + p) for meth, obs, rep, f, p in result.timings))
    _write_rows(out / "comparison.csv", COMPARISON_HEADER,
                (astuple_row(r) for r in result.rows))
    if result.rows:
        write_summary(out, compare_methods(result.rows))


def astuple_row(row):
    return tuple(getattr(row, name) for name in COMPARISON_HEADER)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedSummary:
    """Rows with 1-based ranks; ``by_time`` and ``by_error`` are index orders."""

    rows: tuple
    time_rank: tuple
    error_rank: tuple
    by_time: tuple
    by_error: tuple


def compare_methods(rows):
    """Rank rows by total time and by max error (stable: ties keep input order)."""
    rows = tuple(rows)
    by_time = tuple(sorted(range(len(rows)), key=lambda i: rows[i].total_time_s))
    by_error = tuple(sorted(range(len(rows)), key=lambda i: rows[i].max_error))
    time_rank = [0] * len(rows)
    error_rank = [0] * len(rows)
    for pos, i in enumerate(by_time, 1):
        time_rank[i] = pos
    for pos, i in enumerate(by_error, 1):
        error_rank[i] = pos
    return RankedSummary(rows, tuple(time_rank), tuple(error_rank), by_time, by_error)


def write_summary(out, summary):
    out = Path(out)
    for name, order in (("summary.csv", summary.by_time),
                        ("summary_by_error.csv", summary.by_error)):
        _write_rows(out / name, SUMMARY_HEADER,
                    (astuple_row(summary.rows[i])
                     + (summary.time_rank[i], summary.error_rank[i]) for i in order))


def read_comparison(path):
    """Load ComparisonRows from a comparison or summary CSV."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ComparisonRow(
                method=rec["method"], observable=rec["observable"], rank=int(rec["rank"]),
                fit_time_s=float(rec["fit_time_s"]),
                predict_time_s=float(rec["predict_time_s"]),
                total_time_s=float(rec["total_time_s"]),
                max_error=float(rec["max_error"]), final_error=float(rec["final_error"]),
            ))
    return rows


def run_sweep(cfg, param, values):
    """Run ``cfg`` once per value of ``param`` ("m" or "rank_eps").

    Each run writes to ``<output_dir>/<param>=<value>``; ``sweep.csv`` in
    ``output_dir`` collects every comparison row with the swept value.
    """
    if param not in ("m", "rank_eps"):
        raise ValueError(f"can only sweep m or rank_eps, got {param!r}")
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    results, lines = [], []
    for value in values:
        value = int(value) if param == "m" else float(value)
        sub = replace(cfg, output_dir=str(root / f"{param}={_fmt(value)}"), **{param: value})
        res = run_experiment(sub)
        results.append(res)
        lines += [(value,) + astuple_row(r) for r in res.rows]
    _write_rows(root / "sweep.csv", (param,) + COMPARISON_HEADER, lines)
    return results


__all__ = [
    "ComparisonRow",
    "ErrorReport",
    "ExperimentConfig",
    "ExperimentResult",
    "RankedSummary",
    "compare_methods",
    "config_from_mapping",
    "read_comparison",
    "read_config",
    "resolve_observable",
    "run_experiment",
    "run_sweep",
    "write_summary",
]
