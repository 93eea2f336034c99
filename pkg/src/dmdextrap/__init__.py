"""DMD extrapolation of PDE solutions with a posteriori error bounds.

Modules
-------
numerics        truncated SVD, dense eigensolver, FFT, norms
snapshots       trajectories, snapshot pairs, observable liftings, file formats
dmd             DMD fit/predict on states or lifted observables
error_analysis  local/global truncation errors and the global error bound
solvers         resolved reference solvers for the benchmark problems
pod_deim        POD-Galerkin reduced models with DEIM
harness         experiment runner and CSV reports (CLI in ``dmdextrap.cli``)
"""
from .dmd import DMD, DmdModel, fit_dmd, load_model, predict, predict_observables, save_model
from .error_analysis import ErrorReport, error_report, global_error_bound
from .exceptions import DmdExtrapError
from .harness import ExperimentConfig, compare_methods, run_experiment
from .numerics import eig_dense, left_pinv, truncated_svd
from .pod_deim import PODDEIM, build_rom, deim_select, fit_pod, rom_integrate
from .snapshots import (
    ObservableLift,
    ObservableMap,
    SnapshotPair,
    Trajectory,
    build_snapshot_pair,
    get_observable,
    lift,
    load_trajectory,
    save_trajectory,
    subsample_uniform,
    unlift,
)
from .solvers import PdeProblem, make_problem, solve

__version__ = "0.1.0"

__all__ = [
    "DMD", "DmdExtrapError", "DmdModel", "ErrorReport", "ExperimentConfig", "ObservableLift",
    "ObservableMap", "PODDEIM", "PdeProblem", "SnapshotPair", "Trajectory",
    "build_rom", "build_snapshot_pair", "compare_methods", "deim_select", "eig_dense",
    "error_report", "fit_dmd", "fit_pod", "get_observable", "global_error_bound",
    "left_pinv", "lift", "load_model", "load_trajectory", "make_problem", "predict",
    "predict_observables", "rom_integrate", "run_experiment", "save_model",
    "save_trajectory", "solve", "subsample_uniform", "truncated_svd", "unlift",
]
