"""Local/global truncation errors of DMD extrapolation and their bound.

All quantities except :func:`measured_global_error` live in observable
space, where the one-step DMD map is ``A = Phi diag(lam) Phi^+``:

* local truncation error ``tau^n = y^n - A y^{n-1}``,
* global error ``e^n = y^n - Phi diag(lam)^n b``, which obeys
  ``e^n = tau^n + A e^{n-1}``,
* the a-posteriori bound, for ``n >= m``::

      |e^n| <= |Phi L^(n-m)|_F |Phi^+|_F |e^m|
               + (n-m) eps_m max_{0<=k<n-m} |Phi L^k|_F |Phi^+|_F

``eps_m`` is not computable from data in closed form; we use the largest
local truncation error over the training pairs from the model's anchor
snapshot on. A model anchored at ``y^1`` never reproduces the first pair
(``y^0`` may carry an initial/boundary jump outside the mode span), and
letting that single pair set ``eps_m`` would inflate the bound by orders
of magnitude.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .dmd import apply_propagator, eigenvalue_powers, predict, predict_observables
from .exceptions import RangeError
from .snapshots import SnapshotPair, build_snapshot_pair, lift

REPORT_HEADER = ("step", "t", "tau", "e_measured", "e_bound")


@dataclass(frozen=True)
class ErrorReport:
    """Per-step errors of one DMD model against a reference trajectory.

    Arrays are aligned with ``steps`` (= m, m+1, ..., n_max).
    """

    steps: np.ndarray
    tau: np.ndarray
    e_measured: np.ndarray
    e_bound: np.ndarray
    eps_m: float
    e_m: float
    phi_pinv_fro: float
    phi_lam_fro: np.ndarray  # |Phi L^k|_F for k = 0 .. n_max - m
    dt: float = 1.0
    t0: float = 0.0

    @property
    def times(self):
        return self.t0 + self.dt * self.steps

    def bound_holds(self):
        return bool(np.all(self.e_bound >= self.e_measured))


def _check_steps(steps, n_states, lo=0):
    steps = np.atleast_1d(np.asarray(steps, dtype=np.int64))
    if steps.size == 0:
        raise RangeError("empty step range")
    if steps.min() < lo or steps.max() >= n_states:
        raise RangeError(
            f"steps [{steps.min()}, {steps.max()}] outside the reference range "
            f"[{lo}, {n_states - 1}]"
        )
    return steps


def _lifted(model, reference, idx):
    return np.asarray(lift(reference.states[idx].T, model.observable), dtype=np.complex128)


def local_truncation_errors(model, reference, steps):
    """``|y^n - A y^{n-1}|_2`` for each ``n`` in ``steps`` (all >= 1)."""
    steps = _check_steps(steps, len(reference), lo=1)
    y_now = _lifted(model, reference, steps)
    y_prev = _lifted(model, reference, steps - 1)
    return np.linalg.norm(y_now - apply_propagator(model, y_prev), axis=0)


def epsilon_m(model, training):
    """Surrogate for ``eps_m``: max local truncation error over the training pairs.

    Pairs that start before ``model.anchor`` are skipped.
    """
    if not isinstance(training, SnapshotPair):
        raise TypeError("training must be a SnapshotPair")
    start = min(model.anchor, training.m - 1)
    y = np.asarray(lift(training.x[:, start:], model.observable), dtype=np.complex128)
    y_prime = np.asarray(lift(training.x_prime[:, start:], model.observable),
                         dtype=np.complex128)
    return float(np.linalg.norm(y_prime - apply_propagator(model, y), axis=0).max())


def phi_lambda_norms(model, k_max):
    """``|Phi diag(lam)^k|_F`` for ``k = 0 .. k_max``.

    Uses ``|Phi L^k|_F^2 = sum_j |lam_j|^(2k) |phi_j|^2``, O(r) per k.
    """
    col_sq = np.sum(np.abs(model.phi) ** 2, axis=0)
    mod2 = np.abs(model.lam) ** 2
    powers = eigenvalue_powers(mod2, np.arange(k_max + 1)).real
    return np.sqrt(col_sq @ powers)


def _bounds(model, eps_m, e_m, n_minus_m):
    """Vectorized bound for offsets ``n - m`` (sorted not required)."""
    offsets = np.asarray(n_minus_m, dtype=np.int64)
    k_top = int(offsets.max())
    norms = phi_lambda_norms(model, k_top)
    pinv_fro = float(np.linalg.norm(model.phi_pinv))
    running_max = np.maximum.accumulate(norms)
    # max over 0 <= k <= j-1, zero when j = 0
    prev_max = np.concatenate(([0.0], running_max[:-1]))
    bound = pinv_fro * (norms[offsets] * e_m + offsets * eps_m * prev_max[offsets])
    return bound, norms, pinv_fro


def global_error_bound(model, eps_m, e_m_anchor, n):
    """The a-posteriori bound on ``|e^n|_2`` for a single step ``n >= model.m``."""
    if n < model.m:
        raise RangeError(f"bound needs n >= m = {model.m}, got {n}")
    bound, _, _ = _bounds(model, eps_m, e_m_anchor, [n - model.m])
    return float(bound[0])


def global_error_bounds(model, eps_m, e_m_anchor, steps):
    steps = np.atleast_1d(np.asarray(steps, dtype=np.int64))
    if steps.min() < model.m:
        raise RangeError(f"bound needs n >= m = {model.m}")
    bound, _, _ = _bounds(model, eps_m, e_m_anchor, steps - model.m)
    return bound


def observable_global_errors(model, reference, steps):
    """``|y^n - Phi L^n b|_2`` (complex, observable space)."""
    steps = _check_steps(steps, len(reference))
    y = _lifted(model, reference, steps)
    return np.linalg.norm(y - predict_observables(model, steps), axis=0)


def measured_global_error(model, reference, steps):
    """``|u^n - u_DMD^n|_2`` in state space, after unlifting."""
    steps = _check_steps(steps, len(reference))
    u = reference.states[steps].T
    return np.linalg.norm(u - predict(model, steps), axis=0)


def error_report(model, reference, n_max=None, training=None):
    """Tau, measured error and bound for every step ``m .. n_max``.

    Parameters
    ----------
    model : DmdModel
    reference : Trajectory
        Resolved states on the same snapshot grid the model was fitted on.
    n_max : int, optional
        Last step; defaults to the end of ``reference``.
    training : SnapshotPair, optional
        Data for the ``eps_m`` surrogate; by default the first ``m + 1``
        reference states.
    """
    m = model.m
    if n_max is None:
        n_max = len(reference) - 1
    if training is None:
        training = build_snapshot_pair(reference, m)
    steps = _check_steps(np.arange(m, n_max + 1), len(reference), lo=1)
    eps = epsilon_m(model, training)
    e_m = float(observable_global_errors(model, reference, [m])[0])
    bound, norms, pinv_fro = _bounds(model, eps, e_m, steps - m)
    return ErrorReport(
        steps=steps,
        tau=local_truncation_errors(model, reference, steps),
        e_measured=measured_global_error(model, reference, steps),
        e_bound=bound,
        eps_m=eps,
        e_m=e_m,
        phi_pinv_fro=pinv_fro,
        phi_lam_fro=norms,
        dt=reference.dt,
        t0=reference.t0,
    )


def write_error_report_csv(path, report):
    """CSV with columns step, t, tau, e_measured, e_bound (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for row in zip(report.steps, report.times, report.tau, report.e_measured,
                       report.e_bound):
            w.writerow([str(int(row[0]))] + [format(float(v), ".17g") for v in row[1:]])
