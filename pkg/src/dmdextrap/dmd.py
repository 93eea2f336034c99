"""Dynamic mode decomposition on states or on lifted observables.

The fit follows the exact-DMD recipe: truncated SVD of the lifted
snapshot matrix ``Y = U S V^H``, reduced operator ``K = U^H Y' V S^-1``,
its eigenpairs ``K W = W diag(lam)`` and modes ``Phi = Y' V S^-1 W``.
Predictions ``Phi diag(lam)^n b`` need no time stepping.

Amplitudes
----------
``amplitudes="first"`` uses ``b = Phi^+ y^0``. The exact-DMD modes span a
subspace of ``span(Y')``, which need not contain ``y^0``: when the initial
profile clashes with the boundary data (all the Dirichlet test problems
here) ``y^0`` has a jump that no later snapshot carries, and the projection
is O(1) wrong. The default ``amplitudes="shifted"`` therefore anchors on
the first shifted snapshot, ``b = diag(lam)^-1 Phi^+ y^1``, which lies in
that span. Both agree on data generated by a linear map.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_unit_interval, is_real_valued
from .exceptions import DegenerateData, PredictionOverflow, ShapeError, ZeroMatrix
from .numerics import DEFAULT_EIG_CAP, eig_dense, left_pinv, truncated_svd
from .snapshots import (
    IDENTITY,
    ObservableMap,
    SnapshotPair,
    Trajectory,
    build_snapshot_pair,
    get_observable,
    lift,
    unlift,
)

MODEL_FORMAT = "dmdextrap-dmd-model-v1"


@dataclass(frozen=True)
class DmdModel:
    """A fitted DMD model (immutable).

    Attributes
    ----------
    phi : ndarray, shape (p, r)
        DMD modes in observable space.
    lam : ndarray, shape (r,)
        Eigenvalues of the reduced one-step operator.
    b : ndarray, shape (r,)
        Mode amplitudes at step 0.
    m : int
        Number of snapshot pairs the model was fitted on.
    dt : float
        Snapshot spacing; step ``n`` means time ``t0 + n * dt``.
    observable : ObservableMap
    phi_pinv : ndarray, shape (r, p)
    is_real : bool
        Whether the training data was real; predictions drop the imaginary part.
    sigma : ndarray, shape (r,)
        Kept singular values of the lifted snapshot matrix.
    t0 : float
    anchor : int
        Snapshot the amplitudes were computed from (0 or 1).
    """

    phi: np.ndarray
    lam: np.ndarray
    b: np.ndarray
    m: int
    dt: float
    observable: ObservableMap
    phi_pinv: np.ndarray
    is_real: bool
    sigma: np.ndarray
    t0: float = 0.0
    anchor: int = 1

    @property
    def rank(self):
        return self.lam.size

    @property
    def n_dof(self):
        return self.phi.shape[0] // self.observable.n_blocks


AMPLITUDE_MODES = ("shifted", "first")


def fit_dmd(pair, observable=IDENTITY, rank_eps=1e-8, max_eig_size=DEFAULT_EIG_CAP,
            amplitudes="shifted"):
    """Fit DMD to a snapshot pair, lifting both matrices by ``observable`` first.

    Parameters
    ----------
    pair : SnapshotPair
    observable : ObservableMap or str
    rank_eps : float
        Relative singular value cutoff in (0, 1).
    max_eig_size : int
    amplitudes : {"shifted", "first"}
        How ``b`` is computed, see the module docstring.

    Returns
    -------
    DmdModel
    """
    if amplitudes not in AMPLITUDE_MODES:
        raise ValueError(f"amplitudes must be one of {AMPLITUDE_MODES}, got {amplitudes!r}")
    if not isinstance(pair, SnapshotPair):
        raise TypeError(f"expected a SnapshotPair, got {type(pair).__name__}")
    g = get_observable(observable)
    rank_eps = check_unit_interval(rank_eps, "rank_eps")
    y = np.asarray(lift(pair.x, g), dtype=np.complex128)
    y_prime = np.asarray(lift(pair.x_prime, g), dtype=np.complex128)
    try:
        svd = truncated_svd(y, rank_eps)
    except ZeroMatrix as exc:
        raise DegenerateData("snapshot data is identically zero") from exc
    if svd.r == 0:
        raise DegenerateData("rank truncation kept no singular values")

    # Y' V S^-1 is shared by the reduced operator and the modes
    b_mat = (y_prime @ svd.v) / svd.sigma
    k_tilde = svd.u.conj().T @ b_mat
    eig = eig_dense(k_tilde, max_size=max_eig_size)
    phi = b_mat @ eig.vectors
    phi_pinv = left_pinv(phi)
    if amplitudes == "first":
        b = phi_pinv @ y[:, 0]
    else:
        lam = eig.values
        b = np.zeros(lam.size, dtype=np.complex128)
        nz = lam != 0
        b[nz] = (phi_pinv @ y_prime[:, 0])[nz] / lam[nz]
    return DmdModel(
        phi=phi,
        lam=eig.values,
        b=b,
        m=pair.m,
        dt=pair.dt,
        observable=g,
        phi_pinv=phi_pinv,
        is_real=pair.is_real,
        sigma=svd.sigma,
        t0=pair.t0,
        anchor=0 if amplitudes == "first" else 1,
    )


def eigenvalue_powers(lam, n):
    """``lam[:, None] ** n[None, :]`` by binary exponentiation.

    Raises
    ------
    PredictionOverflow
        If a power is not finite.
    """
    lam = np.asarray(lam, dtype=np.complex128)
    steps = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(steps < 0):
        raise ValueError("step indices must be nonnegative")
    out = np.ones((lam.size, steps.size), dtype=np.complex128)
    base = lam.copy()
    remaining = steps.copy()
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        while True:
            odd = (remaining & 1).astype(bool)
            if np.any(odd):
                out[:, odd] *= base[:, None]
            remaining >>= 1
            if not np.any(remaining):
                break
            base = base * base
    if not np.all(np.isfinite(out)):
        raise PredictionOverflow(
            f"|lambda|^n overflowed (max |lambda| = {np.abs(lam).max():.6g}, "
            f"max n = {steps.max()})"
        )
    return out


def predict_observables(model, n):
    """Lifted prediction ``phi diag(lam)^n b``; a vector for scalar ``n``."""
    scalar = np.ndim(n) == 0
    powers = eigenvalue_powers(model.lam, n)
    y = model.phi @ (powers * model.b[:, None])
    return y[:, 0] if scalar else y


def predict(model, n):
    """State prediction at step(s) ``n`` (snapshot spacings after ``t0``).

    Returns a vector for scalar ``n`` and an (N, len(n)) matrix otherwise.
    Real-valued problems get the real part.
    """
    u = unlift(predict_observables(model, n), model.observable)
    return u.real.copy() if model.is_real else u


def propagator_matrix(model):
    """One-step map ``A = phi diag(lam) phi^+`` in observable space (p x p)."""
    return (model.phi * model.lam) @ model.phi_pinv


def apply_propagator(model, y):
    """``A @ y`` without forming ``A``; ``y`` may hold several columns."""
    y = np.asarray(y)
    coeffs = model.phi_pinv @ y
    if coeffs.ndim == 1:
        return model.phi @ (model.lam * coeffs)
    return model.phi @ (model.lam[:, None] * coeffs)


def save_model(path, model):
    np.savez(
        path,
        format=np.array(MODEL_FORMAT),
        phi=model.phi,
        lam=model.lam,
        b=model.b,
        phi_pinv=model.phi_pinv,
        sigma=model.sigma,
        m=np.array(model.m),
        dt=np.array(model.dt),
        t0=np.array(model.t0),
        is_real=np.array(model.is_real),
        anchor=np.array(model.anchor),
        observable_name=np.array(model.observable.name),
        observable_blocks=np.array(model.observable.blocks),
    )


def load_model(path):
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        g = ObservableMap(
            str(data["observable_name"]), tuple(str(b) for b in data["observable_blocks"])
        )
        return DmdModel(
            phi=data["phi"],
            lam=data["lam"],
            b=data["b"],
            m=int(data["m"]),
            dt=float(data["dt"]),
            observable=g,
            phi_pinv=data["phi_pinv"],
            is_real=bool(data["is_real"]),
            sigma=data["sigma"],
            t0=float(data["t0"]),
            anchor=int(data["anchor"]),
        )


class DMD(BaseEstimator):
    """Scikit-learn style wrapper around :func:`fit_dmd`.

    Parameters
    ----------
    rank_eps : float, default=1e-8
        Keep singular values ``sigma_i > rank_eps * sigma_1``.
    observable : str or ObservableMap, default="identity"
        Lifting applied to every snapshot before the fit.
    n_snapshots : int or None
        Number of snapshot pairs ``m`` to use when fitting on a trajectory
        or on a raw matrix; ``None`` uses all available states.
    max_eig_size : int, default=512
    amplitudes : {"shifted", "first"}, default="shifted"

    Examples
    --------
    >>> import numpy as np
    >>> states = 0.5 ** np.arange(6)[None, :]
    >>> DMD(rank_eps=1e-10).fit(states).predict(3)
    array([0.125])
    """

    def __init__(self, rank_eps=1e-8, observable="identity", n_snapshots=None,
                 max_eig_size=DEFAULT_EIG_CAP, amplitudes="shifted"):
        self.rank_eps = rank_eps
        self.observable = observable
        self.n_snapshots = n_snapshots
        self.max_eig_size = max_eig_size
        self.amplitudes = amplitudes

    def _as_pair(self, X):
        if isinstance(X, SnapshotPair):
            return X
        if isinstance(X, Trajectory):
            traj = X
        else:
            cols = np.asarray(X)
            if cols.ndim != 2:
                raise ShapeError(f"snapshot matrix must be 2-D (N, m+1), got {cols.shape}")
            if is_real_valued(cols):
                cols = cols.real
            traj = Trajectory(states=cols.T, dt=1.0)
        m = len(traj) - 1 if self.n_snapshots is None else self.n_snapshots
        return build_snapshot_pair(traj, m)

    def fit(self, X, y=None):
        """Fit on a SnapshotPair, a Trajectory, or an (N, m+1) column matrix."""
        self.model_ = fit_dmd(
            self._as_pair(X), get_observable(self.observable), self.rank_eps,
            self.max_eig_size, self.amplitudes,
        )
        self.modes_ = self.model_.phi
        self.eigenvalues_ = self.model_.lam
        self.amplitudes_ = self.model_.b
        self.rank_ = self.model_.rank
        self.n_snapshots_ = self.model_.m
        return self

    def predict(self, n):
        check_is_fitted(self, "model_")
        return predict(self.model_, n)

    def predict_observables(self, n):
        check_is_fitted(self, "model_")
        return predict_observables(self.model_, n)

    def propagator_matrix(self):
        check_is_fitted(self, "model_")
        return propagator_matrix(self.model_)
