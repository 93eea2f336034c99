"""POD-Galerkin reduced models with DEIM for the nonlinear terms.

The full-order model is written as

    u' = A u + sum_j L_j psi_j(u) + f(t)

(see :class:`~dmdextrap.solvers.FullOrderModel`). With an orthonormal POD
basis ``V`` and ``u ~ V a`` the reduced system reads

    a' = V^H A V a + sum_j V^H L_j U_j (P_j^T U_j)^-1 psi_j(V[p_j] a) + V^H f(t)

where ``U_j`` is a POD basis of the ``psi_j`` snapshots and ``p_j`` are
the DEIM rows. Pointwise nonlinearities commute with row selection, so each
step touches only ``len(p_j)`` rows of ``V``. The reduced system is marched
from ``t = 0`` with the integrator and fine time step of the resolved
solver.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, check_unit_interval, is_real_valued
from .exceptions import DegenerateData, SingularInterpolation, StateOutOfRange, ZeroMatrix
from .numerics import truncated_svd
from .snapshots import BLOCKS, Trajectory, uniform_indices
from .solvers import BLOWUP_LIMIT, full_order_model

#: reciprocal condition number below which P^T U is rejected
DEIM_RCOND = 1e-12


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal spatial basis.

    Attributes
    ----------
    modes : ndarray, shape (N, r)
    singular_values : ndarray, shape (r,)
        Zero for columns that only complete the basis.
    r : int
    """

    modes: np.ndarray
    singular_values: np.ndarray
    r: int


@dataclass(frozen=True)
class DeimOperator:
    """DEIM approximation of one nonlinear term ``L psi(u)``.

    Attributes
    ----------
    basis : ndarray, shape (N, s)
        POD basis of the ``psi`` snapshots.
    indices : ndarray of int, shape (s,)
        Interpolation rows, in selection order.
    projector : ndarray, shape (r, s)
        ``V^H L U (P^T U)^-1``.
    block : str
        Name of the pointwise map ``psi`` in ``snapshots.BLOCKS``.
    """

    basis: np.ndarray
    indices: np.ndarray
    projector: np.ndarray
    block: str


def _svd_input(snapshots, name):
    a = as_matrix(snapshots, name)
    return a.real.copy() if is_real_valued(snapshots) else a


def fit_pod(snapshots, rank_eps=1e-8, n_modes=None):
    """POD basis of a snapshot matrix (one state per column).

    Parameters
    ----------
    snapshots : array_like, shape (N, k)
    rank_eps : float
        Relative singular value cutoff, used when ``n_modes`` is None.
    n_modes : int, optional
        Exact basis size, 1 <= n_modes <= N. Left singular vectors beyond
        the data rank complete the basis to an orthonormal set.
    """
    a = _svd_input(snapshots, "snapshots")
    if n_modes is None:
        svd = truncated_svd(a, rank_eps)
        return PodBasis(modes=svd.u, singular_values=svd.sigma, r=svd.r)
    n_modes = int(n_modes)
    if not 1 <= n_modes <= a.shape[0]:
        raise ValueError(f"n_modes must lie in [1, {a.shape[0]}], got {n_modes}")
    if not np.any(a):
        raise ZeroMatrix("cannot build a POD basis from zero snapshots")
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    sigma = np.zeros(n_modes)
    k = min(n_modes, s.size)
    sigma[:k] = s[:k]
    return PodBasis(modes=u[:, :n_modes].copy(), singular_values=sigma, r=n_modes)


def deim_select(basis):
    """Greedy DEIM row selection for the columns of ``basis``.

    Ties in the residual maximum go to the lowest row index.

    Raises
    ------
    SingularInterpolation
        If the interpolation matrix ``P^T U`` is numerically singular.
    """
    u = np.asarray(basis)
    if u.ndim != 2 or u.shape[1] > u.shape[0]:
        raise ValueError(f"basis must be (N, s) with s <= N, got {u.shape}")
    s = u.shape[1]
    idx = np.empty(s, dtype=np.int64)
    idx[0] = int(np.argmax(np.abs(u[:, 0])))
    for j in range(1, s):
        c = np.linalg.solve(u[idx[:j], :j], u[idx[:j], j])
        resid = u[:, j] - u[:, :j] @ c
        idx[j] = int(np.argmax(np.abs(resid)))
    pu = u[idx]
    sv = np.linalg.svd(pu, compute_uv=False)
    if sv[-1] <= DEIM_RCOND * sv[0] or len(set(idx.tolist())) != s:
        raise SingularInterpolation(
            f"P^T U is singular (sigma_min/sigma_max = {sv[-1] / sv[0]:.3e})"
        )
    return idx


def fit_deim(pod, nl_snapshots, operator, block, rank_eps=1e-8):
    """DEIM operator for the term ``operator @ psi(u)`` from ``psi`` snapshots."""
    svd = truncated_svd(_svd_input(nl_snapshots, "nl_snapshots"), rank_eps)
    idx = deim_select(svd.u)
    v = pod.modes
    lu = np.asarray(operator) @ svd.u
    projector = np.linalg.solve(svd.u[idx].T, (v.conj().T @ lu).T).T
    return DeimOperator(basis=svd.u, indices=idx, projector=projector, block=block)


@dataclass(frozen=True)
class ReducedModel:
    """Everything :func:`rom_integrate` needs."""

    pod: PodBasis
    deims: tuple
    fom: object  # FullOrderModel
    reduced_linear: np.ndarray


def build_rom(training, problem, rank_eps=1e-8, n_modes=None):
    """POD-DEIM model of ``problem`` from training states (one per row of ``training.states``)."""
    fom = full_order_model(problem)
    cols = training.columns() if isinstance(training, Trajectory) else np.asarray(training)
    pod = fit_pod(cols, rank_eps, n_modes)
    v = pod.modes
    deims = tuple(
        fit_deim(pod, BLOCKS[block][0](cols), op, block, rank_eps) for op, block in fom.terms
    )
    return ReducedModel(pod=pod, deims=deims, fom=fom,
                        reduced_linear=v.conj().T @ fom.linear @ v)


def _forcing(rom, dt, n_steps):
    """``V^H f^n`` for every step, or None when the forcing vanishes."""
    if rom.fom.problem.kind == "nls":
        return None
    rates = rom.fom.boundary_rates(dt, n_steps)
    if not np.any(rates):
        return None
    v = rom.pod.modes
    return rates @ np.vstack([v[0].conj(), v[-1].conj()])


def rom_integrate(rom, n_out=None):
    """March the reduced model over the problem horizon.

    Returns the reconstructed states ``V a`` at ``n_out`` uniformly spread
    fine time levels (all levels if None), on the same indices the
    resolved solver records.
    """
    problem = rom.fom.problem
    dt, n_steps = problem.time_grid()
    n_levels = n_steps + 1
    idx = np.arange(n_levels) if n_out is None else uniform_indices(n_levels, n_out)
    v = rom.pod.modes
    dtype = np.result_type(v, rom.reduced_linear, *(d.projector for d in rom.deims))
    a = (v.conj().T @ problem.initial_state()).astype(dtype)
    lin = rom.reduced_linear
    rows = [v[d.indices] for d in rom.deims]
    projs = [d.projector for d in rom.deims]
    funcs = [BLOCKS[d.block][0] for d in rom.deims]

    def rhs(a_):
        out = lin @ a_
        for vr, pj, fn in zip(rows, projs, funcs):
            out = out + pj @ fn(vr @ a_)
        return out

    force = _forcing(rom, dt, n_steps)
    rk4 = problem.kind == "nls"
    coeffs = np.empty((idx.size, a.size), dtype=dtype)
    nxt = 0
    if idx[0] == 0:
        coeffs[0] = a
        nxt = 1
    for n in range(n_steps):
        if rk4:
            k1 = rhs(a)
            k2 = rhs(a + 0.5 * dt * k1)
            k3 = rhs(a + 0.5 * dt * k2)
            k4 = rhs(a + dt * k3)
            a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            step = rhs(a)
            if force is not None:
                step = step + force[n]
            a = a + dt * step
        if n % 256 == 255 and not np.all(np.isfinite(a)):
            raise StateOutOfRange(f"reduced state blew up at t={(n + 1) * dt:.6g}")
        if nxt < idx.size and idx[nxt] == n + 1:
            coeffs[nxt] = a
            nxt += 1
    states = coeffs @ v.T
    if problem.is_real:
        states = states.real.copy() if np.iscomplexobj(states) else states
    if not np.all(np.isfinite(states)):
        raise StateOutOfRange("reduced solution is not finite")
    if problem.kind != "nls" and not np.all(np.abs(states) < BLOWUP_LIMIT):
        raise StateOutOfRange(f"|u| left [-{BLOWUP_LIMIT}, {BLOWUP_LIMIT}]")
    out_dt = dt if n_out is None else dt * n_steps / (n_out - 1)
    return Trajectory(states=states, dt=out_dt, t0=0.0)


class PODDEIM(BaseEstimator):
    """POD-Galerkin ROM with DEIM, scikit-learn style.

    Parameters
    ----------
    problem : PdeProblem
        Supplies the operators, boundary data and time grid.
    rank_eps : float, default=1e-8
        Cutoff for both the state and the nonlinear-term bases.
    n_modes : int, optional
        Fixed state basis size (completed if it exceeds the data rank).

    Notes
    -----
    ``fit`` takes training states, one per row (a :class:`Trajectory` or
    an array). ``predict(n_out)`` integrates over the full horizon.
    """

    def __init__(self, problem=None, rank_eps=1e-8, n_modes=None):
        self.problem = problem
        self.rank_eps = rank_eps
        self.n_modes = n_modes

    def fit(self, X, y=None):
        if self.problem is None:
            raise ValueError("PODDEIM needs a problem")
        check_unit_interval(self.rank_eps, "rank_eps")
        states = X.states if isinstance(X, Trajectory) else np.asarray(X)
        if states.ndim != 2 or states.shape[1] != self.problem.n_dof:
            raise ValueError(
                f"training states must be (k, {self.problem.n_dof}), got {states.shape}"
            )
        if states.shape[0] < 1:
            raise DegenerateData("no training states")
        self.rom_ = build_rom(states.T, self.problem, self.rank_eps, self.n_modes)
        self.rank_ = self.rom_.pod.r
        self.deim_ranks_ = tuple(d.indices.size for d in self.rom_.deims)
        return self

    def predict(self, n_out=None):
        check_is_fitted(self, "rom_")
        return rom_integrate(self.rom_, n_out)
