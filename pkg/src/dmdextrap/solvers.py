"""Fully resolved reference solvers for the four benchmark problems.

Parabolic problems use second-order central differences on a uniform grid
and forward Euler at a CFL-limited step. The state vector holds every grid
node *including* the two Dirichlet nodes, which are overwritten with the
boundary data after each step. The nonlinear Schroedinger problem uses a
Fourier pseudo-spectral Laplacian and classical RK4.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import BadLength, CflViolation, NormDrift, StateOutOfRange
from .numerics import fft, inverse_fft
from .snapshots import Trajectory, uniform_indices

KINDS = ("heat_dirichlet", "reaction_diffusion", "nonlinear_rd_kirchhoff", "nls")
TEST_IDS = ("1a", "1b", "2a", "2b", "3", "4")

#: fraction of the explicit stability limit used when dt is not given
CFL_SAFETY = 0.9
BLOWUP_LIMIT = 10.0
NLS_MASS_TOL = 1e-6


def _const(value):
    return lambda t: value + 0.0 * t


@dataclass(frozen=True)
class PdeProblem:
    """One benchmark problem.

    ``n_grid`` counts interior nodes for the parabolic kinds (the state has
    ``n_grid + 2`` entries) and all periodic nodes for ``nls``.
    """

    kind: str
    n_grid: int
    t_final: float
    domain: tuple = (0.0, 1.0)
    theta: float = 1.0
    mu: float = 0.0
    ic: Callable = field(default=_const(0.0), compare=False)
    bc_left: Callable = field(default=_const(0.0), compare=False)
    bc_right: Callable = field(default=_const(0.0), compare=False)
    is_real: bool = True
    dt: Optional[float] = None
    step_multiple: int = 1
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.n_grid < 3:
            raise ValueError(f"n_grid must be >= 3, got {self.n_grid}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.kind != "nls" and not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    @property
    def n_dof(self):
        return self.n_grid if self.kind == "nls" else self.n_grid + 2

    @property
    def dx(self):
        a, b = self.domain
        if self.kind == "nls":
            return (b - a) / self.n_grid
        return (b - a) / (self.n_grid + 1)

    @property
    def x(self):
        a, _ = self.domain
        return a + self.dx * np.arange(self.n_dof)

    def max_diffusivity(self):
        if self.kind == "nonlinear_rd_kirchhoff":
            return 1.0  # D(u) = u with 0 <= u <= 1
        return self.theta

    def stable_dt(self):
        """Largest stable explicit step."""
        if self.kind == "nls":
            k_max = math.pi / self.dx
            # RK4 stability interval on the imaginary axis is ~2.83
            return 2.83 / (0.5 * k_max**2)
        return self.dx**2 / (2.0 * self.max_diffusivity())

    def time_grid(self):
        """``(dt, n_steps)`` with ``n_steps`` a multiple of ``step_multiple``."""
        limit = self.stable_dt()
        if self.dt is not None:
            if self.dt > limit * (1 + 1e-12):
                raise CflViolation(f"dt={self.dt:.3e} exceeds the stability limit {limit:.3e}")
            target = self.dt
        elif self.kind == "nls":
            target = min(1e-3, 0.25 * limit)
        else:
            target = CFL_SAFETY * limit
        q = max(int(self.step_multiple), 1)
        n_steps = q * math.ceil(self.t_final / (target * q) - 1e-9)
        return self.t_final / n_steps, n_steps

    def initial_state(self):
        u = np.asarray(self.ic(self.x), dtype=np.complex128 if self.kind == "nls" else float)
        u = np.broadcast_to(u, (self.n_dof,)).copy()
        if self.kind != "nls":
            u[0] = self.bc_left(0.0)
            u[-1] = self.bc_right(0.0)
        return u


def kirchhoff_eta(u):
    """Kirchhoff potential of the ``psi(u) = u`` diffusivity: ``eta = u^2 / 2``."""
    return 0.5 * np.asarray(u) ** 2


def make_problem(test_id, n_grid=None, **overrides):
    """Build a built-in test problem ('1a', '1b', '2a', '2b', '3', '4')."""
    tid = str(test_id).lower()
    if tid == "1a":
        p = PdeProblem("heat_dirichlet", 500, 0.2, ic=_const(0.0),
                       bc_left=_const(0.0), bc_right=_const(1.0), name="1a")
    elif tid == "1b":
        p = PdeProblem("heat_dirichlet", 500, math.pi / 2, ic=_const(1.0),
                       bc_left=lambda t: 1.01 + 0.01 * np.sin(-np.pi / 2 + 10.0 * t),
                       bc_right=_const(1.0), name="1b")
    elif tid in ("2a", "2b"):
        mu = 0.01 if tid == "2a" else 1.0
        p = PdeProblem("reaction_diffusion", 500, 2.0, theta=0.1, mu=mu,
                       ic=lambda x: 0.5 + 0.5 * np.sin(np.pi * x), name=tid)
    elif tid == "3":
        p = PdeProblem("nonlinear_rd_kirchhoff", 500, 2.0, theta=1.0, mu=1.0,
                       ic=lambda x: 0.5 + 0.5 * np.sin(np.pi * x), name="3")
    elif tid == "4":
        p = PdeProblem("nls", 512, math.pi, domain=(-15.0, 15.0),
                       ic=lambda x: 2.0 / np.cosh(x), is_real=False, name="4")
    else:
        raise ValueError(f"unknown test id {test_id!r}; expected one of {TEST_IDS}")
    if n_grid is not None:
        overrides["n_grid"] = n_grid
    return replace(p, **overrides) if overrides else p


# ---------------------------------------------------------------------------


def _recorder(problem, n_steps, n_out):
    """Return (indices to keep, buffer) for the fine time levels 0..n_steps."""
    n_levels = n_steps + 1
    idx = np.arange(n_levels) if n_out is None else uniform_indices(n_levels, n_out)
    dtype = np.complex128 if problem.kind == "nls" else float
    return idx, np.empty((idx.size, problem.n_dof), dtype=dtype)


def _finish(problem, buf, dt, n_steps, n_out):
    if n_out is None:
        return Trajectory(states=buf, dt=dt, t0=0.0)
    return Trajectory(states=buf, dt=dt * n_steps / (n_out - 1), t0=0.0)


def _march_parabolic(problem, n_out, rhs):
    dt, n_steps = problem.time_grid()
    idx, buf = _recorder(problem, n_steps, n_out)
    u = problem.initial_state()
    bc_l, bc_r = problem.bc_left, problem.bc_right
    nxt = 0
    if idx[0] == 0:
        buf[0] = u
        nxt = 1
    for n in range(n_steps):
        interior = u[1:-1]
        u[1:-1] = interior + dt * rhs(u, interior)
        t_new = (n + 1) * dt
        u[0] = bc_l(t_new)
        u[-1] = bc_r(t_new)
        if n % 256 == 255 and not np.all(np.abs(u) < BLOWUP_LIMIT):
            raise StateOutOfRange(f"|u| left [-{BLOWUP_LIMIT}, {BLOWUP_LIMIT}] at t={t_new:.6g}")
        if nxt < idx.size and idx[nxt] == n + 1:
            buf[nxt] = u
            nxt += 1
    if not np.all(np.abs(buf) < BLOWUP_LIMIT):
        raise StateOutOfRange(f"|u| left [-{BLOWUP_LIMIT}, {BLOWUP_LIMIT}]")
    return _finish(problem, buf, dt, n_steps, n_out)


def _diffusion_rhs(problem, with_reaction):
    inv_dx2 = 1.0 / problem.dx**2
    theta, mu = problem.theta, problem.mu

    def rhs(u, interior):
        du = theta * ((u[:-2] - 2.0 * interior + u[2:]) * inv_dx2)
        if with_reaction:
            du = du - mu * (interior - interior * interior * interior)
        return du

    return rhs


def solve_heat(problem, n_out=None):
    """Linear diffusion ``u_t = theta u_xx`` with Dirichlet data.

    Parameters
    ----------
    problem : PdeProblem
    n_out : int, optional
        Record only ``n_out`` uniformly spread time levels (same indices as
        :func:`~dmdextrap.snapshots.subsample_uniform`); all levels if None.
    """
    return _march_parabolic(problem, n_out, _diffusion_rhs(problem, False))


def solve_reaction_diffusion(problem, n_out=None):
    """``u_t = theta u_xx - mu (u - u^3)``; identical to :func:`solve_heat` when mu = 0."""
    return _march_parabolic(problem, n_out, _diffusion_rhs(problem, problem.mu != 0.0))


def solve_nonlinear_rd(problem, n_out=None):
    """``u_t = (u u_x)_x - mu (u - u^3)``, differenced in Kirchhoff form ``(u^2/2)_xx``."""
    inv_dx2 = 1.0 / problem.dx**2
    mu = problem.mu

    def rhs(u, interior):
        eta = 0.5 * u * u
        du = (eta[:-2] - 2.0 * eta[1:-1] + eta[2:]) * inv_dx2
        if mu != 0.0:
            du = du - mu * (interior - interior * interior * interior)
        return du

    return _march_parabolic(problem, n_out, rhs)


def nls_mass(q, dx):
    """Discrete mass ``sum |q|^2 dx`` (trapezoid rule on a periodic grid)."""
    q = np.asarray(q)
    return float(dx * np.sum((q * np.conj(q)).real, axis=-1))


def solve_nls(problem, n_out=None):
    """``i q_t + q_xx / 2 + |q|^2 q = 0`` on a periodic grid, FFT in space, RK4 in time.

    Raises
    ------
    BadLength
        If ``n_grid`` is not a power of two.
    NormDrift
        If the discrete mass drifts by more than 1e-6 relative.
    """
    n = problem.n_grid
    if n & (n - 1):
        raise BadLength(f"nls needs a power-of-two grid, got {n}")
    a, b = problem.domain
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=(b - a) / n)
    half_k2 = 0.5 * k * k

    def rhs(q):
        lap_term = inverse_fft(half_k2 * fft(q))
        return 1j * ((q * np.conj(q)).real * q - lap_term)

    dt, n_steps = problem.time_grid()
    idx, buf = _recorder(problem, n_steps, n_out)
    q = problem.initial_state()
    mass0 = nls_mass(q, problem.dx)
    nxt = 0
    if idx[0] == 0:
        buf[0] = q
        nxt = 1
    for step in range(n_steps):
        k1 = rhs(q)
        k2 = rhs(q + 0.5 * dt * k1)
        k3 = rhs(q + 0.5 * dt * k2)
        k4 = rhs(q + dt * k3)
        q = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if nxt < idx.size and idx[nxt] == step + 1:
            buf[nxt] = q
            nxt += 1
    if mass0 > 0:
        drift = abs(nls_mass(q, problem.dx) - mass0) / mass0
        if not drift <= NLS_MASS_TOL:
            raise NormDrift(f"mass drifted by {drift:.3e} relative; reduce dt")
    return _finish(problem, buf, dt, n_steps, n_out)


SOLVERS = {
    "heat_dirichlet": solve_heat,
    "reaction_diffusion": solve_reaction_diffusion,
    "nonlinear_rd_kirchhoff": solve_nonlinear_rd,
    "nls": solve_nls,
}


def solve(problem, n_out=None):
    return SOLVERS[problem.kind](problem, n_out)


# ---------------------------------------------------------------------------
# Matrix form of the semi-discretizations, used by POD-Galerkin.


@dataclass(frozen=True)
class FullOrderModel:
    """``u' = A u + sum_j L_j psi_j(u) + f(t)``.

    ``psi_j`` are pointwise maps named as in ``snapshots.BLOCKS``. For the
    parabolic kinds one forward Euler step reproduces the resolved solver:
    ``f^n`` is nonzero only on the two boundary nodes and moves them to the
    next Dirichlet values. The nls kind has no forcing and is marched by RK4.
    """

    problem: PdeProblem
    linear: np.ndarray
    terms: tuple  # of (operator L_j, pointwise block name)

    def boundary_rates(self, dt, n_steps):
        """(n_steps, 2) array of ``(g(t_{n+1}) - g(t_n)) / dt`` for left, right."""
        t = dt * np.arange(n_steps + 1)
        out = np.empty((n_steps, 2))
        for j, g in enumerate((self.problem.bc_left, self.problem.bc_right)):
            vals = np.broadcast_to(np.asarray(g(t), dtype=float), t.shape)
            out[:, j] = np.diff(vals) / dt
        return out


def _laplacian_matrix(n_dof, dx):
    lap = np.zeros((n_dof, n_dof))
    i = np.arange(1, n_dof - 1)
    lap[i, i - 1] = 1.0
    lap[i, i] = -2.0
    lap[i, i + 1] = 1.0
    return lap / dx**2


def _spectral_laplacian(n, length):
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    eye = np.eye(n)
    return np.fft.ifft(-(k * k)[:, None] * np.fft.fft(eye, axis=0), axis=0).real


def full_order_model(problem):
    if problem.kind == "nls":
        a, b = problem.domain
        lap = _spectral_laplacian(problem.n_grid, b - a)
        return FullOrderModel(problem, 0.5j * lap,
                              ((1j * np.eye(problem.n_grid), "|u|^2u"),))
    n = problem.n_dof
    lap = _laplacian_matrix(n, problem.dx)
    interior = np.eye(n)
    interior[0, 0] = interior[-1, -1] = 0.0
    if problem.kind == "heat_dirichlet":
        return FullOrderModel(problem, problem.theta * lap, ())
    if problem.kind == "reaction_diffusion":
        terms = ((problem.mu * interior, "u^3"),) if problem.mu != 0.0 else ()
        return FullOrderModel(problem, problem.theta * lap - problem.mu * interior, terms)
    return FullOrderModel(
        problem,
        -problem.mu * interior,
        ((0.5 * lap, "u^2"), (problem.mu * interior, "u^3")),
    )
