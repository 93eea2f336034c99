"""Trajectories, snapshot pairs and observable liftings.

A trajectory stores one state per row; snapshot matrices store one state
per column, matching the usual DMD notation ``X = [u^0 ... u^{m-1}]``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ShapeError, TooFewStates

TRAJECTORY_MAGIC = "dmdextrap-trajectory"
TRAJECTORY_VERSION = 1


@dataclass(frozen=True)
class Trajectory:
    """States ``u^0 ... u^n`` on a uniform time grid.

    Attributes
    ----------
    states : ndarray, shape (n_states, N)
        Real or complex; row ``j`` is the state at ``t0 + j * dt``.
    dt : float
    t0 : float
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise ShapeError(f"states must be (n_states, N) with N >= 1, got {states.shape}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.states.shape[0]

    @property
    def n_dof(self):
        return self.states.shape[1]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def is_real(self):
        return not np.iscomplexobj(self.states)

    def columns(self, start=0, stop=None):
        """Snapshot matrix (N x k) of states ``start .. stop-1``."""
        return self.states[start:stop].T


@dataclass(frozen=True)
class SnapshotPair:
    """Shifted snapshot matrices ``x = [u^0..u^{m-1}]``, ``x_prime = [u^1..u^m]``."""

    x: np.ndarray
    x_prime: np.ndarray
    dt: float
    m: int
    t0: float = 0.0

    @property
    def is_real(self):
        return not np.iscomplexobj(self.x)


def build_snapshot_pair(traj, m):
    """First ``m + 1`` states of ``traj`` as an ``(X, X')`` pair."""
    m = int(m)
    if m < 2:
        raise TooFewStates(f"need m >= 2 snapshots, got m={m}")
    if len(traj) < m + 1:
        raise TooFewStates(f"trajectory has {len(traj)} states, m={m} needs {m + 1}")
    cols = traj.columns(0, m + 1)
    return SnapshotPair(
        x=cols[:, :m].copy(), x_prime=cols[:, 1:].copy(), dt=traj.dt, m=m, t0=traj.t0
    )


def uniform_indices(n_states, n_out):
    """Indices ``round(j (n_states-1) / (n_out-1))``, halves rounded up."""
    if n_out < 2 or n_states < n_out:
        raise TooFewStates(f"cannot pick {n_out} of {n_states} states")
    j = np.arange(n_out)
    return np.floor(j * (n_states - 1) / (n_out - 1) + 0.5).astype(np.int64)


def subsample_uniform(traj, n_out):
    """Keep ``n_out`` uniformly spread states of ``traj`` (endpoints included).

    Nearest-index selection, never interpolation: every returned state is a
    true solver state. The new ``dt`` is exact when ``n_out - 1`` divides
    ``len(traj) - 1``.
    """
    idx = uniform_indices(len(traj), n_out)
    dt = traj.dt * (len(traj) - 1) / (n_out - 1)
    return Trajectory(states=traj.states[idx].copy(), dt=dt, t0=traj.t0)


# ---------------------------------------------------------------------------
# Observables

def _identity(u):
    return u


def _square(u):
    return u * u


def _cube(u):
    return u * u * u


def _abs2_times(u):
    return (u * np.conj(u)).real * u


#: block name -> (function, homogeneity degree)
BLOCKS = {
    "u": (_identity, 1),
    "u^2": (_square, 2),
    "u^3": (_cube, 3),
    "|u|^2u": (_abs2_times, 3),
}


@dataclass(frozen=True)
class ObservableMap:
    """Blockwise lifting ``g(u) = [b_1(u); b_2(u); ...]``.

    Exactly one block must be the identity; :func:`unlift` reads it back.
    """

    name: str
    blocks: tuple = ("u",)
    state_block: int = field(init=False, default=0)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        unknown = [b for b in blocks if b not in BLOCKS]
        if unknown:
            raise ValueError(f"unknown observable blocks {unknown}; known: {sorted(BLOCKS)}")
        ids = [i for i, b in enumerate(blocks) if b == "u"]
        if len(ids) != 1:
            raise ValueError("an observable map needs exactly one identity block 'u'")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "state_block", ids[0])

    @property
    def n_blocks(self):
        return len(self.blocks)

    def lifted_dim(self, n):
        return n * self.n_blocks

    def degrees(self):
        return tuple(BLOCKS[b][1] for b in self.blocks)


IDENTITY = ObservableMap("identity", ("u",))
CUBIC = ObservableMap("cubic", ("u", "u^3"))
KIRCHHOFF = ObservableMap("kirchhoff", ("u", "u^2", "u^3"))
NLS_CUBIC = ObservableMap("nls_cubic", ("u", "|u|^2u"))

OBSERVABLES = {g.name: g for g in (IDENTITY, CUBIC, KIRCHHOFF, NLS_CUBIC)}


def get_observable(name):
    if isinstance(name, ObservableMap):
        return name
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise ValueError(f"unknown observable {name!r}; known: {sorted(OBSERVABLES)}") from None


def lift(u, g):
    """Stack the blocks of ``g`` applied to ``u`` along axis 0.

    ``u`` is a state vector (N,) or a snapshot matrix (N, k); the result has
    ``N * g.n_blocks`` rows.
    """
    g = get_observable(g)
    u = np.asarray(u)
    if len(g.blocks) == 1:
        return u.copy()
    return np.concatenate([BLOCKS[b][0](u) for b in g.blocks], axis=0)


def unlift(y, g):
    """Return the identity block of a lifted vector or matrix.

    Other blocks are ignored, even when a prediction left them inconsistent
    with the state block.
    """
    g = get_observable(g)
    y = np.asarray(y)
    p = y.shape[0]
    if p % g.n_blocks:
        raise ShapeError(f"lifted length {p} is not a multiple of {g.n_blocks} blocks")
    n = p // g.n_blocks
    return y[g.state_block * n:(g.state_block + 1) * n].copy()


class ObservableLift(TransformerMixin, BaseEstimator):
    """Lift states row-wise with an observable map (sklearn transformer).

    Rows of ``X`` are states, as everywhere in scikit-learn.
    ``inverse_transform`` keeps only the identity block.
    """

    def __init__(self, observable="identity"):
        self.observable = observable

    def fit(self, X, y=None):
        X = np.asarray(X)
        if X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {X.shape}")
        self.observable_ = get_observable(self.observable)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        g = self.observable_
        return lift(np.asarray(X).T, g).T

    def inverse_transform(self, Y):
        return unlift(np.asarray(Y).T, self.observable_).T


# ---------------------------------------------------------------------------
# Serialization
#
# Binary trajectory layout (all header lines ASCII, '\n' terminated):
#
#   dmdextrap-trajectory 1
#   N=<state dimension>
#   n=<number of states>
#   dt=<float, repr>
#   t0=<float, repr>
#   dtype=<float64|complex128>
#   END
#   <n * N little-endian values; state 0 first, each state contiguous>


def save_trajectory(path, traj):
    states = np.asarray(traj.states)
    dtype = "complex128" if np.iscomplexobj(states) else "float64"
    header = (
        f"{TRAJECTORY_MAGIC} {TRAJECTORY_VERSION}\n"
        f"N={traj.n_dof}\nn={len(traj)}\n"
        f"dt={traj.dt!r}\nt0={traj.t0!r}\ndtype={dtype}\nEND\n"
    )
    data = np.ascontiguousarray(states, dtype=np.dtype(dtype).newbyteorder("<"))
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def load_trajectory(path):
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii").split()
        if len(first) != 2 or first[0] != TRAJECTORY_MAGIC:
            raise ValueError(f"{path}: not a trajectory file")
        if int(first[1]) != TRAJECTORY_VERSION:
            raise ValueError(f"{path}: unsupported version {first[1]}")
        meta = {}
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "END":
                break
            if not line:
                raise ValueError(f"{path}: truncated header")
            key, _, value = line.partition("=")
            meta[key] = value
        n_dof, n = int(meta["N"]), int(meta["n"])
        dtype = np.dtype(meta["dtype"]).newbyteorder("<")
        data = np.frombuffer(fh.read(), dtype=dtype)
    if data.size != n * n_dof:
        raise ValueError(f"{path}: expected {n * n_dof} values, found {data.size}")
    states = data.reshape(n, n_dof).astype(dtype.newbyteorder("="))
    return Trajectory(states=states, dt=float(meta["dt"]), t0=float(meta["t0"]))


def _fmt(v):
    return format(float(v), ".17g")


def write_trajectory_csv(path, traj):
    """One row per time; columns ``t`` then one per grid point.

    Complex trajectories get a ``re_j`` and an ``im_j`` column per point.
    """
    states = np.asarray(traj.states)
    complex_ = np.iscomplexobj(states)
    if complex_:
        header = ["t"] + [f"{p}_{j}" for j in range(traj.n_dof) for p in ("re", "im")]
    else:
        header = ["t"] + [f"u_{j}" for j in range(traj.n_dof)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, row in zip(traj.times, states):
            if complex_:
                vals = np.column_stack([row.real, row.imag]).ravel()
            else:
                vals = row
            w.writerow([_fmt(t)] + [_fmt(v) for v in vals])
