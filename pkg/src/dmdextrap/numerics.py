"""Dense linear algebra kernels used by the DMD, POD and error modules.

Everything works in complex128, including real data: DMD eigenvalues of
real snapshots are complex in general.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import as_matrix, as_vector, check_unit_interval, is_real_valued
from .exceptions import (
    BadLength,
    NoConvergence,
    RankDeficient,
    ShapeError,
    ZeroMatrix,
)

EPS = np.finfo(np.float64).eps
DEFAULT_EIG_CAP = 512


@dataclass(frozen=True)
class SvdTruncation:
    """Leading singular triplets kept by the ``sigma_i > eps * sigma_1`` rule.

    Attributes
    ----------
    u : ndarray, shape (N, r)
    sigma : ndarray, shape (r,)
        Positive and nonincreasing.
    v : ndarray, shape (m, r)
        Right singular vectors as columns (not ``V^H``).
    r : int
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    r: int

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.conj().T


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray


class Norms(NamedTuple):
    fro: float
    two_col: Optional[float]


def truncation_rank(sigma, rank_eps):
    """Number of singular values strictly above ``rank_eps * sigma[0]``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rank_eps * sigma[0]))


def truncated_svd(x, rank_eps):
    """Thin SVD of ``x`` truncated at ``r = max{i : sigma_i > rank_eps*sigma_1}``.

    Backed by LAPACK (``numpy.linalg.svd``), which is deterministic for
    identical input bits. Real input gives real factors, which are valid
    complex factors as well.

    Raises
    ------
    NonFinite
        If ``x`` contains NaN or Inf.
    ZeroMatrix
        If ``x`` is identically zero.
    """
    checked = as_matrix(x)
    a = checked.real.copy() if is_real_valued(x) else checked
    rank_eps = check_unit_interval(rank_eps, "rank_eps")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        raise ZeroMatrix("cannot truncate the SVD of a zero matrix")
    r = truncation_rank(s, rank_eps)
    return SvdTruncation(
        u=u[:, :r].copy(),
        sigma=s[:r].copy(),
        v=vh[:r].conj().T.copy(),
        r=r,
    )


def left_pinv(phi):
    """Moore-Penrose left inverse ``P`` of a full column rank ``phi``.

    ``P @ phi`` is the r x r identity; among all left inverses ``P`` has the
    smallest Frobenius norm.
    """
    phi = as_matrix(phi, "phi")
    n, r = phi.shape
    if r > n:
        raise RankDeficient(f"left inverse needs rows >= cols, got {phi.shape}")
    u, s, vh = np.linalg.svd(phi, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= 1e-12 * s[0]:
        raise RankDeficient(
            f"phi is numerically rank deficient (sigma_min/sigma_max = "
            f"{s[-1] / s[0] if s[0] else 0.0:.3e})"
        )
    return (vh.conj().T / s) @ u.conj().T


# ---------------------------------------------------------------------------
# Eigensolver: Householder Hessenberg reduction + single-shift complex QR.


def hessenberg(a):
    """Unitary similarity ``a = Q H Q^H`` with ``H`` upper Hessenberg.

    Returns ``(H, Q)``.
    """
    h = as_matrix(a, copy=True)
    n = h.shape[0]
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # H <- (I - 2vv^H) H (I - 2vv^H)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(x, y):
    # G = [[c, s], [-conj(s), c]] with G @ [x, y] = [rho, 0]
    x, y = complex(x), complex(y)
    ax = abs(x)
    if y == 0:
        return 1.0, 0j
    if ax == 0.0:
        return 0.0, 1.0 + 0j
    rho = np.hypot(ax, abs(y))
    return ax / rho, (x / ax) * y.conjugate() / rho


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = d + half + disc
    mu2 = d + half - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def schur_qr(a, max_iter=None):
    """Complex Schur form ``a = Z T Z^H`` by shifted QR on the Hessenberg form.

    The iteration cap is ``30 * n`` sweeps in total.
    """
    h, z = hessenberg(a)
    n = h.shape[0]
    if max_iter is None:
        max_iter = 30 * max(n, 1)
    scale = max(np.abs(h).max(), np.finfo(float).tiny)
    hi = n - 1
    its_here = 0
    total = 0
    while hi > 0:
        lo = 0
        for l in range(hi, 0, -1):
            sub = abs(h[l, l - 1])
            ref = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if ref == 0.0:
                ref = scale
            if sub <= EPS * ref:
                h[l, l - 1] = 0.0
                lo = l
                break
        if lo == hi:
            hi -= 1
            its_here = 0
            continue
        if total >= max_iter:
            raise NoConvergence(
                f"shifted QR did not converge within {max_iter} iterations"
            )
        total += 1
        its_here += 1

        if its_here % 11 == 10:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(
                h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]
            )

        x = h[lo, lo] - mu
        y = h[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            c, s = _givens(x, y)
            g = np.array([[c, s], [-np.conj(s), c]])
            gh = g.conj().T
            c0 = max(k - 1, lo)
            # rows over all trailing columns keep the full Schur form
            h[k:k + 2, c0:] = g @ h[k:k + 2, c0:]
            r1 = min(k + 3, hi + 1)
            h[:r1, k:k + 2] = h[:r1, k:k + 2] @ gh
            z[:, k:k + 2] = z[:, k:k + 2] @ gh
            if k > lo:
                h[k + 1, k - 1] = 0.0
    return np.triu(h), z


def _triangular_eigvecs(t):
    n = t.shape[0]
    vecs = np.zeros((n, n), dtype=np.complex128)
    diag = np.diag(t).copy()
    tnorm = max(np.abs(t).max(), np.finfo(float).tiny)
    for k in range(n):
        lam = diag[k]
        x = np.zeros(n, dtype=np.complex128)
        x[k] = 1.0
        if k > 0:
            m = t[:k, :k] - lam * np.eye(k)
            smin = max(EPS * abs(lam), EPS * tnorm * 1e-2, np.finfo(float).tiny)
            d = np.diagonal(m).copy()
            small = np.abs(d) < smin
            if np.any(small):
                d[small] = smin
                np.fill_diagonal(m, d)
            x[:k] = solve_triangular(m, -t[:k, k], lower=False)
        vecs[:, k] = x
    return vecs


def _pair_conjugates(values, vectors, tol):
    """Sort by descending modulus, conjugate pairs adjacent and made exact.

    Only valid for real input matrices.
    """
    n = values.size
    order = sorted(range(n), key=lambda i: (-abs(values[i]), -values[i].real, -abs(values[i].imag)))
    placed = np.zeros(n, dtype=bool)
    out_vals, out_vecs = [], []
    for i in order:
        if placed[i]:
            continue
        placed[i] = True
        lam, v = values[i], vectors[:, i]
        if abs(lam.imag) <= tol * max(abs(lam), 1.0):
            # a real eigenvalue of a real matrix has a real eigenvector
            j = np.argmax(np.abs(v))
            v = v * (abs(v[j]) / v[j])
            out_vals.append(complex(lam.real, 0.0))
            out_vecs.append(v.real.astype(np.complex128))
            continue
        free = np.flatnonzero(~placed)
        if free.size:
            partner = free[np.argmin(np.abs(values[free] - np.conj(lam)))]
            placed[partner] = True
        if lam.imag < 0:
            lam, v = np.conj(lam), np.conj(v)
        out_vals.extend([lam, np.conj(lam)])
        out_vecs.extend([v, np.conj(v)])
    vecs = np.column_stack(out_vecs)
    return np.array(out_vals, dtype=np.complex128), vecs / np.linalg.norm(vecs, axis=0)


def eig_dense(k, max_size=DEFAULT_EIG_CAP):
    """All eigenpairs of a small dense matrix.

    Parameters
    ----------
    k : array_like, shape (r, r)
    max_size : int
        Refuse matrices larger than this; the solver is O(r^3) in Python.

    Returns
    -------
    EigenPairs
        Eigenvectors have unit 2-norm. For real ``k`` the pairs come sorted by
        descending modulus with complex-conjugate pairs adjacent.
    """
    kmat = as_matrix(k, "k")
    r = kmat.shape[0]
    if kmat.shape[1] != r:
        raise ShapeError(f"eig_dense needs a square matrix, got {kmat.shape}")
    if r > max_size:
        raise ShapeError(f"matrix of size {r} exceeds eigensolver cap {max_size}")
    if r == 1:
        return EigenPairs(values=kmat[0].copy(), vectors=np.ones((1, 1), np.complex128))
    t, z = schur_qr(kmat)
    vectors = z @ _triangular_eigvecs(t)
    vectors /= np.linalg.norm(vectors, axis=0)
    values = np.diag(t).copy()
    if is_real_valued(k):
        values, vectors = _pair_conjugates(values, vectors, tol=1e-10)
    return EigenPairs(values=values, vectors=vectors)


# ---------------------------------------------------------------------------


def _check_pow2(n):
    if n < 2 or n & (n - 1):
        raise BadLength(f"FFT length must be a power of two >= 2, got {n}")


def fft(x):
    """Unnormalized forward DFT with the ``exp(-2j*pi*j*k/n)`` kernel."""
    x = as_vector(x)
    _check_pow2(x.size)
    return np.fft.fft(x)


def inverse_fft(x):
    """Inverse of :func:`fft` (applies the ``1/n`` factor)."""
    x = as_vector(x)
    _check_pow2(x.size)
    return np.fft.ifft(x)


def frobenius_norm(x):
    return float(np.linalg.norm(as_matrix(x), "fro"))


def two_col_norm(x):
    a = as_matrix(x)
    if a.shape[1] != 1:
        raise ShapeError(f"two_col norm needs a column vector, got shape {a.shape}")
    return float(np.linalg.norm(a[:, 0]))


def norms(x):
    """Frobenius norm, plus the Euclidean norm when ``x`` is a column."""
    a = as_matrix(x)
    fro = float(np.linalg.norm(a, "fro"))
    return Norms(fro=fro, two_col=fro if a.shape[1] == 1 else None)
