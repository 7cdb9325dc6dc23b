"""Sparse coding primitives shared by the learners.

Greedy pursuit (plain, Gram-based batch, and separable 2-D), hard
thresholding, column normalization and the Euclidean projection onto the
sets

    X_l = {d : sum(d) = 0, d_l >= 0, d_j <= 0 for j != l}

that hold one row of a Laplacian.  Indices are 0-based and ties are always
broken towards the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import InvalidParameterError

# a candidate atom whose component orthogonal to the selected ones is
# shorter than this is treated as linearly dependent and skipped
RANK_TOL = 1e-8
# correlations this close (relative) to the maximum count as tied; the
# lowest index among them is selected, so rounding never decides a tie
TIE_TOL = 1e-12


@dataclass
class SparseCode:
    support: np.ndarray
    values: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.ambient_dim)
        x[self.support] = self.values
        return x


@dataclass
class PairCode:
    """Sparse code over atom pairs ``(D1[:, rows[k]], D2[:, cols[k]])``."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)

    def to_dense(self) -> np.ndarray:
        X = np.zeros(self.shape)
        np.add.at(X, (self.rows, self.cols), self.values)
        return X

    def kron_support(self) -> np.ndarray:
        """Column indices in ``kron(D2, D1)`` (column-stacking vec)."""
        return self.rows + self.shape[0] * self.cols


def _first_max(c: np.ndarray) -> int:
    return int(np.argmax(c >= c.max() * (1.0 - TIE_TOL)))


def normalize_columns(D: np.ndarray, rng: np.random.Generator | None = None,
                      return_replaced: bool = False):
    """Scale every column to unit norm.

    Zero columns are replaced by random unit vectors; their indices are
    returned when ``return_replaced`` is set.
    """
    D = np.array(D, dtype=float, copy=True)
    norms = np.linalg.norm(D, axis=0)
    zero = np.flatnonzero(norms == 0)
    if len(zero):
        rng = np.random.default_rng() if rng is None else rng
        D[:, zero] = rng.standard_normal((D.shape[0], len(zero)))
        norms[zero] = np.linalg.norm(D[:, zero], axis=0)
    D /= norms
    return (D, zero) if return_replaced else D


def select_threshold(x: np.ndarray, s: int) -> SparseCode:
    """Keep the ``s`` entries of largest magnitude (ties: lowest index)."""
    x = np.asarray(x, dtype=float)
    if s > len(x):
        raise InvalidParameterError("s exceeds the vector length")
    idx = np.argsort(-np.abs(x), kind="stable")[:s]
    return SparseCode(idx, x[idx], len(x))


def select_threshold_dense(X: np.ndarray, s: int) -> np.ndarray:
    """Column-wise hard thresholding of a matrix, returned dense."""
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X)
    if s <= 0:
        return out
    idx = np.argsort(-np.abs(X), axis=0, kind="stable")[:s]
    cols = np.arange(X.shape[1])
    out[idx, cols] = X[idx, cols]
    return out


def omp(D: np.ndarray, y: np.ndarray, s: int, tol: float = 1e-9) -> SparseCode:
    """Orthogonal matching pursuit with a Gram-Schmidt updated QR factor.

    ``D`` must have unit-norm columns.  Stops after ``s`` atoms or once the
    residual norm is at most ``tol * |y|``.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = D.shape
    if s > min(m, n):
        raise InvalidParameterError("s exceeds min(m, n)")
    Q = np.zeros((m, s))
    R = np.zeros((s, s))
    support: list[int] = []
    blocked = np.zeros(n, dtype=bool)
    r = y.copy()
    threshold = tol * np.linalg.norm(y)
    while len(support) < s and np.linalg.norm(r) > threshold:
        c = np.abs(D.T @ r)
        c[blocked] = -1.0
        j = _first_max(c)
        if c[j] <= 0.0:
            break
        k = len(support)
        w = D[:, j].copy()
        p1 = Q[:, :k].T @ w
        w -= Q[:, :k] @ p1
        p2 = Q[:, :k].T @ w
        w -= Q[:, :k] @ p2
        nrm = np.linalg.norm(w)
        blocked[j] = True
        if nrm < RANK_TOL:
            continue
        Q[:, k] = w / nrm
        R[:k, k] = p1 + p2
        R[k, k] = nrm
        support.append(j)
        r -= Q[:, k] * (Q[:, k] @ r)
    k = len(support)
    values = solve_triangular(R[:k, :k], Q[:, :k].T @ y) if k else np.zeros(0)
    return SparseCode(np.array(support, dtype=np.int64), values, n)


def omp_batch(D: np.ndarray, Y: np.ndarray, s: int, tol: float = 1e-9,
              gram: np.ndarray | None = None) -> np.ndarray:
    """OMP for every column of ``Y`` using the Gram matrix ``D^T D``.

    Same selection rule as :func:`omp`, with the least-squares refit done by
    a progressively grown Cholesky factor.  Returns the dense ``n x N`` codes.
    """
    D = np.asarray(D, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, n = D.shape
    if s > min(m, n):
        raise InvalidParameterError("s exceeds min(m, n)")
    G = D.T @ D if gram is None else gram
    A0 = D.T @ Y
    yy = np.einsum("ij,ij->j", Y, Y)
    X = np.zeros((n, Y.shape[1]))
    Lc = np.zeros((s, s))
    for i in range(Y.shape[1]):
        a0 = A0[:, i]
        alpha = a0.copy()
        limit = (tol ** 2) * yy[i]
        support: list[int] = []
        blocked = np.zeros(n, dtype=bool)
        xs = np.zeros(0)
        err = yy[i]
        while len(support) < s and err > limit:
            c = np.abs(alpha)
            c[blocked] = -1.0
            j = _first_max(c)
            if c[j] <= 0.0:
                break
            blocked[j] = True
            k = len(support)
            if k:
                w = solve_triangular(Lc[:k, :k], G[support, j], lower=True)
                d = G[j, j] - w @ w
                # Cholesky pivots carry O(eps) cancellation, hence the looser bound
                if d < 1e-12:
                    continue
                Lc[k, :k] = w
                Lc[k, k] = np.sqrt(d)
            else:
                Lc[0, 0] = np.sqrt(G[j, j])
            support.append(j)
            k += 1
            z = solve_triangular(Lc[:k, :k], a0[support], lower=True)
            xs = solve_triangular(Lc[:k, :k].T, z, lower=False)
            alpha = a0 - G[:, support] @ xs
            err = yy[i] - xs @ a0[support]
        if support:
            X[support, i] = xs
    return X


def correlation_cost_2d(m1: int, m2: int, n1: int, n2: int) -> int:
    """Multiply-adds for one separable correlation ``(D1^T R) D2``."""
    return n1 * m1 * m2 + n1 * m2 * n2


def correlation_cost_kron(m1: int, m2: int, n1: int, n2: int) -> int:
    """Multiply-adds for ``kron(D2, D1)^T vec(R)`` with an explicit Kronecker dictionary."""
    return (m1 * m2) * (n1 * n2)


def omp2d(D1: np.ndarray, D2: np.ndarray, Y: np.ndarray, s: int, tol: float = 1e-9,
          counter: dict | None = None) -> PairCode:
    """2-D OMP for the separable model ``Y ~ D1 X D2^T``.

    Greedy selection over the pair correlations ``D1^T R D2`` followed by a
    least-squares refit on the selected pairs.  The Kronecker dictionary is
    never formed; only the selected pair atoms are.  Pair ``(a, b)`` ranks as
    Kronecker column ``a + n1 * b`` when breaking ties, which makes the result
    identical to :func:`omp` on ``kron(D2, D1)`` and ``Y.ravel(order="F")``.

    ``counter``, when given, accumulates ``"corr_ops"`` (multiply-adds spent on
    correlations) and ``"iterations"``.
    """
    D1 = np.asarray(D1, dtype=float)
    D2 = np.asarray(D2, dtype=float)
    Y = np.asarray(Y, dtype=float)
    (m1, n1), (m2, n2) = D1.shape, D2.shape
    if Y.shape != (m1, m2):
        raise InvalidParameterError("signal shape does not match the dictionaries")
    M = m1 * m2
    if s > min(M, n1 * n2):
        raise InvalidParameterError("s exceeds min(m1*m2, n1*n2)")
    y = Y.ravel(order="F")
    Q = np.zeros((M, s))
    R = np.zeros((s, s))
    rows: list[int] = []
    cols: list[int] = []
    blocked = np.zeros((n1, n2), dtype=bool)
    r = y.copy()
    threshold = tol * np.linalg.norm(y)
    while len(rows) < s and np.linalg.norm(r) > threshold:
        C = np.abs((D1.T @ r.reshape((m1, m2), order="F")) @ D2)
        if counter is not None:
            counter["corr_ops"] = counter.get("corr_ops", 0) + correlation_cost_2d(m1, m2, n1, n2)
            counter["iterations"] = counter.get("iterations", 0) + 1
        C[blocked] = -1.0
        flat = _first_max(C.ravel(order="F"))
        a, b = flat % n1, flat // n1
        if C[a, b] <= 0.0:
            break
        blocked[a, b] = True
        k = len(rows)
        w = np.outer(D1[:, a], D2[:, b]).ravel(order="F")
        p1 = Q[:, :k].T @ w
        w -= Q[:, :k] @ p1
        p2 = Q[:, :k].T @ w
        w -= Q[:, :k] @ p2
        nrm = np.linalg.norm(w)
        if nrm < RANK_TOL:
            continue
        Q[:, k] = w / nrm
        R[:k, k] = p1 + p2
        R[k, k] = nrm
        rows.append(a)
        cols.append(b)
        r -= Q[:, k] * (Q[:, k] @ r)
    k = len(rows)
    values = solve_triangular(R[:k, :k], Q[:, :k].T @ y) if k else np.zeros(0)
    return PairCode(rows, cols, values, (n1, n2))


def _simplex_type_gap(v: np.ndarray, ell: int, mu: np.ndarray,
                      others_sorted: np.ndarray, prefix: np.ndarray) -> np.ndarray:
    """Sum of the clamped vector as a function of the shift ``mu`` (nonincreasing)."""
    cnt = np.searchsorted(others_sorted, mu, side="left")
    return np.maximum(v[ell] - mu, 0.0) + prefix[cnt] - cnt * mu


def project_simplex_type(v: np.ndarray, ell: int) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``X_ell`` in O(m log m).

    The minimizer has the form ``d_ell = max(v_ell - mu, 0)`` and
    ``d_j = min(v_j - mu, 0)`` where the shift ``mu`` zeroes the sum.  The sum
    is piecewise linear and nonincreasing in ``mu`` with breakpoints at the
    entries of ``v``; after locating the bracketing pair of breakpoints by a
    sorted search, ``mu`` is the mean of ``v`` over the coordinates that are
    free on that piece.
    """
    v = np.asarray(v, dtype=float)
    m = len(v)
    if not 0 <= ell < m:
        raise InvalidParameterError("ell out of range")
    if m == 1:
        return np.zeros(1)
    others = np.sort(np.delete(v, ell))
    prefix = np.concatenate([[0.0], np.cumsum(others)])
    bps = np.unique(v)
    g = _simplex_type_gap(v, ell, bps, others, prefix)
    # g(min breakpoint) >= 0 always; take the last breakpoint with g >= 0
    i = int(np.searchsorted(-g, 0.0, side="right")) - 1
    i = max(i, 0)
    lo = bps[i]
    if g[i] == 0.0:
        mu = lo
    else:
        hi = bps[i + 1] if i + 1 < len(bps) else lo + 1.0
        probe = 0.5 * (lo + hi)
        free_others = others[others < probe]
        total = free_others.sum()
        count = len(free_others)
        if v[ell] > probe:
            total += v[ell]
            count += 1
        mu = total / count
    d = np.minimum(v - mu, 0.0)
    d[ell] = max(v[ell] - mu, 0.0)
    return d


def in_simplex_type(d: np.ndarray, ell: int, tol: float = 1e-12) -> bool:
    d = np.asarray(d, dtype=float)
    m = len(d)
    off = np.delete(d, ell)
    scale = max(1.0, np.abs(d).max(initial=0.0))
    return bool(abs(d.sum()) <= tol * m * scale and d[ell] >= 0 and np.all(off <= 0))
