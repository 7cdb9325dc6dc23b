"""Dictionary learning with atoms that are vectorized Laplacian-like matrices.

Each atom is a row-stacked ``m x m`` matrix whose rows lie in the
simplex-type sets of :func:`lapdict.sparse.project_simplex_type`.  The trace
normalization is carried as a quadratic penalty, giving the objective

    f(D) = 1/2 |Y - D X|_F^2 + rho/2 * sum_i (trace(L_i) - m)^2

which is minimized by alternating OMP coding with a randomized projected
block-coordinate gradient descent on the dictionary rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from .graphgen import laplacian, vec_rows, WeightedGraph
from .sparse import in_simplex_type, omp_batch, project_simplex_type

LIPSCHITZ_FLOOR = 1e-12


@dataclass
class LapDLConfig:
    n: int = 40
    s: int = 30
    rho: float = 100.0
    am_iters: int = 10
    # None means 5 visits per block per round: n * m * 5 steps
    bcgd_iters: int | None = None
    grad_tol: float = 0.0
    rel_tol: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.s > self.n:
            raise InvalidParameterError("s must not exceed n")
        if self.rho < 0:
            raise InvalidParameterError("rho must be nonnegative")


@dataclass
class LapAtomDictionary:
    atoms: np.ndarray
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        _node_count(self.atoms)

    @property
    def m(self) -> int:
        return _node_count(self.atoms)

    @property
    def n(self) -> int:
        return self.atoms.shape[1]

    def atom_matrix(self, i: int) -> np.ndarray:
        return self.atoms[:, i].reshape(self.m, self.m)

    def traces(self) -> np.ndarray:
        return atom_traces(self.atoms)

    def is_feasible(self, tol: float = 1e-12) -> bool:
        m = self.m
        W = self.atoms.reshape(m, m, self.n)
        return all(in_simplex_type(W[l, :, i], l, tol)
                   for i in range(self.n) for l in range(m))


def _node_count(D: np.ndarray) -> int:
    m = int(round(np.sqrt(D.shape[0])))
    if m * m != D.shape[0]:
        raise InvalidParameterError("atom length is not a perfect square")
    return m


def atom_traces(D: np.ndarray) -> np.ndarray:
    m = _node_count(D)
    return D[:: m + 1, :].sum(axis=0)


def f_rho(D: np.ndarray, X: np.ndarray, Y: np.ndarray, rho: float) -> float:
    D = getattr(D, "atoms", D)
    m = _node_count(D)
    E = Y - D @ X
    return 0.5 * float(np.sum(E * E)) + 0.5 * rho * float(np.sum((atom_traces(D) - m) ** 2))


def grad_atom(D: np.ndarray, X: np.ndarray, Y: np.ndarray, rho: float, i: int) -> np.ndarray:
    """Gradient of :func:`f_rho` with respect to atom ``i`` (length ``m^2``)."""
    D = getattr(D, "atoms", D)
    m = _node_count(D)
    xi = X[i]
    resid_without_i = Y - D @ X + np.outer(D[:, i], xi)
    g = D[:, i] * (xi @ xi) - resid_without_i @ xi
    g[:: m + 1] += rho * (D[:: m + 1, i].sum() - m)
    return g


def grad_atom_block(D, X, Y, rho, i, ell) -> np.ndarray:
    """Block ``ell`` (row ``ell`` of the atom's matrix) of :func:`grad_atom`."""
    D = getattr(D, "atoms", D)
    m = _node_count(D)
    return grad_atom(D, X, Y, rho, i)[ell * m:(ell + 1) * m]


def lipschitz_atom(X: np.ndarray, i: int, rho: float) -> float:
    val = float(X[i] @ X[i]) + rho
    return val if val > 0 else LIPSCHITZ_FLOOR


def bcgd_dict_update(D, X, Y, config: LapDLConfig, rng: np.random.Generator,
                     iters: int | None = None, callback=None) -> LapAtomDictionary:
    """Randomized projected block-coordinate gradient descent on the atoms.

    Each step draws an atom ``i`` and a row ``l`` uniformly, takes a gradient
    step of length ``1 / (|X^i|^2 + rho)`` on that row and projects it back
    onto ``X_l``.  Gradients use the cached products ``X X^T`` and ``Y X^T``,
    so a step costs O(m n + m log m).  ``callback(step, i, l, atoms)`` runs
    after every step.
    """
    D = np.array(getattr(D, "atoms", D), dtype=float, copy=True)
    m = _node_count(D)
    n = D.shape[1]
    rho = config.rho
    steps = iters if iters is not None else (
        config.bcgd_iters if config.bcgd_iters is not None else 5 * n * m)
    G = X @ X.T
    B = (Y @ X.T).reshape(m, m, n)
    W = D.reshape(m, m, n)
    tr = atom_traces(D)
    lips = np.maximum(np.diag(G) + rho, LIPSCHITZ_FLOOR)
    atoms_drawn = rng.integers(n, size=steps)
    rows_drawn = rng.integers(m, size=steps)
    sweep = n * m
    worst = 0.0
    for k in range(steps):
        i = atoms_drawn[k]
        l = rows_drawn[k]
        old = W[l, :, i].copy()
        g = W[l] @ G[:, i] - B[l, :, i]
        g[l] += rho * (tr[i] - m)
        new = project_simplex_type(old - g / lips[i], l)
        tr[i] += new[l] - old[l]
        W[l, :, i] = new
        if callback is not None:
            callback(k, i, l, D)
        if config.grad_tol > 0:
            worst = max(worst, lips[i] * np.linalg.norm(new - old))
            if (k + 1) % sweep == 0:
                if worst < config.grad_tol:
                    break
                worst = 0.0
    return LapAtomDictionary(D)


def init_lap_atoms(m: int, n: int, rng: np.random.Generator, p: float = 0.3) -> LapAtomDictionary:
    """Laplacians of independent unit-weight Erdos-Renyi graphs scaled to trace ``m``."""
    if n < 1 or m < 2:
        raise InvalidParameterError("need n >= 1 and m >= 2")
    iu, iv = np.triu_indices(m, 1)
    cols = []
    while len(cols) < n:
        keep = rng.random(len(iu)) < p
        if not keep.any():
            continue
        g = WeightedGraph(m, np.stack([iu[keep], iv[keep]], axis=1), np.ones(keep.sum()))
        L = laplacian(g)
        cols.append(vec_rows(L * (m / np.trace(L))))
    return LapAtomDictionary(np.stack(cols, axis=1))


def code_signals(D: np.ndarray, Y: np.ndarray, s: int) -> np.ndarray:
    """OMP codes of ``Y`` in a dictionary with arbitrary (nonzero or zero) column norms."""
    D = getattr(D, "atoms", D)
    norms = np.linalg.norm(D, axis=0)
    live = np.flatnonzero(norms > 0)
    X = np.zeros((D.shape[1], Y.shape[1]))
    s = min(s, len(live), D.shape[0])
    if s == 0:
        return X
    X[live] = omp_batch(D[:, live] / norms[live], Y, s) / norms[live, None]
    return X


def _column_errors(D, X, Y):
    E = Y - D @ X
    return np.einsum("ij,ij->j", E, E)


def am_train(Y: np.ndarray, config: LapDLConfig, rng: np.random.Generator | None = None,
             init: LapAtomDictionary | None = None) -> tuple[LapAtomDictionary, np.ndarray]:
    """Alternate OMP coding and BCGD dictionary updates.

    A coding step keeps a signal's previous code when the fresh OMP code
    represents it worse, so the objective never increases.  Stops after
    ``am_iters`` rounds or when a round lowers the objective by less than
    ``rel_tol`` relative.  The objective after each half-step is stored in
    ``dictionary.history``.
    """
    Y = np.asarray(Y, dtype=float)
    m = _node_count(Y)
    rng = np.random.default_rng(config.seed) if rng is None else rng
    D = (init if init is not None else init_lap_atoms(m, config.n, rng)).atoms.copy()
    if D.shape[1] != config.n:
        raise InvalidParameterError("initial dictionary has the wrong atom count")
    X = np.zeros((config.n, Y.shape[1]))
    history = []
    prev = None
    for _ in range(config.am_iters):
        X_new = code_signals(D, Y, config.s)
        worse = _column_errors(D, X_new, Y) > _column_errors(D, X, Y)
        X_new[:, worse] = X[:, worse]
        X = X_new
        history.append(f_rho(D, X, Y, config.rho))
        D = bcgd_dict_update(D, X, Y, config, rng).atoms
        cur = f_rho(D, X, Y, config.rho)
        history.append(cur)
        if prev is not None and prev - cur <= config.rel_tol * max(prev, 1e-300):
            break
        prev = cur
    return LapAtomDictionary(D, history), X
