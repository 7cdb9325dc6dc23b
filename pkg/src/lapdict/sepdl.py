"""Separable 2-D dictionary learning on Laplacian matrices.

Signals are matrices ``Y ~ D1 X D2^T`` with sparse ``X``.  Codes come from
:func:`lapdict.sparse.omp2d`; the two dictionaries are refreshed alternately
with approximate K-SVD atom updates, one dictionary frozen while the other is
renewed.  Classification trains one pair per class and picks the class whose
pair leaves the smallest representation error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from .sparse import PairCode, normalize_columns, omp2d

log = logging.getLogger(__name__)


@dataclass
class SeparableDictPair:
    D1: np.ndarray
    D2: np.ndarray
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.D1 = np.asarray(self.D1, dtype=float)
        self.D2 = np.asarray(self.D2, dtype=float)

    @property
    def shape(self):
        return self.D1.shape + self.D2.shape

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        """``D1 X D2^T`` for one code matrix or an ``N x n1 x n2`` stack."""
        return self.D1 @ X @ self.D2.T


def _as_stack(Y) -> np.ndarray:
    if hasattr(Y, "matrices"):
        return Y.matrices()
    Y = np.asarray(Y, dtype=float)
    return Y[None] if Y.ndim == 2 else Y


def sep_rmse(Y, pair: SeparableDictPair, X) -> float:
    """``|Y - D1 X D2^T|_F / sqrt(m1 m2 N)`` over a stack of signals."""
    Y = _as_stack(Y)
    X = np.asarray(X, dtype=float)
    X = X[None] if X.ndim == 2 else X
    E = Y - pair.reconstruct(X)
    return float(np.sqrt(np.sum(E * E) / Y.size))


def code_stack(pair: SeparableDictPair, Y, s: int) -> list[PairCode]:
    return [omp2d(pair.D1, pair.D2, y, s) for y in _as_stack(Y)]


def _dense_codes(codes: list[PairCode], shape) -> np.ndarray:
    X = np.zeros((len(codes),) + tuple(shape))
    for t, c in enumerate(codes):
        np.add.at(X[t], (c.rows, c.cols), c.values)
    return X


def _fix_signs(D: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(D), axis=0)
    signs = np.sign(D[idx, np.arange(D.shape[1])])
    signs[signs == 0] = 1.0
    return D * signs


def _init_from_signals(Y: np.ndarray, n: int, rng, transpose: bool) -> np.ndarray:
    N = Y.shape[0]
    src = Y.transpose(0, 2, 1) if transpose else Y
    sig = rng.integers(N, size=n)
    col = rng.integers(src.shape[2], size=n)
    D = src[sig, :, col].T.copy()
    return normalize_columns(D, rng)


def _update_side(Dupd, Dfix, Res, sig, upd, fix, val, rng, side):
    """AK-SVD sweep over the atoms of ``Dupd``.

    ``Res`` is an ``N x rows(Dupd) x rows(Dfix)`` residual view updated in
    place; ``sig, upd, fix, val`` describe every selected pair (signal,
    atom index in ``Dupd``, atom index in ``Dfix``, coefficient).
    """
    m_fix = Dfix.shape[0]
    unused = []
    for a in range(Dupd.shape[1]):
        idx = np.flatnonzero(upd == a)
        if len(idx) == 0:
            unused.append(a)
            continue
        b = fix[idx]
        c = val[idx]
        us, inv = np.unique(sig[idx], return_inverse=True)
        W = np.zeros((len(us), m_fix))
        np.add.at(W, inv, c[:, None] * Dfix[:, b].T)
        E = Res[us] + Dupd[:, a][None, :, None] * W[:, None, :]
        atom = np.einsum("sjk,sk->j", E, W)
        nrm = np.linalg.norm(atom)
        if nrm == 0:
            continue
        atom /= nrm
        proj = np.einsum("j,sjk->sk", atom, E)
        c_new = np.einsum("pk,kp->p", proj[inv], Dfix[:, b])
        # several pairs share this atom in one signal: exact refit on their partners
        counts = np.bincount(inv)
        for u in np.flatnonzero(counts > 1):
            p = np.flatnonzero(inv == u)
            c_new[p] = np.linalg.lstsq(Dfix[:, b[p]], proj[u], rcond=None)[0]
        W_new = np.zeros_like(W)
        np.add.at(W_new, inv, c_new[:, None] * Dfix[:, b].T)
        Res[us] = E - atom[None, :, None] * W_new[:, None, :]
        val[idx] = c_new
        Dupd[:, a] = atom
    if unused:
        err = np.einsum("ijk,ijk->i", Res, Res)
        order = np.argsort(-err, kind="stable")
        for a, t in zip(unused, order):
            if err[t] <= 1e-24:
                break
            u, _, _ = np.linalg.svd(Res[t], full_matrices=False)
            Dupd[:, a] = u[:, 0]
            log.debug("replaced unused atom %d of D%d from signal %d", a, side, t)


def pairwise_aksvd_train(Y, n1: int, n2: int, s: int, iters: int,
                         rng: np.random.Generator,
                         init: SeparableDictPair | None = None) -> SeparableDictPair:
    """Learn a separable pair on a stack of ``m1 x m2`` signals.

    Every iteration codes all signals with 2-D OMP (keeping a signal's
    previous code when the new one is worse), then sweeps the atoms of
    ``D1`` with ``D2`` frozen, then the atoms of ``D2`` with ``D1`` frozen.
    ``history`` holds the RMSE after each coding and each dictionary sweep.
    """
    Y = _as_stack(Y)
    N, m1, m2 = Y.shape
    if s > n1 * n2:
        raise InvalidParameterError("s exceeds n1 * n2")
    if init is None:
        D1 = _init_from_signals(Y, n1, rng, transpose=False)
        D2 = _init_from_signals(Y, n2, rng, transpose=True)
    else:
        D1, D2 = init.D1.copy(), init.D2.copy()
        if D1.shape[1] != n1 or D2.shape[1] != n2:
            raise InvalidParameterError("initial pair has the wrong atom counts")
    history = []
    codes = None
    for _ in range(iters):
        fresh = [omp2d(D1, D2, Y[t], s) for t in range(N)]
        if codes is not None:
            Xo = _dense_codes(codes, (n1, n2))
            Xf = _dense_codes(fresh, (n1, n2))
            Eo = Y - D1 @ Xo @ D2.T
            Ef = Y - D1 @ Xf @ D2.T
            eo = np.einsum("ijk,ijk->i", Eo, Eo)
            ef = np.einsum("ijk,ijk->i", Ef, Ef)
            fresh = [o if eo[t] < ef[t] else f for t, (o, f) in enumerate(zip(codes, fresh))]
        codes = fresh
        sig = np.concatenate([np.full(len(c.values), t) for t, c in enumerate(codes)])
        rows = np.concatenate([c.rows for c in codes])
        cols = np.concatenate([c.cols for c in codes])
        val = np.concatenate([c.values for c in codes])
        Res = Y - D1 @ _dense_codes(codes, (n1, n2)) @ D2.T
        history.append(float(np.sqrt(np.sum(Res * Res) / Y.size)))
        _update_side(D1, D2, Res, sig, rows, cols, val, rng, side=1)
        _update_side(D2, D1, Res.transpose(0, 2, 1), sig, cols, rows, val, rng, side=2)
        history.append(float(np.sqrt(np.sum(Res * Res) / Y.size)))
        ends = np.cumsum([len(c.values) for c in codes])[:-1]
        codes = [PairCode(r, c, v, (n1, n2)) for r, c, v in
                 zip(np.split(rows, ends), np.split(cols, ends), np.split(val, ends))]
    return SeparableDictPair(_fix_signs(D1), _fix_signs(D2), history)


def sep_errors(pair: SeparableDictPair, Y, s: int) -> np.ndarray:
    """Squared Frobenius representation error of every signal."""
    Y = _as_stack(Y)
    X = _dense_codes(code_stack(pair, Y, s), (pair.D1.shape[1], pair.D2.shape[1]))
    E = Y - pair.reconstruct(X)
    return np.einsum("ijk,ijk->i", E, E)


def sep_classify(models: dict, Y_test, s: int) -> np.ndarray:
    """Label each signal by the class pair with the smallest error (ties: lowest id)."""
    classes = sorted(models)
    errors = np.stack([sep_errors(models[c], Y_test, s) for c in classes])
    return np.asarray(classes)[np.argmin(errors, axis=0)]
