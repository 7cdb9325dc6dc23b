"""Union-of-orthonormal-blocks dictionaries (SBO / parallel SBO).

A signal is represented in a single orthonormal block by hard thresholding;
the block keeping the most energy wins.  Training alternates block
assignment with Procrustes refreshes and grows the union several blocks at a
time from the worst represented signals.  Blocks can be seeded with an
orthogonalized graph Laplacian, and a pooled union of per-class blocks
classifies signals by the owner of the winning block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from .sparse import SparseCode, select_threshold, select_threshold_dense

log = logging.getLogger(__name__)


@dataclass
class BlockUnion:
    blocks: np.ndarray
    class_of_block: np.ndarray | None = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.blocks = np.asarray(self.blocks, dtype=float)
        if self.blocks.ndim == 2:
            self.blocks = self.blocks[None]
        if self.blocks.ndim != 3 or self.blocks.shape[1] != self.blocks.shape[2]:
            raise InvalidParameterError("blocks must be an L x m x m array")
        if self.class_of_block is None:
            self.class_of_block = np.zeros(len(self.blocks), dtype=np.int64)
        self.class_of_block = np.asarray(self.class_of_block, dtype=np.int64)

    @property
    def m(self) -> int:
        return self.blocks.shape[1]

    def __len__(self):
        return len(self.blocks)

    def orthonormality_error(self) -> float:
        eye = np.eye(self.m)
        return max(float(np.abs(Q.T @ Q - eye).max()) for Q in self.blocks)


def _sign_fix(Q: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs


def orthogonalize_laplacian(L: np.ndarray, method: str = "polar", eps: float = 1e-8) -> np.ndarray:
    """Orthonormal matrix derived from a symmetric Laplacian.

    ``"polar"`` returns the orthogonal polar factor ``U V^T`` of ``L + eps I``,
    i.e. the orthogonal matrix closest to it in Frobenius norm.  For a
    positive semidefinite ``L`` this is the identity, so it carries no graph
    information.  ``"eigen"`` returns the eigenvectors of ``L`` sorted by
    increasing eigenvalue (graph Fourier basis), each signed so its largest
    entry is positive.
    """
    L = np.asarray(L, dtype=float)
    if not np.allclose(L, L.T):
        raise InvalidParameterError("L must be symmetric")
    if method == "polar":
        U, _, Vt = np.linalg.svd(L + eps * np.eye(len(L)))
        return U @ Vt
    if method == "eigen":
        _, V = np.linalg.eigh(L)
        return _sign_fix(V)
    raise InvalidParameterError(f"unknown method {method!r}")


def block_energies(blocks: np.ndarray, Y: np.ndarray, s: int) -> np.ndarray:
    """``L x N`` energies of the ``s`` largest coefficients of every block."""
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    C = np.einsum("lji,jn->lin", blocks, Y) ** 2
    m = C.shape[1]
    if s >= m:
        return C.sum(axis=1)
    return -np.partition(-C, s - 1, axis=1)[:, :s].sum(axis=1)


def assign_blocks(blocks: np.ndarray, Y: np.ndarray, s: int):
    """Best block per signal (ties: lowest index) and its energy."""
    E = block_energies(blocks, Y, s)
    best = np.argmax(E, axis=0)
    return best, E[best, np.arange(E.shape[1])]


def sbo_represent(union, y: np.ndarray, s: int) -> tuple[int, SparseCode]:
    blocks = union.blocks if isinstance(union, BlockUnion) else np.asarray(union)
    if len(blocks) == 0:
        raise InvalidParameterError("empty union")
    best, _ = assign_blocks(blocks, np.asarray(y, dtype=float), s)
    j = int(best[0])
    return j, select_threshold(blocks[j].T @ y, s)


def procrustes_update(Y: np.ndarray, X: np.ndarray, previous: np.ndarray | None = None) -> np.ndarray:
    """Orthogonal ``Q`` minimizing ``|Y - Q X|_F``: ``V U^T`` where ``X Y^T = U S V^T``."""
    M = X @ Y.T
    if not np.any(M):
        if previous is None:
            return np.eye(Y.shape[0])
        log.debug("degenerate Procrustes input, block kept")
        return previous
    U, _, Vt = np.linalg.svd(M)
    return Vt.T @ U.T


def representation_error(blocks: np.ndarray, Y: np.ndarray, s: int) -> float:
    """Total squared error of coding every signal in its best block."""
    _, energy = assign_blocks(blocks, Y, s)
    return float(np.sum(Y * Y) - energy.sum())


def _random_orthogonal(m: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    A = np.eye(m) + scale * rng.standard_normal((m, m)) if scale < np.inf else rng.standard_normal((m, m))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    return _random_orthogonal(m, rng, np.inf)


def _refine(blocks: np.ndarray, Y: np.ndarray, s: int, rounds: int, which=None,
            history: list | None = None) -> np.ndarray:
    """Assignment + per-block Procrustes sweeps; ``which`` limits updated blocks."""
    which = range(len(blocks)) if which is None else which
    for _ in range(rounds):
        best, _ = assign_blocks(blocks, Y, s)
        for j in which:
            idx = best == j
            if not idx.any():
                continue
            Yj = Y[:, idx]
            Xj = select_threshold_dense(blocks[j].T @ Yj, s)
            blocks[j] = procrustes_update(Yj, Xj, blocks[j])
        if history is not None:
            history.append(representation_error(blocks, Y, s))
    return blocks


def _worst_signals(blocks: np.ndarray, Y: np.ndarray, s: int, nu: float) -> np.ndarray:
    _, energy = assign_blocks(blocks, Y, s)
    err = np.einsum("ij,ij->j", Y, Y) - energy
    k = max(1, int(np.ceil(nu * Y.shape[1])))
    return Y[:, np.argsort(-err, kind="stable")[:k]]


def _seed_blocks(W: np.ndarray, count: int, rng: np.random.Generator,
                 jitter: float = 0.1) -> np.ndarray:
    U, _, _ = np.linalg.svd(W, full_matrices=True)
    return np.stack([U @ _random_orthogonal(len(U), rng, jitter) for _ in range(count)])


def _replace_empty(blocks, Y, s, nu, rng):
    best, _ = assign_blocks(blocks, Y, s)
    empty = [j for j in range(len(blocks)) if not np.any(best == j)]
    if empty:
        W = _worst_signals(blocks, Y, s, nu)
        blocks[empty] = _seed_blocks(W, len(empty), rng)
        log.debug("reseeded %d empty blocks", len(empty))
    return blocks


def sbo_train(Y: np.ndarray, L_target: int, s: int, rounds: int, nu: float,
              parallel_batch: int, init, rng: np.random.Generator,
              new_block_rounds: int = 2, init_fraction: float = 1.0) -> BlockUnion:
    """Grow and refine a union of orthonormal blocks on one class of signals.

    The initial blocks are first refined for ``rounds`` sweeps on a random
    ``init_fraction`` of the signals (all of them by default).  Then, while fewer than
    ``L_target`` blocks exist, collects the ``nu`` fraction of worst
    represented signals into ``W``, seeds up to ``parallel_batch`` new blocks
    from the left singular basis of ``W`` (each with its own small random
    rotation) and trains them for ``new_block_rounds`` sweeps on ``W``.  The
    enlarged union is then refined on all signals for ``rounds`` sweeps.
    ``history`` records the total error on all signals after the
    initial refinement and after each later sweep.
    """
    Y = np.asarray(Y, dtype=float)
    if not 0.0 < nu <= 1.0:
        raise InvalidParameterError("nu must lie in (0, 1]")
    if parallel_batch < 1:
        raise InvalidParameterError("parallel_batch must be at least 1")
    if not 0.0 < init_fraction <= 1.0:
        raise InvalidParameterError("init_fraction must lie in (0, 1]")
    blocks = np.array(init.blocks if isinstance(init, BlockUnion) else init, dtype=float)
    if blocks.ndim == 2:
        blocks = blocks[None]
    if len(blocks) == 0:
        raise InvalidParameterError("at least one initial block is required")
    eye = np.eye(blocks.shape[1])
    if max(np.abs(Q.T @ Q - eye).max() for Q in blocks) > 1e-8:
        raise InvalidParameterError("initial blocks must be orthonormal")
    history: list = []
    N = Y.shape[1]
    if init_fraction < 1.0:
        sub = np.sort(rng.choice(N, size=max(1, int(np.ceil(init_fraction * N))), replace=False))
        blocks = _refine(blocks, Y[:, sub], s, rounds)
        history.append(representation_error(blocks, Y, s))
    else:
        blocks = _refine(blocks, Y, s, rounds, history=history)
    while len(blocks) < L_target:
        if rounds:
            blocks = _replace_empty(blocks, Y, s, nu, rng)
        W = _worst_signals(blocks, Y, s, nu)
        count = min(parallel_batch, L_target - len(blocks))
        fresh = _refine(_seed_blocks(W, count, rng), W, s, new_block_rounds)
        blocks = _refine(np.concatenate([blocks, fresh]), Y, s, rounds, history=history)
    return BlockUnion(blocks, None, history)


def pool(models: dict) -> BlockUnion:
    """Concatenate per-class unions, tagging each block with its class."""
    classes = sorted(models)
    blocks = np.concatenate([models[c].blocks for c in classes])
    owner = np.concatenate([np.full(len(models[c]), c) for c in classes])
    return BlockUnion(blocks, owner)


def sbo_classify(models: dict, Y: np.ndarray, s: int) -> np.ndarray:
    """Class owning the highest-energy block among all pooled blocks."""
    union = pool(models)
    Y = np.asarray(Y, dtype=float)
    best, _ = assign_blocks(union.blocks, Y[:, None] if Y.ndim == 1 else Y, s)
    return union.class_of_block[best]
