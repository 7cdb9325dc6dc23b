"""Synthetic graphs, Laplacians and graph-supported signals.

Graphs are undirected and weighted.  Normal graphs come from a stochastic
block model, anomalies are small Watts-Strogatz rings implanted on a random
node subset of a host graph.  Every generator takes a ``numpy.random.Generator``
and is a pure function of its parameters and the generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError, NumericalFailureError

LAYOUTS = ("vectorized-laplacian", "matrix-2d", "graph-signal")

WEIGHT_MEAN = 50.0
WEIGHT_STD = 50.0 / 3.0
WEIGHT_RANGE = (0.0, 100.0)


@dataclass
class WeightedGraph:
    """Undirected weighted graph stored as an edge list with ``u < v``."""

    node_count: int
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.node_count < 0:
            raise InvalidParameterError("node_count must be nonnegative")
        if len(self.weights) != len(self.edges):
            raise InvalidParameterError("one weight per edge is required")
        if len(self.edges):
            u, v = self.edges[:, 0], self.edges[:, 1]
            if np.any(u >= v):
                raise InvalidParameterError("edges must satisfy u < v (no self-loops)")
            if np.any(v >= self.node_count) or np.any(u < 0):
                raise InvalidParameterError("edge endpoint out of range")
            keys = u * self.node_count + v
            if len(np.unique(keys)) != len(keys):
                raise InvalidParameterError("duplicate edge")
            if np.any(self.weights < 0):
                raise InvalidParameterError("weights must be nonnegative")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        np.add.at(deg, self.edges.ravel(), 1)
        return deg


def _edges_from_pairs(n: int, pairs) -> np.ndarray:
    pairs = np.asarray(sorted({(min(a, b), max(a, b)) for a, b in pairs}), dtype=np.int64)
    return pairs.reshape(-1, 2)


def sbm_blocks(n: int, modules: int) -> np.ndarray:
    """Module id of each node for ``modules`` contiguous near-equal blocks."""
    return np.concatenate([np.full(len(c), i) for i, c in
                           enumerate(np.array_split(np.arange(n), modules))]).astype(np.int64)


def gen_sbm(n: int, modules: int, p_intra: float, p_inter: float,
            rng: np.random.Generator) -> WeightedGraph:
    """Stochastic block model with ``modules`` contiguous blocks and unit weights."""
    if n <= 0 or modules <= 0:
        raise InvalidParameterError("n and modules must be positive")
    if modules > n:
        raise InvalidParameterError("more modules than nodes")
    if not 0.0 <= p_inter <= p_intra <= 1.0:
        raise InvalidParameterError("need 0 <= p_inter <= p_intra <= 1")
    block = sbm_blocks(n, modules)
    iu, iv = np.triu_indices(n, 1)
    prob = np.where(block[iu] == block[iv], p_intra, p_inter)
    keep = rng.random(len(iu)) < prob
    edges = np.stack([iu[keep], iv[keep]], axis=1)
    return WeightedGraph(n, edges, np.ones(len(edges)))


def gen_watts_strogatz(n: int, k: int, beta: float,
                       rng: np.random.Generator) -> WeightedGraph:
    """Ring lattice of mean degree ``k`` with each edge rewired with probability ``beta``.

    Rewiring keeps the source endpoint and moves the other one to a uniformly
    chosen node that is neither the source nor already adjacent to it, so the
    edge count stays exactly ``n * k / 2``.
    """
    if k % 2:
        raise InvalidParameterError("k must be even")
    if not 0 <= k < n:
        raise InvalidParameterError("need 0 <= k < n")
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameterError("beta must lie in [0, 1]")
    adj = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for i in range(n):
            t = (i + j) % n
            adj[i].add(t)
            adj[t].add(i)
    for j in range(1, k // 2 + 1):
        for i in range(n):
            t = (i + j) % n
            if rng.random() >= beta or t not in adj[i]:
                continue
            candidates = [w for w in range(n) if w != i and w not in adj[i]]
            if not candidates:
                continue
            w = candidates[rng.integers(len(candidates))]
            adj[i].discard(t)
            adj[t].discard(i)
            adj[i].add(w)
            adj[w].add(i)
    edges = _edges_from_pairs(n, [(i, t) for i in range(n) for t in adj[i] if i < t])
    return WeightedGraph(n, edges, np.ones(len(edges)))


def implant_anomaly(host: WeightedGraph, anomaly: WeightedGraph,
                    rng: np.random.Generator, return_nodes: bool = False):
    """Replace the induced subgraph on a random node subset by ``anomaly``.

    Anomaly node ``t`` is mapped onto host node ``nodes[t]``.  Host edges with
    both endpoints in the subset are dropped, every other host edge is kept.
    """
    a = anomaly.node_count
    if a > host.node_count:
        raise InvalidParameterError("anomaly larger than host graph")
    nodes = rng.choice(host.node_count, size=a, replace=False) if a else np.zeros(0, np.int64)
    inside = np.zeros(host.node_count, dtype=bool)
    inside[nodes] = True
    keep = ~(inside[host.edges[:, 0]] & inside[host.edges[:, 1]])
    mapped = nodes[anomaly.edges] if anomaly.edge_count else np.zeros((0, 2), np.int64)
    mapped = np.sort(mapped, axis=1)
    edges = np.concatenate([host.edges[keep], mapped])
    weights = np.concatenate([host.weights[keep], anomaly.weights])
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    out = WeightedGraph(host.node_count, edges[order], weights[order])
    return (out, nodes) if return_nodes else out


def sample_weights(size: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian(50, 50/3) draws, out-of-range values redrawn until inside [0, 100]."""
    lo, hi = WEIGHT_RANGE
    w = rng.normal(WEIGHT_MEAN, WEIGHT_STD, size)
    bad = (w < lo) | (w > hi)
    while np.any(bad):
        w[bad] = rng.normal(WEIGHT_MEAN, WEIGHT_STD, int(bad.sum()))
        bad = (w < lo) | (w > hi)
    return w


def assign_weights(g: WeightedGraph, rng: np.random.Generator) -> WeightedGraph:
    return WeightedGraph(g.node_count, g.edges.copy(), sample_weights(g.edge_count, rng))


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Combinatorial Laplacian ``Deg - W``."""
    m = g.node_count
    L = np.zeros((m, m))
    if g.edge_count:
        u, v = g.edges[:, 0], g.edges[:, 1]
        L[u, v] = -g.weights
        L[v, u] = -g.weights
        L[np.diag_indices(m)] = -L.sum(axis=1)
    return L


def check_laplacian(L: np.ndarray, tol: float = 1e-10) -> list[str]:
    """Return the list of violated Laplacian invariants (empty when valid)."""
    m = L.shape[0]
    problems = []
    if L.shape != (m, m):
        return ["not square"]
    if not np.allclose(L, L.T, atol=tol * max(1.0, np.abs(L).max(initial=0.0))):
        problems.append("not symmetric")
    scale = max(1.0, np.abs(L).max(initial=0.0))
    if np.any(np.abs(L.sum(axis=1)) > tol * m * scale):
        problems.append("row sums not zero")
    off = L[~np.eye(m, dtype=bool)]
    if np.any(off > 0):
        problems.append("positive off-diagonal")
    if np.any(np.diag(L) < 0):
        problems.append("negative diagonal")
    if m and np.linalg.eigvalsh(L).min() < -1e-9 * scale:
        problems.append("not positive semidefinite")
    return problems


def vec_rows(L: np.ndarray) -> np.ndarray:
    """Row-stacking vectorization: block ``l`` of the result is row ``l`` of ``L``."""
    return np.ascontiguousarray(L).reshape(-1).copy()


def unvec_rows(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    m = int(round(np.sqrt(len(v))))
    if m * m != len(v):
        raise InvalidParameterError(f"length {len(v)} is not a perfect square")
    return v.reshape(m, m).copy()


@dataclass
class LabeledDataset:
    """Signals stored column-wise with one integer label per column.

    For the ``matrix-2d`` and ``vectorized-laplacian`` layouts each column is a
    row-stacked ``m x m`` matrix.
    """

    signals: np.ndarray
    labels: np.ndarray
    layout: str = "vectorized-laplacian"

    def __post_init__(self):
        self.signals = np.asarray(self.signals, dtype=float)
        if self.signals.ndim != 2:
            raise InvalidParameterError("signals must be a 2-D array (dim x N)")
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != self.signals.shape[1]:
            raise InvalidParameterError("label count differs from signal count")
        if self.layout not in LAYOUTS:
            raise InvalidParameterError(f"unknown layout {self.layout!r}")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.signals.shape[0]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def matrices(self) -> np.ndarray:
        """Signals as an ``N x m x m`` stack (square layouts only)."""
        m = int(round(np.sqrt(self.dim)))
        if m * m != self.dim:
            raise InvalidParameterError("signals are not vectorized square matrices")
        return self.signals.T.reshape(len(self), m, m)

    def of_class(self, c) -> np.ndarray:
        return self.signals[:, self.labels == c]

    def subset(self, idx) -> LabeledDataset:
        return LabeledDataset(self.signals[:, idx], self.labels[idx], self.layout)

    @staticmethod
    def concat(parts: list[LabeledDataset]) -> LabeledDataset:
        return LabeledDataset(np.concatenate([p.signals for p in parts], axis=1),
                              np.concatenate([p.labels for p in parts]),
                              parts[0].layout)


def normal_graph(rng, n=50, modules=8, p_intra=0.8, p_inter=0.05) -> WeightedGraph:
    return assign_weights(gen_sbm(n, modules, p_intra, p_inter, rng), rng)


def anomalous_graph(rng, n=50, modules=8, p_intra=0.8, p_inter=0.05,
                    ws_nodes=10, ws_k=4, ws_beta=0.2) -> WeightedGraph:
    host = gen_sbm(n, modules, p_intra, p_inter, rng)
    ring = gen_watts_strogatz(ws_nodes, ws_k, ws_beta, rng)
    return assign_weights(implant_anomaly(host, ring, rng), rng)


def laplacian_dataset(n_normal: int, n_anomaly: int, rng: np.random.Generator,
                      n=50, modules=8, p_intra=0.8, p_inter=0.05,
                      ws_nodes=10, ws_k=4, ws_beta=0.2) -> LabeledDataset:
    """Vectorized Laplacians of normal (label 0) and anomalous (label 1) graphs."""
    cols, labels = [], []
    for _ in range(n_normal):
        cols.append(vec_rows(laplacian(normal_graph(rng, n, modules, p_intra, p_inter))))
        labels.append(0)
    for _ in range(n_anomaly):
        g = anomalous_graph(rng, n, modules, p_intra, p_inter, ws_nodes, ws_k, ws_beta)
        cols.append(vec_rows(laplacian(g)))
        labels.append(1)
    return LabeledDataset(np.stack(cols, axis=1), np.array(labels), "vectorized-laplacian")


def signal_dictionary(L: np.ndarray, lam: float, n_atoms: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Unit-norm columns of ``(lam I + L)^-1 D0`` with Gaussian ``D0``."""
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    m = L.shape[0]
    D0 = rng.standard_normal((m, n_atoms))
    A = lam * np.eye(m) + L
    if np.linalg.cond(A) > 1e14:
        raise NumericalFailureError("lambda*I + L is numerically singular")
    D = np.linalg.solve(A, D0)
    return D / np.linalg.norm(D, axis=0)


def gen_graph_signals(L: np.ndarray, lam: float, n_atoms: int, s: int, snr_db: float,
                      N: int, rng: np.random.Generator, label: int = 0,
                      return_truth: bool = False):
    """Signals ``D x + noise`` with ``D`` coupled to the Laplacian ``L``.

    Each ``x`` has ``s`` standard-Gaussian entries on a uniform random support.
    The noise of every signal is rescaled so that
    ``10 log10(|clean|^2 / |noise|^2) == snr_db``; ``snr_db=inf`` gives clean
    signals.
    """
    if s > n_atoms:
        raise InvalidParameterError("s exceeds the number of atoms")
    D = signal_dictionary(L, lam, n_atoms, rng)
    m = L.shape[0]
    X = np.zeros((n_atoms, N))
    for i in range(N):
        support = rng.choice(n_atoms, size=s, replace=False)
        X[support, i] = rng.standard_normal(s)
    Y = D @ X
    if np.isfinite(snr_db):
        noise = rng.standard_normal((m, N))
        scale = np.linalg.norm(Y, axis=0) / (np.linalg.norm(noise, axis=0) * 10 ** (snr_db / 20))
        Y = Y + noise * scale
    ds = LabeledDataset(Y, np.full(N, label), "graph-signal")
    return (ds, D, X) if return_truth else ds


def split_dataset(ds: LabeledDataset, train_fraction: float,
                  rng: np.random.Generator) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified split; per-class train counts are ``round(fraction * count)``."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidParameterError("train_fraction must lie in (0, 1)")
    train_idx, test_idx = [], []
    for c in ds.classes:
        idx = np.flatnonzero(ds.labels == c)
        if len(idx) < 2:
            raise InvalidParameterError(f"class {c} has fewer than 2 members")
        idx = rng.permutation(idx)
        k = min(max(int(round(train_fraction * len(idx))), 1), len(idx) - 1)
        train_idx.append(idx[:k])
        test_idx.append(idx[k:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)
