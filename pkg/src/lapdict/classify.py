"""Per-class dictionary classification, the unstructured baseline and metrics."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from .sparse import normalize_columns, omp_batch

log = logging.getLogger(__name__)


def _errors(D, X, Y):
    E = Y - D @ X
    return np.einsum("ij,ij->j", E, E)


def baseline_dl_train(Y: np.ndarray, n: int, s: int, iters: int,
                      rng: np.random.Generator, history: list | None = None) -> np.ndarray:
    """Unstructured dictionary learning with approximate K-SVD atom updates.

    Atoms start as distinct random training signals.  Each iteration codes
    all signals with OMP (a signal keeps its old code if that one is better)
    and then refreshes every atom in turn: ``d <- E x / |E x|``, ``x <- E^T d``
    with ``E`` the residual that excludes the atom.  Unused atoms are
    replaced by the worst represented signals.
    """
    Y = np.asarray(Y, dtype=float)
    dim, N = Y.shape
    if s > min(dim, n):
        raise InvalidParameterError("s exceeds min(dim, n)")
    pick = rng.choice(N, size=n, replace=n > N)
    D = Y[:, pick].copy()
    if n > N:
        D += 1e-3 * np.linalg.norm(D, axis=0) * rng.standard_normal(D.shape) / np.sqrt(dim)
    D = normalize_columns(D, rng)
    X = np.zeros((n, N))
    for _ in range(iters):
        X_new = omp_batch(D, Y, s)
        worse = _errors(D, X_new, Y) > _errors(D, X, Y)
        X_new[:, worse] = X[:, worse]
        X = X_new
        E = Y - D @ X
        unused = []
        for j in range(n):
            I = np.flatnonzero(X[j])
            if len(I) == 0:
                unused.append(j)
                continue
            x = X[j, I]
            e = E[:, I] + np.outer(D[:, j], x)
            g = e @ x
            nrm = np.linalg.norm(g)
            if nrm == 0:
                continue
            d = g / nrm
            x = e.T @ d
            E[:, I] = e - np.outer(d, x)
            D[:, j] = d
            X[j, I] = x
        if unused:
            err = np.einsum("ij,ij->j", E, E)
            for j, t in zip(unused, np.argsort(-err, kind="stable")):
                if err[t] <= 0:
                    break
                D[:, j] = Y[:, t] / np.linalg.norm(Y[:, t])
            log.debug("replaced %d unused atoms", len(unused))
        if history is not None:
            history.append(float(np.sum(E * E)))
    return D


def class_errors(D: np.ndarray, Y: np.ndarray, s: int) -> np.ndarray:
    """Squared OMP representation error of every column of ``Y`` in ``D``."""
    D = getattr(D, "atoms", D)
    norms = np.linalg.norm(D, axis=0)
    Dn = D[:, norms > 0] / norms[norms > 0]
    s = min(s, Dn.shape[0], Dn.shape[1])
    return _errors(Dn, omp_batch(Dn, Y, s), Y)


def src_classify(models: dict, Y: np.ndarray, s: int) -> np.ndarray:
    """Label each column of ``Y`` by the class dictionary with the smallest error.

    Column norms of the dictionaries do not matter; ties go to the lowest
    class id.
    """
    classes = sorted(models)
    errors = np.stack([class_errors(models[c], Y, s) for c in classes])
    return np.asarray(classes)[np.argmin(errors, axis=0)]


@dataclass
class ClassifierReport:
    accuracy: float
    confusion: np.ndarray
    classes: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    runtime: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": [int(c) for c in self.classes],
            "confusion": self.confusion.tolist(),
            "precision": [float(p) for p in self.precision],
            "recall": [float(r) for r in self.recall],
            "runtime": self.runtime,
            "config": self.config,
        }

    def csv_rows(self, method: str = "") -> list[list]:
        return [[method, int(c), self.accuracy, float(p), float(r), int(self.confusion[k].sum())]
                for k, (c, p, r) in enumerate(zip(self.classes, self.precision, self.recall))]


REPORT_CSV_HEADER = ["method", "class", "accuracy", "precision", "recall", "support"]


def reports_to_csv(reports: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_HEADER)
    for method, rep in reports.items():
        w.writerows(rep.csv_rows(method))
    return buf.getvalue()


def evaluate(labels_true, labels_pred, classes=None, runtime: float = 0.0,
             config: dict | None = None) -> ClassifierReport:
    """Accuracy, confusion matrix (rows: true class) and per-class precision/recall."""
    t = np.asarray(labels_true).reshape(-1)
    p = np.asarray(labels_pred).reshape(-1)
    if len(t) != len(p):
        raise InvalidParameterError("label arrays differ in length")
    classes = np.unique(np.concatenate([t, p])) if classes is None else np.asarray(classes)
    pos = {c: k for k, c in enumerate(classes.tolist())}
    C = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, b in zip(t.tolist(), p.tolist()):
        C[pos[a], pos[b]] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.nan_to_num(np.diag(C) / C.sum(axis=0))
        recall = np.nan_to_num(np.diag(C) / C.sum(axis=1))
    acc = float(np.trace(C) / len(t)) if len(t) else 0.0
    return ClassifierReport(acc, C, classes, precision, recall, runtime, dict(config or {}))
