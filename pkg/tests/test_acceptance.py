"""Acceptance criteria 1-10 at their stated tolerances.

Each test records a one-line PASS/FAIL verdict; the lines are printed at the
end of the pytest run (see conftest.py) and when this file is executed
directly.  Criteria 8-10 run the desk-scale benchmarks and take a while.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lapdict.experiments import ExperimentConfig, run_exp1, run_exp2
from lapdict.lapdl import (LapAtomDictionary, LapDLConfig, bcgd_dict_update, f_rho, grad_atom_block,
                           init_lap_atoms)
from lapdict.sbo import BlockUnion, procrustes_update, sbo_represent
from lapdict.sparse import omp, omp2d, project_simplex_type, select_threshold

sys.path.insert(0, str(Path(__file__).parent))
from oracles import (active_set_projection, best_threshold_error, block_error, central_difference,  # noqa: E402
                     haar_orthogonal_batch)

RESULTS = {}


def record(k, ok, detail):
    RESULTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[k])
    return ok


def unit(rng, m, n):
    D = rng.standard_normal((m, n))
    return D / np.linalg.norm(D, axis=0)


def test_c01_projection_vs_active_set_qp():
    rng = np.random.default_rng(101)
    dev = idem = 0.0
    for _ in range(10_000):
        m = int(rng.integers(1, 13))
        v = rng.standard_normal(m) * rng.choice([0.01, 1.0, 100.0])
        ell = int(rng.integers(m))
        d = project_simplex_type(v, ell)
        dev = max(dev, np.abs(d - active_set_projection(v, ell)).max())
        idem = max(idem, np.abs(project_simplex_type(d, ell) - d).max())
    ok = dev <= 1e-8 and idem <= 1e-12
    assert record(1, ok, f"max deviation {dev:.2e} (<= 1e-8), idempotence {idem:.2e} (<= 1e-12)")


def test_c02_block_gradient_vs_finite_differences():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        m, n, N = int(rng.integers(3, 7)), int(rng.integers(2, 6)), int(rng.integers(5, 20))
        D = init_lap_atoms(m, n, rng).atoms
        X = rng.standard_normal((n, N))
        Y = rng.standard_normal((m * m, N))
        rho = float(rng.uniform(0.0, 100.0))
        i, ell = int(rng.integers(n)), int(rng.integers(m))
        rows = slice(ell * m, (ell + 1) * m)

        def f(row):
            E = D.copy()
            E[rows, i] = row
            return f_rho(E, X, Y, rho)

        fd = central_difference(f, D[rows, i].copy(), 1e-3)
        g = grad_atom_block(D, X, Y, rho, i, ell)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12))
    assert record(2, worst <= 1e-6, f"max relative error {worst:.2e} (<= 1e-6)")


def test_c03_bcgd_monotone_and_feasible():
    rng = np.random.default_rng(103)
    m, n, N = 6, 8, 40
    D = init_lap_atoms(m, n, rng).atoms
    X = rng.standard_normal((n, N)) * (rng.random((n, N)) < 0.4)
    Y = rng.standard_normal((m * m, N))
    cfg = LapDLConfig(n=n, s=3, rho=100.0)
    prev = [f_rho(D, X, Y, cfg.rho)]
    state = {"rise": 0.0, "infeasible": 0}

    def check(k, i, l, atoms):
        cur = f_rho(atoms, X, Y, cfg.rho)
        state["rise"] = max(state["rise"], cur - prev[0])
        prev[0] = cur
        if not LapAtomDictionary(atoms).is_feasible():
            state["infeasible"] += 1

    bcgd_dict_update(D, X, Y, cfg, rng, iters=10_000, callback=check)
    ok = state["rise"] <= 1e-10 and state["infeasible"] == 0
    assert record(3, ok, f"largest increase {state['rise']:.2e} (<= 1e-10), "
                         f"infeasible steps {state['infeasible']} over 10^4 steps")


def test_c04_threshold_vs_exhaustive():
    rng = np.random.default_rng(104)
    beaten = 0
    for _ in range(1000):
        Q = haar_orthogonal_batch(1, 6, rng)[0]
        y = rng.standard_normal(6)
        err = np.sum((y - Q @ select_threshold(Q.T @ y, 2).to_dense()) ** 2)
        beaten += err > best_threshold_error(Q, y, 2) + 1e-12
    assert record(4, beaten == 0, f"beaten in {beaten} of 1000 trials (m=6, s=2)")


def test_c05_omp2d_vs_kronecker_omp():
    rng = np.random.default_rng(105)
    mismatched, dev = 0, 0.0
    for _ in range(500):
        m1, m2 = rng.integers(1, 6, size=2)
        n1, n2 = rng.integers(1, 8, size=2)
        s = int(rng.integers(1, min(3, m1 * m2, n1 * n2) + 1))
        D1, D2 = unit(rng, m1, n1), unit(rng, m2, n2)
        Y = rng.standard_normal((m1, m2))
        pc = omp2d(D1, D2, Y, s)
        ref = omp(np.kron(D2, D1), Y.ravel(order="F"), s)
        if not np.array_equal(pc.kron_support(), ref.support):
            mismatched += 1
            continue
        dev = max(dev, np.abs(pc.values - ref.values).max(initial=0.0))
    ok = mismatched == 0 and dev <= 1e-10
    assert record(5, ok, f"support mismatches {mismatched}/500, max value deviation {dev:.2e} (<= 1e-10)")


def test_c06_procrustes_optimality_and_recovery():
    rng = np.random.default_rng(106)
    beaten, rec = 0, 0.0
    for _ in range(100):
        m, N = int(rng.integers(2, 7)), int(rng.integers(2, 30))
        X = rng.standard_normal((m, N))
        Y = rng.standard_normal((m, N))
        Q = procrustes_update(Y, X)
        best = np.linalg.norm(Y - Q @ X)
        samples = haar_orthogonal_batch(10_000, m, rng)
        beaten += np.linalg.norm(Y[None] - samples @ X, axis=(1, 2)).min() < best - 1e-12
        Q0 = haar_orthogonal_batch(1, m, rng)[0]
        X0 = rng.standard_normal((m, m + N))
        rec = max(rec, np.abs(procrustes_update(Q0 @ X0, X0) - Q0).max())
    ok = beaten == 0 and rec <= 1e-10
    assert record(6, ok, f"beaten on {beaten}/100 instances by 10^4 samples, recovery error {rec:.2e} (<= 1e-10)")


def test_c07_represent_chooses_best_block():
    rng = np.random.default_rng(107)
    wrong, gap = 0, 0.0
    for _ in range(1000):
        L, m = int(rng.integers(1, 9)), int(rng.integers(2, 9))
        s = int(rng.integers(1, m + 1))
        blocks = haar_orthogonal_batch(L, m, rng)
        y = rng.standard_normal(m)
        j, code = sbo_represent(BlockUnion(blocks), y, s)
        errs = np.array([block_error(Q, y, s) for Q in blocks])
        wrong += errs[j] > errs.min() + 1e-12
        # energy/error identity for the chosen block
        gap = max(gap, abs(np.sum((y - blocks[j] @ code.to_dense()) ** 2) - (y @ y - code.values @ code.values)))
    ok = wrong == 0 and gap <= 1e-10
    assert record(7, ok, f"suboptimal choices {wrong}/1000, energy/error identity gap {gap:.2e}")


@pytest.fixture(scope="module")
def bench_dirs(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def test_c08_exp1_desk_scale(bench_dirs):
    cfg = ExperimentConfig(experiment="exp1", scale=0.2, seed=0, out=str(bench_dirs / "exp1"))
    t0 = time.perf_counter()
    reports = run_exp1(cfg)
    elapsed = time.perf_counter() - t0
    acc = {m: 100 * r.accuracy for m, r in reports.items()}
    ok = (all(a >= 80.0 for a in acc.values())
          and acc["lapdl"] >= acc["src"] - 2.0 and acc["sepdl"] >= acc["src"] - 2.0
          and elapsed <= 3600)
    assert record(8, ok, f"lapdl {acc['lapdl']:.2f}%, sepdl {acc['sepdl']:.2f}%, src {acc['src']:.2f}% "
                         f"(>= 80, structured >= src - 2), {elapsed:.0f}s (<= 3600s)")


def test_c09_exp2_desk_scale(bench_dirs):
    cfg = ExperimentConfig(experiment="exp2", scale=0.2, seed=0, out=str(bench_dirs / "exp2_a"))
    t0 = time.perf_counter()
    reports, rows = run_exp2(cfg)
    elapsed = time.perf_counter() - t0
    sbo, src = 100 * reports["sbo"].accuracy, 100 * reports["src"].accuracy
    sweep_ok = (bench_dirs / "exp2_a" / "sweep.csv").exists() and len(rows) == len(cfg.sweep_L) * len(cfg.sweep_nu)
    ok = sbo >= 97.0 and src >= 97.0 and abs(sbo - src) <= 1.5 and elapsed <= 1800 and sweep_ok
    assert record(9, ok, f"sbo {sbo:.2f}%, src {src:.2f}% (each >= 97, gap {abs(sbo - src):.2f} <= 1.5), "
                         f"sweep rows {len(rows)}, {elapsed:.0f}s (<= 1800s)")


def _tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "timings.json"}


def test_c10_end_to_end_determinism(bench_dirs):
    first = bench_dirs / "exp2_a"
    if not (first / "report.json").exists():
        run_exp2(ExperimentConfig(experiment="exp2", scale=0.2, seed=0, out=str(first)))
    run_exp2(ExperimentConfig(experiment="exp2", scale=0.2, seed=0, out=str(bench_dirs / "exp2_b")))
    small = dict(experiment="exp1", scale=0.02, seed=0)
    for name in ("exp1_a", "exp1_b"):
        run_exp1(ExperimentConfig(**small, out=str(bench_dirs / name)))
    diffs = []
    for a, b in (("exp2_a", "exp2_b"), ("exp1_a", "exp1_b")):
        ta, tb = _tree(bench_dirs / a), _tree(bench_dirs / b)
        diffs += [f"{a}:{k}" for k in set(ta) | set(tb) if ta.get(k) != tb.get(k)]
        if not ta:
            diffs.append(f"{a}: no files")
    assert record(10, not diffs, f"files differing between reruns: {len(diffs)} "
                                 f"(exp2 scale 0.2 and exp1 scale 0.02 benches){' ' + str(diffs[:3]) if diffs else ''}")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    import test_acceptance as collected  # the copy pytest imported holds the verdicts
    print("\n".join(collected.RESULTS[k] for k in sorted(collected.RESULTS)))
    sys.exit(code)
