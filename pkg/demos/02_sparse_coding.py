"""
Sparse coding: OMP, its 2-D variant and the simplex-type projection
===================================================================
"""

import numpy as np

from lapdict.sparse import (correlation_cost_2d, correlation_cost_kron, omp, omp2d, omp_batch,
                            project_simplex_type)

rng = np.random.default_rng(1)

# -- plain OMP recovers a planted 3-sparse code
D = rng.standard_normal((30, 80))
D /= np.linalg.norm(D, axis=0)
x = np.zeros(80)
x[[5, 33, 70]] = [2.0, -1.0, 0.5]
code = omp(D, D @ x, 3)
print("support found:", sorted(code.support.tolist()), "values:", np.round(code.values, 6))

# the Gram-matrix batch version gives the same codes for many signals at once
Y = rng.standard_normal((30, 500))
X = omp_batch(D, Y, 5)
print("nonzeros per column:", set(np.count_nonzero(X, axis=0).tolist()))

# -- separable model: Y = D1 X D2^T, never forming kron(D2, D1)
D1 = rng.standard_normal((50, 200))
D2 = rng.standard_normal((50, 200))
D1 /= np.linalg.norm(D1, axis=0)
D2 /= np.linalg.norm(D2, axis=0)
Xs = np.zeros((200, 200))
Xs[10, 20], Xs[150, 3] = 1.0, -2.0
counter = {}
pair = omp2d(D1, D2, D1 @ Xs @ D2.T, 2, counter=counter)
print("pairs found:", list(zip(pair.rows.tolist(), pair.cols.tolist())))

# correlation cost per iteration: separable versus the explicit Kronecker product
c2 = correlation_cost_2d(50, 50, 200, 200)
ck = correlation_cost_kron(50, 50, 200, 200)
print("multiply-adds per iteration: %d vs %d (%.0fx fewer)" % (c2, ck, ck / c2))
print("counted:", counter)

# -- projection onto one Laplacian row: sum zero, diagonal entry >= 0, others <= 0
v = np.array([0.3, 2.0, -1.0, 0.4, -0.2])
d = project_simplex_type(v, 1)
print("projected row:", d, "sum:", d.sum())
