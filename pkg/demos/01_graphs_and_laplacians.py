"""
Graphs, Laplacians and the anomaly motif
========================================

Builds one normal graph and one graph with an implanted ring, then looks at
what separates their Laplacians.
"""

import numpy as np

from lapdict.graphgen import (assign_weights, check_laplacian, gen_sbm, gen_watts_strogatz,
                              implant_anomaly, laplacian, sbm_blocks)

rng = np.random.default_rng(0)

# a 50-node stochastic block model with 8 modules: dense inside a module,
# sparse between modules
host = gen_sbm(50, 8, p_intra=0.8, p_inter=0.05, rng=rng)
print("module sizes:", np.bincount(sbm_blocks(50, 8)).tolist())
print("edges in the normal graph:", host.edge_count)

# the anomaly is a 10-node small-world ring (mean degree 4, 20% rewired)
ring = gen_watts_strogatz(10, 4, 0.2, rng)
print("ring edges:", ring.edge_count, "degrees:", ring.degrees().tolist())

# implanting replaces whatever the host had on 10 random nodes by the ring
anomalous, nodes = implant_anomaly(host, ring, rng, return_nodes=True)
print("ring placed on nodes", sorted(nodes.tolist()))
print("edges after implant:", anomalous.edge_count)

# edge weights are truncated Gaussians around 50
g0 = assign_weights(host, rng)
g1 = assign_weights(anomalous, rng)
L0, L1 = laplacian(g0), laplacian(g1)
print("weights in [%.1f, %.1f]" % (g0.weights.min(), g0.weights.max()))

# both are valid Laplacians: symmetric, zero row sums, nonpositive off-diagonals, PSD
print("violations:", check_laplacian(L0), check_laplacian(L1))

# one zero eigenvalue (connected graph); the implant shifts the low end of the spectrum
ev0 = np.linalg.eigvalsh(L0)
ev1 = np.linalg.eigvalsh(L1)
np.set_printoptions(precision=1, suppress=True)
print("smallest eigenvalues, normal   :", ev0[:9])
print("smallest eigenvalues, anomalous:", ev1[:9])

# the change is local: only rows of the ring nodes differ
changed = np.flatnonzero(np.any(laplacian(host) != laplacian(anomalous), axis=1))
print("rows touched by the implant:", changed.tolist())
