"""
Unions of orthonormal blocks on graph signals
=============================================

Smooth signals are drawn on a normal graph and on the same graph with a ring
implanted.  Each class gets a union of orthonormal blocks seeded from its
Laplacian; a test signal goes to the class owning its best block.
"""

import numpy as np

from lapdict.classify import evaluate
from lapdict.graphgen import gen_graph_signals, gen_sbm, gen_watts_strogatz, implant_anomaly, laplacian
from lapdict.sbo import orthogonalize_laplacian, sbo_classify, sbo_train

rng = np.random.default_rng(3)

host = gen_sbm(50, 8, 0.8, 0.05, rng)
ring = gen_watts_strogatz(10, 4, 0.2, rng)
L = {0: laplacian(host), 1: laplacian(implant_anomaly(host, ring, rng))}

# signals: D x + noise with D = (5 I + L)^-1 D0 column-normalized, 4-sparse x, 20 dB SNR
train, test = {}, {}
for c in (0, 1):
    ds = gen_graph_signals(L[c], 5.0, 50, 4, 20.0, 600, rng, label=c)
    train[c], test[c] = ds.signals[:, :500], ds.signals[:, 500:]

# the polar factor of a positive semidefinite matrix is the identity, so the
# graph Fourier basis (eigenvectors of L) is used as the seed block instead
print("polar seed is identity:", np.allclose(orthogonalize_laplacian(L[0], "polar"), np.eye(50)))

models = {}
for c in (0, 1):
    init = orthogonalize_laplacian(L[c], "eigen")
    models[c] = sbo_train(train[c], L_target=12, s=4, rounds=4, nu=0.3, parallel_batch=4,
                          init=init, rng=rng)
    models[c].class_of_block[:] = c
    print("class %d: %d blocks, error trace %s" % (c, len(models[c]),
                                                   np.round(models[c].history[::4], 1)))
    print("  orthonormality error %.1e" % models[c].orthonormality_error())

Y = np.concatenate([test[0], test[1]], axis=1)
labels = np.repeat([0, 1], 100)
report = evaluate(labels, sbo_classify(models, Y, 4))
print("accuracy: %.1f%%" % (100 * report.accuracy))
print("recall per class:", np.round(report.recall, 3))
