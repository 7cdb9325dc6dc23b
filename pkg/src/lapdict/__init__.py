"""Dictionary learning with graph Laplacian structure for anomaly classification.

Modules
-------
graphgen
    random graphs, Laplacians, labeled datasets and graph signals
sparse
    OMP variants, thresholding and the simplex-type projection
lapdl
    dictionaries whose atoms are Laplacians (BCGD + alternating minimization)
sepdl
    separable (Kronecker) dictionaries trained with pairwise AK-SVD
sbo
    unions of orthonormal blocks
classify
    per-class classification, baseline dictionary learning and reports
experiments, io, cli
    benchmark orchestration, binary formats and the command line
"""

from .classify import ClassifierReport, baseline_dl_train, evaluate, src_classify
from .exceptions import FormatError, InvalidParameterError, LapDictError, NumericalFailureError
from .graphgen import (LabeledDataset, WeightedGraph, gen_graph_signals, gen_sbm,
                       gen_watts_strogatz, implant_anomaly, laplacian, split_dataset)
from .lapdl import LapAtomDictionary, LapDLConfig, am_train, bcgd_dict_update, f_rho, grad_atom_block
from .sbo import BlockUnion, orthogonalize_laplacian, procrustes_update, sbo_represent, sbo_train
from .sepdl import SeparableDictPair, pairwise_aksvd_train
from .sparse import (PairCode, SparseCode, omp, omp2d, omp_batch, project_simplex_type,
                     select_threshold)

__version__ = "0.1.0"
