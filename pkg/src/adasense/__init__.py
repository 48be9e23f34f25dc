"""Adaptive matrix sensing with general linear measurements on planted Gaussian instances."""
from .algorithms import (RecoveryResult, block_krylov, evaluate, nonadaptive_baseline, rank1_extract,
                         reduced_rank_regression, score, subspace_iteration)
from .instances import (DerivedInstance, PlantedInstance, augment_diagonal, gen_planted, observed,
                        sparse_embed, symmetrize, translate_measurement)
from .linalg import matvec_queries, norm, orthonormalize, truncated_svd
from .oracle import Oracle, RoundTranscript, open_session
from .queries import DenseBatch, KronBatch

__version__ = "0.1.0"
