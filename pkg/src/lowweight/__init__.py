"""Straggler-resilient distributed sparse matrix computation with low-weight cyclic encodings."""
from .errors import *  # noqa: F401,F403
from .sparsemat import (SparseMatrix, generate_random_sparse, partition_block_columns, pad_columns,
                        predicted_encoded_density, read_matrix_market, write_matrix_market)
from .encoder import (Distribution, EncodingPlan, WorkerTask, encode_tasks, plan_dense_baseline, plan_matmat,
                      plan_matvec)
from .decoder import build_decoding_system, decode, decode_least_squares, is_recoverable
from .stability import coefficient_search, condition_number, kappa_worst, kappa_worst_sampled
from .hetero import HeterogeneousProfile, virtualize, assign_hetero_tasks, q_over_delta
from .verifier import has_perfect_matching, support_bipartite_graph
from .simulator import DelayModel, StragglerSpec, simulate, compare_schemes

__version__ = "0.1.0"
