"""Decoding systems and reconstruction of A^T x / A^T B from worker results."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .encoder import MATVEC, EncodingPlan
from .errors import RankDeficient, ShapeMismatch, SingularSystem, WrongSubsetSize

DEFAULT_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class DecodingSystem:
    tau: int
    matrix: np.ndarray
    unknown_index_map: tuple  # column j -> (u, v), j = u * k_B + v
    survivor_ids: tuple


def effective_row(plan: EncodingPlan, worker_id: int) -> np.ndarray:
    """Coefficients of the τ unknowns A_u^T B_v in worker ``worker_id``'s result."""
    return np.kron(plan.coeffs_A[worker_id], plan.coeffs_B[worker_id])


def effective_rows(plan: EncodingPlan, worker_ids=None) -> np.ndarray:
    ids = np.arange(plan.n) if worker_ids is None else np.asarray(worker_ids, dtype=np.int64)
    ra = plan.coeffs_A[ids]
    rb = plan.coeffs_B[ids]
    return (ra[:, :, None] * rb[:, None, :]).reshape(len(ids), plan.tau)


def unknown_index_map(plan: EncodingPlan) -> tuple:
    return tuple((u, v) for u in range(plan.k_A) for v in range(plan.k_B))


def _check_ids(plan, survivor_ids, exact=True):
    ids = [int(i) for i in survivor_ids]
    if len(set(ids)) != len(ids):
        raise WrongSubsetSize("survivor ids must be distinct")
    if any(i < 0 or i >= plan.n for i in ids):
        raise WrongSubsetSize(f"survivor ids must lie in [0, {plan.n})")
    if exact and len(ids) != plan.tau:
        raise WrongSubsetSize(f"need exactly {plan.tau} survivors, got {len(ids)}")
    return ids


def build_decoding_system(plan: EncodingPlan, survivor_ids) -> DecodingSystem:
    ids = _check_ids(plan, survivor_ids)
    return DecodingSystem(plan.tau, effective_rows(plan, ids), unknown_index_map(plan), tuple(ids))


def full_column_rank(M, rcond=DEFAULT_RCOND) -> bool:
    """σ_min / σ_max > rcond for a (possibly tall) matrix with ≥ as many rows as columns."""
    if M.shape[0] < M.shape[1]:
        return False
    sv = np.linalg.svd(M, compute_uv=False)
    return bool(sv[0] > 0 and sv[-1] / sv[0] > rcond)


def is_recoverable(plan: EncodingPlan, survivor_ids, rcond_threshold=DEFAULT_RCOND) -> bool:
    return full_column_rank(build_decoding_system(plan, survivor_ids).matrix, rcond_threshold)


def _stack_results(plan, results):
    if not results:
        raise ShapeMismatch("no results")
    shape = np.shape(results[0])
    if len(shape) == 1:
        shape = (shape[0], 1)
    Y = []
    for res in results:
        arr = np.asarray(res, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.shape != shape:
            raise ShapeMismatch(f"result blocks differ in shape: {arr.shape} vs {shape}")
        Y.append(arr.ravel())
    if plan.kind == MATVEC and shape[1] != 1:
        raise ShapeMismatch("matvec results must be column vectors")
    return np.vstack(Y), shape


def _assemble(plan, X, block_shape, out_shape):
    p, q = block_shape
    full = X.reshape(plan.k_A, plan.k_B, p, q).transpose(0, 2, 1, 3).reshape(plan.k_A * p, plan.k_B * q)
    if out_shape is not None:
        r, w = out_shape
        if plan.transposed:
            r, w = w, r
        full = full[:r, : (w if w is not None else full.shape[1])]
    if plan.transposed:
        full = full.T
    return np.ascontiguousarray(full)


def decode(plan: EncodingPlan, survivor_ids, results, out_shape=None, rcond_threshold=DEFAULT_RCOND) -> np.ndarray:
    """Recover the full product from exactly τ worker results.

    ``out_shape = (r, w)`` (``w`` None for matvec) strips zero padding added
    at encoding time.  ``results`` is either aligned with ``survivor_ids`` or
    a mapping from worker id to result.  The τ x τ system is LU-factored once
    and applied to every entry of the stacked result blocks.
    """
    system = build_decoding_system(plan, survivor_ids)
    if isinstance(results, dict):
        missing = [i for i in system.survivor_ids if i not in results]
        if missing:
            raise ShapeMismatch(f"no result for survivors {missing}")
        results = [results[i] for i in system.survivor_ids]
    if len(results) != system.tau:
        raise ShapeMismatch(f"{len(results)} results for {system.tau} survivors")
    if not full_column_rank(system.matrix, rcond_threshold):
        raise SingularSystem(f"decoding matrix for survivors {list(system.survivor_ids)} is singular")
    Y, block_shape = _stack_results(plan, results)
    lu = sla.lu_factor(system.matrix, check_finite=False)
    X = sla.lu_solve(lu, Y, check_finite=False)
    return _assemble(plan, X, block_shape, out_shape)


def decode_least_squares(plan: EncodingPlan, available, out_shape=None, rcond_threshold=DEFAULT_RCOND) -> np.ndarray:
    """Least-squares recovery from ``available = [(worker_id, result), ...]`` with ≥ τ entries."""
    ids = _check_ids(plan, [w for w, _ in available], exact=False)
    M = effective_rows(plan, ids)
    if len(ids) < plan.tau or not full_column_rank(M, rcond_threshold):
        raise RankDeficient(f"{len(ids)} results do not determine all {plan.tau} unknowns")
    Y, block_shape = _stack_results(plan, [r for _, r in available])
    X, *_ = np.linalg.lstsq(M, Y, rcond=None)
    return _assemble(plan, X, block_shape, out_shape)
