import itertools

import numpy as np
import pytest

from conftest import rel_err
from lowweight.decoder import (build_decoding_system, decode, decode_least_squares, effective_row, effective_rows,
                               is_recoverable)
from lowweight.encoder import encode_tasks, plan_matmat, plan_matvec
from lowweight.errors import RankDeficient, ShapeMismatch, SingularSystem, WrongSubsetSize
from lowweight.simulator import run_task
from lowweight.sparsemat import generate_random_sparse


def _results(tasks):
    return {t.worker_id: run_task(t)[0] for t in tasks}


def test_effective_row_matvec(matvec12_plan):
    assert set(np.flatnonzero(effective_row(matvec12_plan, 0))) == {0, 1, 2}
    p0 = plan_matvec(4, 4, 0, seed=0)
    assert list(np.flatnonzero(effective_row(p0, 2))) == [2]


def test_effective_row_matmat(matmat27_plan):
    row = effective_row(matmat27_plan, 6)
    assert set(np.flatnonzero(row)) == {u * 4 + v for u in (0, 1) for v in (1, 2)}
    for i in range(matmat27_plan.n):
        np.testing.assert_array_equal(effective_row(matmat27_plan, i),
                                      np.kron(matmat27_plan.coeffs_A[i], matmat27_plan.coeffs_B[i]))
        assert np.count_nonzero(effective_row(matmat27_plan, i)) == 4


def test_build_system(matvec12_plan, matmat27_plan):
    sys_ = build_decoding_system(matmat27_plan, range(24))
    assert sys_.matrix.shape == (24, 24) and np.all(np.count_nonzero(sys_.matrix, axis=1) == 4)
    assert sys_.unknown_index_map[5] == (1, 1)
    sys2 = build_decoding_system(matvec12_plan, range(10))
    np.testing.assert_array_equal(sys2.matrix, matvec12_plan.coeffs_A[:10])
    with pytest.raises(WrongSubsetSize):
        build_decoding_system(matvec12_plan, range(9))
    with pytest.raises(WrongSubsetSize):
        build_decoding_system(matvec12_plan, [0] * 10)


def test_recoverable_all_subsets(matvec12_plan):
    assert all(is_recoverable(matvec12_plan, sub) for sub in itertools.combinations(range(12), 10))


def test_duplicate_row_is_singular(matvec12_plan):
    R = matvec12_plan.coeffs_A.copy()
    R[1] = R[0]
    bad = matvec12_plan.with_coefficients(R, matvec12_plan.coeffs_B)
    assert not is_recoverable(bad, range(10))
    assert is_recoverable(bad, [0] + list(range(2, 11)))


def test_decode_uncoded_matvec():
    A = generate_random_sparse(30, 10, 0.4, 2)
    x = np.random.default_rng(0).standard_normal((30, 1))
    p = plan_matvec(5, 5, 0, seed=1)
    res = _results(encode_tasks(A, x, p))
    y = decode(p, range(5), [res[i] for i in range(5)], out_shape=(10, None))
    np.testing.assert_allclose(y, A.to_dense().T @ x, rtol=1e-13, atol=1e-13)


def test_decode_matvec_drop_two():
    A = generate_random_sparse(60, 12, 0.3, 3)
    x = np.random.default_rng(1).standard_normal((60, 1))
    p = plan_matvec(6, 4, 2, seed=4)
    assert p.omega_A == 3
    res = _results(encode_tasks(A, x, p))
    ref = A.to_dense().T @ x
    for drop in itertools.combinations(range(6), 2):
        ids = [i for i in range(6) if i not in drop]
        assert rel_err(decode(p, ids, res, out_shape=(12, None)), ref) <= 1e-10


def test_decode_matmat_three_dropped(matmat27_plan, small_AB):
    A, B = small_AB
    res = _results(encode_tasks(A, B, matmat27_plan))
    ids = [i for i in range(27) if i not in (3, 11, 19)]
    C = decode(matmat27_plan, ids, res, out_shape=(12, 8))
    assert rel_err(C, A.to_dense().T @ B.to_dense()) <= 1e-8
    # permutation invariance
    perm = list(reversed(ids))
    np.testing.assert_allclose(decode(matmat27_plan, perm, res, out_shape=(12, 8)), C, atol=1e-12)


def test_decode_padding_and_transpose():
    A = generate_random_sparse(50, 13, 0.3, 5)
    B = generate_random_sparse(50, 17, 0.3, 6)
    p = plan_matmat(27, 4, 6, 3, seed=2)  # k_B > k_A: swapped internally
    assert p.transposed
    res = _results(encode_tasks(A, B, p))
    ids = list(range(3, 27))
    C = decode(p, ids, res, out_shape=(13, 17))
    assert C.shape == (13, 17)
    assert rel_err(C, A.to_dense().T @ B.to_dense()) <= 1e-8


def test_decode_errors(matvec12_plan):
    R = matvec12_plan.coeffs_A.copy()
    R[1] = R[0]
    bad = matvec12_plan.with_coefficients(R, matvec12_plan.coeffs_B)
    with pytest.raises(SingularSystem):
        decode(bad, range(10), [np.ones((2, 1))] * 10)
    with pytest.raises(ShapeMismatch):
        decode(matvec12_plan, range(10), [np.ones((2, 1))] * 9 + [np.ones((3, 1))])
    with pytest.raises(ShapeMismatch):
        decode(matvec12_plan, range(10), [np.ones((2, 1))] * 9)


def test_least_squares(matmat27_plan, small_AB):
    A, B = small_AB
    res = _results(encode_tasks(A, B, matmat27_plan))
    ref = A.to_dense().T @ B.to_dense()
    ids = list(range(24))
    exact = decode(matmat27_plan, ids, res, out_shape=(12, 8))
    ls = decode_least_squares(matmat27_plan, [(i, res[i]) for i in ids], out_shape=(12, 8))
    assert np.abs(exact - ls).max() <= 1e-12 * max(1.0, np.abs(ref).max())
    over = decode_least_squares(matmat27_plan, [(i, res[i]) for i in range(26)], out_shape=(12, 8))
    assert rel_err(over, ref) <= 1e-10
    with pytest.raises(RankDeficient):
        decode_least_squares(matmat27_plan, [(i, res[i]) for i in range(23)])


@pytest.mark.parametrize("seed", range(100))
def test_generic_recoverability_over_seeds(seed):
    p2 = plan_matvec(12, 10, 2, seed=seed)
    rows = effective_rows(p2)
    for drop in itertools.combinations(range(12), 2):
        keep = [i for i in range(12) if i not in drop]
        sv = np.linalg.svd(rows[keep], compute_uv=False)
        assert sv[-1] / sv[0] > 1e-12


def test_generic_recoverability_matmat_over_seeds():
    from lowweight.verifier import exhaustive_rank_audit
    for seed in range(100):
        assert exhaustive_rank_audit(plan_matmat(27, 6, 4, 3, 2, 2, seed=seed)).failures == 0
