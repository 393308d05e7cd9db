import numpy as np
import pytest

from lowweight.encoder import (MATMAT, Distribution, EncodingPlan, class_structure, default_weights, encode_tasks,
                               plan_dense_baseline, plan_matmat, plan_matvec, sample_coefficients)
from lowweight.errors import InconsistentParams, WeightConstraintViolated
from lowweight.sparsemat import generate_random_sparse, partition_block_columns, sparse_linear_combination


def test_matvec_cyclic_supports(matvec12_plan):
    p = matvec12_plan
    assert p.omega_A == 3 and p.tau == 10
    assert set(p.supports_A[0]) == {0, 1, 2}
    assert set(p.supports_A[9]) == {9, 0, 1}
    assert set(p.supports_A[11]) == {1, 2, 3}
    for i in range(p.n):
        assert set(np.flatnonzero(p.coeffs_A[i])) == set(p.supports_A[i])


def test_matvec_small_cases():
    p = plan_matvec(3, 2, 1, seed=0)
    assert p.omega_A == 2 and all(set(t) == {0, 1} for t in p.supports_A)
    p = plan_matvec(5, 5, 0, seed=0)
    assert p.omega_A == 1 and [t for t in p.supports_A] == [(i,) for i in range(5)]


def test_matvec_inconsistent():
    with pytest.raises(InconsistentParams):
        plan_matvec(11, 10, 2)


def test_matmat_cyclic_supports(matmat27_plan):
    p = matmat27_plan
    assert (p.supports_A[0], p.supports_B[0]) == ((0, 1), (0, 1))
    assert (p.supports_A[6], p.supports_B[6]) == ((0, 1), (1, 2))
    assert (p.supports_A[26], p.supports_B[26]) == ((2, 3), (0, 1))
    for i in range(p.n):
        assert np.count_nonzero(p.coeffs_A[i]) == 2 and np.count_nonzero(p.coeffs_B[i]) == 2
        assert set(p.supports_A[i]) == {i % 6, (i + 1) % 6}
        assert set(p.supports_B[i]) == {(i // 6) % 4, (i // 6 + 1) % 4}


def test_matmat_weight_violation():
    with pytest.raises(WeightConstraintViolated, match="omega_A\\*omega_B > s"):
        plan_matmat(28, 6, 4, 4, 2, 2)
    with pytest.raises(WeightConstraintViolated, match="omega_A >= omega_B"):
        plan_matmat(27, 6, 4, 3, 2, 3)
    with pytest.raises(WeightConstraintViolated, match="1 < omega_B < k_B"):
        plan_matmat(27, 6, 4, 3, 5, 4)


def test_matmat_inconsistent():
    with pytest.raises(InconsistentParams):
        plan_matmat(26, 6, 4, 3, 2, 2)
    with pytest.raises(InconsistentParams):
        plan_matmat(16, 3, 3, 7, 2, 2)  # s > max(k_A, k_B)


def test_matmat_n39():
    p = plan_matmat(39, 6, 6, 3, 2, 2, seed=1)
    assert p.tau == 36 and p.kind == MATMAT


def test_default_weights():
    assert default_weights(6, 4, 3) == (2, 2)
    assert default_weights(6, 4, 4) == (3, 2)
    p = plan_matmat(27, 6, 4, 3, seed=0)
    assert (p.omega_A, p.omega_B) == (2, 2)


def test_transposed_when_kB_larger():
    p = plan_matmat(27, 4, 6, 3, seed=0)
    assert p.transposed and (p.k_A, p.k_B) == (6, 4)


def test_sample_coefficients_deterministic(matmat27_plan):
    p = matmat27_plan
    a1, b1 = sample_coefficients(p.supports_A, p.supports_B, p.k_A, p.k_B, Distribution(), 3)
    a2, b2 = sample_coefficients(p.supports_A, p.supports_B, p.k_A, p.k_B, Distribution(), 3)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)
    ua, ub = sample_coefficients(p.supports_A, p.supports_B, p.k_A, p.k_B, Distribution("uniform", -1, 1), 3)
    nz = np.concatenate([ua[ua != 0], ub[ub != 0]])
    assert nz.size == 27 * 4 and np.all((nz > -1) & (nz < 1))


@pytest.mark.parametrize("text", ["normal(0,0.5)", "normal(0,1)", "normal(0,2)", "normal(1,1)",
                                  "uniform(0,1)", "uniform(-1,1)", "uniform(-5,5)", "rand(0,1)", "unifrand(-1,1)"])
def test_distributions_parse(text):
    d = Distribution.parse(text)
    assert Distribution.parse(str(d)) == d
    plan_matvec(12, 10, 2, d, seed=0)


def test_plan_json_round_trip(tmp_path, matmat27_plan):
    matmat27_plan.save(tmp_path / "plan.json")
    q = EncodingPlan.load(tmp_path / "plan.json")
    np.testing.assert_array_equal(q.coeffs_A, matmat27_plan.coeffs_A)
    np.testing.assert_array_equal(q.coeffs_B, matmat27_plan.coeffs_B)
    assert q.supports_B == matmat27_plan.supports_B and q.to_dict() == matmat27_plan.to_dict()


def test_class_structure(matmat27_plan):
    M = class_structure(matmat27_plan)
    assert M[0] == (0, 6, 12, 18, 24)
    assert [len(m) for m in M] == [5, 5, 5, 4, 4, 4]
    for m in M:
        assert len({matmat27_plan.supports_A[w] for w in m}) == 1
    p0 = plan_matmat(9, 3, 3, 0, seed=0)
    assert all(len(m) == 3 for m in class_structure(p0))


def test_encode_matvec_uncoded():
    A = generate_random_sparse(30, 10, 0.3, 0)
    p = plan_matvec(5, 5, 0, seed=2)
    blocks = partition_block_columns(A, 5)
    for t in encode_tasks(A, np.ones(30), p):
        np.testing.assert_allclose(t.encoded_A.to_dense(), p.coeffs_A[t.worker_id, t.worker_id] * blocks[t.worker_id].to_dense())


def test_encode_matvec_first_support(matvec12_plan):
    A = generate_random_sparse(40, 20, 0.5, 1)
    tasks = encode_tasks(A, np.ones(40), matvec12_plan)
    assert len(tasks) == 12
    dense = A.to_dense()
    expected = (dense[:, 0:2] != 0) | (dense[:, 2:4] != 0) | (dense[:, 4:6] != 0)
    np.testing.assert_array_equal(tasks[0].encoded_A.to_dense() != 0, expected)


def test_encode_matches_combination(matmat27_plan, small_AB):
    A, B = small_AB
    tasks = encode_tasks(A, B, matmat27_plan)
    a_blocks = partition_block_columns(A, 6)
    b_blocks = partition_block_columns(B, 4)
    for t in tasks:
        i = t.worker_id
        ea = sparse_linear_combination([a_blocks[q] for q in matmat27_plan.supports_A[i]],
                                       [matmat27_plan.coeffs_A[i, q] for q in matmat27_plan.supports_A[i]])
        eb = sparse_linear_combination([b_blocks[q] for q in matmat27_plan.supports_B[i]],
                                       [matmat27_plan.coeffs_B[i, q] for q in matmat27_plan.supports_B[i]])
        assert t.encoded_A == ea and t.encoded_B == eb
        assert t.encoded_A.cols == 2 and t.encoded_B.cols == 2


def test_encode_is_linear(matmat27_plan, small_AB):
    A, B = small_AB
    t1 = encode_tasks(A, B, matmat27_plan)
    t2 = encode_tasks(A.scaled(2.5), B, matmat27_plan)
    for a, b in zip(t1, t2):
        np.testing.assert_allclose(2.5 * a.encoded_A.to_dense(), b.encoded_A.to_dense(), rtol=1e-13, atol=1e-13)


def test_dense_baseline():
    p = plan_dense_baseline(MATMAT, 27, 6, 4, 3, seed=0)
    assert (p.omega_A, p.omega_B) == (6, 4)
    assert np.all(p.coeffs_A != 0) and np.all(p.coeffs_B != 0)
