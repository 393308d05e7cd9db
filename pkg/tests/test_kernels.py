import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowweight import kernels
from lowweight.sparsemat import generate_random_sparse


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0.05, 1.0))
def test_lincomb_backends_agree(seed, nblocks, eta):
    blocks = [generate_random_sparse(15, 9, eta, seed + i) for i in range(nblocks)]
    coeffs = np.random.default_rng(seed).standard_normal(nblocks)
    p1, i1, v1 = kernels.csr_lincomb_nb(blocks, coeffs)
    p2, i2, v2 = kernels.csr_lincomb_np(blocks, coeffs)
    np.testing.assert_array_equal(p1, p2)
    np.testing.assert_array_equal(i1, i2)
    np.testing.assert_allclose(v1, v2, rtol=1e-14, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 1.0))
def test_products_backends_agree(seed, eta):
    A = generate_random_sparse(30, 7, eta, seed)
    B = generate_random_sparse(30, 5, eta, seed + 1)
    x = np.random.default_rng(seed).standard_normal(30)
    np.testing.assert_allclose(kernels.spmv_t_nb(A, x), kernels.spmv_t_np(A, x), rtol=1e-12, atol=1e-12)
    C1, m1 = kernels.spgemm_t_nb(A, B)
    C2, m2 = kernels.spgemm_t_np(A, B)
    np.testing.assert_allclose(C1, C2, rtol=1e-12, atol=1e-12)
    assert m1 == m2


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 10**6))
def test_matching_backends_agree(n_left, n_right, seed):
    rng = np.random.default_rng(seed)
    adj = [np.unique(rng.integers(0, n_right, rng.integers(0, 4))) for _ in range(n_left)]
    ptr = np.concatenate(([0], np.cumsum([len(a) for a in adj]))).astype(np.int64)
    idx = np.concatenate(adj).astype(np.int64) if ptr[-1] else np.zeros(0, dtype=np.int64)
    s1, m1 = kernels.max_matching_nb(ptr, idx, n_right)
    s2, m2 = kernels.max_matching_np(ptr, idx, n_right)
    assert s1 == s2
    for match in (m1, m2):
        used = [int(j) for j in match if j >= 0]
        assert len(used) == len(set(used)) == s1
        for i, j in enumerate(match):
            if j >= 0:
                assert j in adj[i]


def test_fallback_selected_by_env():
    code = ("from lowweight import kernels, encoder, verifier;"
            "p = encoder.plan_matmat(27, 6, 4, 3, 2, 2, seed=0);"
            "print(kernels.BACKEND, verifier.exhaustive_matching_audit(p).failures)")
    env = dict(os.environ, LOWWEIGHT_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "0"]


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
def test_default_backend_is_numba():
    assert kernels.BACKEND == "numba"
