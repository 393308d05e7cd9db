import math

import numpy as np
import pytest

from lowweight.encoder import Distribution, plan_matmat, plan_matvec
from lowweight.errors import BudgetExceeded
from lowweight.stability import (KAPPA_CSV_FIELDS, append_kappa_csv, class_based_complexity_ratio,
                                 class_based_min_zeta, coefficient_search, competitor_search_cost, condition_number,
                                 kappa_worst, kappa_worst_sampled)


def test_condition_number():
    assert condition_number(np.eye(4)) == pytest.approx(1.0)
    assert condition_number(np.diag([10.0, 0.1])) == pytest.approx(100.0)
    assert math.isinf(condition_number(np.array([[1.0, 2.0], [2.0, 4.0]])))
    assert math.isinf(condition_number(np.zeros((3, 3))))


def test_kappa_worst_s0():
    p = plan_matvec(6, 6, 0, seed=1)
    rep = kappa_worst(p)
    assert rep.subsets_evaluated == 1 and rep.argmax_straggler_set == ()
    assert rep.kappa_worst == pytest.approx(condition_number(p.coeffs_A))


def test_kappa_worst_all_pairs(matvec12_plan):
    rep = kappa_worst(matvec12_plan, keep_all=True)
    assert rep.subsets_evaluated == 66 and len(rep.per_subset_kappas) == 66
    assert all(np.isfinite(rep.per_subset_kappas)) and rep.kappa_worst >= 1
    assert rep.kappa_worst == max(rep.per_subset_kappas)
    keep = [i for i in range(12) if i not in rep.argmax_straggler_set]
    assert rep.kappa_worst == pytest.approx(np.linalg.cond(matvec12_plan.coeffs_A[keep]))


def test_kappa_threads_match(matmat27_plan):
    assert kappa_worst(matmat27_plan, threads=1).kappa_worst == kappa_worst(matmat27_plan, threads=4).kappa_worst


def test_kappa_scale_invariant(matvec12_plan):
    scaled = matvec12_plan.with_coefficients(3.7 * matvec12_plan.coeffs_A, matvec12_plan.coeffs_B)
    assert kappa_worst(scaled).kappa_worst == pytest.approx(kappa_worst(matvec12_plan).kappa_worst, rel=1e-9)


def test_budget_exceeded():
    p = plan_matvec(30, 28, 2, seed=0)
    with pytest.raises(BudgetExceeded):
        kappa_worst(p, budget=100)
    with pytest.raises(BudgetExceeded):
        coefficient_search(p, 2, budget=100)


def test_sampled_is_lower_bound(matmat27_plan):
    full = kappa_worst(matmat27_plan)
    est = kappa_worst_sampled(matmat27_plan, 200, seed=0)
    assert est.estimate and est.kappa_worst <= full.kappa_worst


def test_search_trials_one_equals_single_draw(matvec12_plan):
    best, rep = coefficient_search(matvec12_plan, 1, base_seed=7)
    assert rep.kappa_worst == kappa_worst(plan_matvec(12, 10, 2, seed=7)).kappa_worst
    assert best.seed == 7


def test_search_min_property_and_reproducible():
    skel = plan_matvec(30, 28, 2, seed=0)
    best, rep = coefficient_search(skel, 20, base_seed=0)
    assert rep.subsets_evaluated == 20 * math.comb(30, 2) == 8700
    assert rep.seeds == list(range(20))
    assert all(rep.kappa_worst <= k for k in rep.trial_kappas)
    assert best.coeffs_A.shape == (30, 28)
    best2, rep2 = coefficient_search(skel, 20, base_seed=0)
    assert rep2.kappa_worst == rep.kappa_worst
    np.testing.assert_array_equal(best2.coeffs_A, best.coeffs_A)


def test_search_matmat_distribution(matmat27_plan):
    best, rep = coefficient_search(matmat27_plan, 3, Distribution.parse("uniform(-1,1)"), base_seed=5)
    assert best.distribution.kind == "uniform" and best.seed in (5, 6, 7)
    assert np.all(np.abs(best.coeffs_A) < 1)


def test_competitor_cost():
    c = competitor_search_cost(30, 28)
    assert c.delta_A == 420
    assert competitor_search_cost(30, 27).delta_A == 270
    # coprime: delta = n * k
    c = competitor_search_cost(31, 29)
    assert c.delta_A == 31 * 29 and c.ratio == pytest.approx(31**3)
    with pytest.raises(ValueError):
        competitor_search_cost(30, 28, s=3)


def test_complexity_ratio():
    r = class_based_complexity_ratio(8, 6, 3, 2, 2, zeta=4)
    assert (r.load_num, r.load_den) == (72, 51)
    assert str(r).startswith("72/51")
    assert float(r.value) == pytest.approx(72 / 51)
    assert class_based_min_zeta(6, 3) == 4


def test_kappa_csv(tmp_path, matvec12_plan):
    path = tmp_path / "k.csv"
    rep = kappa_worst(matvec12_plan)
    append_kappa_csv(path, matvec12_plan, rep, 0)
    append_kappa_csv(path, matvec12_plan, rep, 0)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == KAPPA_CSV_FIELDS and len(lines) == 3 and lines[1] == lines[2]
    assert "wall_time" not in rep.to_dict() and "wall_time" in rep.to_dict(include_timing=True)
