"""Worst-case condition number over straggler patterns and best-of-T
coefficient search, plus analytic cost models used for comparisons."""
from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .decoder import effective_rows
from .encoder import STANDARD_NORMAL, EncodingPlan, sample_coefficients
from .errors import BudgetExceeded

DEFAULT_BUDGET = 10**6
_CHUNK = 512


def condition_number(M) -> float:
    """2-norm condition number; ``inf`` when the matrix is numerically singular."""
    M = np.asarray(M, dtype=np.float64)
    sv = np.linalg.svd(M, compute_uv=False)
    return _kappa_from_sv(sv[None, :], M.shape[0])[0]


def _kappa_from_sv(sv, size):
    smax = sv[:, 0]
    smin = sv[:, -1]
    tol = smax * size * np.finfo(float).eps
    with np.errstate(divide="ignore", invalid="ignore"):
        k = smax / smin
    k[(smin <= tol) | (smax == 0)] = np.inf
    return k


@dataclass
class KappaReport:
    kappa_worst: float
    argmax_straggler_set: tuple
    subsets_evaluated: int
    wall_time: float = 0.0
    per_subset_kappas: list | None = None
    estimate: bool = False
    trials: int = 1
    seeds: list = field(default_factory=list)
    trial_kappas: list = field(default_factory=list)

    def to_dict(self, include_timing=False) -> dict:
        d = {
            "kappa_worst": _json_float(self.kappa_worst),
            "argmax_straggler_set": list(self.argmax_straggler_set),
            "subsets_evaluated": self.subsets_evaluated,
            "estimate": self.estimate,
            "trials": self.trials,
            "seeds": list(self.seeds),
            "trial_kappas": [_json_float(k) for k in self.trial_kappas],
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def _json_float(x):
    return "inf" if math.isinf(x) else float(x)


def _straggler_sets(n, s):
    return itertools.combinations(range(n), s)


def _evaluate_chunk(rows_all, n, sets):
    masks = np.ones((len(sets), n), dtype=bool)
    for j, st in enumerate(sets):
        masks[j, list(st)] = False
    idx = np.nonzero(masks)[1].reshape(len(sets), -1)
    mats = rows_all[idx]
    sv = np.linalg.svd(mats, compute_uv=False)
    return _kappa_from_sv(sv, mats.shape[-1])


def _kappas_over(plan, sets, threads=1):
    rows_all = effective_rows(plan)
    chunks = [sets[i:i + _CHUNK] for i in range(0, len(sets), _CHUNK)]
    if not chunks:
        return np.empty(0)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _evaluate_chunk(rows_all, plan.n, c), chunks))
    else:
        parts = [_evaluate_chunk(rows_all, plan.n, c) for c in chunks]
    return np.concatenate(parts)


def kappa_worst(plan: EncodingPlan, budget=DEFAULT_BUDGET, keep_all=False, threads=1) -> KappaReport:
    """Maximum decoding-matrix condition number over every choice of s stragglers."""
    count = math.comb(plan.n, plan.s)
    if count > budget:
        raise BudgetExceeded(f"C({plan.n}, {plan.s}) = {count} straggler sets exceed the budget {budget}")
    t0 = time.perf_counter()
    sets = list(_straggler_sets(plan.n, plan.s))
    kappas = _kappas_over(plan, sets, threads)
    j = int(np.argmax(kappas))
    return KappaReport(float(kappas[j]), tuple(sets[j]), len(sets), time.perf_counter() - t0,
                       kappas.tolist() if keep_all else None, seeds=[plan.seed], trial_kappas=[float(kappas[j])])


def kappa_worst_sampled(plan: EncodingPlan, samples: int, seed=None, threads=1) -> KappaReport:
    """Monte Carlo *estimate* of κ_worst from ``samples`` random straggler sets.

    A lower bound on the true value; the report is flagged ``estimate=True``.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    sets = [tuple(sorted(rng.choice(plan.n, plan.s, replace=False).tolist())) for _ in range(samples)]
    kappas = _kappas_over(plan, sets, threads)
    j = int(np.argmax(kappas))
    return KappaReport(float(kappas[j]), sets[j], len(sets), time.perf_counter() - t0, estimate=True,
                       seeds=[plan.seed], trial_kappas=[float(kappas[j])])


def coefficient_search(plan: EncodingPlan, trials: int, distribution=None, base_seed=0,
                       budget=DEFAULT_BUDGET, threads=1):
    """Draw ``trials`` coefficient sets (seed ``base_seed + t``) and keep the one
    with the smallest κ_worst.  Returns ``(best_plan, report)``; the report's
    ``subsets_evaluated`` counts all trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = distribution or plan.distribution or STANDARD_NORMAL
    count = math.comb(plan.n, plan.s)
    if count > budget:
        raise BudgetExceeded(f"C({plan.n}, {plan.s}) = {count} straggler sets exceed the budget {budget}")
    t0 = time.perf_counter()
    best = None
    seeds, kappas = [], []
    for t in range(trials):
        seed = base_seed + t
        R_A, R_B = sample_coefficients(plan.supports_A, plan.supports_B, plan.k_A, plan.k_B, dist, seed)
        cand = plan.with_coefficients(R_A, R_B, seed=seed, distribution=dist)
        rep = kappa_worst(cand, budget=budget, threads=threads)
        seeds.append(seed)
        kappas.append(rep.kappa_worst)
        if best is None or rep.kappa_worst < best[1].kappa_worst:
            best = (cand, rep)
    plan_best, rep = best
    report = KappaReport(rep.kappa_worst, rep.argmax_straggler_set, trials * count, time.perf_counter() - t0,
                         trials=trials, seeds=seeds, trial_kappas=kappas)
    return plan_best, report


# ---------------------------------------------------------------------------
# analytic comparisons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchCost:
    delta_A: int
    proposed_cost: int
    lcm_scheme_cost: int

    @property
    def ratio(self) -> float:
        return self.lcm_scheme_cost / self.proposed_cost


def competitor_search_cost(n, k_A, k_B=1, s=None) -> SearchCost:
    """Per-trial cost models: C(n, τ)·τ³ for the cyclic code versus
    C(n, τ)·(Δ_A k_B)³ for codes that split A into Δ_A = lcm(n, k_A) blocks."""
    tau = k_A * k_B
    if s is not None and n != tau + s:
        raise ValueError(f"n must equal k_A*k_B + s = {tau + s}")
    subsets = math.comb(n, tau)
    delta_A = math.lcm(n, k_A)
    return SearchCost(delta_A, subsets * tau**3, subsets * (delta_A * k_B) ** 3)


def class_based_min_zeta(k_B, s) -> int:
    """Smallest B-weight ζ ≥ 1 + k_B − ⌈k_B / c⌉ with c = 1 + ⌈s / k_B⌉."""
    c = 1 + math.ceil(s / k_B)
    return 1 + k_B - math.ceil(k_B / c)


@dataclass(frozen=True)
class ComplexityRatio:
    """Per-worker cost of the class-based code over the cyclic code, kept as
    the product of an unreduced load factor and a weight factor."""

    load_num: int
    load_den: int
    weight_num: int
    weight_den: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.load_num * self.weight_num, self.load_den * self.weight_den)

    def __str__(self):
        return (f"{self.load_num}/{self.load_den} x {self.weight_num}/{self.weight_den}"
                f" = {float(self.value):.4f}")


def class_based_complexity_ratio(k_A, k_B, s, omega_A, omega_B, zeta=None) -> ComplexityRatio:
    """``k_A (k_B + s) / n  x  ζ / (ω_A ω_B)`` with ``n = k_A k_B + s``."""
    zeta = class_based_min_zeta(k_B, s) if zeta is None else zeta
    n = k_A * k_B + s
    return ComplexityRatio(k_A * (k_B + s), n, zeta, omega_A * omega_B)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

KAPPA_CSV_FIELDS = ["method", "kind", "n", "k_A", "k_B", "s", "omega_A", "omega_B", "distribution",
                    "trials", "base_seed", "kappa_worst", "argmax_straggler_set", "subsets_evaluated"]


def append_kappa_csv(path, plan: EncodingPlan, report: KappaReport, base_seed=None):
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(KAPPA_CSV_FIELDS)
        w.writerow([plan.label, plan.kind, plan.n, plan.k_A, plan.k_B, plan.s, plan.omega_A, plan.omega_B,
                    str(plan.distribution), report.trials, base_seed, f"{report.kappa_worst:.6e}",
                    " ".join(map(str, report.argmax_straggler_set)), report.subsets_evaluated])
