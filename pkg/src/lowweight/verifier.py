"""Combinatorial decodability oracles.

Two independent witnesses that a survivor set can decode: a perfect
matching in the equations/unknowns support graph (Hall's condition) and a
numeric rank test.  Also the counting bounds on participating unknowns
used in the matrix-matrix resilience argument, checked against exact
neighbourhood sizes.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .decoder import DEFAULT_RCOND, effective_rows, full_column_rank
from .encoder import MATMAT, EncodingPlan, class_structure
from .errors import BudgetExceeded, DeltaOutOfRange, SideSizeMismatch, SubsetTooLarge, TooManyClasses

DEFAULT_AUDIT_BUDGET = 10**6


@dataclass(frozen=True)
class BipartiteGraph:
    """Left vertices are worker equations, right vertices unknowns ``u*k_B + v``."""

    n_left: int
    n_right: int
    adj_ptr: np.ndarray
    adj_idx: np.ndarray
    left_labels: tuple = ()

    def degree(self, i) -> int:
        return int(self.adj_ptr[i + 1] - self.adj_ptr[i])

    def neighbours(self, i):
        return self.adj_idx[self.adj_ptr[i]:self.adj_ptr[i + 1]]

    @classmethod
    def from_adjacency(cls, adjacency, n_right, labels=()):
        ptr = np.zeros(len(adjacency) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(a) for a in adjacency])
        idx = np.array([v for a in adjacency for v in a], dtype=np.int64)
        return cls(len(adjacency), n_right, ptr, idx, tuple(labels))


def worker_unknowns(plan: EncodingPlan, worker_id: int) -> list[int]:
    return [u * plan.k_B + v for u in plan.supports_A[worker_id] for v in plan.supports_B[worker_id]]


def support_bipartite_graph(plan: EncodingPlan, worker_subset) -> BipartiteGraph:
    ids = [int(w) for w in worker_subset]
    return BipartiteGraph.from_adjacency([worker_unknowns(plan, w) for w in ids], plan.tau, ids)


def maximum_matching_size(graph: BipartiteGraph) -> int:
    return kernels.max_matching(graph.adj_ptr, graph.adj_idx, graph.n_right)[0]


def has_perfect_matching(graph: BipartiteGraph) -> bool:
    if graph.n_left != graph.n_right:
        raise SideSizeMismatch(f"{graph.n_left} equations vs {graph.n_right} unknowns")
    return maximum_matching_size(graph) == graph.n_left


# ---------------------------------------------------------------------------
# counting bounds
# ---------------------------------------------------------------------------

def _require_matmat(plan):
    if plan.kind != MATMAT:
        raise ValueError("bound only defined for matrix-matrix plans")


def min_participating_unknowns_union(plan: EncodingPlan, class_subset):
    """Exact size of the union of the A-supports of the chosen classes and the
    lower bound ``omega_A + q - 1``.  Returns ``(exact, bound)``."""
    _require_matmat(plan)
    classes = sorted(set(int(c) for c in class_subset))
    q = len(classes)
    if q == 0:
        raise TooManyClasses("select at least one class")
    if q > plan.k_A - plan.omega_A + 1:
        raise TooManyClasses(f"at most k_A - omega_A + 1 = {plan.k_A - plan.omega_A + 1} classes, got {q}")
    exact = len(set().union(*(plan.supports_A[c] for c in classes)))
    bound = plan.omega_A + q - 1
    assert exact >= bound, (classes, exact, bound)
    return exact, bound


def _rho(omega_A, omega_B, k_B, class_size, delta, first):
    if delta == 0:
        return 0
    if delta == 1:
        distinct_b = omega_B
    elif class_size == k_B:
        distinct_b = min(omega_B + delta - 1, k_B)
    else:
        distinct_b = min(omega_B + delta - 2, k_B)
    return omega_A * distinct_b if first else distinct_b


def rho_bound(plan: EncodingPlan, class_id: int, delta: int, position="first") -> int:
    """Minimum number of (new) participating unknowns contributed by ``delta``
    workers of one class.  ``position='first'`` counts all ω_A A-blocks of the
    class; ``'later'`` counts only the unknowns paired with one new A-block."""
    _require_matmat(plan)
    if position not in ("first", "later"):
        raise ValueError("position must be 'first' or 'later'")
    size = len(class_structure(plan)[class_id])
    if not 1 <= delta <= size:
        raise DeltaOutOfRange(f"delta must lie in [1, {size}], got {delta}")
    return _rho(plan.omega_A, plan.omega_B, plan.k_B, size, delta, position == "first")


def exact_neighbourhood(plan: EncodingPlan, worker_subset) -> int:
    return len({u for w in worker_subset for u in worker_unknowns(plan, w)})


def rearranged_hall_bound(plan: EncodingPlan, worker_subset):
    """Lower bound on the unknowns touched by ``worker_subset`` from the
    class rearrangement: sort classes by chosen count (descending), smaller
    classes first on ties, then add ρ for the first ``k_A - ω_A + 1`` classes.
    Returns ``(bound, exact)``."""
    _require_matmat(plan)
    subset = [int(w) for w in worker_subset]
    m = len(subset)
    if m > plan.tau:
        raise SubsetTooLarge(f"subset of {m} workers exceeds tau = {plan.tau}")
    sizes = [len(c) for c in class_structure(plan)]
    deltas = [0] * plan.k_A
    for w in subset:
        deltas[w % plan.k_A] += 1
    order = sorted(range(plan.k_A), key=lambda c: (-deltas[c], sizes[c]))
    bound = sum(_rho(plan.omega_A, plan.omega_B, plan.k_B, sizes[c], deltas[c], pos == 0)
                for pos, c in enumerate(order[: plan.k_A - plan.omega_A + 1]))
    return bound, exact_neighbourhood(plan, subset)


@dataclass
class HallAudit:
    subsets_tested: int = 0
    violations: list = field(default_factory=list)  # (subset, m, bound, exact)
    exhaustive_sizes: list = field(default_factory=list)
    sampled_sizes: list = field(default_factory=list)


def lemma1_audit(plan: EncodingPlan, exhaustive_limit=10**5, samples=10**4, seed=0, sizes=None) -> HallAudit:
    """Check ``exact >= bound >= m`` for subsets of every size m in 1..τ:
    exhaustively when C(n, m) <= ``exhaustive_limit``, else on ``samples``
    random subsets of that size."""
    rng = np.random.default_rng(seed)
    audit = HallAudit()
    for m in sizes or range(1, plan.tau + 1):
        if math.comb(plan.n, m) <= exhaustive_limit:
            subsets = itertools.combinations(range(plan.n), m)
            audit.exhaustive_sizes.append(m)
        else:
            subsets = (rng.choice(plan.n, m, replace=False).tolist() for _ in range(samples))
            audit.sampled_sizes.append(m)
        for sub in subsets:
            bound, exact = rearranged_hall_bound(plan, sub)
            audit.subsets_tested += 1
            if not exact >= bound >= m:
                audit.violations.append((tuple(sorted(sub)), m, bound, exact))
    return audit


# ---------------------------------------------------------------------------
# survivor-set audits
# ---------------------------------------------------------------------------

@dataclass
class AuditRow:
    survivors: tuple
    matched: bool | None
    rcond: float | None
    passed: bool


@dataclass
class AuditReport:
    mode: str
    subsets_tested: int
    failures: int
    rows: list

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subset", "matched", "rcond", "pass"])
            for r in self.rows:
                w.writerow([" ".join(map(str, r.survivors)),
                            "" if r.matched is None else int(r.matched),
                            "" if r.rcond is None else f"{r.rcond:.6e}",
                            int(r.passed)])


def _survivor_sets(plan, budget):
    count = math.comb(plan.n, plan.tau)
    if count > budget:
        raise BudgetExceeded(f"C({plan.n}, {plan.tau}) = {count} survivor sets exceed the budget {budget}")
    return itertools.combinations(range(plan.n), plan.tau)


def _rconds(plan, sets):
    if not sets:
        return np.empty(0)
    rows_all = effective_rows(plan)
    mats = rows_all[np.array(sets, dtype=np.int64)]
    sv = np.linalg.svd(mats, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sv[:, 0] > 0, sv[:, -1] / sv[:, 0], 0.0)


def exhaustive_rank_audit(plan: EncodingPlan, rcond=DEFAULT_RCOND, budget=DEFAULT_AUDIT_BUDGET) -> AuditReport:
    sets = list(_survivor_sets(plan, budget))
    rows = []
    for i in range(0, len(sets), 1024):
        chunk = sets[i:i + 1024]
        for sub, rc in zip(chunk, _rconds(plan, chunk)):
            rows.append(AuditRow(sub, None, float(rc), bool(rc > rcond)))
    return AuditReport("rank", len(rows), sum(not r.passed for r in rows), rows)


def exhaustive_matching_audit(plan: EncodingPlan, budget=DEFAULT_AUDIT_BUDGET) -> AuditReport:
    rows = []
    for sub in _survivor_sets(plan, budget):
        ok = has_perfect_matching(support_bipartite_graph(plan, sub))
        rows.append(AuditRow(sub, ok, None, ok))
    return AuditReport("matching", len(rows), sum(not r.passed for r in rows), rows)


@dataclass
class AgreementReport:
    trials: int
    agreements: int
    # matching present but numerically singular: violates the generic-rank argument
    matching_without_rank: list
    # full rank without a perfect matching: impossible unless supports are wrong
    rank_without_matching: list
    rows: list

    @property
    def rate(self) -> float:
        return self.agreements / self.trials if self.trials else 1.0


def matching_rank_agreement(plan: EncodingPlan, trials: int, seed=0, rcond=DEFAULT_RCOND) -> AgreementReport:
    """Compare the matching oracle and the rank oracle on random τ-subsets."""
    rng = np.random.default_rng(seed)
    sets = [tuple(sorted(rng.choice(plan.n, plan.tau, replace=False).tolist())) for _ in range(trials)]
    rconds = _rconds(plan, sets)
    agree, m_wo_r, r_wo_m, rows = 0, [], [], []
    for sub, rc in zip(sets, rconds):
        matched = has_perfect_matching(support_bipartite_graph(plan, sub))
        ranked = bool(rc > rcond)
        if matched == ranked:
            agree += 1
        elif matched:
            m_wo_r.append(sub)
        else:
            r_wo_m.append(sub)
        rows.append(AuditRow(sub, matched, float(rc), matched == ranked))
    return AgreementReport(trials, agree, m_wo_r, r_wo_m, rows)
