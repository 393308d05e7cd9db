"""Heterogeneous workers as groups of unit-capacity virtual nodes.

A physical worker with capacity ``c`` owns ``c`` consecutive virtual nodes
and computes their tasks in slot order.  The first ``k_bar`` physical
workers (after a stable non-ascending sort by capacity) define the
recovery threshold ``k``; the rest define the straggler budget ``s``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .decoder import DEFAULT_RCOND, effective_rows, full_column_rank
from .encoder import MATVEC, EncodingPlan, encode_tasks
from .errors import InvalidBoundary, InvalidProfile, PlanMismatch


@dataclass(frozen=True)
class HeterogeneousProfile:
    physical_workers: tuple  # ((worker_id, capacity), ...)
    sorted_nonascending: bool = False

    @classmethod
    def from_pairs(cls, pairs) -> "HeterogeneousProfile":
        workers = tuple((int(w), int(c)) for w, c in pairs)
        if not workers:
            raise InvalidProfile("profile has no workers")
        if len({w for w, _ in workers}) != len(workers):
            raise InvalidProfile("duplicate worker id")
        if any(c < 1 for _, c in workers):
            raise InvalidProfile("capacities must be integers >= 1")
        if min(c for _, c in workers) != 1:
            raise InvalidProfile("the weakest worker type must have capacity 1")
        return cls(workers)

    @classmethod
    def from_capacities(cls, capacities) -> "HeterogeneousProfile":
        return cls.from_pairs(enumerate(capacities))

    def normalized(self) -> "HeterogeneousProfile":
        # sorted() is stable: equal capacities keep input order
        ordered = tuple(sorted(self.physical_workers, key=lambda wc: -wc[1]))
        return HeterogeneousProfile(ordered, True)

    @property
    def capacities(self) -> tuple:
        return tuple(c for _, c in self.physical_workers)

    @classmethod
    def load(cls, path) -> "HeterogeneousProfile":
        """Read ``{"workers": [{"id": 0, "capacity": 2}, ...]}``."""
        data = json.loads(Path(path).read_text())
        items = data["workers"] if isinstance(data, dict) else data
        return cls.from_pairs((w["id"], w["capacity"]) for w in items)

    def save(self, path) -> None:
        items = [{"id": w, "capacity": c} for w, c in self.physical_workers]
        Path(path).write_text(json.dumps({"workers": items}, indent=1) + "\n")


@dataclass(frozen=True)
class VirtualMapping:
    n_virtual: int
    virtual_to_physical: tuple  # virtual id -> (physical id, slot)
    k: int
    s: int
    kind: str
    profile: HeterogeneousProfile

    def slots_of(self, physical_id) -> list[int]:
        return [v for v, (p, _) in enumerate(self.virtual_to_physical) if p == physical_id]

    @property
    def physical_ids(self) -> list:
        return [w for w, _ in self.profile.physical_workers]


def virtualize(profile: HeterogeneousProfile, k_bar: int, kind=MATVEC) -> VirtualMapping:
    prof = profile if profile.sorted_nonascending else profile.normalized()
    caps = prof.capacities
    if not 1 <= k_bar <= len(caps) - 1:
        raise InvalidBoundary(f"k_bar must lie in [1, {len(caps) - 1}], got {k_bar}")
    v2p = tuple((w, slot) for w, c in prof.physical_workers for slot in range(c))
    k = sum(caps[:k_bar])
    n = sum(caps)
    return VirtualMapping(n, v2p, k, n - k, kind, prof)


def _check_pair(mapping: VirtualMapping, plan: EncodingPlan):
    if plan.n != mapping.n_virtual:
        raise PlanMismatch(f"plan has n={plan.n}, mapping has {mapping.n_virtual} virtual nodes")
    if plan.tau != mapping.k or plan.s != mapping.s:
        raise PlanMismatch(f"plan (tau={plan.tau}, s={plan.s}) does not match mapping (k={mapping.k}, s={mapping.s})")


def assign_hetero_tasks(A, B_or_x, mapping: VirtualMapping, plan: EncodingPlan) -> dict:
    """Return ``{physical_id: [task for slot 0, slot 1, ...]}``."""
    _check_pair(mapping, plan)
    tasks = encode_tasks(A, B_or_x, plan)
    out = {w: [] for w in mapping.physical_ids}
    for v, (w, _) in enumerate(mapping.virtual_to_physical):
        out[w].append(tasks[v])
    return out


def q_over_delta(mapping: VirtualMapping, plan: EncodingPlan):
    """(Q, Δ, Q/Δ): block-products needed in the worst case versus unknowns."""
    _check_pair(mapping, plan)
    delta = plan.tau
    q = mapping.n_virtual - mapping.s
    return q, delta, Fraction(q, delta)


def prefix_survivors(mapping: VirtualMapping, completion_counts) -> list[int]:
    """Virtual ids finished when physical worker ``i`` completed its first
    ``completion_counts[i]`` slots (order follows the normalized profile)."""
    counts = list(completion_counts)
    ids = mapping.physical_ids
    if len(counts) != len(ids):
        raise ValueError(f"need {len(ids)} completion counts, got {len(counts)}")
    caps = dict(mapping.profile.physical_workers)
    done = []
    for w, cnt in zip(ids, counts):
        if not 0 <= cnt <= caps[w]:
            raise ValueError(f"worker {w} cannot complete {cnt} of {caps[w]} slots")
        done.extend(mapping.slots_of(w)[:cnt])
    return sorted(done)


def verify_partial_recovery(mapping: VirtualMapping, plan: EncodingPlan, completion_counts,
                            rcond=DEFAULT_RCOND) -> bool:
    q, _, _ = q_over_delta(mapping, plan)
    done = prefix_survivors(mapping, completion_counts)
    if len(done) < q:
        return False
    return full_column_rank(effective_rows(plan, done), rcond)


def prefix_patterns(mapping: VirtualMapping, total: int):
    """All completion-count vectors with ``0 <= counts[i] <= c_i`` summing to ``total``."""
    caps = mapping.profile.capacities
    for counts in itertools.product(*(range(c + 1) for c in caps)):
        if sum(counts) == total:
            yield counts


def audit_prefixes(mapping: VirtualMapping, plan: EncodingPlan, rcond=DEFAULT_RCOND):
    """Check every order-respecting prefix pattern of size Q; returns (tested, failures)."""
    q, _, _ = q_over_delta(mapping, plan)
    failures = []
    tested = 0
    for counts in prefix_patterns(mapping, q):
        tested += 1
        if not verify_partial_recovery(mapping, plan, counts, rcond):
            failures.append(counts)
    return tested, failures
