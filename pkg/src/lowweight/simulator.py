"""Event-clock simulation of coded distributed execution.

Worker compute cost is the multiply-accumulate count of its sparse product;
simulated durations come from a :class:`DelayModel`.  Results are collected
in finish-time order until the decoding system is solvable, then decoded and
optionally compared with a dense oracle.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .decoder import DEFAULT_RCOND, decode, decode_least_squares, effective_rows, full_column_rank
from .encoder import MATMAT, MATVEC, Distribution, EncodingPlan, encode_tasks, plan_dense_baseline, plan_matmat, plan_matvec
from .errors import NotEnoughSurvivors
from .hetero import VirtualMapping
from .sparsemat import spgemm_transpose, spmv_transpose
from .stability import class_based_complexity_ratio, kappa_worst


@dataclass(frozen=True)
class DelayModel:
    """Per-slot duration ``(shift + base_rate * macs) / capacity`` plus, for
    ``shifted_exponential``, an exponential term with mean ``exp_mean``
    (default: 10% of the deterministic part)."""

    kind: str = "shifted_exponential"
    base_rate: float = 1e-6
    shift: float = 0.0
    exp_mean: float | None = None
    seed: int | None = 0

    def __post_init__(self):
        if self.kind not in ("deterministic", "shifted_exponential"):
            raise ValueError(f"unknown delay model {self.kind!r}")
        if self.base_rate < 0 or self.shift < 0 or (self.exp_mean is not None and self.exp_mean < 0):
            raise ValueError("delay parameters must be non-negative")

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("kind", "base_rate", "shift", "exp_mean", "seed") if k in d})


@dataclass(frozen=True)
class StragglerSpec:
    """``failure``: targets never return.  ``slowdown_factor``: targets run
    ``factor`` times slower.  ``explicit_set``: targets return only after
    every other worker has finished."""

    mode: str
    targets: tuple = ()
    factor: float = 1.0

    def __post_init__(self):
        if self.mode not in ("explicit_set", "slowdown_factor", "failure"):
            raise ValueError(f"unknown straggler mode {self.mode!r}")
        if self.factor < 1:
            raise ValueError("slowdown factor must be >= 1")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    @classmethod
    def from_dict(cls, d):
        return cls(d["mode"], tuple(d.get("targets", ())), float(d.get("factor", 1.0)))


@dataclass
class WorkerRecord:
    worker_id: int
    compute_flops: int
    nnz_received: int
    finish_time: float
    completed_slots: int
    slots: int = 1


@dataclass
class SimulationReport:
    per_worker: list
    survivor_set: tuple
    decode_ok: bool
    relative_error: float | None
    total_time: float
    communication_nnz_total: int
    wall_time: float | None = None
    result: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            "survivor_set": list(self.survivor_set),
            "decode_ok": self.decode_ok,
            "relative_error": self.relative_error,
            "total_time": _num(self.total_time),
            "communication_nnz_total": self.communication_nnz_total,
            "per_worker": [{k: _num(v) for k, v in asdict(w).items()} for w in self.per_worker],
        }
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["worker", "worker comp flops", "communication nnz", "finish time", "completed slots", "slots"])
            for r in self.per_worker:
                w.writerow([r.worker_id, r.compute_flops, r.nnz_received, _fmt(r.finish_time),
                            r.completed_slots, r.slots])


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _fmt(v):
    return "inf" if math.isinf(v) else f"{v:.9g}"


# ---------------------------------------------------------------------------
# per-task cost and result
# ---------------------------------------------------------------------------

def task_flops(task) -> int:
    if task.encoded_B is None:
        return task.encoded_A.nnz
    a = np.diff(task.encoded_A.row_offsets)
    b = np.diff(task.encoded_B.row_offsets)
    return int(np.dot(a, b))


def run_task(task):
    """Execute one worker task; returns ``(result block, macs)``."""
    if task.encoded_B is None:
        return spmv_transpose(task.encoded_A, task.vector_x), task.encoded_A.nnz
    return spgemm_transpose(task.encoded_A, task.encoded_B)


def communication_cost(tasks):
    """Stored nonzeros shipped to each worker and in total.

    ``tasks`` is a list of :class:`WorkerTask` or a ``{physical_id: [tasks]}`` dict."""
    if isinstance(tasks, dict):
        per = {w: sum(t.nnz for t in ts) for w, ts in tasks.items()}
    else:
        per = {t.worker_id: t.nnz for t in tasks}
    return per, int(sum(per.values()))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _as_specs(stragglers):
    if stragglers is None:
        return []
    if isinstance(stragglers, StragglerSpec):
        return [stragglers]
    return list(stragglers)


def simulate(tasks, plan: EncodingPlan, delay_model: DelayModel | None = None, stragglers=None,
             oracle=None, mapping: VirtualMapping | None = None, out_shape=None,
             rcond=DEFAULT_RCOND, measure_wall=False) -> SimulationReport:
    """Simulate one run.

    Homogeneous runs pass ``tasks`` as the encoder's list.  Heterogeneous runs
    pass ``mapping`` and ``tasks`` as ``{physical_id: [slot tasks]}``; a
    physical worker of capacity c runs its slots back to back at c times the
    unit speed, so slot k never finishes before slot k-1.
    """
    delay_model = delay_model or DelayModel()
    specs = _as_specs(stragglers)
    wall0 = time.perf_counter()

    if mapping is not None:
        groups = [(w, list(tasks[w]), c) for w, c in mapping.profile.physical_workers]
        slot_vid = {}
        for v, (w, slot) in enumerate(mapping.virtual_to_physical):
            slot_vid[(w, slot)] = v
    else:
        groups = [(t.worker_id, [t], 1) for t in tasks]
        slot_vid = {(t.worker_id, 0): t.worker_id for t in tasks}
    if out_shape is None:
        first = groups[0][1][0]
        out_shape = first.source_cols

    failed, slowed, delayed = set(), {}, set()
    for sp_ in specs:
        if sp_.mode == "failure":
            failed.update(sp_.targets)
        elif sp_.mode == "slowdown_factor":
            for t in sp_.targets:
                slowed[t] = slowed.get(t, 1.0) * sp_.factor
        else:
            delayed.update(sp_.targets)

    rng = np.random.default_rng(delay_model.seed)
    events = []  # (time, virtual id, worker, slot)
    records = {}
    horizon = 0.0
    slot_times = {}
    for w, ts, cap in groups:
        clock = 0.0
        times = []
        flops = 0
        for slot, task in enumerate(ts):
            macs = task_flops(task)
            flops += macs
            det = (delay_model.shift + delay_model.base_rate * macs) / cap
            dur = det
            if delay_model.kind == "shifted_exponential":
                mean = 0.1 * det if delay_model.exp_mean is None else delay_model.exp_mean / cap
                dur += rng.exponential(mean) if mean > 0 else 0.0
            clock += dur * slowed.get(w, 1.0)
            times.append(clock)
        slot_times[w] = times
        records[w] = WorkerRecord(w, flops, sum(t.nnz for t in ts), math.inf, 0, len(ts))
        if w not in failed and w not in delayed and times:
            horizon = max(horizon, times[-1])
    for w, ts, _ in groups:
        if w in failed:
            continue
        for slot, t in enumerate(slot_times[w]):
            if w in delayed:
                t += horizon
            events.append((t, slot_vid[(w, slot)], w, slot))
    events.sort()

    if len(events) < plan.tau:
        raise NotEnoughSurvivors(f"only {len(events)} results can arrive, {plan.tau} are needed")

    # collect in finish order until the system is solvable
    rows_all = effective_rows(plan)
    cut = plan.tau
    while cut <= len(events) and not full_column_rank(rows_all[[e[1] for e in events[:cut]]], rcond):
        cut += 1
    decode_ok = cut <= len(events)
    used = events[: min(cut, len(events))]

    task_by_vid = {}
    for w, ts, _ in groups:
        for slot, task in enumerate(ts):
            task_by_vid[slot_vid[(w, slot)]] = task
    for _, _, w, slot in used:
        records[w].completed_slots = max(records[w].completed_slots, slot + 1)
    for w in records:
        if w not in failed and slot_times[w]:
            records[w].finish_time = slot_times[w][-1] + (horizon if w in delayed else 0.0)

    result = None
    rel = None
    survivors = tuple(e[1] for e in used)
    if decode_ok:
        outputs = [run_task(task_by_vid[v])[0] for v in survivors]
        if len(survivors) == plan.tau:
            result = decode(plan, survivors, outputs, out_shape=out_shape, rcond_threshold=rcond)
        else:
            result = decode_least_squares(plan, list(zip(survivors, outputs)), out_shape=out_shape,
                                          rcond_threshold=rcond)
        if oracle is not None:
            oracle = np.asarray(oracle, dtype=np.float64).reshape(result.shape)
            denom = np.linalg.norm(oracle)
            rel = float(np.linalg.norm(result - oracle) / (denom if denom > 0 else 1.0))
    total_time = used[-1][0] if used else math.inf
    return SimulationReport(
        per_worker=[records[w] for w, _, _ in groups],
        survivor_set=tuple(sorted(survivors)),
        decode_ok=decode_ok,
        relative_error=rel,
        total_time=total_time,
        communication_nnz_total=sum(r.nnz_received for r in records.values()),
        wall_time=(time.perf_counter() - wall0) if measure_wall else None,
        result=result,
    )


# ---------------------------------------------------------------------------
# scheme comparison
# ---------------------------------------------------------------------------

def build_plan(scheme, params, seed):
    kind = params["kind"]
    dist = params.get("distribution", Distribution())
    if isinstance(dist, str):
        dist = Distribution.parse(dist)
    if scheme == "dense_baseline":
        return plan_dense_baseline(kind, params["n"], params["k_A"], params.get("k_B", 1), params["s"], dist, seed)
    if scheme != "proposed":
        raise ValueError(f"unknown scheme {scheme!r}")
    if kind == MATVEC:
        return plan_matvec(params["n"], params["k_A"], params["s"], dist, seed)
    return plan_matmat(params["n"], params["k_A"], params["k_B"], params["s"],
                       params.get("omega_A"), params.get("omega_B"), dist, seed)


COMPARISON_FIELDS = ["method", "worker comp flops", "worker comp time", "communication nnz",
                     "kappa worst", "decode error"]


@dataclass
class ComparisonTable:
    rows: list  # dicts keyed by COMPARISON_FIELDS
    ratios: dict
    analytic: dict

    def to_dict(self):
        return {"rows": self.rows, "ratios": self.ratios, "analytic": self.analytic}


def compare_schemes(A, B_or_x, params, schemes=("proposed", "dense_baseline"), delay_model=None,
                    repetitions=1, stragglers=None, with_kappa=False, kappa_budget=10**5):
    """Run every scheme ``repetitions`` times (coefficient seed ``params['seed'] + rep``)
    and tabulate mean worker cost, communication and decode error."""
    delay_model = delay_model or DelayModel()
    kind = params["kind"]
    if kind == MATVEC:
        x = np.asarray(B_or_x, dtype=np.float64).reshape(-1, 1)
        oracle = A.to_scipy().T @ x
    else:
        oracle = (A.to_scipy().T @ B_or_x.to_scipy()).toarray()
    base_seed = params.get("seed", 0)
    rows = []
    for scheme in schemes:
        flops, times, comm, errs, kappas = [], [], [], [], []
        for rep in range(repetitions):
            plan = build_plan(scheme, params, base_seed + rep)
            tasks = encode_tasks(A, B_or_x, plan)
            rep_report = simulate(tasks, plan, delay_model, stragglers, oracle)
            flops.append(np.mean([r.compute_flops for r in rep_report.per_worker]))
            times.append(np.mean([r.finish_time for r in rep_report.per_worker if not math.isinf(r.finish_time)]))
            comm.append(rep_report.communication_nnz_total)
            errs.append(rep_report.relative_error if rep_report.decode_ok else math.nan)
            if with_kappa:
                kappas.append(kappa_worst(plan, budget=kappa_budget).kappa_worst)
        rows.append({
            "method": scheme,
            "worker comp flops": float(np.mean(flops)),
            "worker comp time": float(np.mean(times)),
            "communication nnz": float(np.mean(comm)),
            "kappa worst": float(np.max(kappas)) if kappas else None,
            "decode error": float(np.max(errs)),
        })
    ratios = {}
    by = {r["method"]: r for r in rows}
    if "proposed" in by and "dense_baseline" in by:
        p, d = by["proposed"], by["dense_baseline"]
        ratios = {
            "flops dense/proposed": d["worker comp flops"] / p["worker comp flops"] if p["worker comp flops"] else math.nan,
            "communication dense/proposed": d["communication nnz"] / p["communication nnz"] if p["communication nnz"] else math.nan,
        }
    analytic = {}
    if kind == MATMAT:
        plan = build_plan("proposed", params, base_seed)
        analytic["weight ratio k_A k_B/(omega_A omega_B)"] = plan.k_A * plan.k_B / (plan.omega_A * plan.omega_B)
        analytic["class-based/proposed"] = str(class_based_complexity_ratio(
            plan.k_A, plan.k_B, plan.s, plan.omega_A, plan.omega_B))
    else:
        plan = build_plan("proposed", params, base_seed)
        analytic["weight ratio k_A/omega_A"] = plan.k_A / plan.omega_A
    return ComparisonTable(rows, ratios, analytic)


def write_comparison_csv(path, tables):
    """``tables`` maps a label (e.g. the sparsity level) to a ComparisonTable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sparsity"] + COMPARISON_FIELDS)
        for label, table in tables.items():
            for r in table.rows:
                w.writerow([label] + [_cell(r[f]) for f in COMPARISON_FIELDS])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return v
