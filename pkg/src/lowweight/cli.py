"""Command-line front end.

Exit codes: 0 success, 1 unexpected crash, 2 usage error, 3 the operation's
contract failed (bad parameters, too many stragglers, budget exceeded, ...).
Machine-readable output goes to files; human logs go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .decoder import full_column_rank, effective_rows
from .encoder import MATMAT, MATVEC, Distribution, EncodingPlan, encode_tasks, plan_matmat, plan_matvec
from .errors import LowWeightError, NotEnoughSurvivors
from .hetero import HeterogeneousProfile, audit_prefixes, q_over_delta, virtualize
from .simulator import (DelayModel, StragglerSpec, compare_schemes, simulate, write_comparison_csv)
from .sparsemat import SparseMatrix, generate_random_sparse, read_matrix_market, write_matrix_market
from .stability import DEFAULT_BUDGET, append_kappa_csv, coefficient_search, competitor_search_cost
from .verifier import (exhaustive_matching_audit, exhaustive_rank_audit, lemma1_audit,
                       matching_rank_agreement)

log = logging.getLogger("lowweight")

EXIT_CONTRACT = 3


def _default_threads():
    try:
        return max(1, int(os.environ.get("LOWWEIGHT_THREADS", "1")))
    except ValueError:
        return 1


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _read_vector(path):
    return read_matrix_market(path).to_dense().reshape(-1, 1)


def _write_vector(x, path):
    write_matrix_market(SparseMatrix.from_dense(np.asarray(x).reshape(-1, 1)), path)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args):
    A = generate_random_sparse(args.rows, args.cols, args.density, args.seed)
    write_matrix_market(A, args.out)
    log.info("wrote %s (%dx%d, nnz=%d, density=%.5f)", args.out, A.rows, A.cols, A.nnz, A.density)


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------

def _plan_from_flags(args, kind):
    dist = Distribution.parse(args.dist)
    if kind == MATVEC:
        n = args.n if args.n is not None else args.kA + args.s
        return plan_matvec(n, args.kA, args.s, dist, args.seed)
    if args.kB is None:
        raise LowWeightError("--kB is required for matrix-matrix plans")
    n = args.n if args.n is not None else args.kA * args.kB + args.s
    return plan_matmat(n, args.kA, args.kB, args.s, args.wA, args.wB, dist, args.seed)


def cmd_encode(args):
    A = read_matrix_market(args.A)
    kind = MATMAT if args.B else MATVEC
    plan = _plan_from_flags(args, kind)
    out = Path(args.outdir)
    (out / "tasks").mkdir(parents=True, exist_ok=True)
    plan.save(out / "plan.json")
    write_matrix_market(A, out / "A.mtx")
    if kind == MATMAT:
        other = read_matrix_market(args.B)
        write_matrix_market(other, out / "B.mtx")
    else:
        other = _read_vector(args.x) if args.x else np.ones((A.rows, 1))
        _write_vector(other, out / "x.mtx")
    tasks = encode_tasks(A, other, plan)
    manifest = {"kind": kind, "source_cols": list(tasks[0].source_cols), "tasks": []}
    for t in tasks:
        entry = {"worker": t.worker_id, "A": f"tasks/w{t.worker_id:04d}_A.mtx", "nnz": t.nnz}
        write_matrix_market(t.encoded_A, out / entry["A"])
        if t.encoded_B is not None:
            entry["B"] = f"tasks/w{t.worker_id:04d}_B.mtx"
            write_matrix_market(t.encoded_B, out / entry["B"])
        manifest["tasks"].append(entry)
    _write_json(out / "manifest.json", manifest)
    log.info("encoded %d tasks (%s, omega_A=%d, omega_B=%d) into %s",
             plan.n, kind, plan.omega_A, plan.omega_B, out)


def _load_plan_dir(d):
    from .encoder import WorkerTask
    d = Path(d)
    plan = EncodingPlan.load(d / "plan.json")
    manifest = json.loads((d / "manifest.json").read_text())
    src = tuple(manifest["source_cols"])
    A = read_matrix_market(d / "A.mtx")
    if manifest["kind"] == MATMAT:
        other = read_matrix_market(d / "B.mtx")
        oracle = (A.to_scipy().T @ other.to_scipy()).toarray()
    else:
        other = _read_vector(d / "x.mtx")
        oracle = A.to_scipy().T @ other
    tasks = []
    for e in manifest["tasks"]:
        ea = read_matrix_market(d / e["A"])
        eb = read_matrix_market(d / e["B"]) if "B" in e else None
        tasks.append(WorkerTask(e["worker"], ea, eb, None if eb is not None else other, src))
    return plan, tasks, A, other, oracle


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    plan, tasks, A, other, oracle = _load_plan_dir(args.plan_dir)
    specs = []
    if args.fail:
        specs.append(StragglerSpec("failure", args.fail))
    if args.slow:
        specs.append(StragglerSpec("slowdown_factor", args.slow, args.factor))
    if args.straggle:
        specs.append(StragglerSpec("explicit_set", args.straggle))
    delay = DelayModel(args.delay, args.base_rate, args.shift, args.exp_mean, args.seed)
    mapping = None
    run_tasks = tasks
    if args.profile:
        if args.k_bar is None:
            raise LowWeightError("--k-bar is required with --profile")
        mapping = virtualize(HeterogeneousProfile.load(args.profile), args.k_bar, plan.kind)
        q_over_delta(mapping, plan)  # raises PlanMismatch
        run_tasks = {w: [] for w in mapping.physical_ids}
        for v, (w, _) in enumerate(mapping.virtual_to_physical):
            run_tasks[w].append(tasks[v])
    report = simulate(run_tasks, plan, delay, specs, oracle if args.oracle else None, mapping=mapping,
                      measure_wall=args.wall_time)
    if args.out_json:
        report.write_json(args.out_json)
    if args.out_csv:
        report.write_csv(args.out_csv)
    log.info("decode_ok=%s relative_error=%s survivors=%s", report.decode_ok, report.relative_error,
             list(report.survivor_set))
    if not report.decode_ok:
        return EXIT_CONTRACT
    return 0


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------

def _skeleton(args):
    if args.plan:
        return EncodingPlan.load(args.plan)
    if args.kA is None or args.s is None:
        raise LowWeightError("give --plan or the shape flags --kA/--s (and --kB for matmat)")
    return _plan_from_flags(args, MATMAT if args.kB else MATVEC)


def cmd_kappa(args):
    skel = _skeleton(args)
    dist = Distribution.parse(args.dist) if args.dist else skel.distribution
    best, report = coefficient_search(skel, args.trials, dist, args.seed, args.budget, args.threads)
    cost = competitor_search_cost(skel.n, skel.k_A, skel.k_B)
    payload = report.to_dict(include_timing=args.timing)
    payload.update({"best_seed": best.seed, "distribution": str(dist), "n": skel.n, "k_A": skel.k_A,
                    "k_B": skel.k_B, "s": skel.s, "delta_A_lcm": cost.delta_A,
                    "lcm_over_proposed_cost": cost.ratio})
    if args.out_json:
        _write_json(args.out_json, payload)
    if args.out_csv:
        append_kappa_csv(args.out_csv, best, report, args.seed)
    if args.save_plan:
        best.save(args.save_plan)
    log.info("kappa_worst=%.4e over %d subsets (best seed %s); Delta_A=%d",
             report.kappa_worst, report.subsets_evaluated, best.seed, cost.delta_A)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args):
    plan = _skeleton(args)
    if args.mode == "rank":
        rep = exhaustive_rank_audit(plan, args.rcond, args.budget)
        failures = rep.failures
        if args.out:
            rep.write_csv(args.out)
        log.info("rank audit: %d/%d passed", rep.subsets_tested - failures, rep.subsets_tested)
    elif args.mode == "matching":
        rep = exhaustive_matching_audit(plan, args.budget)
        failures = rep.failures
        if args.out:
            rep.write_csv(args.out)
        log.info("matching audit: %d/%d passed", rep.subsets_tested - failures, rep.subsets_tested)
    elif args.mode == "agreement":
        rep = matching_rank_agreement(plan, args.trials, args.seed, args.rcond)
        failures = rep.trials - rep.agreements
        if args.out:
            from .verifier import AuditReport
            AuditReport("agreement", rep.trials, failures, rep.rows).write_csv(args.out)
        log.info("agreement: %d/%d", rep.agreements, rep.trials)
    else:
        audit = lemma1_audit(plan, samples=args.trials, seed=args.seed)
        failures = len(audit.violations)
        if args.out:
            import csv
            with open(args.out, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["subset", "m", "bound", "exact", "pass"])
                for sub, m, bound, exact in audit.violations:
                    w.writerow([" ".join(map(str, sub)), m, bound, exact, 0])
                w.writerow(["summary", "", "", audit.subsets_tested, int(failures == 0)])
        log.info("lemma1 audit: %d subsets, %d violations", audit.subsets_tested, failures)
    return 0 if failures == 0 else EXIT_CONTRACT


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args):
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        raise FileNotFoundError(f"config {cfg_path} not found")
    cfg = json.loads(cfg_path.read_text())
    params = dict(cfg["scheme"])
    seed = cfg.get("seed", 0)
    params.setdefault("seed", seed)
    delay = DelayModel.from_dict(cfg.get("delay", {}))
    stragglers = [StragglerSpec.from_dict(d) for d in cfg.get("stragglers", [])]
    mats = cfg["matrices"]
    tables = {}
    for j, density in enumerate(cfg["densities"]):
        A = generate_random_sparse(mats["rows"], mats["cols_A"], density, seed + 1000 * j)
        if params["kind"] == MATMAT:
            other = generate_random_sparse(mats["rows"], mats["cols_B"], density, seed + 1000 * j + 1)
        else:
            other = np.random.default_rng(seed + 1000 * j + 1).standard_normal((mats["rows"], 1))
        label = f"{100 * (1 - density):g}%"
        tables[label] = compare_schemes(A, other, params, tuple(cfg.get("schemes", ("proposed", "dense_baseline"))),
                                        delay, cfg.get("repetitions", 1), stragglers,
                                        cfg.get("kappa", False))
        log.info("sparsity %s: %s", label, tables[label].ratios)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(out / "comparison.csv", tables)
    _write_json(out / "comparison.json", {k: v.to_dict() for k, v in tables.items()})


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _ids(text):
    return [int(t) for t in text.replace(",", " ").split()]


def _shape_flags(p, required=False):
    p.add_argument("--n", type=int)
    p.add_argument("--kA", type=int, required=required)
    p.add_argument("--kB", type=int)
    p.add_argument("--s", type=int, required=required)
    p.add_argument("--wA", type=int)
    p.add_argument("--wB", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="lowweight", description="Low-weight coded distributed matrix computation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--threads", type=int, default=_default_threads(),
                        help="cap on worker threads (default: $LOWWEIGHT_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random sparse matrix")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", help="build a plan and write per-worker encoded blocks")
    p.add_argument("--A", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--B")
    g.add_argument("--x")
    _shape_flags(p, required=True)
    p.add_argument("--dist", default="normal(0,1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("simulate", help="simulate a run from an encoded plan directory")
    p.add_argument("--plan-dir", required=True)
    p.add_argument("--fail", type=_ids, default=[])
    p.add_argument("--slow", type=_ids, default=[])
    p.add_argument("--factor", type=float, default=2.0)
    p.add_argument("--straggle", type=_ids, default=[])
    p.add_argument("--delay", choices=("deterministic", "shifted_exponential"), default="shifted_exponential")
    p.add_argument("--base-rate", type=float, default=1e-6)
    p.add_argument("--shift", type=float, default=0.0)
    p.add_argument("--exp-mean", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="compare with the dense product")
    p.add_argument("--profile", help="heterogeneous profile JSON")
    p.add_argument("--k-bar", type=int)
    p.add_argument("--wall-time", action="store_true", help="also record wall time (non-deterministic)")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kappa", help="best-of-T coefficient search on worst-case condition number")
    p.add_argument("--plan")
    _shape_flags(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--dist")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--timing", action="store_true", help="include wall time (non-deterministic)")
    p.add_argument("--out-json")
    p.add_argument("--out-csv", help="CSV table to append one row to")
    p.add_argument("--save-plan")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("verify", help="decodability audits")
    p.add_argument("--plan")
    _shape_flags(p)
    p.add_argument("--mode", choices=("matching", "rank", "lemma1", "agreement"), required=True)
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rcond", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify, dist="normal(0,1)")

    p = sub.add_parser("bench", help="proposed vs dense baseline comparison from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "command", None) == "kappa" and args.dist is None and args.plan is None:
        args.dist = "normal(0,1)"
    try:
        rc = args.func(args)
    except NotEnoughSurvivors as exc:
        log.error("NotEnoughSurvivors: %s", exc)
        return EXIT_CONTRACT
    except LowWeightError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONTRACT
    except (FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
