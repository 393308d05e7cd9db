"""Encoding plans for the cyclic low-weight codes and per-worker tasks.

Matrix-vector plans combine ``omega_A = min(s + 1, k_A)`` cyclically
consecutive block-columns of A per worker.  Matrix-matrix plans give worker
``i`` the A-blocks ``{i, ..., i + omega_A - 1} mod k_A`` and the B-blocks
``{i // k_A, ..., i // k_A + omega_B - 1} mod k_B``.  Matrix-vector plans are
stored with ``k_B = omega_B = 1`` and an all-ones B coefficient column, so
every worker's decoding row is ``kron(R_A[i], R_B[i])`` in both cases.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InconsistentParams, WeightConstraintViolated
from .sparsemat import SparseMatrix, pad_columns, partition_block_columns, sparse_linear_combination

MATVEC = "matvec"
MATMAT = "matmat"


@dataclass(frozen=True)
class Distribution:
    """Coefficient distribution: ``normal(mean, std)`` or ``uniform(lb, ub)``."""

    kind: str = "normal"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("normal", "uniform"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == "normal" and self.b <= 0:
            raise ValueError("normal std must be positive")
        if self.kind == "uniform" and self.b <= self.a:
            raise ValueError("uniform needs lb < ub")

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        """Parse ``normal(0,1)``, ``uniform(-1,1)`` (also ``rand``/``unifrand``)."""
        m = re.fullmatch(r"\s*(\w+)\s*\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)\s*", text)
        if not m:
            raise ValueError(f"cannot parse distribution {text!r}")
        name = {"rand": "normal", "gaussian": "normal", "unifrand": "uniform"}.get(m[1].lower(), m[1].lower())
        return cls(name, float(m[2]), float(m[3]))

    def sample(self, rng, size):
        if self.kind == "normal":
            return rng.normal(self.a, self.b, size=size)
        return rng.uniform(self.a, self.b, size=size)

    def __str__(self):
        return f"{self.kind}({self.a:g},{self.b:g})"


STANDARD_NORMAL = Distribution()


@dataclass(frozen=True, eq=False)
class EncodingPlan:
    kind: str
    n: int
    k_A: int
    k_B: int
    s: int
    omega_A: int
    omega_B: int
    supports_A: tuple
    supports_B: tuple
    coeffs_A: np.ndarray
    coeffs_B: np.ndarray
    seed: int | None = None
    distribution: Distribution = STANDARD_NORMAL
    # True when the caller's k_B > k_A and the roles of A and B were swapped
    transposed: bool = False
    label: str = "proposed"

    def __post_init__(self):
        for name in ("coeffs_A", "coeffs_B"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def tau(self) -> int:
        return self.k_A * self.k_B

    def with_coefficients(self, coeffs_A, coeffs_B, seed=None, distribution=None) -> "EncodingPlan":
        return EncodingPlan(self.kind, self.n, self.k_A, self.k_B, self.s, self.omega_A, self.omega_B,
                            self.supports_A, self.supports_B, coeffs_A, coeffs_B,
                            seed=seed, distribution=distribution or self.distribution,
                            transposed=self.transposed, label=self.label)

    # serialisation ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "n": self.n,
            "k_A": self.k_A,
            "k_B": self.k_B,
            "s": self.s,
            "omega_A": self.omega_A,
            "omega_B": self.omega_B,
            "transposed": self.transposed,
            "seed": self.seed,
            "distribution": str(self.distribution),
            "supports_A": [list(t) for t in self.supports_A],
            "supports_B": [list(t) for t in self.supports_B],
            "coeffs_A": self.coeffs_A.tolist(),
            "coeffs_B": self.coeffs_B.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingPlan":
        return cls(d["kind"], d["n"], d["k_A"], d["k_B"], d["s"], d["omega_A"], d["omega_B"],
                   tuple(tuple(t) for t in d["supports_A"]), tuple(tuple(t) for t in d["supports_B"]),
                   np.array(d["coeffs_A"], dtype=np.float64), np.array(d["coeffs_B"], dtype=np.float64),
                   seed=d.get("seed"), distribution=Distribution.parse(d.get("distribution", "normal(0,1)")),
                   transposed=d.get("transposed", False), label=d.get("label", "proposed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "EncodingPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class WorkerTask:
    worker_id: int
    encoded_A: SparseMatrix
    encoded_B: SparseMatrix | None = None
    vector_x: np.ndarray | None = None
    # original (r, w) before padding; w is None for matvec
    source_cols: tuple = field(default=(None, None))

    @property
    def nnz(self) -> int:
        return self.encoded_A.nnz + (self.encoded_B.nnz if self.encoded_B is not None else 0)


# ---------------------------------------------------------------------------
# supports and coefficients
# ---------------------------------------------------------------------------

def cyclic_support(start: int, weight: int, k: int) -> tuple:
    return tuple(sorted({(start + j) % k for j in range(weight)}))


def sample_coefficients(supports_A, supports_B, k_A, k_B, distribution=STANDARD_NORMAL, seed=None):
    """Fill the support positions of R_A (n x k_A) and R_B (n x k_B) i.i.d.

    A single generator seeded with ``seed`` draws R_A row by row and then R_B,
    so results depend only on (seed, distribution, supports).
    """
    rng = np.random.default_rng(seed)
    n = len(supports_A)
    R_A = np.zeros((n, k_A))
    R_B = np.zeros((n, k_B))
    w_A = len(supports_A[0])
    vals = distribution.sample(rng, (n, w_A))
    for i, sup in enumerate(supports_A):
        R_A[i, list(sup)] = vals[i, : len(sup)]
    if k_B == 1 and all(tuple(s) == (0,) for s in supports_B):
        R_B[:, 0] = 1.0  # matvec: the B side is the fixed vector x
    else:
        w_B = len(supports_B[0])
        vals = distribution.sample(rng, (n, w_B))
        for i, sup in enumerate(supports_B):
            R_B[i, list(sup)] = vals[i, : len(sup)]
    return R_A, R_B


def plan_matvec(n, k_A, s, distribution=STANDARD_NORMAL, seed=None, omega_A=None, check=True) -> EncodingPlan:
    """Cyclic matrix-vector plan.

    ``omega_A`` defaults to ``min(s + 1, k_A)``; overriding it with
    ``check=False`` builds deliberately weak plans for audits.
    """
    if k_A < 1 or s < 0:
        raise InconsistentParams(f"need k_A >= 1 and s >= 0 (got k_A={k_A}, s={s})")
    if n != k_A + s:
        raise InconsistentParams(f"n must equal k_A + s = {k_A + s}, got {n}")
    w = min(s + 1, k_A) if omega_A is None else omega_A
    if check and w != min(s + 1, k_A):
        raise WeightConstraintViolated(f"matvec weight must be min(s+1, k_A) = {min(s + 1, k_A)}")
    if not 1 <= w <= k_A:
        raise WeightConstraintViolated(f"1 <= omega_A <= k_A violated (omega_A={w})")
    sup_A = tuple(cyclic_support(i, w, k_A) for i in range(n))
    sup_B = tuple((0,) for _ in range(n))
    R_A, R_B = sample_coefficients(sup_A, sup_B, k_A, 1, distribution, seed)
    return EncodingPlan(MATVEC, n, k_A, 1, s, w, 1, sup_A, sup_B, R_A, R_B, seed=seed, distribution=distribution)


def default_weights(k_A, k_B, s):
    """Smallest (omega_B, omega_A), lexicographically, meeting every weight bound."""
    for w_B in range(2, k_B):
        for w_A in range(w_B, k_A):
            if w_A * w_B > s:
                return w_A, w_B
    raise WeightConstraintViolated(f"no weights satisfy omega_A*omega_B > {s} with "
                                   f"1 < omega_B <= omega_A, omega_A < {k_A}, omega_B < {k_B}")


def plan_matmat(n, k_A, k_B, s, omega_A=None, omega_B=None, distribution=STANDARD_NORMAL, seed=None,
                check=True) -> EncodingPlan:
    """Cyclic matrix-matrix plan.

    If ``k_B > k_A`` the roles of A and B (and their weights) are swapped and
    the plan is marked ``transposed``; the decoder transposes back.
    ``check=False`` skips the weight inequalities (used to build counterexamples).
    """
    if k_A < 1 or k_B < 1 or s < 0:
        raise InconsistentParams("need k_A, k_B >= 1 and s >= 0")
    if n != k_A * k_B + s:
        raise InconsistentParams(f"n must equal k_A*k_B + s = {k_A * k_B + s}, got {n}")
    transposed = k_B > k_A
    if transposed:
        k_A, k_B = k_B, k_A
        omega_A, omega_B = omega_B, omega_A
    if s > k_A:
        raise InconsistentParams(f"s = {s} exceeds max(k_A, k_B) = {k_A}")
    if omega_A is None and omega_B is None:
        omega_A, omega_B = default_weights(k_A, k_B, s)
    elif omega_A is None or omega_B is None:
        raise InconsistentParams("give both weights or neither")
    if check:
        if not omega_A * omega_B > s:
            raise WeightConstraintViolated(f"omega_A*omega_B > s violated ({omega_A}*{omega_B} <= {s})")
        if not 1 < omega_A < k_A:
            raise WeightConstraintViolated(f"1 < omega_A < k_A violated (omega_A={omega_A}, k_A={k_A})")
        if not 1 < omega_B < k_B:
            raise WeightConstraintViolated(f"1 < omega_B < k_B violated (omega_B={omega_B}, k_B={k_B})")
        if not omega_A >= omega_B:
            raise WeightConstraintViolated(f"omega_A >= omega_B violated ({omega_A} < {omega_B})")
    elif not (1 <= omega_A <= k_A and 1 <= omega_B <= k_B):
        raise WeightConstraintViolated("weights must lie in [1, k]")
    sup_A = tuple(cyclic_support(i, omega_A, k_A) for i in range(n))
    sup_B = tuple(cyclic_support(i // k_A, omega_B, k_B) for i in range(n))
    R_A, R_B = sample_coefficients(sup_A, sup_B, k_A, k_B, distribution, seed)
    return EncodingPlan(MATMAT, n, k_A, k_B, s, omega_A, omega_B, sup_A, sup_B, R_A, R_B,
                        seed=seed, distribution=distribution, transposed=transposed)


def plan_dense_baseline(kind, n, k_A, k_B, s, distribution=STANDARD_NORMAL, seed=None) -> EncodingPlan:
    """Full-support random code (every worker combines all k blocks)."""
    if kind == MATVEC:
        if n != k_A + s:
            raise InconsistentParams(f"n must equal k_A + s = {k_A + s}, got {n}")
        k_B = 1
    elif n != k_A * k_B + s:
        raise InconsistentParams(f"n must equal k_A*k_B + s = {k_A * k_B + s}, got {n}")
    transposed = kind == MATMAT and k_B > k_A
    if transposed:
        k_A, k_B = k_B, k_A
    sup_A = tuple(tuple(range(k_A)) for _ in range(n))
    sup_B = tuple(tuple(range(k_B)) for _ in range(n))
    R_A, R_B = sample_coefficients(sup_A, sup_B, k_A, k_B, distribution, seed)
    return EncodingPlan(kind, n, k_A, k_B, s, k_A, k_B, sup_A, sup_B, R_A, R_B, seed=seed,
                        distribution=distribution, transposed=transposed, label="dense_baseline")


def class_structure(plan: EncodingPlan) -> list[tuple]:
    """Worker classes ``M_i = {j : j = i mod k_A}``; members share one A-support."""
    return [tuple(range(i, plan.n, plan.k_A)) for i in range(plan.k_A)]


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def _encode_side(blocks, supports, R, i):
    sup = supports[i]
    return sparse_linear_combination([blocks[q] for q in sup], [R[i, q] for q in sup])


def encode_tasks(A: SparseMatrix, B_or_x, plan: EncodingPlan) -> list[WorkerTask]:
    """Encode A (and B) into one task per worker.

    For matvec plans ``B_or_x`` is the dense vector x of length ``A.rows``.
    Widths that are not multiples of k are zero-padded first.
    """
    if plan.kind == MATVEC:
        x = np.asarray(B_or_x, dtype=np.float64).reshape(-1, 1)
        blocks = partition_block_columns(pad_columns(A, plan.k_A), plan.k_A)
        return [WorkerTask(i, _encode_side(blocks, plan.supports_A, plan.coeffs_A, i), None, x, (A.cols, None))
                for i in range(plan.n)]
    B = B_or_x
    src = (A.cols, B.cols)
    if plan.transposed:
        A, B = B, A
    a_blocks = partition_block_columns(pad_columns(A, plan.k_A), plan.k_A)
    b_blocks = partition_block_columns(pad_columns(B, plan.k_B), plan.k_B)
    return [WorkerTask(i,
                       _encode_side(a_blocks, plan.supports_A, plan.coeffs_A, i),
                       _encode_side(b_blocks, plan.supports_B, plan.coeffs_B, i),
                       None, src)
            for i in range(plan.n)]
