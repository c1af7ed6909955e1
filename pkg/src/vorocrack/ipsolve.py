"""Exact solver for binary programs ``min c.x  s.t.  M x = q,  x in {0,1}^n``.

``M`` has entries in {-1, 0, +1}. LP relaxations are solved with the HiGHS dual
simplex through :func:`scipy.optimize.linprog`, which returns basic (vertex)
solutions. The integer search is a best-first branch-and-bound that branches
on the most fractional variable.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import ConfigError, NodeLimit

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7


@dataclass
class BinaryProgram:
    costs: np.ndarray
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float)
        self.matrix = sparse.csr_matrix(self.matrix, dtype=np.int64)
        self.matrix.eliminate_zeros()
        self.rhs = np.asarray(self.rhs, dtype=np.int64)
        m, n = self.matrix.shape
        if n != len(self.costs) or m != len(self.rhs):
            raise ConfigError("program dimensions are inconsistent")
        if np.any(self.costs <= 0):
            raise ConfigError("all costs must be strictly positive")
        if self.matrix.nnz and not np.all(np.abs(self.matrix.data) == 1):
            raise ConfigError("constraint coefficients must be -1 or +1")
        if np.any(np.abs(self.rhs) > 1):
            raise ConfigError("right-hand side must lie in {-1, 0, 1}")
        if self.names is None:
            self.names = [f"x{i}" for i in range(n)]

    @property
    def n_vars(self) -> int:
        return len(self.costs)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def is_feasible(self, x: np.ndarray) -> bool:
        """Exact integer check of ``M x = q`` for a 0/1 vector."""
        xi = np.asarray(x, dtype=np.int64)
        return bool(np.all((xi == 0) | (xi == 1)) and np.array_equal(self.matrix @ xi, self.rhs))


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


@dataclass
class IpSolution:
    status: str
    assignment: np.ndarray | None
    objective: float
    node_count: int = 0
    lp_iterations: int = 0
    root_bound: float = float("nan")
    bounds_checked: list[tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(prog: BinaryProgram, lower: np.ndarray | None = None, upper: np.ndarray | None = None) -> LpResult:
    """Relaxation ``0 <= x <= 1`` (optionally tightened per variable) at a vertex."""
    n = prog.n_vars
    lo = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    up = np.ones(n) if upper is None else np.asarray(upper, dtype=float)
    if n == 0:
        ok = not np.any(prog.rhs)
        return LpResult("optimal" if ok else "infeasible", np.zeros(0) if ok else None, 0.0, 0)
    res = linprog(
        prog.costs,
        A_eq=prog.matrix.astype(float) if prog.n_rows else None,
        b_eq=prog.rhs.astype(float) if prog.n_rows else None,
        bounds=np.column_stack([lo, up]),
        method="highs-ds",
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpResult("infeasible", None, float("inf"), iters)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return LpResult("optimal", np.asarray(res.x, dtype=float), float(res.fun), iters)


def solve_binary(prog: BinaryProgram, max_nodes: int = 100_000, abs_gap: float = 1e-9) -> IpSolution:
    """Best-first branch-and-bound; returns status ``optimal`` or ``infeasible``.

    Raises NodeLimit when more than ``max_nodes`` nodes would be expanded.
    """
    n = prog.n_vars
    root = solve_lp(prog)
    iters = root.iterations
    if root.status == "infeasible":
        return IpSolution("infeasible", None, float("inf"), 1, iters)
    counter = 0
    heap = [(root.objective, counter, np.zeros(n), np.ones(n), root.x)]
    best_x, best_obj = None, float("inf")
    nodes = 0
    checks = []
    while heap:
        bound, _, lo, up, x = heapq.heappop(heap)
        if bound >= best_obj - abs_gap:
            break
        nodes += 1
        if nodes > max_nodes:
            raise NodeLimit(f"branch-and-bound exceeded {max_nodes} nodes")
        frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
        if frac.max(initial=0.0) <= FEAS_TOL:
            cand = np.rint(x).astype(np.int64)
            if not prog.is_feasible(cand):
                raise RuntimeError("rounded LP vertex violates the constraints")
            obj = float(prog.costs @ cand)
            if obj < best_obj:
                best_x, best_obj = cand, obj
            continue
        j = int(np.argmax(frac))
        for val in (1.0, 0.0):
            clo, cup = lo.copy(), up.copy()
            clo[j] = cup[j] = val
            child = solve_lp(prog, clo, cup)
            iters += child.iterations
            if child.status == "infeasible":
                continue
            checks.append((bound, child.objective))
            if child.objective < bound - 1e-6 * max(1.0, abs(bound)):
                raise RuntimeError("LP bound decreased under branching")
            counter += 1
            heapq.heappush(heap, (child.objective, counter, clo, cup, child.x))
    if best_x is None:
        return IpSolution("infeasible", None, float("inf"), nodes, iters, root.objective, checks)
    if root.objective > best_obj + 1e-6 * max(1.0, abs(best_obj)):
        raise RuntimeError("root LP bound exceeds the integer optimum")
    return IpSolution("optimal", best_x, best_obj, nodes, iters, root.objective, checks)


# ---------------------------------------------------------------- LP text format

def _fmt(v: float) -> str:
    return repr(float(v))


def dump_program(prog: BinaryProgram, path: str | Path) -> None:
    """Write the program in a CPLEX-LP subset readable by external solvers."""
    out = ["\\ vorocrack binary program", "Minimize"]
    terms = " + ".join(f"{_fmt(c)} {nm}" for c, nm in zip(prog.costs, prog.names))
    out.append(f" obj: {terms if terms else '0'}")
    out.append("Subject To")
    m = prog.matrix
    for r in range(prog.n_rows):
        lo, hi = m.indptr[r], m.indptr[r + 1]
        parts = []
        for col, val in zip(m.indices[lo:hi], m.data[lo:hi]):
            sign = "+" if val > 0 else "-"
            parts.append(f"{sign} {prog.names[col]}")
        expr = " ".join(parts) if parts else "0 " + prog.names[0]
        out.append(f" c{r}: {expr} = {int(prog.rhs[r])}")
    out.append("Binary")
    out.append(" " + " ".join(prog.names))
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")


def load_program(path: str | Path) -> BinaryProgram:
    text = Path(path).read_text().splitlines()
    section = None
    costs: dict[str, float] = {}
    order: list[str] = []
    rows: list[dict[str, int]] = []
    rhs: list[int] = []
    for line in text:
        s = line.strip()
        if not s or s.startswith("\\"):
            continue
        low = s.lower()
        if low in ("minimize", "subject to", "binary", "end"):
            section = low
            continue
        if section == "minimize":
            body = s.split(":", 1)[1]
            for tok in body.split(" + "):
                tok = tok.strip()
                if tok == "0":
                    continue
                c, name = tok.split()
                costs[name] = float(c)
                order.append(name)
        elif section == "subject to":
            body = s.split(":", 1)[1]
            lhs, r = body.rsplit("=", 1)
            row: dict[str, int] = {}
            toks = lhs.split()
            if toks and toks[0] != "0":
                for sign, name in zip(toks[::2], toks[1::2]):
                    row[name] = 1 if sign == "+" else -1
            rows.append(row)
            rhs.append(int(r))
    index = {nm: i for i, nm in enumerate(order)}
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for nm, v in row.items():
            data.append(v)
            ri.append(r)
            ci.append(index[nm])
    mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), len(order)), dtype=np.int64)
    return BinaryProgram(np.array([costs[nm] for nm in order]), mat, np.array(rhs), order)
