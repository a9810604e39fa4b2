"""Big-M mixed-integer formulation solved by LP-based branch and bound.

Decision variables, in column order::

    n, m                      module and battery counts (integer)
    avail[i], batt[i], trim[i]  hourly energies (continuous)
    out[i]                    outage indicator (binary)
    cap[i]                    which side of min(batt, m*C_B) the trim takes
                              (binary; only when outages are allowed)

The outage indicator is tied to ``avail`` by the usual big-M pair, the
bank update adds back shed load, and ``trim <= min(batt, m*C_B)``. With a
zero outage budget discarding energy never helps, so that inequality is
tight at the optimum. With a positive budget the solver could otherwise
waste energy to trigger a convenient outage; ``cap[i]`` then linearises
``trim == min(batt, m*C_B)`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..errors import InfeasibleError
from .problem import SizingSolution, search_bounds, simulate_battery

INT_TOL = 1e-6


@dataclass
class _Layout:
    T: int
    exact_trim: bool

    @property
    def n_vars(self):
        return 2 + (5 if self.exact_trim else 4) * self.T

    def avail(self, i):
        return 2 + i

    def batt(self, i):
        return 2 + self.T + i

    def trim(self, i):
        return 2 + 2 * self.T + i

    def out(self, i):
        return 2 + 3 * self.T + i

    def cap(self, i):
        return 2 + 4 * self.T + i


class BigMModel:
    """Sparse LP data for the relaxation plus integrality information."""

    def __init__(self, problem, bounds=None, exact_trim=None):
        p = problem
        self.problem = p
        self.bounds = bounds or search_bounds(p)
        T = p.len_data
        if exact_trim is None:
            exact_trim = p.max_outage_hours > 0
        L = self.layout = _Layout(T, exact_trim)
        h, c = p.harvest_per_module, p.consumption
        CB, dod, eps = p.battery_capacity_cb, p.dod_floor, p.epsilon
        b = self.bounds
        self.big_m = (
            (1.0 + dod) * max(1, b.m_max) * CB
            + b.n_max * (h.max() if T else 0.0)
            + (c.max() if T else 0.0)
            + eps
            + 1.0
        )
        M = self.big_m
        ii = np.arange(T)

        # equalities: avail definition, bank update
        rows, cols, vals = [], [], []

        def put(r, cidx, v):
            rows.append(np.broadcast_to(r, np.shape(cidx)).ravel())
            cols.append(np.asarray(cidx).ravel())
            vals.append(np.broadcast_to(v, np.shape(cidx)).astype(float).ravel())

        put(ii, L.avail(ii), 1.0)
        put(ii, np.zeros(T, int), -h)
        if T:
            put(ii[1:], L.trim(ii[:-1]), -1.0)
            put(np.array([0]), np.array([1]), -CB)
        put(T + ii, L.batt(ii), 1.0)
        put(T + ii, L.avail(ii), -1.0)
        put(T + ii, L.out(ii), -c)
        self.A_eq = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * T, L.n_vars),
        )
        self.b_eq = np.concatenate([-c, np.zeros(T)])

        rows, cols, vals = [], [], []
        b_ub = []
        r0 = 0
        # outage big-M pair
        put(r0 + ii, L.avail(ii), -1.0)
        put(r0 + ii, np.ones(T, int), dod * CB)
        put(r0 + ii, L.out(ii), -M)
        b_ub.append(np.full(T, -eps))
        r0 += T
        put(r0 + ii, L.avail(ii), 1.0)
        put(r0 + ii, np.ones(T, int), -dod * CB)
        put(r0 + ii, L.out(ii), M)
        b_ub.append(np.full(T, eps + M))
        r0 += T
        # trim <= batt, trim <= m*C_B (the latter is also the capacity bound)
        put(r0 + ii, L.trim(ii), 1.0)
        put(r0 + ii, L.batt(ii), -1.0)
        b_ub.append(np.zeros(T))
        r0 += T
        put(r0 + ii, L.trim(ii), 1.0)
        put(r0 + ii, np.ones(T, int), -CB)
        b_ub.append(np.zeros(T))
        r0 += T
        # total outage budget
        put(np.full(T, r0), L.out(ii), 1.0)
        b_ub.append(np.array([float(p.max_outage_hours)]))
        r0 += 1
        if exact_trim:
            put(r0 + ii, L.trim(ii), -1.0)
            put(r0 + ii, L.batt(ii), 1.0)
            put(r0 + ii, L.cap(ii), -M)
            b_ub.append(np.zeros(T))
            r0 += T
            put(r0 + ii, L.trim(ii), -1.0)
            put(r0 + ii, np.ones(T, int), CB)
            put(r0 + ii, L.cap(ii), M)
            b_ub.append(np.full(T, M))
            r0 += T
        self.A_ub = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(r0, L.n_vars),
        )
        self.b_ub = np.concatenate(b_ub)
        self.block_rows = {"outage": (0, 2 * T), "trim": (2 * T, 4 * T), "total_outage": (4 * T, 4 * T + 1)}

        self.c = np.zeros(L.n_vars)
        self.c[0] = p.pv_unit_cost
        self.c[1] = p.battery_unit_cost

        lb = np.zeros(L.n_vars)
        ub = np.full(L.n_vars, np.inf)
        lb[1] = 1.0
        ub[0] = b.n_max
        ub[1] = max(1, b.m_max)
        lb[L.avail(ii)] = -np.inf
        ub[L.out(ii)] = 1.0
        if exact_trim:
            ub[L.cap(ii)] = 1.0
        self.lb, self.ub = lb, ub
        # n, m first, then binaries hour by hour
        binaries = [L.out(ii)]
        if exact_trim:
            binaries.append(L.cap(ii))
        self.binary_order = np.column_stack(binaries).ravel() if T else np.array([], int)

    def solve_lp(self, lb, ub):
        res = linprog(
            self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=np.column_stack([lb, ub]), method="highs",
        )
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP relaxation failed: {res.message}")
        return res


def _frac(v):
    return abs(v - round(v))


def _pick_branch(model, x):
    """Index of the variable to branch on, or None when ``x`` is integral."""
    fn, fm = _frac(x[0]), _frac(x[1])
    if max(fn, fm) > INT_TOL:
        return 0 if fn >= fm else 1
    bo = model.binary_order
    if bo.size:
        f = np.abs(x[bo] - np.round(x[bo]))
        k = np.flatnonzero(f > INT_TOL)
        if k.size:
            return int(bo[k[0]])
    return None


def _diagnose(model):
    """Name the constraint block that makes the relaxation infeasible."""
    p = model.problem
    relaxed = BigMModel.__new__(BigMModel)
    relaxed.__dict__.update(model.__dict__)
    b_ub = model.b_ub.copy()
    r = model.block_rows["total_outage"][0]
    b_ub[r] = p.len_data
    relaxed.b_ub = b_ub
    if relaxed.solve_lp(model.lb, model.ub) is not None:
        return "total_outage"
    return "search_bounds"


def _branch_and_bound(model, node_limit, incumbent=None, best_cost=math.inf):
    problem = model.problem
    stack = [(model.lb.copy(), model.ub.copy())]
    nodes = 0
    lps = 0
    root_feasible = None
    while stack:
        lb, ub = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise RuntimeError(f"branch and bound exceeded {node_limit} nodes")
        res = model.solve_lp(lb, ub)
        lps += 1
        if root_feasible is None:
            root_feasible = res is not None
        if res is None:
            continue
        # distinct integer costs differ by at least one cent
        if res.fun > best_cost - 0.005:
            continue
        j = _pick_branch(model, res.x)
        if j is None:
            x = res.x.copy()
            x[0], x[1] = round(x[0]), round(x[1])
            cost = problem.cost(int(x[0]), int(x[1]))
            if cost < best_cost:
                best_cost, incumbent = cost, x
            continue
        v = res.x[j]
        down = (lb.copy(), ub.copy())
        down[1][j] = math.floor(v)
        up = (lb.copy(), ub.copy())
        up[0][j] = math.ceil(v)
        # explore the nearer side first
        if v - math.floor(v) < 0.5:
            stack += [up, down]
        else:
            stack += [down, up]
    return incumbent, best_cost, nodes, lps, root_feasible


def optimize_bigm_milp(problem, bounds=None, node_limit=200_000, exact_trim=None):
    """Solve the big-M MILP by depth-first branch and bound.

    With a positive outage budget the zero-outage optimum is solved first
    and used as the starting incumbent.
    """
    model = BigMModel(problem, bounds, exact_trim)
    b = model.bounds
    incumbent, best_cost, warm_nodes = None, math.inf, 0
    if problem.max_outage_hours > 0:
        strict = BigMModel(replace(problem, max_outage_hours=0), b, exact_trim=False)
        x0, c0, warm_nodes, _, _ = _branch_and_bound(strict, node_limit)
        if x0 is not None:
            best_cost = c0
            incumbent = np.zeros(model.layout.n_vars)
            incumbent[:2] = x0[:2]
    incumbent, best_cost, nodes, lps, root_feasible = _branch_and_bound(
        model, node_limit, incumbent, best_cost)

    if incumbent is None:
        block = _diagnose(model) if not root_feasible else "integrality"
        raise InfeasibleError(
            f"big-M MILP infeasible (binding block: {block}; n <= {b.n_max}, m <= {b.m_max})",
            block=block,
            bounds={"n_max": b.n_max, "m_max": b.m_max},
        )
    n, m = int(incumbent[0]), int(incumbent[1])
    trace = simulate_battery(problem, n, m)
    return SizingSolution(
        n, m, problem.cost(n, m), trace.outage_hours, trace, "bigm_milp",
        {"nodes": nodes, "lp_solves": lps, "big_m": model.big_m, "warm_start_nodes": warm_nodes,
         "n_max": b.n_max, "m_max": b.m_max},
    )
