"""Exact sizing by scanning battery counts and searching module counts."""

from __future__ import annotations

from ..errors import InfeasibleError
from .problem import SizingSolution, count_outages, search_bounds, simulate_battery


def _min_feasible_n(problem, m, n_max, n_cap):
    """Smallest n in [0, min(n_max, n_cap)] feasible with m batteries, or None."""
    K = problem.max_outage_hours
    hi = min(n_max, n_cap)
    if hi < 0:
        return None

    def ok(n):
        return count_outages(problem, n, m, K) <= K

    if K == 0:
        # with no outages allowed, more modules can only raise the trajectory
        if not ok(hi):
            return None
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo
    # load shedding breaks trajectory monotonicity; scan instead
    for n in range(hi + 1):
        if ok(n):
            return n
    return None


def optimize_enumeration(problem, bounds=None):
    """Minimum-cost ``(n, m)`` with at most ``max_outage_hours`` outages.

    Ties on cost go to the smaller n, then the smaller m.
    """
    b = bounds or search_bounds(problem)
    best = None
    evaluated = 0
    for m in range(1, b.m_max + 1):
        base = problem.cost(0, m)
        if best is not None and base > best[0]:
            break
        n_cap = b.n_max
        if best is not None:
            # a module count costing more than the incumbent cannot win
            n_cap = min(n_cap, int((best[0] - base) / problem.pv_unit_cost) + 1)
        n = _min_feasible_n(problem, m, b.n_max, n_cap)
        evaluated += 1
        if n is None:
            continue
        c = problem.cost(n, m)
        if best is None or c < best[0] or (c == best[0] and n < best[1]):
            best = (c, n, m)
    if best is None:
        raise InfeasibleError(
            f"no feasible configuration with n <= {b.n_max}, m <= {b.m_max}",
            block="search_bounds",
            bounds={"n_max": b.n_max, "m_max": b.m_max},
        )
    c, n, m = best
    trace = simulate_battery(problem, n, m)
    return SizingSolution(n, m, c, trace.outage_hours, trace, "enumeration",
                          {"n_max": b.n_max, "m_max": b.m_max, "m_evaluated": evaluated})
