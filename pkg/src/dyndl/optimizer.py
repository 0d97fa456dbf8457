"""Period and speed-factor optimization.

Single-mode: minimize average dynamic power (idle term dropped; valid
whenever some task runs above s_min) subject to the utilization bound
and per-path end-to-end constraints sum 2*p_i <= d. Multi-mode: one
period matrix row per mode with shared per-task utilizations u_i*, so
each task's utilization is identical across modes and mode changes
never break schedulability. Speeds are recovered as
s_i^j = e_i / (p_i^j * u_i*).

Solved as geometric programs in seconds; results are snapped back to
integer-nanosecond periods (rounded down, which only shortens paths)
with speeds recomputed to preserve utilizations exactly. Discrete
frequency ladders quantize each speed up to the nearest level, which
can only lower actual utilization.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

from .errors import (
    InconsistentTable,
    InfeasibleDeadline,
    InvalidRange,
    NoLevelAbove,
    SolverFailure,
    SpeedOutOfRange,
)
from .gp import GPOptions, GPProblem, INFEASIBLE, OPTIMAL, Posynomial, monomial, solve_gp
from .power import PowerParams, SystemConfig
from .taskgraph import Path, TaskGraph, enumerate_paths

NS_PER_S = 1_000_000_000
NS_PER_US = 1_000
NS_PER_MS = 1_000_000

UTIL_REL_TOL = 1e-9
SPEED_TOL = 1e-9


@dataclass(frozen=True)
class FrequencyLadder:
    """Discrete speed factors f_k / f_max, increasing, topping out at 1."""

    levels: tuple[float, ...]

    def __post_init__(self):
        if not self.levels:
            raise InvalidRange("ladder needs at least one level")
        for a, b in zip(self.levels, self.levels[1:]):
            if b <= a:
                raise InvalidRange("ladder levels must be strictly increasing")
        if not (0.0 < self.levels[0] and self.levels[-1] == 1.0):
            raise InvalidRange("ladder levels must lie in (0, 1] and end at 1.0")

    @classmethod
    def evenly_spaced(cls, f_min_mhz: float, f_max_mhz: float, count: int) -> "FrequencyLadder":
        if count < 1 or f_min_mhz <= 0 or f_max_mhz < f_min_mhz:
            raise InvalidRange("bad ladder spec")
        if count == 1:
            return cls((1.0,))
        step = (f_max_mhz - f_min_mhz) / (count - 1)
        freqs = [f_min_mhz + k * step for k in range(count - 1)] + [f_max_mhz]
        return cls(tuple(f / f_max_mhz for f in freqs))

    @property
    def s_min(self) -> float:
        return self.levels[0]

    def round_up(self, s: float) -> float:
        """Smallest level >= s (the safe direction for utilization)."""
        if s > 1.0 + 1e-12:
            raise NoLevelAbove(f"speed factor {s} above 1")
        for level in self.levels:
            if level >= s - 1e-12:
                return level
        return 1.0


@dataclass(frozen=True)
class ModeTable:
    """Per-mode periods and speeds plus the shared per-task utilizations."""

    mode_deadlines_ns: tuple[int, ...]
    periods_ns: tuple[tuple[int, ...], ...]
    speeds: tuple[tuple[float, ...], ...]
    utilizations: tuple[float, ...]
    quantized: bool = False

    @property
    def mode_count(self) -> int:
        return len(self.mode_deadlines_ns)

    @property
    def n(self) -> int:
        return len(self.utilizations)

    def mode_config(self, mode: int) -> SystemConfig:
        """SystemConfig of 1-based mode index."""
        return SystemConfig(self.periods_ns[mode - 1], self.speeds[mode - 1])

    def validate(self, graph: TaskGraph, paths: list[Path], s_min: float) -> None:
        """Raise InconsistentTable unless every structural invariant holds."""
        m, n = self.mode_count, self.n
        if n != graph.n:
            raise InconsistentTable(f"table for {n} tasks, graph has {graph.n}")
        if len(self.periods_ns) != m or len(self.speeds) != m:
            raise InconsistentTable("matrix row count != mode count")
        if sum(self.utilizations) > 1.0 + UTIL_REL_TOL:
            raise InconsistentTable("sum of utilizations exceeds 1")
        e = graph.wcets_ns()
        for j in range(m):
            if len(self.periods_ns[j]) != n or len(self.speeds[j]) != n:
                raise InconsistentTable(f"mode {j + 1} row has wrong width")
            for i in range(n):
                p, s, u = self.periods_ns[j][i], self.speeds[j][i], self.utilizations[i]
                if not (s_min - SPEED_TOL) <= s <= 1.0 + 1e-12:
                    raise InconsistentTable(f"speed {s} outside [{s_min}, 1] at mode {j + 1}")
                actual = e[i] / (p * s)
                if self.quantized:
                    if actual > u * (1.0 + UTIL_REL_TOL):
                        raise InconsistentTable("quantized utilization above the shared ceiling")
                elif abs(actual - u) > UTIL_REL_TOL * u:
                    raise InconsistentTable(
                        f"utilization invariability broken at task {i + 1}, mode {j + 1}"
                    )
                if j and p < self.periods_ns[j - 1][i]:
                    raise InconsistentTable(f"period of task {i + 1} shrinks at mode {j + 1}")
            for path in paths:
                if sum(2 * self.periods_ns[j][i - 1] for i in path) > self.mode_deadlines_ns[j]:
                    raise InconsistentTable(f"path {list(path)} misses deadline of mode {j + 1}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode_deadlines_ns": list(self.mode_deadlines_ns),
                "periods_ns": [list(r) for r in self.periods_ns],
                "speeds": [list(r) for r in self.speeds],
                "utilizations": list(self.utilizations),
                "quantized": self.quantized,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModeTable":
        doc = json.loads(text)
        return cls(
            mode_deadlines_ns=tuple(int(d) for d in doc["mode_deadlines_ns"]),
            periods_ns=tuple(tuple(int(p) for p in row) for row in doc["periods_ns"]),
            speeds=tuple(tuple(float(s) for s in row) for row in doc["speeds"]),
            utilizations=tuple(float(u) for u in doc["utilizations"]),
            quantized=bool(doc.get("quantized", False)),
        )


def _path_index_lists(paths: list[Path]) -> list[list[int]]:
    return [[i - 1 for i in path] for path in paths]


def _snap_period(p_s: float, e_ns: int, u: float) -> tuple[int, float]:
    """Integer period (floor to whole ns) and speed preserving e/(p*s) = u.

    Flooring only shortens paths, so deadline constraints survive; the
    recomputed speed can cross 1 by at most ~1e-9 relative, in which
    case it is capped (utilization drifts by the same sliver).
    """
    p_ns = max(1, int(p_s * NS_PER_S))
    s = e_ns / (p_ns * u)
    if s > 1.0:
        s = 1.0
    return p_ns, s


def _solve_or_raise(problem: GPProblem, options: GPOptions | None):
    sol = solve_gp(problem, options)
    if sol.status == INFEASIBLE:
        raise InfeasibleDeadline("no configuration satisfies utilization and path constraints")
    if sol.status != OPTIMAL:
        raise SolverFailure(f"solver returned {sol.status}")
    return sol


def _check_deadline_fits(e_ns, paths_idx, deadline_ns):
    for idx in paths_idx:
        if 2 * sum(e_ns[i] for i in idx) > deadline_ns:
            raise InfeasibleDeadline(
                "a path cannot meet the deadline even at full speed and p = e"
            )


def optimize_single_mode(
    graph: TaskGraph,
    params: PowerParams,
    deadline_ns: int,
    options: GPOptions | None = None,
    s_floor: float | None = None,
) -> SystemConfig:
    """Energy-optimal (p_i, s_i) for one fixed end-to-end deadline.

    s_floor widens the speed box below params.s_min; the d_max search
    uses it to observe where the unconstrained optimum crosses s_min.
    """
    if deadline_ns <= 0:
        raise InvalidRange("deadline must be positive")
    paths = enumerate_paths(graph)
    paths_idx = _path_index_lists(paths)
    n = graph.n
    e_ns = graph.wcets_ns()
    e = [w / NS_PER_S for w in e_ns]
    d = deadline_ns / NS_PER_S
    _check_deadline_fits(e_ns, paths_idx, deadline_ns)
    lo_s = s_floor if s_floor is not None else params.s_min
    g = params.gamma

    # vars: p_0..p_{n-1}, then s_0..s_{n-1}
    objective = Posynomial.make([(e[i], {i: -1.0, n + i: g - 1.0}) for i in range(n)])
    constraints = [Posynomial.make([(e[i], {i: -1.0, n + i: -1.0}) for i in range(n)])]
    for idx in paths_idx:
        constraints.append(Posynomial.make([(2.0 / d, {i: 1.0}) for i in idx]))
    lower = tuple(0.5 * e[i] for i in range(n)) + tuple(lo_s for _ in range(n))
    upper = tuple(d / 2.0 for _ in range(n)) + tuple(1.0 for _ in range(n))
    problem = GPProblem(2 * n, objective, tuple(constraints), lower, upper)
    sol = _solve_or_raise(problem, options)

    p_cont = sol.values[:n]
    s_cont = sol.values[n:]
    if max(s_cont) <= lo_s * (1.0 + 1e-6) and lo_s >= params.s_min:
        warnings.warn(
            "all speed factors collapsed to s_min; the deadline is beyond the "
            "useful DVFS range and relaxing it further saves no dynamic energy",
            stacklevel=2,
        )
    periods = []
    speeds = []
    for i in range(n):
        u_i = e[i] / (p_cont[i] * s_cont[i])
        p_ns, s = _snap_period(p_cont[i], e_ns[i], u_i)
        periods.append(p_ns)
        speeds.append(min(max(s, lo_s), 1.0))
    return SystemConfig(periods_ns=tuple(periods), speeds=tuple(speeds))


def optimize_multi_mode(
    graph: TaskGraph,
    params: PowerParams,
    mode_deadlines_ns: list[int] | tuple[int, ...],
    options: GPOptions | None = None,
) -> ModeTable:
    """Joint solve of all modes under per-task utilization invariability."""
    deadlines = tuple(int(d) for d in mode_deadlines_ns)
    if not deadlines or any(b <= a for a, b in zip(deadlines, deadlines[1:])):
        raise InvalidRange("mode deadlines must be strictly increasing")
    paths = enumerate_paths(graph)
    paths_idx = _path_index_lists(paths)
    n = graph.n
    m = len(deadlines)
    e_ns = graph.wcets_ns()
    e = [w / NS_PER_S for w in e_ns]
    _check_deadline_fits(e_ns, paths_idx, deadlines[0])
    g = params.gamma

    def pvar(j, i):
        return j * n + i

    def uvar(i):
        return m * n + i

    objective = Posynomial.make(
        [
            (e[i] ** g, {pvar(j, i): -g, uvar(i): -(g - 1.0)})
            for j in range(m)
            for i in range(n)
        ]
    )
    constraints = [Posynomial.make([(1.0, {uvar(i): 1.0}) for i in range(n)])]
    for j, d_ns in enumerate(deadlines):
        d = d_ns / NS_PER_S
        for idx in paths_idx:
            constraints.append(Posynomial.make([(2.0 / d, {pvar(j, i): 1.0}) for i in idx]))
    for j in range(m):
        for i in range(n):
            # s_i^j = e_i / (p_i^j u_i) <= 1
            constraints.append(monomial(e[i], {pvar(j, i): -1.0, uvar(i): -1.0}))

    lower = [0.5 * e[i] for j in range(m) for i in range(n)]
    upper = [deadlines[j] / NS_PER_S / 2.0 for j in range(m) for i in range(n)]
    lower += [e[i] * 2.0 / (deadlines[-1] / NS_PER_S) * 1e-3 for i in range(n)]
    upper += [1.0] * n
    problem = GPProblem(m * n + n, objective, tuple(constraints), tuple(lower), tuple(upper))
    sol = _solve_or_raise(problem, options)

    u = [float(v) for v in sol.values[m * n:]]
    total_u = sum(u)
    if total_u > 1.0:
        u = [v / total_u for v in u]  # shed solver fuzz on the boundary
    periods = []
    speeds = []
    for j in range(m):
        row_p = []
        row_s = []
        for i in range(n):
            p_ns, s = _snap_period(float(sol.values[pvar(j, i)]), e_ns[i], u[i])
            if j and p_ns < periods[j - 1][i]:
                p_ns = periods[j - 1][i]
                s = e_ns[i] / (p_ns * u[i])
            if s < params.s_min - SPEED_TOL:
                raise SpeedOutOfRange(
                    f"recovered speed {s:.6f} below s_min={params.s_min} at mode {j + 1}; "
                    "the longest mode deadline lies beyond the s_min-bounded range"
                )
            row_p.append(p_ns)
            row_s.append(min(s, 1.0))
        periods.append(tuple(row_p))
        speeds.append(tuple(row_s))
    table = ModeTable(
        mode_deadlines_ns=deadlines,
        periods_ns=tuple(periods),
        speeds=tuple(speeds),
        utilizations=tuple(u),
        quantized=False,
    )
    table.validate(graph, paths, params.s_min)
    return table


def quantize_speeds(table: ModeTable, ladder: FrequencyLadder) -> ModeTable:
    """Replace each speed with the nearest ladder level at or above it.

    Periods stay put, so every end-to-end constraint still holds, and
    each task's actual utilization can only drop below its shared
    ceiling u_i*.
    """
    speeds = tuple(
        tuple(ladder.round_up(s) for s in row) for row in table.speeds
    )
    return replace(table, speeds=speeds, quantized=True)


def derive_dmax(
    graph: TaskGraph,
    params: PowerParams,
    resolution_ns: int = NS_PER_MS,
    options: GPOptions | None = None,
) -> int:
    """Longest useful deadline: beyond it the optimum pins every speed at s_min.

    Located by bisection over the deadline at the given resolution
    (default 1 ms), probing single-mode solves with the speed box opened
    below s_min so the crossing is observable.
    """
    paths = enumerate_paths(graph)
    paths_idx = _path_index_lists(paths)
    e_ns = graph.wcets_ns()
    e = [w / NS_PER_S for w in e_ns]

    # reference solve of the period-only relaxation to bracket the search
    d_ref = max(20.0 * sum(e), 1e-3)
    n = graph.n
    objective = Posynomial.make([(e[i], {i: -1.0}) for i in range(n)])
    constraints = tuple(
        Posynomial.make([(2.0 / d_ref, {i: 1.0}) for i in idx]) for idx in paths_idx
    )
    problem = GPProblem(
        n, objective, constraints,
        tuple(0.5 * e[i] for i in range(n)), tuple(d_ref / 2.0 for _ in range(n)),
    )
    sol = _solve_or_raise(problem, options)
    w_ref = sol.objective_value
    d_tight_ns = w_ref * d_ref * NS_PER_S  # utilization-1 deadline; W scales as 1/d

    s_floor = min(params.s_min * 1e-2, params.s_min)

    def speeds_reach_smin(d_ns: int) -> bool:
        try:
            cfg = optimize_single_mode(graph, params, d_ns, options, s_floor=s_floor)
        except InfeasibleDeadline:
            return True  # below the feasible range; d_max lies above
        return max(cfg.speeds) >= params.s_min * (1.0 - 1e-6)

    res = max(1, int(resolution_ns))
    # the reduced solve overestimates W* by at most rel_tolerance, so the
    # floored estimate cannot land above the true utilization-1 deadline
    lo = max(res, int(d_tight_ns) // res * res)
    if not speeds_reach_smin(lo):
        return lo  # degenerate ladder (s_min ~ 1): tightest feasible deadline
    hi = lo
    cap = int(d_tight_ns / params.s_min * 4.0) + res
    while speeds_reach_smin(hi) and hi < cap:
        lo = hi
        hi *= 2
    while hi - lo > res:
        mid = (lo + hi) // 2 // res * res
        if mid <= lo:
            break
        if speeds_reach_smin(mid):
            lo = mid
        else:
            hi = mid
    return lo


def static_table(
    graph: TaskGraph,
    params: PowerParams,
    d_min_ns: int,
    options: GPOptions | None = None,
) -> ModeTable:
    """Single-mode table optimized for the shortest deadline (Static method)."""
    cfg = optimize_single_mode(graph, params, d_min_ns, options)
    e = graph.wcets_ns()
    u = tuple(e[i] / (cfg.periods_ns[i] * cfg.speeds[i]) for i in range(graph.n))
    table = ModeTable(
        mode_deadlines_ns=(int(d_min_ns),),
        periods_ns=(cfg.periods_ns,),
        speeds=(cfg.speeds,),
        utilizations=u,
    )
    table.validate(graph, enumerate_paths(graph), params.s_min)
    return table


def baseline_table(graph: TaskGraph, params: PowerParams, static: ModeTable) -> ModeTable:
    """No-DVFS comparison method: full speed, periods saturating utilization.

    Derived from the static solve by scaling its periods down by its
    full-speed utilization, which keeps every path constraint satisfied
    and lands total utilization at 1.
    """
    from .power import saturated_full_speed_config

    cfg = saturated_full_speed_config(static.mode_config(1), graph)
    e = graph.wcets_ns()
    u = tuple(e[i] / cfg.periods_ns[i] for i in range(graph.n))
    table = ModeTable(
        mode_deadlines_ns=static.mode_deadlines_ns,
        periods_ns=(cfg.periods_ns,),
        speeds=(cfg.speeds,),
        utilizations=u,
    )
    table.validate(graph, enumerate_paths(graph), params.s_min)
    return table
