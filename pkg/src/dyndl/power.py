"""CPU power model: P(s) = beta + alpha * s^gamma.

Average power while a task with WCET e and period p runs at speed s is
alpha * s^(gamma-1) * e / p (the s^gamma draw over the stretched
execution window e/s, amortized per period). Idle time is spent at
s_min. Times enter in integer nanoseconds and are converted to seconds
at this boundary; power is in milliwatts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DimensionMismatch, InvalidSpeed, Overutilized
from .taskgraph import TaskGraph

NS_PER_S = 1_000_000_000

# fitted on the reference automotive platform; milliwatts, s dimensionless
DEFAULT_ALPHA_MW = 842.04
DEFAULT_BETA_MW = 232.81
DEFAULT_GAMMA = 2.64
DEFAULT_S_MIN = 345.0 / 2000.0


@dataclass(frozen=True)
class PowerParams:
    alpha_mw: float = DEFAULT_ALPHA_MW
    beta_mw: float = DEFAULT_BETA_MW
    gamma: float = DEFAULT_GAMMA
    s_min: float = DEFAULT_S_MIN

    def __post_init__(self):
        if self.alpha_mw <= 0:
            raise InvalidSpeed("alpha must be positive")
        if self.beta_mw < 0:
            raise InvalidSpeed("beta must be nonnegative")
        if not 2.0 <= self.gamma <= 3.0:
            raise InvalidSpeed(f"gamma must lie in [2, 3], got {self.gamma}")
        if not 0.0 < self.s_min <= 1.0:
            raise InvalidSpeed(f"s_min must lie in (0, 1], got {self.s_min}")

    def busy_power_mw(self, s: float) -> float:
        """Instantaneous draw while executing at speed s."""
        return self.beta_mw + self.alpha_mw * s ** self.gamma

    def idle_power_mw(self) -> float:
        return self.busy_power_mw(self.s_min)


@dataclass(frozen=True)
class SystemConfig:
    """One period/speed assignment (p_i, s_i) per task."""

    periods_ns: tuple[int, ...]
    speeds: tuple[float, ...]

    def __post_init__(self):
        if len(self.periods_ns) != len(self.speeds):
            raise DimensionMismatch("periods and speeds differ in length")
        for p in self.periods_ns:
            if p <= 0:
                raise DimensionMismatch("periods must be positive")

    @property
    def n(self) -> int:
        return len(self.periods_ns)

    def check_speeds(self, s_min: float, tol: float = 1e-9) -> None:
        for s in self.speeds:
            if not (s_min - tol) <= s <= 1.0 + tol:
                raise InvalidSpeed(f"speed {s} outside [{s_min}, 1]")


def _check_dims(config: SystemConfig, graph: TaskGraph) -> None:
    if config.n != graph.n:
        raise DimensionMismatch(
            f"config has {config.n} tasks, graph has {graph.n}"
        )


def utilization(config: SystemConfig, graph: TaskGraph) -> float:
    """L&L utilization sum e_i / (p_i * s_i) under EDF."""
    _check_dims(config, graph)
    return sum(
        t.wcet_ns / (p * s)
        for t, p, s in zip(graph.tasks, config.periods_ns, config.speeds)
    )


def task_avg_power(e_ns: int, p_ns: int, s: float, params: PowerParams) -> float:
    """Average dynamic power of one task in mW: alpha * s^(gamma-1) * e/p."""
    if p_ns <= 0:
        raise DimensionMismatch("period must be positive")
    if not params.s_min - 1e-9 <= s <= 1.0 + 1e-9:
        raise InvalidSpeed(f"speed {s} outside [{params.s_min}, 1]")
    return params.alpha_mw * s ** (params.gamma - 1.0) * (e_ns / p_ns)


def dynamic_power(config: SystemConfig, graph: TaskGraph, params: PowerParams) -> float:
    """Busy dynamic power in mW: alpha * sum s_i^(gamma-1) e_i/p_i."""
    _check_dims(config, graph)
    return sum(
        task_avg_power(t.wcet_ns, p, s, params)
        for t, p, s in zip(graph.tasks, config.periods_ns, config.speeds)
    )


def system_avg_power(config: SystemConfig, graph: TaskGraph, params: PowerParams) -> float:
    """Total average power in mW including static draw and idle at s_min."""
    u = utilization(config, graph)
    if u > 1.0 + 1e-9:
        raise Overutilized(f"utilization {u:.6f} exceeds 1")
    idle = params.alpha_mw * params.s_min ** params.gamma * (1.0 - min(u, 1.0))
    return params.beta_mw + dynamic_power(config, graph, params) + idle


def normalized_dynamic_power(config: SystemConfig, graph: TaskGraph, params: PowerParams) -> float:
    """Dynamic power relative to a fully loaded CPU at full speed.

    The reference is alpha (s = 1, 100% busy), which is exactly the
    dynamic power of the no-DVFS configuration whose periods saturate
    the utilization bound; that configuration normalizes to 100% by
    construction.
    """
    return dynamic_power(config, graph, params) / params.alpha_mw


def saturated_full_speed_config(config: SystemConfig, graph: TaskGraph) -> SystemConfig:
    """All speeds 1 with periods shrunk so utilization is exactly 1.

    This is the comparison baseline: the fastest schedulable full-speed
    system. Scaling every period by U(s=1) only shortens paths, so any
    end-to-end constraint the input satisfied still holds.
    """
    _check_dims(config, graph)
    w = sum(t.wcet_ns / p for t, p in zip(graph.tasks, config.periods_ns))
    # ceil keeps the scaled utilization at or below 1
    periods = tuple(
        max(t.wcet_ns, math.ceil(p * w)) for t, p in zip(graph.tasks, config.periods_ns)
    )
    return SystemConfig(periods_ns=periods, speeds=tuple(1.0 for _ in periods))
