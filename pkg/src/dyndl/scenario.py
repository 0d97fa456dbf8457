"""Velocity traces: CSV ingestion, unit conversion, resampling, synthesis.

Scenario CSV schema is `t_s,velocity` with a header row; velocities are
stored internally in m/s with integer-nanosecond timestamps. Between
samples the velocity is held constant (zero-order hold), matching the
simulator's interpretation.
"""

from __future__ import annotations

import csv
import math
import random
from bisect import bisect_right
from dataclasses import dataclass

from .errors import (
    EmptyScenario,
    InvalidParams,
    NegativeVelocity,
    NonMonotonicTime,
    ParseError,
)

NS_PER_S = 1_000_000_000
KMH_PER_MPS = 3.6

# d(v) below v_max cannot be guaranteed by any mode; reject as bad data
DEFAULT_V_MAX_MPS = 40.0


@dataclass(frozen=True)
class Scenario:
    samples: tuple[tuple[int, float], ...]  # (timestamp ns, velocity m/s)
    name: str = "scenario"

    def __post_init__(self):
        if not self.samples:
            raise EmptyScenario(self.name)
        last = None
        for t, v in self.samples:
            if last is not None and t <= last:
                raise NonMonotonicTime(f"{self.name}: t={t} after t={last}")
            if v < 0:
                raise NegativeVelocity(f"{self.name}: v={v}")
            last = t

    @property
    def span_ns(self) -> int:
        return self.samples[-1][0] - self.samples[0][0]

    def velocity_at(self, t_ns: int) -> float:
        """Zero-order hold; clamps before the first sample."""
        times = [s[0] for s in self.samples]
        i = bisect_right(times, t_ns) - 1
        return self.samples[max(0, i)][1]


class _Hold:
    """Reusable zero-order-hold cursor over a scenario (monotone queries)."""

    def __init__(self, scenario: Scenario):
        self.samples = scenario.samples
        self.i = 0

    def at(self, t_ns: int) -> float:
        while self.i + 1 < len(self.samples) and self.samples[self.i + 1][0] <= t_ns:
            self.i += 1
        return self.samples[self.i][1]


def hold_cursor(scenario: Scenario) -> _Hold:
    return _Hold(scenario)


def load_scenario(path, units: str = "mps", v_max_mps: float = DEFAULT_V_MAX_MPS) -> Scenario:
    """Parse a `t_s,velocity` CSV; units is "mps" or "kmh"."""
    if units not in ("mps", "kmh"):
        raise InvalidParams(f"unknown units {units!r}")
    scale = 1.0 if units == "mps" else 1.0 / KMH_PER_MPS
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: empty file")
    start = 1 if rows[0] and rows[0][0].strip().lower() in ("t_s", "t", "time") else 0
    if len(rows) <= start:
        raise ParseError(f"{path}: no data rows")
    for rownum, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise ParseError(f"{path}: expected t_s,velocity", row=rownum)
        try:
            t_s = float(row[0])
        except ValueError:
            raise ParseError(f"{path}: bad timestamp {row[0]!r}", row=rownum, column=1)
        try:
            v = float(row[1]) * scale
        except ValueError:
            raise ParseError(f"{path}: bad velocity {row[1]!r}", row=rownum, column=2)
        if v > v_max_mps:
            raise InvalidParams(
                f"{path}: velocity {v:.2f} m/s above the physical ceiling {v_max_mps}"
            )
        samples.append((round(t_s * NS_PER_S), v))
    name = str(path).rsplit("/", 1)[-1].removesuffix(".csv")
    return Scenario(samples=tuple(samples), name=name)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "velocity"])
        for t, v in scenario.samples:
            writer.writerow([repr(t / NS_PER_S), repr(v)])


def resample(scenario: Scenario, dt_ns: int) -> Scenario:
    """Zero-order-hold resampling onto a uniform grid from the first timestamp."""
    if dt_ns <= 0:
        raise InvalidParams("dt must be positive")
    t0 = scenario.samples[0][0]
    end = scenario.samples[-1][0]
    cursor = _Hold(scenario)
    samples = []
    t = t0
    while t <= end:
        samples.append((t, cursor.at(t)))
        t += dt_ns
    if not samples:
        samples = [scenario.samples[0]]
    return Scenario(samples=tuple(samples), name=scenario.name)


def _check_velocity(v: float):
    if not 0.0 <= v <= DEFAULT_V_MAX_MPS:
        raise InvalidParams(f"velocity {v} outside [0, {DEFAULT_V_MAX_MPS}] m/s")


def synthesize_constant(v_mps: float, horizon_ns: int, dt_ns: int = NS_PER_S) -> Scenario:
    _check_velocity(v_mps)
    if horizon_ns <= 0 or dt_ns <= 0:
        raise InvalidParams("horizon and dt must be positive")
    samples = [(t, v_mps) for t in range(0, horizon_ns + 1, dt_ns)]
    if samples[-1][0] < horizon_ns:
        samples.append((horizon_ns, v_mps))
    return Scenario(tuple(samples), name=f"constant-{v_mps:g}mps")


def synthesize_ramp(v0_mps: float, v1_mps: float, horizon_ns: int,
                    dt_ns: int = NS_PER_S) -> Scenario:
    _check_velocity(v0_mps)
    _check_velocity(v1_mps)
    if horizon_ns <= 0 or dt_ns <= 0:
        raise InvalidParams("horizon and dt must be positive")
    samples = []
    for t in range(0, horizon_ns + 1, dt_ns):
        frac = t / horizon_ns
        samples.append((t, v0_mps + (v1_mps - v0_mps) * frac))
    if samples[-1][0] < horizon_ns:
        samples.append((horizon_ns, v1_mps))
    return Scenario(tuple(samples), name=f"ramp-{v0_mps:g}-{v1_mps:g}mps")


def synthesize_square(v_lo_mps: float, v_hi_mps: float, period_ns: int,
                      horizon_ns: int) -> Scenario:
    _check_velocity(v_lo_mps)
    _check_velocity(v_hi_mps)
    if horizon_ns <= 0 or period_ns <= 1:
        raise InvalidParams("horizon and period must be positive")
    half = period_ns // 2
    samples = []
    t = 0
    low = True
    while t <= horizon_ns:
        samples.append((t, v_lo_mps if low else v_hi_mps))
        low = not low
        t += half
    if samples[-1][0] < horizon_ns:
        samples.append((horizon_ns, samples[-1][1]))
    return Scenario(tuple(samples), name=f"square-{v_lo_mps:g}-{v_hi_mps:g}mps")


def synthesize_random(seed: int, horizon_ns: int, v_max_mps: float = 31.0,
                      min_hold_s: float = 2.0, max_hold_s: float = 8.0) -> Scenario:
    """Piecewise-constant random velocities; deterministic for a given seed.

    The default ceiling sits just below the velocity of the shortest
    design deadline so every instantaneous requirement stays satisfiable.
    """
    if horizon_ns <= 0:
        raise InvalidParams("horizon must be positive")
    _check_velocity(v_max_mps)
    rng = random.Random(seed)
    samples = []
    t = 0
    while t <= horizon_ns:
        v = rng.uniform(0.0, v_max_mps)
        samples.append((t, v))
        t += round(rng.uniform(min_hold_s, max_hold_s) * NS_PER_S)
    if samples[-1][0] < horizon_ns:
        samples.append((horizon_ns, samples[-1][1]))
    return Scenario(tuple(samples), name=f"random-{seed}")


def synthesize(kind: str, horizon_ns: int, **kwargs) -> Scenario:
    """Dispatch by kind: constant | ramp | square | random."""
    if kind == "constant":
        return synthesize_constant(kwargs["v"], horizon_ns, kwargs.get("dt_ns", NS_PER_S))
    if kind == "ramp":
        return synthesize_ramp(kwargs["v0"], kwargs["v1"], horizon_ns,
                               kwargs.get("dt_ns", NS_PER_S))
    if kind == "square":
        return synthesize_square(kwargs["v_lo"], kwargs["v_hi"],
                                 kwargs["period_ns"], horizon_ns)
    if kind == "random":
        return synthesize_random(kwargs.get("seed", 0), horizon_ns)
    raise InvalidParams(f"unknown scenario kind {kind!r}")
