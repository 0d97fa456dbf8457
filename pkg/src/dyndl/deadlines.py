"""Velocity-to-deadline mapping and mode partitioning.

The deadline for velocity v is the minimum time to advance a fixed
distance lam under maximum acceleration a_max:

    d(v) = (-v + sqrt(v^2 + 2*lam*a_max)) / a_max

which is strictly decreasing in v. The feasible deadline range
[d_min, d_max] is split into equal-length segments; each mode is named
by the shortest deadline of its segment, which is the deadline the mode
guarantees while active.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .errors import InvalidRange, NegativeVelocity

NS_PER_S = 1_000_000_000


@dataclass(frozen=True)
class DeadlineMap:
    lambda_m: float
    a_max_mps2: float
    d_min_ns: int
    d_max_ns: int
    mode_deadlines_ns: tuple[int, ...]

    def __post_init__(self):
        if self.lambda_m <= 0 or self.a_max_mps2 <= 0:
            raise InvalidRange("lambda and a_max must be positive")
        if not self.d_min_ns < self.d_max_ns:
            raise InvalidRange("d_min must be below d_max")
        if not self.mode_deadlines_ns:
            raise InvalidRange("need at least one mode")
        if self.mode_deadlines_ns[0] != self.d_min_ns:
            raise InvalidRange("first mode deadline must equal d_min")
        for a, b in zip(self.mode_deadlines_ns, self.mode_deadlines_ns[1:]):
            if b <= a:
                raise InvalidRange("mode deadlines must be strictly increasing")
        if self.mode_deadlines_ns[-1] > self.d_max_ns:
            raise InvalidRange("mode deadlines must stay within d_max")

    @property
    def mode_count(self) -> int:
        return len(self.mode_deadlines_ns)

    @classmethod
    def build(cls, lambda_m, a_max_mps2, d_min_ns, d_max_ns, mode_count) -> "DeadlineMap":
        return cls(
            lambda_m=lambda_m,
            a_max_mps2=a_max_mps2,
            d_min_ns=d_min_ns,
            d_max_ns=d_max_ns,
            mode_deadlines_ns=tuple(partition_modes(d_min_ns, d_max_ns, mode_count)),
        )


def velocity_deadline_ns(v_mps: float, lambda_m: float, a_max_mps2: float) -> int:
    """d(v) in nanoseconds without a full DeadlineMap (e.g. to find d_min)."""
    if v_mps < 0:
        raise NegativeVelocity(f"v = {v_mps} m/s")
    d_s = (-v_mps + math.sqrt(v_mps * v_mps + 2.0 * lambda_m * a_max_mps2)) / a_max_mps2
    return round(d_s * NS_PER_S)


def deadline_from_velocity(v_mps: float, dmap: DeadlineMap) -> int:
    """Dynamic deadline d(v) in nanoseconds for velocity v in m/s."""
    return velocity_deadline_ns(v_mps, dmap.lambda_m, dmap.a_max_mps2)


def partition_modes(d_min_ns: int, d_max_ns: int, mode_count: int) -> list[int]:
    """Mode deadlines d^j = d_min + (j-1)*(d_max-d_min)/m for j = 1..m.

    Each mode guarantees the lower bound of its segment. Computed in
    integer nanoseconds (floor), so d^1 == d_min exactly.
    """
    if mode_count < 1:
        raise InvalidRange("mode count must be >= 1")
    if not d_min_ns < d_max_ns:
        raise InvalidRange("d_min must be below d_max")
    span = d_max_ns - d_min_ns
    if span < mode_count:
        raise InvalidRange("range too narrow for the requested mode count")
    return [d_min_ns + ((j - 1) * span) // mode_count for j in range(1, mode_count + 1)]


def select_mode(d_ns: int, dmap: DeadlineMap) -> int:
    """Largest mode j (1-based) whose guaranteed deadline is <= d.

    Clamps: below d^1 the tightest available mode 1 is returned (the
    instantaneous requirement cannot be guaranteed and the simulator
    records it); above the top segment, mode m.
    """
    j = bisect_right(dmap.mode_deadlines_ns, d_ns)
    return max(1, j)
