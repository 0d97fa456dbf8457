"""Design-time mode-change delay analysis.

Relaxing transitions (longer deadline) use the ALAP protocol: each task
switches only after the new-epoch data reached all of its inputs, so a
fresh sample pays at most 2*max(p_old, p_new) per hop, which the new
mode's deadline covers. Shrinking transitions use AEAP: every task
switches at its first release after the trigger, and a persisting
old-period instance can hide the delay accumulated so far, resetting it
to p_old + p_new at that hop. The worst case over release phasings is
accumulated hop by hop:

    D <- p_old[first] + p_new[first]
    for each later task i on the path:
        D <- D + 2*p_new[i]      if D > p_old[i] - p_new[i]
        D <- p_old[i] + p_new[i] otherwise

The full m x m matrix of these bounds is what an operator consults when
budgeting safety margins; margin selection itself is out of scope.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .errors import NotRelaxing, NotShrinking
from .optimizer import ModeTable
from .taskgraph import Path

RELAXING = "relaxing"
SHRINKING = "shrinking"


@dataclass(frozen=True)
class TransitionAnalysis:
    from_mode: int
    to_mode: int
    direction: str
    worst_delay_ns: int
    bound_deadline_ns: int

    @property
    def margin_ns(self) -> int:
        """Slack of the governing deadline; negative means unavoidable excess."""
        return self.bound_deadline_ns - self.worst_delay_ns


def alap_worst_delay(
    old_periods_ns: Sequence[int],
    new_periods_ns: Sequence[int],
    paths: Sequence[Path],
) -> int:
    """Worst new-data delay across paths for a relaxing (ALAP) change."""
    for po, pn in zip(old_periods_ns, new_periods_ns):
        if po > pn:
            raise NotRelaxing(f"old period {po} exceeds new period {pn}")
    return max(
        sum(2 * max(old_periods_ns[i - 1], new_periods_ns[i - 1]) for i in path)
        for path in paths
    )


def aeap_worst_delay(
    old_periods_ns: Sequence[int],
    new_periods_ns: Sequence[int],
    path: Path,
) -> int:
    """Worst new-data delay along one path for a shrinking (AEAP) change."""
    for po, pn in zip(old_periods_ns, new_periods_ns):
        if po < pn:
            raise NotShrinking(f"old period {po} below new period {pn}")
    ids = list(path)
    first = ids[0] - 1
    delay = old_periods_ns[first] + new_periods_ns[first]
    for tid in ids[1:]:
        i = tid - 1
        if delay > old_periods_ns[i] - new_periods_ns[i]:
            delay += 2 * new_periods_ns[i]
        else:
            delay = old_periods_ns[i] + new_periods_ns[i]
    return delay


def worst_transition_delay(
    old_periods_ns: Sequence[int],
    new_periods_ns: Sequence[int],
    paths: Sequence[Path],
) -> tuple[str, int]:
    """(direction, worst delay over all paths) for an old->new period change."""
    if all(po <= pn for po, pn in zip(old_periods_ns, new_periods_ns)):
        return RELAXING, alap_worst_delay(old_periods_ns, new_periods_ns, paths)
    if all(po >= pn for po, pn in zip(old_periods_ns, new_periods_ns)):
        return SHRINKING, max(
            aeap_worst_delay(old_periods_ns, new_periods_ns, path) for path in paths
        )
    # cannot happen for tables with mode-monotone periods
    raise NotShrinking("mixed per-task period directions have no protocol")


def transition_matrix(table: ModeTable, paths: Sequence[Path]) -> list[TransitionAnalysis]:
    """Analyses for every ordered mode pair (identity pairs excluded)."""
    analyses = []
    for j_from in range(1, table.mode_count + 1):
        for j_to in range(1, table.mode_count + 1):
            if j_from == j_to:
                continue
            direction, delay = worst_transition_delay(
                table.periods_ns[j_from - 1], table.periods_ns[j_to - 1], paths
            )
            analyses.append(
                TransitionAnalysis(
                    from_mode=j_from,
                    to_mode=j_to,
                    direction=direction,
                    worst_delay_ns=delay,
                    bound_deadline_ns=table.mode_deadlines_ns[j_to - 1],
                )
            )
    return analyses


def write_transition_csv(analyses: Sequence[TransitionAnalysis], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["from_mode", "to_mode", "direction", "worst_delay_ns", "bound_ns", "margin_ns"]
        )
        for a in analyses:
            writer.writerow(
                [a.from_mode, a.to_mode, a.direction, a.worst_delay_ns,
                 a.bound_deadline_ns, a.margin_ns]
            )


def summarize_margins(analyses: Sequence[TransitionAnalysis]) -> dict:
    """Worst margins by direction, for the analysis report."""
    relaxing = [a for a in analyses if a.direction == RELAXING]
    shrinking = [a for a in analyses if a.direction == SHRINKING]
    out: dict = {"transition_count": len(analyses)}
    if relaxing:
        worst = min(relaxing, key=lambda a: a.margin_ns)
        out["relaxing"] = {
            "count": len(relaxing),
            "worst_margin_ns": worst.margin_ns,
            "worst_pair": [worst.from_mode, worst.to_mode],
        }
    if shrinking:
        worst = min(shrinking, key=lambda a: a.margin_ns)
        out["shrinking"] = {
            "count": len(shrinking),
            "worst_margin_ns": worst.margin_ns,
            "worst_pair": [worst.from_mode, worst.to_mode],
        }
    return out
