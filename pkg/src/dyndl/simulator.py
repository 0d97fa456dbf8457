"""Deterministic discrete-event simulation of preemptive EDF with DVFS.

Single CPU, integer-nanosecond time. Jobs release periodically (all
tasks synchronous at t=0), sample their input buffers at release,
publish at completion, and run at the speed latched when first
dispatched (inter-task DVFS: speed changes only at context switches).
Buffers are single-slot: a write replaces prior contents.

At every source-task release the held scenario velocity is mapped to a
dynamic deadline and a mode is selected. A decrease (shrinking
deadline) immediately arms every task to switch at its next release
(AEAP); an increase (relaxing) arms each task only once data of the new
epoch has reached all of its input edges (ALAP), the source tasks
immediately. Reaction times are measured per flow: a sensor sample at
t1 is resolved by the first actuator completion whose provenance
reflects it, where provenance merges at joins by minimum over inputs
(a result reflects a sample only once every contributing chain does).

Measured reactions are judged against the guaranteed deadline of the
mode active at the sample's arrival, widened to the analyzed worst-case
transition delay while a mode change overlaps the sample's lifetime.
Reactions above the instantaneous requirement d(v) but within the
analyzed bound are reported separately, not as violations.
"""

from __future__ import annotations

import csv
import heapq
import json
from dataclasses import dataclass, field

from .deadlines import DeadlineMap, deadline_from_velocity, select_mode
from .errors import HorizonMismatch, InconsistentTable, ScenarioTooShort
from .modechange import worst_transition_delay
from .optimizer import ModeTable
from .power import PowerParams
from .scenario import Scenario, hold_cursor
from .taskgraph import TaskGraph, enumerate_paths

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000

ALAP = "ALAP"
AEAP = "AEAP"

JOULES_PER_MW_NS = 1e-12


@dataclass
class SimOptions:
    horizon_ns: int
    sensor_period_ns: int = 200 * NS_PER_MS


@dataclass(frozen=True)
class Segment:
    task_id: int
    start_ns: int
    end_ns: int
    speed: float


@dataclass
class ModeChangeEvent:
    trigger_ns: int
    from_mode: int        # previous commanded mode
    from_mode_eff: int    # slowest (largest-period) mode any task still held
    to_mode: int
    protocol: str
    completed_ns: int | None = None


@dataclass(frozen=True)
class ReactionSample:
    source: int
    sink: int
    t1_ns: int
    t2_ns: int
    requirement_ns: int   # instantaneous d(v) at t1
    bound_ns: int         # guaranteed deadline, widened across transitions
    mode_at_t1: int

    @property
    def reaction_ns(self) -> int:
        return self.t2_ns - self.t1_ns

    @property
    def violated(self) -> bool:
        return self.reaction_ns > self.bound_ns

    @property
    def exceeded_requirement(self) -> bool:
        return self.reaction_ns > self.requirement_ns


@dataclass(frozen=True)
class DeadlineMiss:
    task_id: int
    release_ns: int
    deadline_ns: int
    completion_ns: int


@dataclass
class SimTrace:
    horizon_ns: int
    initial_mode: int
    segments: list[Segment]
    mode_events: list[ModeChangeEvent]
    reactions: list[ReactionSample]
    deadline_misses: list[DeadlineMiss]
    energy_j: float
    busy_ns: int
    mode_residency_ns: dict[int, int]
    unresolved_samples: int = 0

    @property
    def violations(self) -> list[ReactionSample]:
        return [r for r in self.reactions if r.violated]

    @property
    def requirement_exceedances(self) -> list[ReactionSample]:
        return [r for r in self.reactions if r.exceeded_requirement and not r.violated]


class _Job:
    __slots__ = ("task_id", "release_ns", "deadline_ns", "speed", "wall_remaining_ns",
                 "epoch", "prov")

    def __init__(self, task_id, release_ns, deadline_ns, epoch, prov):
        self.task_id = task_id
        self.release_ns = release_ns
        self.deadline_ns = deadline_ns
        self.speed = None           # latched at first dispatch
        self.wall_remaining_ns = 0  # meaningful once speed is latched
        self.epoch = epoch
        self.prov = prov


class _Pending:
    __slots__ = ("target", "protocol", "epoch", "armed")

    def __init__(self, target, protocol, epoch, armed):
        self.target = target
        self.protocol = protocol
        self.epoch = epoch
        self.armed = armed


class _Task:
    __slots__ = ("id", "wcet_ns", "mode", "period_ns", "speed", "pending",
                 "next_release_ns", "is_source")

    def __init__(self, tid, wcet_ns, mode, period_ns, speed, is_source):
        self.id = tid
        self.wcet_ns = wcet_ns
        self.mode = mode
        self.period_ns = period_ns
        self.speed = speed
        self.pending = None
        self.next_release_ns = 0
        self.is_source = is_source


class _Buffer:
    __slots__ = ("epoch", "prov")

    def __init__(self):
        self.epoch = -1
        self.prov = None  # dict source -> latest reflected sample release


def _check_table(graph: TaskGraph, table: ModeTable, dmap: DeadlineMap, s_min: float, paths):
    if table.mode_deadlines_ns != dmap.mode_deadlines_ns:
        raise InconsistentTable("table modes do not match the deadline map")
    table.validate(graph, paths, s_min)


def simulate(
    graph: TaskGraph,
    table: ModeTable,
    dmap: DeadlineMap,
    scenario: Scenario,
    params: PowerParams,
    options: SimOptions,
) -> SimTrace:
    """Replay a scenario through the EDF runtime; see the module docstring."""
    horizon = int(options.horizon_ns)
    paths = enumerate_paths(graph) if graph.tasks else []
    _check_table(graph, table, dmap, params.s_min, paths)
    if scenario.samples[-1][0] < horizon:
        raise ScenarioTooShort(
            f"scenario ends at {scenario.samples[-1][0]} ns, horizon is {horizon} ns"
        )

    cursor = hold_cursor(scenario)
    epoch = 0
    target_mode = select_mode(deadline_from_velocity(cursor.at(0), dmap), dmap)
    initial_mode = target_mode

    tasks: list[_Task] = [None]  # 1-based
    sources = set(graph.sources())
    for t in graph.tasks:
        row = target_mode - 1
        tasks.append(_Task(t.id, t.wcet_ns, target_mode,
                           table.periods_ns[row][t.id - 1],
                           table.speeds[row][t.id - 1],
                           t.id in sources))

    in_edges: dict[int, list[tuple[int, int]]] = {t.id: [] for t in graph.tasks}
    out_edges: dict[int, list[tuple[int, int]]] = {t.id: [] for t in graph.tasks}
    buffers: dict[tuple[int, int], _Buffer] = {}
    for e in graph.edges:
        in_edges[e[1]].append(e)
        out_edges[e[0]].append(e)
        buffers[e] = _Buffer()

    # sources reaching each task, for provenance merging at joins
    reach: dict[int, set[int]] = {t.id: set() for t in graph.tasks}
    for s in sources:
        stack = [s]
        while stack:
            node = stack.pop()
            if s in reach[node]:
                continue
            reach[node].add(s)
            stack.extend(b for a, b in out_edges[node])

    flows = sorted({(p.task_ids[0], p.task_ids[-1]) for p in paths})
    flows_by_sink: dict[int, list[int]] = {}
    for k, (_, sink) in enumerate(flows):
        flows_by_sink.setdefault(sink, []).append(k)
    pending_samples: list[list[tuple[int, int, int]]] = [[] for _ in flows]

    # sensor samples stop early enough that every reaction resolves in-horizon
    guard = 3 * dmap.mode_deadlines_ns[-1]
    sensor_times = list(range(0, max(0, horizon - guard) + 1, options.sensor_period_ns)) \
        if flows else []

    transitions: list[ModeChangeEvent] = []
    bound_memo: dict[tuple[int, int], int] = {}

    def transition_bound(from_eff: int, to: int) -> int:
        if from_eff == to:
            return dmap.mode_deadlines_ns[to - 1]
        key = (from_eff, to)
        if key not in bound_memo:
            _, delay = worst_transition_delay(
                table.periods_ns[from_eff - 1], table.periods_ns[to - 1], paths
            )
            bound_memo[key] = delay
        return bound_memo[key]

    segments: list[Segment] = []
    reactions: list[ReactionSample] = []
    misses: list[DeadlineMiss] = []
    residency: dict[int, int] = {}
    residency_mark = 0
    busy_ns = 0

    ready: list[tuple[int, int, int]] = []  # (deadline, task_id, release) heap keys
    jobs: dict[tuple[int, int, int], _Job] = {}
    running: _Job | None = None
    seg_start = 0
    now = 0

    def mark_residency(upto: int, new_mode: int | None):
        nonlocal residency_mark, target_mode
        residency[target_mode] = residency.get(target_mode, 0) + (upto - residency_mark)
        residency_mark = upto
        if new_mode is not None:
            target_mode = new_mode

    def maybe_complete_transitions(t_now: int):
        if all(tk.mode == target_mode for tk in tasks[1:]):
            for ev in transitions:
                if ev.completed_ns is None:
                    ev.completed_ns = t_now

    def adopt(task: _Task):
        row = task.pending.target - 1
        task.mode = task.pending.target
        task.period_ns = table.periods_ns[row][task.id - 1]
        task.speed = table.speeds[row][task.id - 1]
        task.pending = None

    def trigger(j_sel: int, t_now: int):
        nonlocal epoch
        epoch += 1
        from_eff = max(tk.mode for tk in tasks[1:])
        protocol = AEAP if j_sel < target_mode else ALAP
        transitions.append(ModeChangeEvent(t_now, target_mode, from_eff, j_sel, protocol))
        mark_residency(t_now, j_sel)
        for tk in tasks[1:]:
            if tk.mode == j_sel:
                tk.pending = None
            else:
                armed = protocol == AEAP or tk.is_source
                tk.pending = _Pending(j_sel, protocol, epoch, armed)
        maybe_complete_transitions(t_now)

    def try_arm(consumer_id: int):
        tk = tasks[consumer_id]
        if tk.pending and not tk.pending.armed:
            if all(buffers[e].epoch >= tk.pending.epoch for e in in_edges[consumer_id]):
                tk.pending.armed = True

    def resolve_flows(job: _Job, t_now: int):
        for k in flows_by_sink.get(job.task_id, []):
            src = flows[k][0]
            reflected = job.prov.get(src, -1)
            queue = pending_samples[k]
            while queue and queue[0][0] <= reflected:
                t1, d_req, mode_at = queue.pop(0)
                bound = dmap.mode_deadlines_ns[mode_at - 1]
                for ev in transitions:
                    if ev.trigger_ns <= t_now and (ev.completed_ns is None or ev.completed_ns >= t1):
                        bound = max(bound, transition_bound(ev.from_mode_eff, ev.to_mode))
                reactions.append(ReactionSample(
                    source=src, sink=flows[k][1], t1_ns=t1, t2_ns=t_now,
                    requirement_ns=d_req, bound_ns=bound, mode_at_t1=mode_at,
                ))

    def complete(job: _Job, t_now: int):
        nonlocal busy_ns
        segments.append(Segment(job.task_id, seg_start, t_now, job.speed))
        busy_ns += t_now - seg_start
        if t_now > job.deadline_ns:
            misses.append(DeadlineMiss(job.task_id, job.release_ns, job.deadline_ns, t_now))
        for e in out_edges[job.task_id]:
            buf = buffers[e]
            buf.epoch = job.epoch
            buf.prov = job.prov
        for e in out_edges[job.task_id]:
            try_arm(e[1])
        resolve_flows(job, t_now)

    def release(task: _Task, t_now: int):
        if task.pending and task.pending.armed:
            adopt(task)
            maybe_complete_transitions(t_now)
        if task.is_source:
            d_ns = deadline_from_velocity(cursor.at(t_now), dmap)
            j_sel = select_mode(d_ns, dmap)
            if j_sel != target_mode:
                trigger(j_sel, t_now)
        if task.is_source:
            prov = {task.id: t_now}
            job_epoch = epoch
        else:
            prov = {}
            job_epoch = min((buffers[e].epoch for e in in_edges[task.id]), default=epoch)
            for s in reach[task.id]:
                stamps = [
                    (buffers[e].prov or {}).get(s, -1)
                    for e in in_edges[task.id]
                    if s in reach[e[0]]
                ]
                prov[s] = min(stamps) if stamps else -1
        job = _Job(task.id, t_now, t_now + task.period_ns, job_epoch, prov)
        key = (job.deadline_ns, task.id, t_now)
        jobs[key] = job
        heapq.heappush(ready, key)
        task.next_release_ns = t_now + task.period_ns

    def latch(job: _Job):
        task = tasks[job.task_id]
        job.speed = task.speed
        job.wall_remaining_ns = max(1, int(task.wcet_ns / job.speed))

    def dispatch(t_now: int) -> None:
        nonlocal running, seg_start, busy_ns
        head = ready[0] if ready else None
        if running is not None:
            if head is None or (running.deadline_ns, running.task_id) <= (head[0], head[1]):
                return
            segments.append(Segment(running.task_id, seg_start, t_now, running.speed))
            busy_ns += t_now - seg_start
            key = (running.deadline_ns, running.task_id, running.release_ns)
            jobs[key] = running
            heapq.heappush(ready, key)
            running = None
        if head is None:
            return
        key = heapq.heappop(ready)
        job = jobs.pop(key)
        if job.speed is None:
            latch(job)
        running = job
        seg_start = t_now

    sensor_idx = 0
    while True:
        t_next = horizon
        if running is not None:
            t_next = min(t_next, now + running.wall_remaining_ns)
        for tk in tasks[1:]:
            if tk.next_release_ns < t_next:
                t_next = tk.next_release_ns
        if sensor_idx < len(sensor_times) and sensor_times[sensor_idx] < t_next:
            t_next = sensor_times[sensor_idx]
        if running is not None:
            running.wall_remaining_ns -= t_next - now
        now = t_next
        if now >= horizon:
            if running is not None:
                segments.append(Segment(running.task_id, seg_start, horizon, running.speed))
                busy_ns += horizon - seg_start
            break
        if running is not None and running.wall_remaining_ns == 0:
            job = running
            running = None
            complete(job, now)
        while sensor_idx < len(sensor_times) and sensor_times[sensor_idx] == now:
            v = cursor.at(now)
            d_req = deadline_from_velocity(v, dmap)
            for k in range(len(flows)):
                pending_samples[k].append((now, d_req, target_mode))
            sensor_idx += 1
        for tk in tasks[1:]:
            if tk.next_release_ns == now:
                release(tk, now)
        dispatch(now)

    mark_residency(horizon, None)
    idle_ns = horizon - busy_ns
    energy_mw_ns = params.idle_power_mw() * idle_ns
    for seg in segments:
        energy_mw_ns += params.busy_power_mw(seg.speed) * (seg.end_ns - seg.start_ns)

    unresolved = sum(len(q) for q in pending_samples)
    return SimTrace(
        horizon_ns=horizon,
        initial_mode=initial_mode,
        segments=segments,
        mode_events=transitions,
        reactions=reactions,
        deadline_misses=misses,
        energy_j=energy_mw_ns * JOULES_PER_MW_NS,
        busy_ns=busy_ns,
        mode_residency_ns=residency,
        unresolved_samples=unresolved,
    )


@dataclass
class Report:
    horizon_ns: int
    energy_j: float
    baseline_energy_j: float
    reduction_vs_baseline: float
    mode_residency_ns: dict[int, int]
    reaction_max_ns: dict[str, int]
    reaction_mean_ns: dict[str, float]
    violation_count: int
    requirement_exceedance_count: int
    deadline_miss_count: int
    mode_change_count: int

    def to_json(self) -> str:
        doc = {
            "horizon_ns": self.horizon_ns,
            "energy_j": self.energy_j,
            "baseline_energy_j": self.baseline_energy_j,
            "reduction_vs_baseline": self.reduction_vs_baseline,
            "mode_residency_ns": {str(k): v for k, v in sorted(self.mode_residency_ns.items())},
            "reaction_max_ns": self.reaction_max_ns,
            "reaction_mean_ns": self.reaction_mean_ns,
            "violation_count": self.violation_count,
            "requirement_exceedance_count": self.requirement_exceedance_count,
            "deadline_miss_count": self.deadline_miss_count,
            "mode_change_count": self.mode_change_count,
        }
        return json.dumps(doc, indent=2)


def summarize(trace: SimTrace, params: PowerParams, baseline: SimTrace) -> Report:
    """Totals and ratios against a baseline trace over the same horizon."""
    if trace.horizon_ns != baseline.horizon_ns:
        raise HorizonMismatch(
            f"trace horizon {trace.horizon_ns} != baseline {baseline.horizon_ns}"
        )
    max_r: dict[str, int] = {}
    mean_r: dict[str, float] = {}
    by_flow: dict[str, list[int]] = {}
    for r in trace.reactions:
        by_flow.setdefault(f"{r.source}->{r.sink}", []).append(r.reaction_ns)
    for key, vals in sorted(by_flow.items()):
        max_r[key] = max(vals)
        mean_r[key] = sum(vals) / len(vals)
    return Report(
        horizon_ns=trace.horizon_ns,
        energy_j=trace.energy_j,
        baseline_energy_j=baseline.energy_j,
        reduction_vs_baseline=1.0 - trace.energy_j / baseline.energy_j,
        mode_residency_ns=dict(trace.mode_residency_ns),
        reaction_max_ns=max_r,
        reaction_mean_ns=mean_r,
        violation_count=len(trace.violations),
        requirement_exceedance_count=len(trace.requirement_exceedances),
        deadline_miss_count=len(trace.deadline_misses),
        mode_change_count=len(trace.mode_events),
    )


def write_trace_csv(trace: SimTrace, directory) -> None:
    """segments.csv, mode_events.csv, reactions.csv under the directory."""
    import os

    with open(os.path.join(directory, "segments.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["task_id", "start_ns", "end_ns", "speed"])
        for s in trace.segments:
            w.writerow([s.task_id, s.start_ns, s.end_ns, repr(s.speed)])
    with open(os.path.join(directory, "mode_events.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trigger_ns", "from_mode", "from_mode_eff", "to_mode",
                    "protocol", "completed_ns"])
        for e in trace.mode_events:
            w.writerow([e.trigger_ns, e.from_mode, e.from_mode_eff, e.to_mode,
                        e.protocol, e.completed_ns])
    with open(os.path.join(directory, "reactions.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "sink", "t1_ns", "t2_ns", "reaction_ns",
                    "requirement_ns", "bound_ns", "mode_at_t1",
                    "violated", "exceeded_requirement"])
        for r in trace.reactions:
            w.writerow([r.source, r.sink, r.t1_ns, r.t2_ns, r.reaction_ns,
                        r.requirement_ns, r.bound_ns, r.mode_at_t1,
                        int(r.violated), int(r.exceeded_requirement)])
