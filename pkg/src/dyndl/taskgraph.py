"""Periodic task set with read-write dependencies as a DAG.

Tasks are timing specifications only: an id (1..n), a name, and a
worst-case execution time in nanoseconds at full processor speed.
Sources (in-degree 0) act as sensors, sinks (out-degree 0) as actuators,
and every enumerated source->sink path carries an end-to-end deadline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CycleDetected, GraphFormatError, OrphanTask


@dataclass(frozen=True)
class TaskSpec:
    id: int
    name: str
    wcet_ns: int

    def __post_init__(self):
        if self.wcet_ns <= 0:
            raise GraphFormatError(f"task {self.id} ({self.name}): wcet must be > 0")


@dataclass(frozen=True)
class Path:
    """Ordered task ids from a source to a sink."""

    task_ids: tuple[int, ...]

    def __len__(self):
        return len(self.task_ids)

    def __iter__(self):
        return iter(self.task_ids)


@dataclass(frozen=True)
class TaskGraph:
    tasks: tuple[TaskSpec, ...]
    edges: tuple[tuple[int, int], ...]
    name: str = "task-graph"

    def __post_init__(self):
        ids = [t.id for t in self.tasks]
        if ids != list(range(1, len(ids) + 1)):
            raise GraphFormatError("task ids must be unique and contiguous 1..n")
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise GraphFormatError(f"self edge on task {a}")
            if not (1 <= a <= len(ids) and 1 <= b <= len(ids)):
                raise GraphFormatError(f"edge ({a},{b}) references unknown task")
            if (a, b) in seen:
                raise GraphFormatError(f"duplicate edge ({a},{b})")
            seen.add((a, b))

    @property
    def n(self) -> int:
        return len(self.tasks)

    def wcets_ns(self) -> tuple[int, ...]:
        return tuple(t.wcet_ns for t in self.tasks)

    def successors(self, task_id: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == task_id)

    def predecessors(self, task_id: int) -> list[int]:
        return sorted(a for a, b in self.edges if b == task_id)

    def sources(self) -> list[int]:
        targets = {b for _, b in self.edges}
        return [t.id for t in self.tasks if t.id not in targets]

    def sinks(self) -> list[int]:
        origins = {a for a, _ in self.edges}
        return [t.id for t in self.tasks if t.id not in origins]


@dataclass(frozen=True)
class ValidationReport:
    graph_name: str
    acyclic: bool
    sources: tuple[int, ...]
    sinks: tuple[int, ...]
    flow_count: int
    path_count: int
    orphan_tasks: tuple[int, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return self.acyclic and not self.orphan_tasks

    def to_json(self) -> str:
        return json.dumps(
            {
                "graph": self.graph_name,
                "ok": self.ok,
                "acyclic": self.acyclic,
                "sources": list(self.sources),
                "sinks": list(self.sinks),
                "flow_count": self.flow_count,
                "path_count": self.path_count,
                "orphan_tasks": list(self.orphan_tasks),
            },
            indent=2,
        )

    def __str__(self):
        status = "valid" if self.ok else "INVALID"
        return (
            f"graph '{self.graph_name}': {status}; "
            f"{len(self.sources)} sources {list(self.sources)}, "
            f"{len(self.sinks)} sinks {list(self.sinks)}, "
            f"{self.flow_count} flows, {self.path_count} paths"
        )


def topological_order(graph: TaskGraph) -> list[int]:
    """Kahn's algorithm; raises CycleDetected listing the residual node set."""
    indeg = {t.id: 0 for t in graph.tasks}
    for _, b in graph.edges:
        indeg[b] += 1
    ready = sorted(tid for tid, d in indeg.items() if d == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for succ in graph.successors(node):
            indeg[succ] -= 1
            if indeg[succ] == 0:
                # keep the frontier sorted for a deterministic order
                lo, hi = 0, len(ready)
                while lo < hi:
                    mid = (lo + hi) // 2
                    if ready[mid] < succ:
                        lo = mid + 1
                    else:
                        hi = mid
                ready.insert(lo, succ)
    if len(order) != graph.n:
        raise CycleDetected([tid for tid, d in indeg.items() if d > 0])
    return order


def validate_graph(graph: TaskGraph) -> ValidationReport:
    """Check acyclicity and source->sink reachability of every task.

    Raises CycleDetected or OrphanTask on failure; otherwise returns the
    report with source/sink/flow/path counts.
    """
    topological_order(graph)  # raises on cycles
    paths = _enumerate_paths_unchecked(graph)
    on_path = {tid for p in paths for tid in p}
    orphans = [t.id for t in graph.tasks if t.id not in on_path]
    if orphans:
        raise OrphanTask(orphans)
    sources = tuple(graph.sources())
    sinks = tuple(graph.sinks())
    return ValidationReport(
        graph_name=graph.name,
        acyclic=True,
        sources=sources,
        sinks=sinks,
        flow_count=len(sources) * len(sinks),
        path_count=len(paths),
    )


def enumerate_paths(graph: TaskGraph) -> list[Path]:
    """Every source->sink path exactly once, lexicographic by id sequence."""
    validate_graph(graph)
    return _enumerate_paths_unchecked(graph)


def _enumerate_paths_unchecked(graph: TaskGraph) -> list[Path]:
    sinks = set(graph.sinks())
    paths: list[Path] = []

    def walk(node: int, acc: list[int]):
        if node in sinks:
            paths.append(Path(tuple(acc)))
            return
        for succ in graph.successors(node):
            walk(succ, acc + [succ])

    for src in graph.sources():
        walk(src, [src])
    paths.sort(key=lambda p: p.task_ids)
    return paths


def flows(graph: TaskGraph) -> list[tuple[int, int]]:
    """All (source, sink) pairs connected by at least one path."""
    pairs = sorted({(p.task_ids[0], p.task_ids[-1]) for p in enumerate_paths(graph)})
    return pairs


def paths_for_flow(paths: Sequence[Path], source: int, sink: int) -> list[Path]:
    return [p for p in paths if p.task_ids[0] == source and p.task_ids[-1] == sink]


def load_graph(path) -> TaskGraph:
    """Read a graph JSON file: {"name", "tasks": [{"name","wcet_ns"}], "edges": [[a,b]]}.

    Task ids are implicit: 1-based position in the tasks array.
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        tasks = tuple(
            TaskSpec(id=i + 1, name=t["name"], wcet_ns=int(t["wcet_ns"]))
            for i, t in enumerate(doc["tasks"])
        )
        edges = tuple((int(a), int(b)) for a, b in doc["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"bad graph file {path}: {exc}") from exc
    return TaskGraph(tasks=tasks, edges=edges, name=doc.get("name", "task-graph"))


def save_graph(graph: TaskGraph, path) -> None:
    doc = {
        "name": graph.name,
        "tasks": [{"name": t.name, "wcet_ns": t.wcet_ns} for t in graph.tasks],
        "edges": [list(e) for e in graph.edges],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def make_chain(wcets_ns: Iterable[int]) -> TaskGraph:
    """Linear pipeline 1 -> 2 -> ... -> n; handy for tests and experiments."""
    wcets = list(wcets_ns)
    tasks = tuple(TaskSpec(i + 1, f"t{i + 1}", w) for i, w in enumerate(wcets))
    edges = tuple((i, i + 1) for i in range(1, len(wcets)))
    return TaskGraph(tasks=tasks, edges=edges, name="chain")
