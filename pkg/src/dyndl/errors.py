"""Exception types shared across the toolkit."""


class DyndlError(Exception):
    """Base class for all toolkit errors."""


# --- task graph ---

class GraphFormatError(DyndlError):
    """Structurally malformed task graph (bad ids, duplicate or self edges)."""


class CycleDetected(DyndlError):
    """The edge list contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"cycle through task ids {self.cycle}")


class OrphanTask(DyndlError):
    """A task lies on no source-to-sink path."""

    def __init__(self, task_ids):
        self.task_ids = sorted(task_ids)
        super().__init__(f"tasks on no source->sink path: {self.task_ids}")


# --- deadline model ---

class NegativeVelocity(DyndlError):
    """Velocity below zero is physically meaningless here."""


class InvalidRange(DyndlError):
    """Bad deadline range or mode count."""


# --- power model ---

class DimensionMismatch(DyndlError):
    """Configuration vectors do not match the task set size."""


class InvalidSpeed(DyndlError):
    """Speed factor outside [s_min, 1]."""


class Overutilized(DyndlError):
    """Utilization above 100%; the idle-power term would go negative."""


# --- geometric programming ---

class PointOutOfDomain(DyndlError):
    """Gradient check point not strictly inside the variable bounds."""


# --- optimizer ---

class InfeasibleDeadline(DyndlError):
    """No period assignment satisfies both utilization and path constraints."""


class SpeedOutOfRange(DyndlError):
    """A recovered speed factor fell outside [s_min, 1] after the solve."""


class SolverFailure(DyndlError):
    """The GP solver did not certify an optimum."""


class NoLevelAbove(DyndlError):
    """No discrete frequency level at or above the requested speed factor."""


# --- mode change analysis ---

class NotRelaxing(DyndlError):
    """Old periods are not entrywise <= new periods."""


class NotShrinking(DyndlError):
    """Old periods are not entrywise >= new periods."""


# --- simulator ---

class ScenarioTooShort(DyndlError):
    """Scenario does not cover the simulation horizon."""


class InconsistentTable(DyndlError):
    """Mode table does not match the task graph or deadline map."""


class HorizonMismatch(DyndlError):
    """Traces being compared cover different horizons."""


# --- scenario ingestion ---

class ParseError(DyndlError):
    """CSV scenario parse failure with row/column diagnostics."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column else ")")
        super().__init__(message + where)


class NonMonotonicTime(DyndlError):
    """Scenario timestamps are not strictly increasing."""


class EmptyScenario(DyndlError):
    """Scenario holds no samples."""


class InvalidParams(DyndlError):
    """Synthetic scenario parameters outside the physical range."""
