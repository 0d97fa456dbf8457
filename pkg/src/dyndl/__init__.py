"""Energy-optimal multi-mode scheduling for velocity-dependent deadlines.

Design-time: velocity->deadline mapping, mode partitioning, GP-based
period/speed optimization with per-task utilization invariability,
discrete-frequency quantization, and mode-change delay analysis.
Replay: a deterministic preemptive-EDF simulator measuring reaction
times and energy over driving scenarios.
"""

__version__ = "0.1.0"

from .deadlines import (
    DeadlineMap,
    deadline_from_velocity,
    partition_modes,
    select_mode,
    velocity_deadline_ns,
)
from .gp import GPOptions, GPProblem, GPSolution, Monomial, Posynomial, gradient_check, solve_gp
from .modechange import (
    TransitionAnalysis,
    aeap_worst_delay,
    alap_worst_delay,
    transition_matrix,
)
from .optimizer import (
    FrequencyLadder,
    ModeTable,
    baseline_table,
    derive_dmax,
    optimize_multi_mode,
    optimize_single_mode,
    quantize_speeds,
    static_table,
)
from .power import (
    PowerParams,
    SystemConfig,
    dynamic_power,
    normalized_dynamic_power,
    system_avg_power,
    task_avg_power,
    utilization,
)
from .scenario import Scenario, load_scenario, resample, save_scenario, synthesize
from .simulator import SimOptions, SimTrace, simulate, summarize
from .taskgraph import (
    Path,
    TaskGraph,
    TaskSpec,
    ValidationReport,
    enumerate_paths,
    load_graph,
    save_graph,
    validate_graph,
)

__all__ = [name for name in dir() if not name.startswith("_")]
