import pytest

from dyndl.deadlines import DeadlineMap, velocity_deadline_ns
from dyndl.optimizer import (
    FrequencyLadder,
    baseline_table,
    derive_dmax,
    optimize_multi_mode,
    quantize_speeds,
    static_table,
)
from dyndl.power import PowerParams
from dyndl.cli import load_graph_ref
from dyndl.taskgraph import enumerate_paths

KMH = 1.0 / 3.6


@pytest.fixture(scope="session")
def waters_graph():
    return load_graph_ref("waters")


@pytest.fixture(scope="session")
def waters_ladder():
    return FrequencyLadder.evenly_spaced(345.0, 2000.0, 12)


@pytest.fixture(scope="session")
def waters_params(waters_ladder):
    return PowerParams(s_min=waters_ladder.s_min)


@pytest.fixture(scope="session")
def waters_paths(waters_graph):
    return enumerate_paths(waters_graph)


@pytest.fixture(scope="session")
def waters_d_min():
    return velocity_deadline_ns(114.0 * KMH, 20.0, 2.5)


@pytest.fixture(scope="session")
def waters_d_max(waters_graph, waters_params):
    return derive_dmax(waters_graph, waters_params)


@pytest.fixture(scope="session")
def waters_dmap(waters_d_min, waters_d_max):
    return DeadlineMap.build(20.0, 2.5, waters_d_min, waters_d_max, 24)


@pytest.fixture(scope="session")
def waters_table(waters_graph, waters_params, waters_dmap):
    return optimize_multi_mode(waters_graph, waters_params, waters_dmap.mode_deadlines_ns)


@pytest.fixture(scope="session")
def waters_quantized(waters_table, waters_ladder):
    return quantize_speeds(waters_table, waters_ladder)


@pytest.fixture(scope="session")
def waters_static(waters_graph, waters_params, waters_d_min):
    return static_table(waters_graph, waters_params, waters_d_min)


@pytest.fixture(scope="session")
def waters_baseline(waters_graph, waters_params, waters_static):
    return baseline_table(waters_graph, waters_params, waters_static)
