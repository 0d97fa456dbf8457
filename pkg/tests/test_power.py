import random

import pytest

from dyndl.errors import DimensionMismatch, InvalidSpeed, Overutilized
from dyndl.power import (
    PowerParams,
    SystemConfig,
    dynamic_power,
    normalized_dynamic_power,
    saturated_full_speed_config,
    system_avg_power,
    task_avg_power,
    utilization,
)
from dyndl.taskgraph import TaskGraph, TaskSpec, make_chain

MS = 1_000_000

UNIT = PowerParams(alpha_mw=1.0, beta_mw=0.0, gamma=3.0, s_min=0.5)


def test_utilization_single():
    g = make_chain([1 * MS])
    cfg = SystemConfig((2 * MS,), (1.0,))
    assert utilization(cfg, g) == pytest.approx(0.5)


def test_utilization_two_tasks():
    g = make_chain([2 * MS, 3 * MS])
    cfg = SystemConfig((10 * MS, 15 * MS), (1.0, 0.5))
    assert utilization(cfg, g) == pytest.approx(0.6)


def test_utilization_inverse_linear_in_speed():
    g = make_chain([1 * MS, 2 * MS])
    full = SystemConfig((8 * MS, 8 * MS), (1.0, 1.0))
    half = SystemConfig((8 * MS, 8 * MS), (0.5, 0.5))
    assert utilization(half, g) == pytest.approx(2 * utilization(full, g))


def test_dimension_mismatch():
    g = make_chain([1 * MS, 1 * MS])
    with pytest.raises(DimensionMismatch):
        utilization(SystemConfig((2 * MS,), (1.0,)), g)


def test_task_avg_power_examples():
    assert task_avg_power(1 * MS, 2 * MS, 1.0, UNIT) == pytest.approx(0.5)
    assert task_avg_power(1 * MS, 4 * MS, 0.5, UNIT) == pytest.approx(0.0625)
    # s = s_min, p huge -> vanishes
    assert task_avg_power(1 * MS, 10_000_000 * MS, 0.5, UNIT) < 1e-7
    with pytest.raises(InvalidSpeed):
        task_avg_power(1 * MS, 2 * MS, 0.25, UNIT)


def test_system_avg_power_example():
    g = make_chain([1 * MS])
    cfg = SystemConfig((4 * MS,), (0.5,))
    # dynamic 0.0625 + idle 0.125 * (1 - 0.5)
    assert system_avg_power(cfg, g, UNIT) == pytest.approx(0.125)


def test_system_power_zero_idle_at_full_utilization():
    g = make_chain([1 * MS])
    cfg = SystemConfig((2 * MS,), (0.5,))  # U = 1
    assert system_avg_power(cfg, g, UNIT) == pytest.approx(dynamic_power(cfg, g, UNIT))


def test_system_power_empty_task_set():
    g = TaskGraph(tasks=(), edges=())
    cfg = SystemConfig((), ())
    params = PowerParams(alpha_mw=2.0, beta_mw=3.0, gamma=3.0, s_min=0.5)
    assert system_avg_power(cfg, g, params) == pytest.approx(3.0 + 2.0 * 0.125)


def test_overutilized_raises():
    g = make_chain([2 * MS])
    cfg = SystemConfig((1 * MS,), (1.0,))
    with pytest.raises(Overutilized):
        system_avg_power(cfg, g, UNIT)


def test_power_lower_bound_invariant():
    rng = random.Random(9)
    g = make_chain([1 * MS, 3 * MS, 2 * MS])
    for _ in range(100):
        speeds = tuple(rng.uniform(0.5, 1.0) for _ in range(3))
        periods = tuple(rng.randint(20 * MS, 200 * MS) for _ in range(3))
        cfg = SystemConfig(periods, speeds)
        u = utilization(cfg, g)
        floor = UNIT.beta_mw + UNIT.alpha_mw * UNIT.s_min**UNIT.gamma * (1 - u)
        assert system_avg_power(cfg, g, UNIT) >= floor


def test_power_monotone_in_speed_by_finite_differences():
    g = make_chain([1 * MS, 3 * MS])
    params = PowerParams(alpha_mw=842.04, beta_mw=232.81, gamma=2.64, s_min=0.1725)
    threshold = params.s_min * (params.gamma / (params.gamma - 1)) ** (1 / (params.gamma - 1))
    rng = random.Random(2)
    for _ in range(100):
        s = rng.uniform(threshold * 1.01, 0.999)
        base = SystemConfig((30 * MS, 40 * MS), (s, 0.9))
        bumped = SystemConfig((30 * MS, 40 * MS), (s + 1e-4, 0.9))
        assert system_avg_power(bumped, g, params) >= system_avg_power(base, g, params)


def test_normalization_baseline_is_100_percent():
    g = make_chain([1 * MS, 3 * MS, 2 * MS])
    cfg = SystemConfig((30 * MS, 45 * MS, 60 * MS), (0.8, 0.7, 0.9))
    base = saturated_full_speed_config(cfg, g)
    assert utilization(base, g) == pytest.approx(1.0, abs=1e-6)
    assert normalized_dynamic_power(base, g, UNIT) == pytest.approx(1.0, abs=1e-6)
    # saturation only shrinks periods, so paths can only get shorter
    assert all(b <= p for b, p in zip(base.periods_ns, cfg.periods_ns))
