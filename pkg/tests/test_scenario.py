import pytest

from dyndl.deadlines import velocity_deadline_ns
from dyndl.errors import (
    EmptyScenario,
    InvalidParams,
    NegativeVelocity,
    NonMonotonicTime,
    ParseError,
)
from dyndl.scenario import (
    Scenario,
    load_scenario,
    resample,
    save_scenario,
    synthesize,
    synthesize_constant,
    synthesize_random,
    synthesize_square,
)

S = 1_000_000_000
MS = 1_000_000


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_kmh_conversion(tmp_path):
    p = write(tmp_path, "t_s,velocity\n0,0\n1,10\n")
    sc = load_scenario(p, units="kmh")
    assert sc.samples[0] == (0, 0.0)
    assert sc.samples[1][0] == S
    assert sc.samples[1][1] == pytest.approx(10 / 3.6)


def test_load_mps_headerless(tmp_path):
    p = write(tmp_path, "0,5\n2,6\n")
    sc = load_scenario(p)
    assert sc.samples == ((0, 5.0), (2 * S, 6.0))


def test_empty_file_rejected(tmp_path):
    p = write(tmp_path, "")
    with pytest.raises(ParseError):
        load_scenario(p)
    p2 = write(tmp_path, "t_s,velocity\n", name="s2.csv")
    with pytest.raises(ParseError):
        load_scenario(p2)


def test_non_monotonic_time(tmp_path):
    p = write(tmp_path, "1,5\n0,6\n")
    with pytest.raises(NonMonotonicTime):
        load_scenario(p)


def test_negative_velocity(tmp_path):
    p = write(tmp_path, "0,-1\n")
    with pytest.raises(NegativeVelocity):
        load_scenario(p)


def test_velocity_ceiling(tmp_path):
    p = write(tmp_path, "0,45\n")
    with pytest.raises(InvalidParams):
        load_scenario(p)


def test_bad_cell_diagnostics(tmp_path):
    p = write(tmp_path, "t_s,velocity\n0,5\nx,6\n")
    with pytest.raises(ParseError, match="row 3"):
        load_scenario(p)


def test_roundtrip_exact(tmp_path):
    sc = synthesize_random(3, 30 * S)
    out = tmp_path / "rt.csv"
    save_scenario(sc, out)
    again = load_scenario(out)
    assert again.samples == sc.samples


def test_resample_constant_identity():
    sc = synthesize_constant(7.0, 10 * S, dt_ns=S)
    rs = resample(sc, S)
    assert rs.samples == sc.samples


def test_resample_step_hold():
    sc = Scenario(((0, 0.0), (5 * S, 30.0), (10 * S, 30.0)))
    rs = resample(sc, S)
    values = dict(rs.samples)
    assert values[4 * S] == 0.0
    assert values[5 * S] == 30.0
    assert values[9 * S] == 30.0


def test_resample_idempotent():
    sc = synthesize_random(11, 20 * S)
    once = resample(sc, 500 * MS)
    twice = resample(once, 500 * MS)
    assert once.samples == twice.samples


def test_resample_dt_beyond_span():
    sc = Scenario(((0, 1.0), (S, 2.0)))
    rs = resample(sc, 10 * S)
    assert rs.samples == ((0, 1.0),)


def test_resample_bad_dt():
    sc = Scenario(((0, 1.0),))
    with pytest.raises(InvalidParams):
        resample(sc, 0)


def test_empty_scenario_rejected():
    with pytest.raises(EmptyScenario):
        Scenario(())


def test_constant_top_speed_maps_to_shortest_deadline():
    sc = synthesize_constant(114 / 3.6, 60 * S)
    for _, v in sc.samples:
        d = velocity_deadline_ns(v, 20.0, 2.5)
        assert abs(d - 617 * MS) <= 1 * MS


def test_standstill_maps_to_4s():
    sc = synthesize_constant(0.0, 10 * S)
    assert velocity_deadline_ns(sc.samples[0][1], 20.0, 2.5) == 4 * S


def test_square_wave_alternates():
    sc = synthesize_square(5.0, 30.0, 20 * S, 60 * S)
    vels = [v for _, v in sc.samples]
    assert vels[0] == 5.0
    assert vels[1] == 30.0
    assert vels[2] == 5.0
    assert sc.samples[-1][0] >= 60 * S


def test_synthesize_dispatch_and_limits():
    assert synthesize("constant", 5 * S, v=3.0).samples[0][1] == 3.0
    assert synthesize("ramp", 5 * S, v0=0.0, v1=10.0).samples[-1][1] == pytest.approx(10.0)
    with pytest.raises(InvalidParams):
        synthesize("constant", 5 * S, v=50.0)
    with pytest.raises(InvalidParams):
        synthesize("warp", 5 * S)


def test_random_scenario_deterministic_and_covering():
    a = synthesize_random(7, 60 * S)
    b = synthesize_random(7, 60 * S)
    assert a.samples == b.samples
    assert a.samples[-1][0] >= 60 * S
    assert all(0 <= v <= 31.0 for _, v in a.samples)
