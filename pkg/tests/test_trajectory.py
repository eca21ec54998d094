import math

import numpy as np
import pytest

from userfollow.errors import BadParams, NonMonotoneTime, SchemaError
from userfollow.frames import angle_diff
from userfollow.sim.trajectory import (SCENARIOS, Trajectory, derive_human_command, generate_scenario,
                                       human_commands, load_trajectory_csv, scenario_defaults,
                                       walk_onset, write_trajectory_csv)


def _write(path, rows, header="t,x,y,theta"):
    path.write_text(header + "\n" + "\n".join(",".join(str(v) for v in r) for r in rows) + "\n")
    return path


def _speed(traj):
    return np.hypot(np.gradient(traj.x, traj.t), np.gradient(traj.y, traj.t))


def test_csv_linear_resampling(tmp_path):
    traj = load_trajectory_csv(_write(tmp_path / "a.csv", [(0, 0, 0, 0), (1, 1, 0, 0)]), 200)
    assert len(traj) == 201
    assert np.allclose(traj.x, traj.t, atol=1e-15)
    assert np.all(traj.y == 0)


def test_csv_shortest_arc_heading(tmp_path):
    traj = load_trajectory_csv(_write(tmp_path / "a.csv", [(0, 0, 0, 3.1), (1, 0, 0, -3.1)]), 200)
    mid = traj.theta[100]
    assert abs(abs(mid) - math.pi) < 1e-9
    # every sample stays on the short arc around +-pi
    assert np.all(np.abs(traj.theta) >= 3.1 - 1e-12)
    # oracle: halfway along the wrapped difference
    expected = 3.1 + 0.5 * angle_diff(-3.1, 3.1)
    assert abs(angle_diff(mid, expected)) < 1e-12


def test_csv_errors(tmp_path):
    with pytest.raises(NonMonotoneTime):
        load_trajectory_csv(_write(tmp_path / "a.csv", [(0, 0, 0, 0), (1, 1, 0, 0), (0.5, 2, 0, 0)]))
    with pytest.raises(SchemaError):
        load_trajectory_csv(_write(tmp_path / "b.csv", [(0, 0, 0, 0), (1, 1, 0, 0)], header="t,x,y"))
    with pytest.raises(SchemaError):
        load_trajectory_csv(_write(tmp_path / "c.csv", [(0, 0, 0), (1, 1, 0, 0)]))
    with pytest.raises(SchemaError):
        load_trajectory_csv(_write(tmp_path / "d.csv", [(0, 0, 0, 0), (1, "x", 0, 0)]))
    with pytest.raises(SchemaError):
        load_trajectory_csv(_write(tmp_path / "e.csv", [(0, 0, 0, 0)]))


def test_csv_round_trip(tmp_path):
    traj = generate_scenario("slalom", duration=3.0)
    write_trajectory_csv(traj, tmp_path / "t.csv")
    back = load_trajectory_csv(tmp_path / "t.csv", 200)
    assert len(back) == len(traj)
    assert np.allclose(back.x, traj.x, atol=1e-12)
    assert np.allclose(back.theta, traj.theta, atol=1e-12)


def test_in_place_returns_to_origin():
    traj = generate_scenario("in_place", duration=10.0)
    assert math.hypot(traj.x[-1], traj.y[-1]) < 1e-9
    assert np.max(np.abs(traj.y)) == pytest.approx(0.03, rel=1e-3)


def test_straight_accel_peak_speed():
    traj = generate_scenario("straight_accel", {"peak_speed": 1.0})
    assert np.max(_speed(traj)) == pytest.approx(1.0, rel=0.01)
    assert np.all(traj.y == 0)
    assert _speed(traj)[-1] < 1e-6


def test_slalom_profile():
    traj = generate_scenario("slalom")
    sp = _speed(traj)
    late = traj.t > 4.0
    assert np.allclose(sp[late][1:-1], 0.8, rtol=1e-3)
    assert np.max(np.abs(traj.theta)) == pytest.approx(math.radians(30), rel=1e-3)


def test_stop_go_phases():
    traj = generate_scenario("stop_go", duration=8.0)
    sp = _speed(traj)
    standing = (traj.t > 0.05) & (traj.t < 1.95)
    assert np.all(sp[standing] < 1e-9)
    assert sp[np.argmin(np.abs(traj.t - 3.0))] == pytest.approx(0.8, rel=1e-3)
    assert np.all(sp[(traj.t > 4.05) & (traj.t < 5.95)] < 1e-9)


@pytest.mark.parametrize("name", SCENARIOS)
def test_generators_have_continuous_velocity(name):
    traj = generate_scenario(name, duration=12.0)
    vx = np.diff(traj.x) / traj.dt
    vy = np.diff(traj.y) / traj.dt
    # velocity changes by at most a small step per tick (no jumps)
    assert np.max(np.abs(np.diff(vx))) < 0.02
    assert np.max(np.abs(np.diff(vy))) < 0.02
    assert traj.x[0] == 0 and traj.y[0] == 0 and traj.theta[0] == 0


@pytest.mark.parametrize("name", SCENARIOS)
def test_generators_deterministic(name):
    a = generate_scenario(name, {"jitter": 0.02}, seed=11)
    b = generate_scenario(name, {"jitter": 0.02}, seed=11)
    c = generate_scenario(name, {"jitter": 0.02}, seed=12)
    assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
    assert not np.array_equal(a.y, c.y)


def test_bad_params():
    with pytest.raises(BadParams):
        generate_scenario("moonwalk")
    with pytest.raises(BadParams):
        generate_scenario("slalom", {"sped": 1.0})
    with pytest.raises(BadParams):
        generate_scenario("slalom", {"speed": -1.0})
    with pytest.raises(BadParams):
        generate_scenario("stop_go", {"walk_time": 1.0, "ramp_time": 0.8})
    with pytest.raises(BadParams):
        generate_scenario("in_place", {"frequency": 0.0})
    assert scenario_defaults("slalom")["speed"] == 0.8


def test_command_straight_line():
    t = np.arange(201) / 200
    traj = Trajectory(t, t.copy(), np.zeros_like(t), np.zeros_like(t))
    c = derive_human_command(traj, 100)
    assert (c.v_h, c.delta, c.w_h) == pytest.approx((1, 0, 0), abs=1e-12)


def test_command_pure_rotation():
    t = np.arange(401) / 200
    traj = Trajectory(t, np.zeros_like(t), np.zeros_like(t), np.array([math.remainder(0.5 * s, 2 * math.pi) for s in t]))
    c = derive_human_command(traj, 200)
    assert c.v_h < 1e-12
    assert c.w_h == pytest.approx(0.5, abs=1e-3)


def test_command_holds_direction_when_standing():
    t = np.arange(5) / 200
    traj = Trajectory(t, np.zeros(5), np.zeros(5), np.zeros(5))
    assert derive_human_command(traj, 2, prev_delta=1.2).delta == 1.2
    with pytest.raises(IndexError):
        derive_human_command(traj, 5)


def test_commands_carry_direction():
    traj = generate_scenario("stop_go", duration=8.0)
    cmds = human_commands(traj)
    # after the first walk (heading +X) the standing phase keeps delta = 0
    assert cmds[int(4.5 * 200)].v_h < 1e-6
    assert cmds[int(4.5 * 200)].delta == pytest.approx(0.0, abs=1e-12)


def test_walk_onset():
    t = np.arange(0, 5, 0.01)
    speed = np.where(t >= 1.0, 0.5, 0.0)
    assert walk_onset(t, speed) == pytest.approx(1.0)
    blip = np.where((t > 0.2) & (t < 0.4), 0.5, 0.0) + np.where(t >= 2.0, 0.5, 0.0)
    assert walk_onset(t, blip) == pytest.approx(2.0)
    assert walk_onset(t, np.zeros_like(t)) is None
