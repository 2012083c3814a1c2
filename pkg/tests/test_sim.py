import math
from dataclasses import replace

import numpy as np
import pytest

from escnav import (
    EscParams,
    NavFunction,
    NavMode,
    Scenario,
    ScenarioError,
    SimMode,
    SourcePotential,
    Vec2,
    Waypoint,
    World,
    check_collision,
    run,
    sensor_scan,
)
from escnav.sim import scenario_with_param

PAPER_ESC = dict(omega=40.0, alpha=0.07, gain=10.0, hpf_cutoff=20.0, sample_rate=400.0, v_max=0.8)


def quiet_scenario(**overrides):
    """One far-away obstacle, nothing within detection range of the start."""
    fields = dict(
        world=World.build(Vec2(0.0, 0.0), 3.0, [(2.0, 0.0, 0.25)], inflation=0.05),
        source=SourcePotential.static(Vec2(1.0, 1.0), Vec2(0.0, 0.0)),
        esc=EscParams(**PAPER_ESC),
        nav_mode=NavMode.fixed(1),
        start=Vec2(-1.0, 0.5),
        duration=0.0,
        detection_radius=0.3,
        convergence_radius=0.21,
        convergence_hold=1.0,
    )
    fields.update(overrides)
    return Scenario(**fields)


def blind_collision_scenario(collision_stop=True):
    """Obstacle dead ahead that the agent can never detect."""
    return Scenario(
        world=World.build(Vec2(0.0, 0.0), 3.0, [(0.0, 2.0, 0.25)]),
        source=SourcePotential.static(Vec2(1.0, 1.0), Vec2(0.0, 0.0)),
        esc=EscParams(**PAPER_ESC),
        nav_mode=NavMode.fixed(1),
        start=Vec2(0.0, 2.5),
        duration=150.0,
        detection_radius=0.0,
        convergence_radius=0.21,
        convergence_hold=1.0,
        collision_stop=collision_stop,
    )


# -- scenario validation ------------------------------------------------------


def test_scenario_rejects_start_inside_inflated_obstacle():
    with pytest.raises(ScenarioError):
        quiet_scenario(start=Vec2(2.0, 0.05))


def test_scenario_rejects_negative_duration():
    with pytest.raises(ScenarioError):
        quiet_scenario(duration=-1.0)


def test_scenario_with_param_replaces_esc_and_inflation():
    sc = quiet_scenario()
    assert scenario_with_param(sc, "alpha", 0.2).esc.alpha == 0.2
    swept = scenario_with_param(sc, "inflation", 0.12)
    assert all(ob.inflation == 0.12 for ob in swept.world.obstacles)
    with pytest.raises(ScenarioError):
        scenario_with_param(sc, "bogus", 1.0)


# -- sensors and collision ----------------------------------------------------


def test_sensor_scan_infinite_radius_sees_everything(reference_scenario):
    world = reference_scenario.world
    nav = NavFunction(world=world, source=reference_scenario.source, k=6)
    found = sensor_scan(world, nav, Vec2(0.0, 2.5), math.inf)
    assert found == (1, 2, 3, 4, 5)


def test_sensor_scan_far_away_sees_nothing(reference_scenario):
    world = reference_scenario.world
    nav = NavFunction(world=world, source=reference_scenario.source, k=6)
    assert sensor_scan(world, nav, Vec2(0.0, 2.5), 0.5) == ()


def test_sensor_scan_threshold_is_inclusive():
    world = World.build(Vec2(0.0, 0.0), 3.0, [(2.0, 0.0, 0.5)])
    nav = NavFunction(
        world=world, source=SourcePotential.static(Vec2(1.0, 1.0), Vec2(0.0, 0.0)), k=1
    )
    # surface sits exactly 1.5 from the origin
    assert sensor_scan(world, nav, Vec2(0.0, 0.0), 1.5) == (1,)
    assert sensor_scan(world, nav, Vec2(0.0, 0.0), 1.5 - 1e-12) == ()


def test_sensor_scan_skips_known(reference_scenario):
    world = reference_scenario.world
    nav = NavFunction(
        world=world, source=reference_scenario.source, k=6, known_ids={1, 2, 3}
    )
    assert sensor_scan(world, nav, Vec2(0.0, 2.5), math.inf) == (4, 5)


def test_check_collision_cases(reference_world):
    assert check_collision(reference_world, Vec2(0.0, 2.0)) is None
    assert check_collision(reference_world, Vec2(-1.0, 0.0)) == 1
    assert check_collision(reference_world, Vec2(3.2, 0.0)) == 0  # workspace rim


def test_inflation_annulus_is_not_a_collision(reference_world):
    # outside the true disc, inside the inflated one
    ob = reference_world.obstacle(1)
    p = Vec2(ob.center.x + ob.radius + 0.5 * ob.inflation, ob.center.y)
    assert check_collision(reference_world, p) is None
    _, clearance = reference_world.in_free_space(p)
    assert 0.0 < clearance < ob.inflation


# -- runs ----------------------------------------------------------------------


def test_zero_duration_run_single_sample_no_events():
    result = run(quiet_scenario())
    assert len(result.trajectory) == 1
    assert len(result.events) == 0
    sample = result.trajectory[0]
    assert sample.t == 0.0
    assert (sample.v_cmd.x, sample.v_cmd.y) == (0.0, 0.0)
    assert sample.eta == sample.phi_meas
    assert result.summary.ticks == 0


def test_run_is_deterministic():
    sc = quiet_scenario(duration=20.0, detection_radius=math.inf)
    a = run(sc)
    b = run(sc)
    assert a.trajectory == b.trajectory
    assert list(a.events) == list(b.events)
    assert a.summary == b.summary


def test_discovery_events_recorded_once():
    sc = quiet_scenario(duration=5.0, detection_radius=math.inf)
    result = run(sc)
    discoveries = result.events.of_kind("discovery")
    assert [e.payload["id"] for e in discoveries] == [1]
    assert discoveries[0].t == 0.0
    assert result.trajectory[0].known_count == 1


def test_trajectory_times_strictly_increase_and_cover_duration():
    sc = quiet_scenario(duration=2.0)
    result = run(sc)
    times = [s.t for s in result.trajectory]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(2.0, abs=1e-12)


def test_source_positions_follow_schedule():
    source = SourcePotential(
        q=Vec2(1.0, 1.0),
        schedule=(Waypoint(Vec2(0.0, 0.0), hold_until=1.0), Waypoint(Vec2(0.5, 0.0))),
        speed=0.25,
    )
    sc = quiet_scenario(source=source, duration=4.0)
    result = run(sc)
    for sample in result.trajectory:
        expected = source.position(sample.t)
        assert sample.source_pos.distance_to(expected) == 0.0


def test_collision_stops_run_by_default():
    result = run(blind_collision_scenario())
    assert result.summary.collided
    assert result.summary.final_time < 150.0
    collisions = result.events.of_kind("collision")
    assert len(collisions) == 1
    assert collisions[0].payload["id"] == 1
    assert result.summary.min_clearance < 0.0
    # trajectory ends at the collision instant
    assert result.trajectory[-1].t == pytest.approx(result.summary.final_time)


def test_collision_continue_and_log():
    result = run(blind_collision_scenario(collision_stop=False))
    assert result.summary.collided
    assert result.summary.final_time == pytest.approx(150.0, abs=1e-9)
    assert len(result.events.of_kind("collision")) >= 1


def test_convergence_event_requires_hold():
    sc = quiet_scenario(start=Vec2(0.0, 0.15), duration=3.0, convergence_hold=1.0)
    result = run(sc)
    assert result.summary.converged
    event = result.events.of_kind("converged")[0]
    assert event.t == pytest.approx(1.0, abs=0.05)


def test_gain_assumption_warning_logged():
    params = EscParams(omega=15.0, alpha=0.07, gain=10.0, hpf_cutoff=20.0, sample_rate=150.0)
    result = run(quiet_scenario(esc=params))
    warnings = result.events.of_kind("warning")
    assert len(warnings) == 1


def test_saturation_events_flag_clamped_ticks():
    params = EscParams(omega=40.0, alpha=0.07, gain=4000.0, hpf_cutoff=20.0,
                       sample_rate=400.0, v_max=0.2)
    sc = quiet_scenario(esc=params, start=Vec2(0.0, 2.0), duration=2.0)
    result = run(sc)
    assert result.events.count("saturation") > 0
    assert all(
        max(abs(s.v_cmd.x), abs(s.v_cmd.y)) <= 0.2 + 1e-15 for s in result.trajectory
    )


def test_continuous_mode_tracks_sampled_mode_to_first_order(reference_scenario):
    short = replace(reference_scenario, duration=5.0)
    cont = run(replace(short, mode=SimMode.continuous())).flow()

    def deviation_from_continuous(sample_rate):
        sampled = run(replace(short, esc=replace(short.esc, sample_rate=sample_rate))).flow()
        cx = np.interp(sampled.times, cont.times, cont.points[:, 0])
        cy = np.interp(sampled.times, cont.times, cont.points[:, 1])
        return float(np.hypot(sampled.points[:, 0] - cx, sampled.points[:, 1] - cy).max())

    coarse = deviation_from_continuous(400.0)
    fine = deviation_from_continuous(800.0)
    # zero-order hold error is first order in dt: halving dt should halve it
    assert 2.0 / 1.5 <= coarse / fine <= 2.0 * 1.5


def test_continuous_mode_is_deterministic_and_unsaturated(reference_scenario):
    sc = replace(
        reference_scenario,
        duration=2.0,
        mode=SimMode.continuous(),
        esc=replace(reference_scenario.esc, v_max=1e-3),
    )
    a = run(sc)
    b = run(sc)
    assert a.trajectory == b.trajectory
    assert a.events.count("saturation") == 0  # no clamping in continuous mode
