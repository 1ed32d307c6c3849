import math

import numpy as np
import pytest

from bepo.errors import DegenerateInput, NegativeBand, NonFiniteState
from bepo.model import ModelParams, lyapunov_constants, lyapunov_value
from bepo.sde import (
    BandObserver,
    CrossingObserver,
    OscState,
    Phase,
    SampleRecorder,
    SimConfig,
    crossing_frequency_mc,
    ergodic_average_mc,
    lyapunov_check_mc,
    serviceability_mc,
    simulate_paths,
    simulate_trajectory,
    step_euler,
)

MODEL = ModelParams()


# --- single step ---------------------------------------------------------------


def test_step_fixed_point_at_origin():
    s = OscState(0.0, 0.0, 0.0)
    out = step_euler(s, 1e-3, 0.0, MODEL)
    assert (out.x, out.y, out.z) == (0.0, 0.0, 0.0)
    assert out.phase is Phase.ELASTIC


def test_step_clamps_and_flags_phase():
    s = OscState(0.0, 1.0, 0.9995)
    out = step_euler(s, 1e-3, 0.0, MODEL)
    assert out.z == 1.0
    assert out.phase is Phase.PLASTIC_PLUS
    assert out.x == pytest.approx(1e-3)
    # y' = 1 + (-1 - 0.5*0.9995 - 0)*1e-3
    assert out.y == pytest.approx(0.99850025, abs=1e-15)


def test_step_z_uses_old_velocity():
    s = OscState(0.0, 2.0, 0.0)
    out = step_euler(s, 0.5, 0.0, ModelParams(b=10.0))
    assert out.z == 1.0  # 0 + 2*0.5, not the updated velocity


# --- trajectories ----------------------------------------------------------------


def test_zero_noise_origin_is_frozen():
    p = ModelParams(sigma=0.0)
    cfg = SimConfig(dt=1e-3, n_steps=2000, burn_in=0, n_paths=1)
    rec = SampleRecorder()
    simulate_trajectory(cfg, p, observers=[rec])
    xs, ys, zs = rec.arrays()
    assert np.abs(xs).max() == 0.0
    assert np.abs(ys).max() == 0.0
    assert np.abs(zs).max() == 0.0


def test_zero_noise_elastic_regime_matches_reference_ode():
    # independent oracle: in the elastic regime with z == x, the dynamics is
    # x'' = -x' - x; integrate that 2D system with the same Euler scheme
    p = ModelParams(sigma=0.0)
    cfg = SimConfig(
        dt=1e-3, n_steps=20000, burn_in=0, init=OscState(0.5, 0.0, 0.5)
    )
    rec = SampleRecorder()
    simulate_trajectory(cfg, p, observers=[rec])
    xs, ys, zs = rec.arrays()
    assert np.abs(zs[:, 0] - xs[:, 0]).max() == 0.0  # z tracks x bit-exactly

    x, y = 0.5, 0.0
    ref_x = np.empty(cfg.n_steps)
    ref_y = np.empty(cfg.n_steps)
    dt = cfg.dt
    for n in range(cfg.n_steps):
        x, y = x + y * dt, y + (-y - 0.5 * x - 0.5 * x) * dt
        ref_x[n] = x
        ref_y[n] = y
    assert np.abs(ref_x - xs[:, 0]).max() < 1e-12
    assert np.abs(ref_y - ys[:, 0]).max() < 1e-12

    # energy decays monotonically across whole-period windows (period ~ 2*pi)
    energy = xs[:, 0] ** 2 + ys[:, 0] ** 2
    window = int(2 * math.pi / dt)
    marks = energy[::window]
    assert (np.diff(marks) < 0).all()


def test_same_seed_bit_identical():
    cfg = SimConfig(dt=1e-3, n_steps=5000, burn_in=100, seed=42)
    recs = []
    for _ in range(2):
        rec = SampleRecorder()
        simulate_trajectory(cfg, MODEL, observers=[rec])
        recs.append(rec.arrays())
    for a, b in zip(recs[0], recs[1]):
        assert np.array_equal(a, b)


def test_block_size_does_not_change_results():
    cfg = SimConfig(dt=1e-3, n_steps=3000, burn_in=0, seed=7, n_paths=3)
    outs = []
    for block in (64, 1024):
        rec = SampleRecorder()
        simulate_paths(cfg, MODEL, [rec], block=block)
        outs.append(rec.arrays())
    for a, b in zip(outs[0], outs[1]):
        assert np.array_equal(a, b)


def test_engine_matches_scalar_stepper_bitwise():
    cfg = SimConfig(dt=1e-3, n_steps=4000, burn_in=0, seed=11)
    rec = SampleRecorder()
    simulate_paths(cfg, MODEL, [rec], block=512)
    xs, ys, zs = rec.arrays()

    rng = np.random.default_rng(np.random.SeedSequence(entropy=11, spawn_key=(0,)))
    noise = rng.standard_normal(cfg.n_steps)
    dW = noise * np.sqrt(cfg.dt)
    s = OscState(0.0, 0.0, 0.0)
    for n in range(cfg.n_steps):
        s = step_euler(s, cfg.dt, dW[n], MODEL)
        assert xs[n, 0] == s.x and ys[n, 0] == s.y and zs[n, 0] == s.z


def test_z_bounded_and_phase_consistent():
    cfg = SimConfig(dt=1e-3, n_steps=50_000, burn_in=0, seed=3)
    rec = SampleRecorder()
    simulate_trajectory(cfg, MODEL, observers=[rec])
    _, _, zs = rec.arrays()
    assert np.abs(zs).max() <= MODEL.b
    # the bound is attained (plastic excursions happen on this horizon)
    assert (np.abs(zs) == MODEL.b).any()


def test_phase_events_alternate_per_side():
    cfg = SimConfig(dt=1e-3, n_steps=200_000, burn_in=0, seed=5)
    stats = simulate_trajectory(cfg, MODEL)
    assert stats.events, "expected plastic events on this horizon"
    for side in (MODEL.b, -MODEL.b):
        kinds = [e.kind for e in stats.events if e.side == side]
        assert kinds, "both sides should be visited"
        assert kinds[0] == "entry"
        for prev, cur in zip(kinds, kinds[1:]):
            assert prev != cur, "entries and exits must alternate"


def test_antisymmetry_under_noise_negation():
    # scalar-loop oracle: negating every increment negates the whole
    # trajectory bit-exactly when the force is odd and the start is 0
    rng = np.random.default_rng(17)
    dW = rng.standard_normal(20_000) * math.sqrt(1e-3)
    s_pos = OscState(0.0, 0.0, 0.0)
    s_neg = OscState(0.0, 0.0, 0.0)
    xs_pos = np.empty(len(dW))
    xs_neg = np.empty(len(dW))
    for n, inc in enumerate(dW):
        s_pos = step_euler(s_pos, 1e-3, inc, MODEL)
        s_neg = step_euler(s_neg, 1e-3, -inc, MODEL)
        assert s_neg.x == -s_pos.x and s_neg.y == -s_pos.y and s_neg.z == -s_pos.z
        xs_pos[n] = s_pos.x
        xs_neg[n] = s_neg.x
    a1 = 0.4
    assert crossing_frequency_mc(xs_pos, 1e-3, a1) == crossing_frequency_mc(
        xs_neg, 1e-3, -a1
    )


def test_nonfinite_state_raises():
    cfg = SimConfig(dt=1e3, n_steps=10_000, burn_in=0, seed=1)
    with pytest.raises(NonFiniteState):
        simulate_trajectory(cfg, MODEL)


def test_outside_box_fraction():
    cfg = SimConfig(dt=1e-3, n_steps=20_000, burn_in=0, seed=2)
    stats = simulate_trajectory(cfg, MODEL, box=(3.5, 3.5))
    assert 0.0 <= stats.outside_box_fraction < 0.05
    tight = simulate_trajectory(cfg, MODEL, box=(0.1, 0.1))
    assert tight.outside_box_fraction > stats.outside_box_fraction


# --- estimators ------------------------------------------------------------------


def test_crossing_constant_path():
    assert crossing_frequency_mc(np.full(100, 0.5), 1.0, 1.0) == 0.0


def test_crossing_alternating_path():
    assert crossing_frequency_mc(np.array([-1.0, 1.0, -1.0]), 1.0, 0.0) == 1.0


def test_crossing_sinusoid_analytic():
    # two crossings of zero per unit time for sin(2*pi*t)
    t = np.arange(0, 1.0 + 1e-9, 1e-3)
    x = np.sin(2 * np.pi * t)
    assert crossing_frequency_mc(x, 1e-3, 0.0) == pytest.approx(2.0)


def test_crossing_tie_rule_no_double_count():
    # touching the level without crossing it does not count
    x = np.array([1.0, 0.5, 0.5, 1.0, 0.5, 2.0])
    assert crossing_frequency_mc(x, 1.0, 0.5) == 0.0
    # passing through the level counts once
    x = np.array([1.0, 0.5, -1.0])
    assert crossing_frequency_mc(x, 1.0, 0.5) == pytest.approx(0.5)


def test_crossing_degenerate():
    with pytest.raises(DegenerateInput):
        crossing_frequency_mc(np.array([1.0]), 1.0, 0.0)


def test_serviceability_counts():
    x = np.array([0.1, 0.5, 1.0])
    z = np.zeros(3)
    assert serviceability_mc(x, z, 0.5) == pytest.approx(2.0 / 3.0)
    assert serviceability_mc(x, x, 0.0) == 1.0
    assert serviceability_mc(x, z, 2.0) == 1.0


def test_serviceability_monotone_in_band():
    rng = np.random.default_rng(23)
    x = rng.normal(size=1000)
    z = np.clip(x + rng.normal(size=1000), -1, 1)
    values = [serviceability_mc(x, z, a2) for a2 in np.linspace(0, 4, 33)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] == 1.0


def test_serviceability_errors():
    with pytest.raises(NegativeBand):
        serviceability_mc(np.ones(3), np.ones(3), -1.0)
    with pytest.raises(DegenerateInput):
        serviceability_mc(np.array([]), np.array([]), 1.0)


def test_ergodic_average_constant():
    x = np.ones(400)
    value, se = ergodic_average_mc(lambda x, y, z: np.ones_like(x), x, x, x)
    assert value == 1.0 and se == 0.0


def test_ergodic_average_matches_serviceability():
    rng = np.random.default_rng(29)
    x = rng.normal(size=500)
    z = np.clip(x, -1, 1)
    y = rng.normal(size=500)
    a2 = 0.7
    g = lambda xs, ys, zs: (np.abs(xs - zs) <= a2).astype(float)
    value, _ = ergodic_average_mc(g, x, y, z)
    assert value == serviceability_mc(x, z, a2)


def test_ergodic_average_scaling():
    rng = np.random.default_rng(31)
    x = rng.normal(size=500)
    g1 = lambda xs, ys, zs: xs**2
    g5 = lambda xs, ys, zs: 5.0 * xs**2
    v1, _ = ergodic_average_mc(g1, x, x, x)
    v5, _ = ergodic_average_mc(g5, x, x, x)
    assert v5 == pytest.approx(5.0 * v1, rel=1e-14)


def test_ergodic_average_empty():
    with pytest.raises(DegenerateInput):
        ergodic_average_mc(lambda x, y, z: x, np.array([]), np.array([]), np.array([]))


# --- observers vs estimator functions --------------------------------------------


def test_observers_match_estimators_multi_block():
    cfg = SimConfig(dt=1e-3, n_steps=30_000, burn_in=300, seed=13)
    levels = [-0.5, 0.0, 1.2]
    radii = [0.25, 1.0]
    cobs = CrossingObserver(levels, cfg.dt, cfg.n_paths)
    bobs = BandObserver(radii, cfg.n_paths)
    rec = SampleRecorder()
    simulate_paths(cfg, MODEL, [cobs, bobs, rec], block=777)
    xs, ys, zs = rec.arrays()
    for li, a1 in enumerate(levels):
        assert cobs.frequency(li)[0] == crossing_frequency_mc(xs[:, 0], cfg.dt, a1)
    for ri, a2 in enumerate(radii):
        assert bobs.probability(ri)[0] == serviceability_mc(xs[:, 0], zs[:, 0], a2)


def test_cross_path_se_shrinks_with_more_paths():
    def se_of(n_paths):
        cfg = SimConfig(dt=1e-3, n_steps=20_000, burn_in=200, seed=1, n_paths=n_paths)
        obs = BandObserver([1.0], cfg.n_paths)
        simulate_paths(cfg, MODEL, [obs])
        return obs.probability(0)[1]

    assert se_of(64) < se_of(8)


# --- energy bound ------------------------------------------------------------------


def test_lyapunov_check_zero_noise_origin():
    p = ModelParams(sigma=0.0)
    r = lyapunov_constants(MODEL)
    cfg = SimConfig(dt=1e-3, n_steps=1000, n_paths=100, seed=0)
    report = lyapunov_check_mc(cfg, p, r, checkpoint_times=[0.1, 0.5])
    assert report.means == [0.0, 0.0]
    assert not report.violated


def test_lyapunov_bound_uses_initial_energy():
    r = lyapunov_constants(MODEL)
    cfg = SimConfig(
        dt=1e-3, n_steps=1000, n_paths=100, seed=0, init=OscState(2.0, 2.0, 0.0)
    )
    report = lyapunov_check_mc(cfg, MODEL, r, checkpoint_times=[0.2])
    assert report.bound == pytest.approx(lyapunov_value(2.0, 2.0, r) + 10.5)
    assert report.bound == pytest.approx(22.5)


def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(n_steps=100, burn_in=100)
    with pytest.raises(ValueError):
        SimConfig(n_paths=0)
