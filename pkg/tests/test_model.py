import numpy as np
import pytest

from bepo.errors import AssumptionViolation
from bepo.model import (
    ForceSpec,
    LyapunovReport,
    ModelParams,
    drift_beta,
    lyapunov_constants,
    lyapunov_value,
)

MODEL = ModelParams(k=1.0, alpha=0.5, b=1.0, sigma=1.0, force=ForceSpec(c0=1.0))


def test_drift_beta_hand_values():
    assert drift_beta(0.0, 0.0, 0.0, MODEL) == 0.0
    # f(1,1) - 0.5*1 - 0.5*1 = -1 - 0.5 - 0.5
    assert drift_beta(1.0, 1.0, 1.0, MODEL) == -2.0
    # f(2,0) - 0.5*(-1) - 0.5*2 = 0 + 0.5 - 1
    assert drift_beta(2.0, 0.0, -1.0, MODEL) == -0.5


def test_drift_beta_affine_in_each_argument():
    rng = np.random.default_rng(7)
    p = ModelParams(k=1.3, alpha=0.4, b=2.0, sigma=0.5, force=ForceSpec(2.0, 0.1, 0.3))
    for _ in range(200):
        x1, x2, y, z = rng.normal(size=4) * 3
        mixed = (
            drift_beta(x1 + x2, y, z, p)
            - drift_beta(x1, y, z, p)
            - drift_beta(x2, y, z, p)
            + drift_beta(0.0, y, z, p)
        )
        assert mixed == pytest.approx(0.0, abs=1e-12)
        x = x1
        mixed_y = (
            drift_beta(x, x1 + x2, z, p)
            - drift_beta(x, x1, z, p)
            - drift_beta(x, x2, z, p)
            + drift_beta(x, 0.0, z, p)
        )
        assert mixed_y == pytest.approx(0.0, abs=1e-12)
        mixed_z = (
            drift_beta(x, y, x1 + x2, p)
            - drift_beta(x, y, x1, p)
            - drift_beta(x, y, x2, p)
            + drift_beta(x, y, 0.0, p)
        )
        assert mixed_z == pytest.approx(0.0, abs=1e-12)


def test_drift_beta_odd_for_odd_force():
    rng = np.random.default_rng(11)
    for _ in range(200):
        x, y, z = rng.normal(size=3) * 2
        assert drift_beta(-x, -y, -z, MODEL) == -drift_beta(x, y, z, MODEL)


def test_lyapunov_value_hand_values():
    # default constants give V = x^2 + y^2 + xy
    r = lyapunov_constants(MODEL)
    assert r.vxx == 1.0 and r.vxy == 1.0
    assert lyapunov_value(0.0, 0.0, r) == 0.0
    assert lyapunov_value(1.0, 1.0, r) == 3.0
    assert lyapunov_value(1.0, -1.0, r) == 1.0


def test_lyapunov_value_nonnegative():
    r = lyapunov_constants(MODEL)
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(500, 2)) * 10
    assert (lyapunov_value(pts[:, 0], pts[:, 1], r) >= 0.0).all()


def test_lyapunov_constants_paper_params():
    r = lyapunov_constants(MODEL)
    assert r.C == pytest.approx(1.75)
    assert r.C1 == pytest.approx(1.0 / 6.0)
    assert r.bound == pytest.approx(10.5)


def test_lyapunov_constants_alpha_one_drops_plastic_term():
    p = ModelParams(k=1.0, alpha=1.0, b=1.0, sigma=1.0)
    assert lyapunov_constants(p).C == pytest.approx(1.0)


def test_lyapunov_constants_requires_damping():
    p = ModelParams(force=ForceSpec(c0=-1.0))
    with pytest.raises(AssumptionViolation):
        lyapunov_constants(p)


def test_lyapunov_constants_requires_slope_margin():
    # d1 = c1 must stay strictly below k*alpha
    p = ModelParams(k=1.0, alpha=0.5, force=ForceSpec(c0=1.0, c1=0.5))
    with pytest.raises(AssumptionViolation):
        lyapunov_constants(p)


def test_lyapunov_constants_c1_range():
    rng = np.random.default_rng(19)
    for _ in range(50):
        c0 = rng.uniform(0.2, 3.0)
        p = ModelParams(
            k=rng.uniform(0.5, 2.0),
            alpha=rng.uniform(0.1, 1.0),
            b=rng.uniform(0.5, 2.0),
            sigma=rng.uniform(0.2, 2.0),
            force=ForceSpec(c0=c0),
        )
        r = lyapunov_constants(p)
        assert r.C > 0
        assert 0 < r.C1 <= c0 / 3.0


def test_positive_definiteness_enforced():
    with pytest.raises(AssumptionViolation):
        LyapunovReport(vxx=0.2, vxy=1.0, C=1.0, C1=0.1)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(k=-1.0)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.5)
    with pytest.raises(ValueError):
        ModelParams(b=0.0)
    with pytest.raises(ValueError):
        ModelParams(sigma=-1.0)
    ModelParams(sigma=0.0)  # deterministic limit is allowed
