import numpy as np
import pytest

from ddehb.model import (
    ModelSpec,
    cortico_thalamic,
    kotani_scalar,
    make_model,
    verify_jacobians,
)


class TestKotani:
    def test_rhs_on_cycle_points(self):
        m = kotani_scalar(0.05)
        # x = cos, delayed = sin: at t=0 the derivative vanishes
        assert abs(m.F(np.array([1.0]), np.array([0.0]))[0]) < 1e-15

    def test_rhs_quarter_period(self):
        for delta in (0.01, 0.05, 0.3):
            m = kotani_scalar(delta)
            assert abs(m.F(np.array([0.0]), np.array([1.0]))[0] + 1.0) < 1e-15

    def test_delayed_jacobian_value(self):
        m = kotani_scalar(0.05)
        assert abs(m.DF1(np.array([0.0]), np.array([1.0]))[0, 0] + 1.0) < 1e-15

    def test_default_parameters(self):
        assert kotani_scalar().params == {"delta": 0.05}
        assert abs(kotani_scalar().tau - np.pi / 2) < 1e-15


class TestCortico:
    def test_origin_is_equilibrium(self):
        m = cortico_thalamic()
        np.testing.assert_allclose(m.F(np.zeros(2), np.zeros(2)), 0.0)

    def test_constant_delayed_jacobian(self):
        m = cortico_thalamic(beta=-0.4)
        rng = np.random.default_rng(0)
        for _ in range(5):
            z0, z1 = rng.standard_normal(2), rng.standard_normal(2)
            np.testing.assert_allclose(
                m.DF1(z0, z1), [[0.0, 0.0], [-0.4, 0.0]], atol=1e-15
            )

    def test_instantaneous_jacobian_at_origin(self):
        m = cortico_thalamic(alpha=-0.039, gamma=-2.0)
        J = m.DF0(np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(J, [[0.0, 1.0], [-0.039, -2.0]], atol=1e-15)

    def test_default_parameters(self):
        p = cortico_thalamic().params
        assert p == {
            "alpha": -0.039,
            "beta": -0.4,
            "gamma": -2.0,
            "delta": -10.0,
            "tau": 8.0,
        }
        assert cortico_thalamic().tau == 8.0

    def test_broadcasting(self):
        m = cortico_thalamic()
        z0 = np.random.default_rng(1).standard_normal((5, 3, 2))
        z1 = np.random.default_rng(2).standard_normal((5, 3, 2))
        assert m.F(z0, z1).shape == (5, 3, 2)
        assert m.DF0(z0, z1).shape == (5, 3, 2, 2)


class TestVerifyJacobians:
    def test_kotani_passes(self):
        report = verify_jacobians(kotani_scalar(0.05), trials=100, tol=1e-6)
        assert report.ok
        assert report.max_rel_error < 1e-6

    def test_cortico_passes(self):
        report = verify_jacobians(cortico_thalamic(), trials=100, tol=1e-6)
        assert report.ok

    def test_corrupted_jacobian_located(self):
        base = cortico_thalamic()

        def bad_DF0(z0, z1):
            out = base.DF0(z0, z1)
            out[..., 1, 0] += 0.05
            return out

        broken = ModelSpec(
            "broken", 2, base.tau, base.F, bad_DF0, base.DF1, base.params
        )
        report = verify_jacobians(broken, trials=50, tol=1e-6)
        assert not report.ok
        assert report.worst["jacobian"] == "DF0"
        assert report.worst["entry"] == (1, 0)
        assert "z0" in report.worst

    def test_trials_validated(self):
        with pytest.raises(ValueError):
            verify_jacobians(kotani_scalar(), trials=0)


class TestRegistry:
    def test_builtin_lookup(self):
        assert make_model("kotani", delta=0.1).params["delta"] == 0.1
        assert make_model("cortico").m == 2

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown model"):
            make_model("lorenz")
