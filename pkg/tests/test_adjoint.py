import numpy as np
import pytest

from ddehb import adjoint
from ddehb.errors import NormalizationSingular


class TestAdjointMatrix:
    def test_singular_at_zero(self, kotani_orbit):
        A = adjoint.build_adjoint_matrix(kotani_orbit, 0.0)
        s = np.linalg.svd(A, compute_uv=False)
        assert s[-1] <= 1e-8 * s[0]

    def test_singular_at_leading_exponent(self, kotani_orbit, kotani_mu):
        A = adjoint.build_adjoint_matrix(kotani_orbit, kotani_mu)
        s = np.linalg.svd(A, compute_uv=False)
        assert s[-1] <= 1e-8 * s[0]

    def test_regular_between_exponents(self, kotani_orbit, kotani_mu):
        A = adjoint.build_adjoint_matrix(kotani_orbit, 0.5 * kotani_mu)
        s = np.linalg.svd(A, compute_uv=False)
        assert s[-1] > 1e-4 * s[0]


class TestSolveResponse:
    def test_phase_matches_oracle(self, kotani_orbit, kotani_z, kotani_z_oracle):
        tg = kotani_orbit.grid.sample_times
        assert np.abs(kotani_z_oracle.value(tg) - kotani_z.Q).max() < 1e-3

    def test_amplitude_matches_oracle(self, kotani_orbit, kotani_q, kotani_q_oracle):
        tg = kotani_orbit.grid.sample_times
        q = kotani_q_oracle.value(tg)
        if np.sum(q * kotani_q.Q) < 0:
            q = -q
        assert np.abs(q - kotani_q.Q).max() < 1e-3

    def test_cortico_phase_both_components(self, cortico_orbit, cortico_z,
                                           cortico_z_oracle):
        # stand-in for the analytic center-manifold comparison: 2% sup-norm
        # relative agreement per component against the discretized adjoint
        tg = cortico_orbit.grid.sample_times
        gap = np.abs(cortico_z_oracle.value(tg) - cortico_z.Q).max(axis=0)
        scale = np.abs(cortico_z.Q).max(axis=0)
        assert (gap / scale).max() < 0.02

    def test_nullvector_residuals(self, kotani_z, kotani_q, cortico_z, cortico_q):
        for curve in (kotani_z, kotani_q, cortico_z, cortico_q):
            assert curve.residual <= 1e-6

    def test_phase_requires_zero_mu(self, kotani_orbit):
        with pytest.raises(ValueError):
            adjoint.solve_response(kotani_orbit, -0.01, "phase")

    def test_amplitude_requires_mode(self, kotani_orbit, kotani_mu):
        with pytest.raises(ValueError):
            adjoint.solve_response(kotani_orbit, kotani_mu, "amplitude")

    def test_phase_and_amplitude_machinery_parallel_at_zero(
        self, kotani_orbit, kotani_z
    ):
        from ddehb import floquet

        mode0 = floquet.eigenfunction(kotani_orbit, 0.0)
        q0 = adjoint.solve_response(kotani_orbit, 0.0, "amplitude", floquet_mode=mode0)
        scale = float(
            (kotani_z.Q.ravel() @ q0.Q.ravel()) / (q0.Q.ravel() @ q0.Q.ravel())
        )
        assert np.abs(kotani_z.Q - scale * q0.Q).max() < 1e-8


class TestNormalizePhase:
    def test_scale_invariance(self, kotani_orbit, kotani_z):
        doubled = adjoint.normalize_phase(2.0 * kotani_z.Q, kotani_orbit)
        np.testing.assert_allclose(doubled, kotani_z.Q, atol=1e-12)

    def test_identity_value_for_unit_frequency(self, kotani_orbit, kotani_z):
        # T = 2 pi makes the target omega = 1
        value = adjoint.pairing_functional(
            kotani_orbit, kotani_z, kotani_orbit.series.derivative(), 0.0
        )
        assert abs(value - 1.0) < 1e-8

    def test_quadrature_node_insensitivity(self, kotani_orbit, kotani_z):
        z32 = adjoint.normalize_phase(kotani_z.Q, kotani_orbit, quad_nodes=32)
        z64 = adjoint.normalize_phase(kotani_z.Q, kotani_orbit, quad_nodes=64)
        assert np.abs(z32 - z64).max() < 1e-10

    def test_zero_curve_rejected(self, kotani_orbit):
        with pytest.raises(NormalizationSingular):
            adjoint.normalize_phase(np.zeros_like(kotani_orbit.X), kotani_orbit)


class TestNormalizeAmplitude:
    def test_identity_holds(self, kotani_orbit, kotani_mu, kotani_mode, kotani_q):
        value = adjoint.pairing_functional(
            kotani_orbit, kotani_q, kotani_mode, kotani_mu
        )
        assert abs(value - 1.0) < 1e-8

    def test_reduces_to_phase_identity_at_zero_mu(self, kotani_orbit, kotani_z):
        from ddehb import floquet

        mode0 = floquet.eigenfunction(kotani_orbit, 0.0)  # xdot / max|xdot|
        mx = np.linalg.norm(kotani_orbit.xdot_samples, axis=1).max()
        q = adjoint.normalize_amplitude(kotani_z.Q, kotani_orbit, 0.0, mode0)
        expected = kotani_z.Q * (mx / kotani_orbit.omega)
        sign = np.sign(np.sum(q * expected))
        assert np.abs(sign * q - expected).max() < 1e-8

    def test_legacy_flag_changes_scale_only(
        self, kotani_orbit, kotani_mu, kotani_mode, kotani_q
    ):
        raw = kotani_q.Q
        q_paper = adjoint.normalize_amplitude(
            raw, kotani_orbit, kotani_mu, kotani_mode
        )
        q_legacy = adjoint.normalize_amplitude(
            raw, kotani_orbit, kotani_mu, kotani_mode, legacy_scaling=True
        )
        c_paper = adjoint.pairing_functional(
            kotani_orbit, raw, kotani_mode, kotani_mu, decay_factor=True
        )
        c_legacy = adjoint.pairing_functional(
            kotani_orbit, raw, kotani_mode, kotani_mu, decay_factor=False
        )
        np.testing.assert_allclose(
            q_legacy * (c_legacy / c_paper), q_paper, atol=1e-12
        )


class TestConservedPairing:
    def test_phase_pairing_constant(self, kotani_orbit, kotani_z):
        tangent = kotani_orbit.series.derivative()
        vals = [
            adjoint.conserved_pairing(kotani_orbit, kotani_z, tangent, 0.0, t0)
            for t0 in np.arange(4) * kotani_orbit.T / 4
        ]
        np.testing.assert_allclose(vals, kotani_orbit.omega, atol=1e-10)
        assert max(vals) - min(vals) < 1e-6

    def test_amplitude_pairing_constant(self, kotani_orbit, kotani_mu, kotani_mode,
                                        kotani_q):
        vals = [
            adjoint.conserved_pairing(
                kotani_orbit, kotani_q, kotani_mode, kotani_mu, t0
            )
            for t0 in np.arange(4) * kotani_orbit.T / 4
        ]
        np.testing.assert_allclose(vals, 1.0, atol=1e-10)
        assert max(vals) - min(vals) < 1e-6

    def test_cortico_pairings_constant(self, cortico_orbit, cortico_mu, cortico_mode,
                                       cortico_z, cortico_q):
        tangent = cortico_orbit.series.derivative()
        t0s = np.arange(8) * cortico_orbit.T / 8
        zvals = [
            adjoint.conserved_pairing(cortico_orbit, cortico_z, tangent, 0.0, t0)
            for t0 in t0s
        ]
        qvals = [
            adjoint.conserved_pairing(
                cortico_orbit, cortico_q, cortico_mode, cortico_mu, t0
            )
            for t0 in t0s
        ]
        assert max(zvals) - min(zvals) < 1e-6
        assert max(qvals) - min(qvals) < 1e-6

    def test_full_period_shift_reproduces_base(self, kotani_orbit, kotani_z):
        tangent = kotani_orbit.series.derivative()
        v0 = adjoint.conserved_pairing(kotani_orbit, kotani_z, tangent, 0.0, 0.0)
        vT = adjoint.conserved_pairing(
            kotani_orbit, kotani_z, tangent, 0.0, kotani_orbit.T
        )
        assert abs(v0 - vT) < 1e-12
