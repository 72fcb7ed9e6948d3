import numpy as np
import pytest

from ddehb import floquet
from ddehb.errors import NoRootInBracket

from conftest import CORTICO_SCAN, KOTANI_SCAN


class TestStabilityMatrix:
    def test_tangent_annihilated_at_mu_zero(self, kotani_orbit):
        mat = floquet.build_stability_matrix(kotani_orbit, 0.0).matrix
        xdot = kotani_orbit.xdot_samples.ravel()
        assert np.linalg.norm(mat @ xdot) <= 1e-8 * np.linalg.norm(xdot)

    def test_singular_at_mu_zero(self, kotani_orbit):
        mat = floquet.build_stability_matrix(kotani_orbit, 0.0).matrix
        s = np.linalg.svd(mat, compute_uv=False)
        assert s[-1] <= 1e-8 * s[0]

    def test_zero_delay_reduces_to_ode_form(self, sl_orbit):
        # with tau = 0 the delay factor is 1 and the delay operator is the
        # identity, so M(mu) must equal the plain ODE collocation matrix
        import dataclasses

        from ddehb.spectral import build_operators

        orbit0 = dataclasses.replace(
            sl_orbit, model=dataclasses.replace(sl_orbit.model, tau=0.0)
        )
        mu = 0.123
        mat = floquet.build_stability_matrix(orbit0, mu).matrix
        ops = build_operators(orbit0.M, orbit0.T, 0.0, mu=mu)
        t = orbit0.grid.sample_times
        DF0 = orbit0.model.DF0(orbit0.X, orbit0.X)
        DF1 = orbit0.model.DF1(orbit0.X, orbit0.X)
        expected = (
            np.kron(ops.D, np.eye(2))
            - floquet._blockdiag(DF0)
            - floquet._blockdiag(DF1)
        )
        np.testing.assert_allclose(mat, expected, atol=1e-12)


class TestDetScan:
    def test_kotani_roots_at_zero_and_negative(self, kotani_orbit, kotani_mu,
                                               kotani_oracle_floquet):
        scan = floquet.det_scan(kotani_orbit, KOTANI_SCAN, 200)
        brackets = scan.sign_changes()
        assert any(lo <= 0.0 <= hi for lo, hi in brackets)
        assert any(hi < -0.005 for lo, hi in brackets)
        # nontrivial root agrees with the monodromy oracle within 1%
        mu_oracle = kotani_oracle_floquet.leading_nontrivial()
        assert abs(kotani_mu - mu_oracle) / abs(mu_oracle) < 0.01

    def test_cortico_dip_at_paper_value(self, cortico_orbit):
        scan = floquet.det_scan(cortico_orbit, CORTICO_SCAN, 200)
        sigmin = np.array([p.sigma_min for p in scan.points])
        mus = np.array([p.mu for p in scan.points])
        negative = (mus < -1e-3) & (mus > -0.01)
        dip_mu = mus[negative][np.argmin(sigmin[negative])]
        assert abs(dip_mu - (-0.00296)) < 3e-4  # grid-resolution locate

    def test_rootfree_range_bounded_away(self, kotani_orbit):
        scan = floquet.det_scan(kotani_orbit, (-0.008, -0.001), 40)
        assert scan.sign_changes() == []
        sigmin = np.array([p.sigma_min for p in scan.points])
        assert sigmin.min() > 1e-4
        assert np.all(np.diff(sigmin) < 0)  # single root ahead: monotone approach

    def test_grid_validation(self, kotani_orbit):
        with pytest.raises(ValueError):
            floquet.det_scan(kotani_orbit, (-0.1, 0.0), 1)


class TestRefineExponent:
    def test_trivial_root_recovered(self, kotani_orbit):
        mu = floquet.refine_exponent(kotani_orbit, (-0.004, 0.003))
        assert abs(mu) < 1e-8

    def test_cortico_paper_value(self, cortico_orbit):
        mu = floquet.refine_exponent(cortico_orbit, (-0.01, -0.001))
        assert abs(mu - (-0.00296)) < 5e-5

    def test_kotani_matches_monodromy_oracle(self, kotani_orbit, kotani_oracle_floquet):
        mu = floquet.refine_exponent(kotani_orbit, (-0.06, -0.01))
        mu_oracle = kotani_oracle_floquet.leading_nontrivial()
        assert abs(mu - mu_oracle) / abs(mu_oracle) < 0.01

    def test_no_root_in_bracket(self, kotani_orbit):
        with pytest.raises(NoRootInBracket):
            floquet.refine_exponent(kotani_orbit, (-0.02, -0.01))


class TestEigenfunction:
    def test_trivial_mode_is_cycle_tangent(self, kotani_orbit):
        mode = floquet.eigenfunction(kotani_orbit, 0.0)
        xdot = floquet._fix_mode_gauge(kotani_orbit.xdot_samples.copy())
        assert np.abs(mode.R - xdot).max() < 1e-6

    def test_kotani_mode_matches_monodromy_eigenvector(
        self, kotani_mode, kotani_rho_oracle, kotani_orbit
    ):
        tg = kotani_orbit.grid.sample_times
        rho = kotani_rho_oracle(tg)
        if np.sum(rho * kotani_mode.R) < 0:
            rho = -rho
        assert np.abs(rho - kotani_mode.R).max() < 1e-3

    def test_cortico_mode_quality(self, cortico_mode):
        assert cortico_mode.residual < 1e-6
        assert abs(np.linalg.norm(cortico_mode.R, axis=1).max() - 1.0) < 1e-12

    def test_gauge_convention(self, kotani_mode, cortico_mode):
        for mode in (kotani_mode, cortico_mode):
            idx = np.unravel_index(np.argmax(np.abs(mode.R)), mode.R.shape)
            assert mode.R[idx] > 0

    def test_rejects_nonsingular_mu(self, kotani_orbit):
        with pytest.raises(ValueError, match="not singular"):
            floquet.eigenfunction(kotani_orbit, -0.015)


class TestFindExponents:
    def test_kotani_single_nontrivial(self, kotani_orbit, kotani_mu):
        roots = floquet.find_exponents(kotani_orbit, KOTANI_SCAN, 200)
        assert len(roots) == 1
        assert roots[0] == kotani_mu
        assert all(mu < 0 for mu in roots)

    def test_cortico_stable(self, cortico_orbit):
        roots = floquet.find_exponents(cortico_orbit, CORTICO_SCAN, 200)
        assert all(mu < 0 for mu in roots)

    def test_exponents_stable_under_M_doubling(
        self, kotani_mu, kotani_mu_doubled, cortico_mu, cortico_mu_doubled
    ):
        assert abs(kotani_mu_doubled - kotani_mu) < 1e-6
        assert abs(cortico_mu_doubled - cortico_mu) < 1e-6
