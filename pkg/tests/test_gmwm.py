import numpy as np
import pytest

from wavemoments.errors import DataError
from wavemoments.gmwm import (
    fit,
    nelder_mead,
    objective,
    omega_default,
    omega_identity,
)
from wavemoments.implied import implied_wv
from wavemoments.models import parse_model
from wavemoments.simulate import contaminate, gen_series
from wavemoments.wavelet import modwt_haar
from wavemoments.wv import wv_classical


class TestOmega:
    def test_default_diagonal_values(self):
        # at nu = 1 the weight is 1 / (2 / eta) = eta / 2 per scale
        from wavemoments.wv import edof

        ts = gen_series(parse_model("WN(1)"), 1024, seed=0)
        est = wv_classical(modwt_haar(ts.values))

        class _Unit:
            nu2 = np.ones(est.n_scales)
            counts = est.counts
            scales = est.scales

        omega = omega_default(_Unit())
        np.testing.assert_allclose(
            omega.diagonal, edof(est.counts, est.scales) / 2.0, rtol=1e-12)
        assert omega.kind == "default-diagonal"

    def test_identity(self):
        omega = omega_identity(5)
        np.testing.assert_array_equal(omega.matrix, np.eye(5))

    def test_zero_scale_gets_zero_weight(self):
        class _OneDead:
            nu2 = np.array([1.0, 0.0, 2.0])
            counts = np.array([100, 90, 80])
            scales = np.array([2, 4, 8])

        with pytest.warns(UserWarning, match="zero estimated WV"):
            omega = omega_default(_OneDead())
        assert omega.diagonal[1] == 0.0
        assert omega.degenerate_scales == (4,)

    def test_all_degenerate_rejected(self):
        class _Dead:
            nu2 = np.zeros(3)
            counts = np.array([100, 90, 80])
            scales = np.array([2, 4, 8])

        with pytest.raises(DataError, match="degenerate"):
            omega_default(_Dead())


class TestObjective:
    def test_zero_at_exact_match(self):
        spec = parse_model("WN()")
        theta = np.array([1.5])
        nu = implied_wv(spec, theta, [2, 4, 8]).total
        assert objective(theta, nu, omega_identity(3), spec) == pytest.approx(0.0)

    def test_identity_unit_residual(self):
        spec = parse_model("WN()")
        theta = np.array([1.0])
        nu_model = implied_wv(spec, theta, [2, 4, 8]).total
        nu_hat = nu_model.copy()
        nu_hat[0] += 1.0
        assert objective(theta, nu_hat, omega_identity(3), spec) \
            == pytest.approx(1.0)

    def test_scalar_quadratic_form(self):
        spec = parse_model("WN()")
        theta = np.array([2.0])
        nu_model = implied_wv(spec, theta, [2]).total
        nu_hat = nu_model + 3.0
        omega = np.array([[2.0]])
        assert objective(theta, nu_hat, omega, spec) == pytest.approx(18.0)

    def test_constraint_violation_is_inf(self):
        spec = parse_model("WN()")
        assert objective(np.array([-1.0]), np.ones(3), omega_identity(3), spec) \
            == np.inf


class TestNelderMead:
    def test_quadratic_bowl(self):
        x, value, _, _, converged = nelder_mead(
            lambda v: float(np.sum((v - 3.0) ** 2)), np.zeros(3))
        assert converged
        np.testing.assert_allclose(x, 3.0, atol=1e-4)
        assert value < 1e-7

    def test_rosenbrock_2d(self):
        def rosen(v):
            return float((1 - v[0]) ** 2 + 100 * (v[1] - v[0] ** 2) ** 2)

        x, value, _, _, converged = nelder_mead(rosen, np.array([-1.2, 1.0]),
                                                max_iter=4000)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-3)

    def test_deterministic(self):
        def bumpy(v):
            return float(np.sum(v ** 2) + 0.1 * np.sin(5 * v).sum())

        runs = [nelder_mead(bumpy, np.array([2.0, -1.0])) for _ in range(2)]
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        assert runs[0][1] == runs[1][1]


class TestFit:
    def test_wn_recovery(self):
        hits = 0
        for rep in range(20):
            ts = gen_series(parse_model("WN(sigma2=1)"), 10_000, seed=2_000 + rep)
            result = fit(parse_model("WN()"), ts, n_boot=0, seed=1)
            hits += 0.9 <= result.theta[0] <= 1.1
        assert hits >= 19

    def test_fixed_point_at_exact_wv(self):
        # start the optimizer at theta0 whose implied WV we feed in as nu_hat
        spec = parse_model("WN(sigma2=2.0)")
        ts = gen_series(spec, 4096, seed=3)
        result = fit(spec, ts, n_boot=0, seed=1)
        nu_exact = implied_wv(parse_model("WN()"), result.theta,
                              result.wv.scales).total
        from wavemoments.gmwm import _minimize

        theta, value, _, _, converged = _minimize(
            parse_model("WN()"), nu_exact, result.omega,
            np.log(result.theta))
        assert value == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(theta, result.theta, rtol=1e-6)

    def test_bootstrap_shapes_and_invariants(self):
        ts = gen_series(parse_model("WN(1)+RW(0.01)"), 2_048, seed=5)
        result = fit(parse_model("WN()+RW()"), ts, n_boot=25, seed=7)
        assert result.converged
        assert result.se.shape == (2,)
        assert np.all(result.ci_low <= result.theta)
        assert np.all(result.theta <= result.ci_high)
        assert np.all(result.se > 0)
        # stored objective equals a recomputation at theta_hat
        recomputed = objective(result.theta, result.wv.nu2, result.omega,
                               result.spec)
        assert recomputed == pytest.approx(result.objective_value, abs=1e-12)

    def test_reproducibility(self):
        ts = gen_series(parse_model("AR1(0.8, 1)+WN(1)"), 2_048, seed=9)
        spec = parse_model("AR1()+WN()")
        a = fit(spec, ts, n_boot=10, seed=42)
        b = fit(spec, ts, n_boot=10, seed=42)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.se, b.se)
        assert a.objective_value == b.objective_value

    def test_threads_do_not_change_results(self):
        ts = gen_series(parse_model("WN(1)+RW(0.02)"), 1_024, seed=11)
        spec = parse_model("WN()+RW()")
        serial = fit(spec, ts, n_boot=16, seed=3, threads=1)
        parallel = fit(spec, ts, n_boot=16, seed=3, threads=4)
        np.testing.assert_array_equal(serial.theta, parallel.theta)
        np.testing.assert_array_equal(serial.se, parallel.se)

    def test_omega_scaling_leaves_theta_unchanged(self):
        ts = gen_series(parse_model("WN(1)+RW(0.02)"), 1_024, seed=13)
        spec = parse_model("WN()+RW()")
        base = fit(spec, ts, n_boot=0, seed=1)
        scaled = fit(spec, ts, n_boot=0, seed=1,
                     omega=7.0 * base.omega.matrix)
        np.testing.assert_allclose(scaled.theta, base.theta, rtol=1e-7)
        assert scaled.objective_value == pytest.approx(
            7.0 * base.objective_value, rel=1e-6)

    def test_too_many_parameters_rejected(self):
        ts = gen_series(parse_model("WN(1)"), 64, seed=0)  # J = 6
        with pytest.raises(DataError, match="free parameters"):
            fit(parse_model("3*AR1()+WN()"), ts, n_boot=0)

    def test_robust_fit_on_contaminated_series(self):
        true = parse_model("AR1(phi=.99, sigma2=.01) + WN(sigma2=1)")
        ts = gen_series(true, 1_000, seed=213)
        dirty = contaminate(ts, 0.01, 10.0, seed=213)
        result = fit(parse_model("AR1()+WN()"), dirty, robust=True, eff=0.6,
                     n_boot=0, seed=1337)
        phi_hat, ar_var, wn_var = result.theta
        assert 0.9 <= phi_hat < 1.0
        assert 0.5 <= wn_var <= 1.5

    def test_consistency_sweep(self):
        # RMSE of the WN variance estimate shrinks as T grows
        spec = parse_model("WN()")
        rmse = []
        for n in (1_000, 10_000, 100_000):
            errors = []
            for rep in range(30):
                ts = gen_series(parse_model("WN(1)"), n, seed=4_000 + rep)
                result = fit(spec, ts, n_boot=0)
                errors.append(result.theta[0] - 1.0)
            rmse.append(float(np.sqrt(np.mean(np.square(errors)))))
        assert rmse[0] > rmse[1] > rmse[2]

    def test_multi_ar1_grid_start(self):
        true = parse_model("AR1(0.9,1)+AR1(0.1,4)+DR(0.01)")
        ts = gen_series(true, 1_000, seed=1337)
        result = fit(parse_model("2*AR1()+DR()"), ts, n_boot=0, seed=1337)
        assert result.converged
        phis = sorted([result.theta[0], result.theta[2]])
        assert phis[1] > 0.6  # the persistent component is found
