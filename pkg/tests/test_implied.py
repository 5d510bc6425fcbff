import zlib

import numpy as np
import pytest

from wavemoments.errors import ModelError
from wavemoments.implied import (
    ImpliedEvaluator,
    arma_acvf,
    implied_wv,
    implied_wv_term,
    model_acvf,
)
from wavemoments.models import ModelTerm, parse_model

SCALES = 2 ** np.arange(1, 11)


class TestArmaAcvf:
    def test_ar1_closed_form(self):
        gamma = arma_acvf([0.5], [], 1.0, 5)
        expected = 0.5 ** np.arange(6) / (1 - 0.25)
        np.testing.assert_allclose(gamma, expected, rtol=1e-12)
        assert gamma[2] == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_ma1_closed_form(self):
        gamma = arma_acvf([], [0.3], 0.5, 4)
        np.testing.assert_allclose(gamma, [0.545, 0.15, 0.0, 0.0, 0.0], atol=1e-15)

    def test_arma11_closed_form(self):
        phi, theta, s2 = 0.6, 0.2, 1.3
        gamma = arma_acvf([phi], [theta], s2, 6)
        g0 = s2 * (1 + 2 * phi * theta + theta ** 2) / (1 - phi ** 2)
        g1 = s2 * (1 + phi * theta) * (phi + theta) / (1 - phi ** 2)
        np.testing.assert_allclose(gamma[0], g0, rtol=1e-12)
        np.testing.assert_allclose(gamma[1:], g1 * phi ** np.arange(6), rtol=1e-12)

    def test_white_noise(self):
        gamma = arma_acvf([], [], 2.0, 3)
        np.testing.assert_allclose(gamma, [2.0, 0, 0, 0])

    def test_nonstationary_rejected(self):
        with pytest.raises(ModelError, match="nonstationary"):
            arma_acvf([1.01], [], 1.0, 3)

    def test_matches_long_simulation(self):
        from wavemoments.simulate import _sim_arma

        rng = np.random.default_rng(3)
        y = _sim_arma([0.7, -0.2], [0.4], 1.0, 400_000, rng)
        gamma = arma_acvf([0.7, -0.2], [0.4], 1.0, 3)
        y0 = y - y.mean()
        for lag in range(4):
            sample = np.dot(y0[lag:], y0[:y0.size - lag]) / y0.size
            assert sample == pytest.approx(gamma[lag], rel=0.03, abs=0.01)


class TestModelAcvf:
    def test_wn(self):
        gamma = model_acvf(ModelTerm("WN", (1.0,)), 4)
        np.testing.assert_allclose(gamma, [1, 0, 0, 0, 0])

    def test_qn(self):
        gamma = model_acvf(ModelTerm("QN", (0.5,)), 3)
        np.testing.assert_allclose(gamma, [1.0, -0.5, 0, 0])

    def test_rw_core_is_white(self):
        gamma = model_acvf(ModelTerm("RW", (0.75,)), 3)
        np.testing.assert_allclose(gamma, [0.75, 0, 0, 0])

    def test_ma1_example(self):
        gamma = model_acvf(ModelTerm("MA1", (0.3, 0.5)), 3)
        np.testing.assert_allclose(gamma, [0.545, 0.15, 0, 0], atol=1e-15)


class TestSpecExamples:
    def test_wn_level1(self):
        nu2 = implied_wv_term(ModelTerm("WN", (1.0,)), [2])
        assert nu2[0] == pytest.approx(0.5, rel=1e-14)

    def test_rw_levels(self):
        term = ModelTerm("RW", (1.0,))
        np.testing.assert_allclose(
            implied_wv_term(term, [2, 4]), [0.25, 0.375], rtol=1e-14)

    def test_dr_level2(self):
        nu2 = implied_wv_term(ModelTerm("DR", (1.0,)), [4])
        assert nu2[0] == pytest.approx(1.0, rel=1e-14)

    def test_qn_level1(self):
        nu2 = implied_wv_term(ModelTerm("QN", (1.0,)), [2])
        assert nu2[0] == pytest.approx(1.5, rel=1e-14)

    def test_additivity(self):
        spec = parse_model("WN(1)+RW(1)")
        result = implied_wv(spec, scales=[2])
        assert result.total[0] == pytest.approx(0.75, rel=1e-14)

    def test_single_term_total(self):
        result = implied_wv(parse_model("AR1(0.5, 1)"), scales=SCALES)
        np.testing.assert_array_equal(result.total, result.contributions[0][1])

    def test_tiny_variance_continuity(self):
        base = implied_wv(parse_model("RW(1)"), scales=SCALES).total
        with_wn = implied_wv(parse_model("RW(1)+WN(1e-300)"), scales=SCALES).total
        np.testing.assert_allclose(with_wn, base, rtol=1e-12)


def _random_term(kind, rng):
    if kind == "WN":
        return ModelTerm("WN", (rng.uniform(0.1, 5.0),))
    if kind == "QN":
        return ModelTerm("QN", (rng.uniform(0.1, 5.0),))
    if kind == "RW":
        return ModelTerm("RW", (rng.uniform(0.1, 5.0),))
    if kind == "DR":
        return ModelTerm("DR", (rng.uniform(-2.0, 2.0),))
    if kind == "AR1":
        return ModelTerm("AR1", (rng.uniform(-0.95, 0.95), rng.uniform(0.1, 5.0)))
    if kind == "MA1":
        return ModelTerm("MA1", (rng.uniform(-0.95, 0.95), rng.uniform(0.1, 5.0)))
    if kind == "ARMA11":
        return ModelTerm(
            "ARMA11",
            (rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95),
             rng.uniform(0.1, 5.0)))
    raise AssertionError(kind)


class TestOracleEquivalence:
    @pytest.mark.parametrize("kind", ["WN", "QN", "RW", "DR", "AR1", "MA1", "ARMA11"])
    def test_closed_matches_normative(self, kind):
        rng = np.random.default_rng(zlib.crc32(kind.encode()))
        for _ in range(50):
            term = _random_term(kind, rng)
            closed = implied_wv_term(term, SCALES, method="closed")
            normative = implied_wv_term(term, SCALES, method="normative")
            np.testing.assert_allclose(closed, normative, rtol=1e-10,
                                       err_msg=f"{kind}: {term.params}")


class TestNormativeGeneralModels:
    def test_arma_matches_brute_force_quadratic_form(self):
        from wavemoments.wavelet import haar_filter

        term = ModelTerm("ARMA", (0.7, -0.2, 0.4, 1.0), (2, 1))
        taus = [2, 4, 8, 16]
        nu2 = implied_wv_term(term, taus, method="normative")
        gamma = arma_acvf([0.7, -0.2], [0.4], 1.0, 16)
        for tau, got in zip(taus, nu2):
            h = haar_filter(int(np.log2(tau))).coefficients
            direct = 0.0
            for l in range(h.size):
                for m in range(h.size):
                    direct += h[l] * h[m] * gamma[abs(l - m)]
            assert got == pytest.approx(direct, rel=1e-12)

    def test_sarima_d1_matches_simulation(self):
        # ARIMA(1,1,0): increments are AR(1)
        term = ModelTerm("SARIMA", (0.5, 1.0), (1, 1, 0, 0, 0, 0, 1))
        nu2 = implied_wv_term(term, [2, 4, 8], method="normative")
        from wavemoments.models import ModelSpec
        from wavemoments.simulate import gen_series
        from wavemoments.wavelet import modwt_haar

        spec = ModelSpec((term,))
        acc = np.zeros(3)
        reps = 12
        for rep in range(reps):
            ts = gen_series(spec, 2 ** 17, seed=100 + rep)
            d = modwt_haar(ts.values, 3)
            acc += [np.mean(d.level(j) ** 2) for j in (1, 2, 3)]
        np.testing.assert_allclose(acc / reps, nu2, rtol=0.05)

    def test_seasonal_integration_rejected_when_undefined(self):
        term = ModelTerm("SARIMA", (0.5, 1.0), (0, 0, 0, 0, 1, 1, 12))
        with pytest.raises(ModelError, match="nonstationary at scale"):
            implied_wv_term(term, [2], method="normative")

    def test_double_integration_rejected(self):
        term = ModelTerm("SARIMA", (1.0,), (0, 1, 0, 0, 1, 0, 2))
        with pytest.raises(ModelError, match="at most one integration"):
            implied_wv_term(term, [4], method="normative")

    def test_seasonal_integration_supported_when_period_divides(self):
        # s = 2 divides the half-window from level 2 upward
        term = ModelTerm("SARIMA", (1.0,), (0, 0, 0, 0, 1, 0, 2))
        nu2 = implied_wv_term(term, [4, 8], method="normative")
        assert np.all(nu2 > 0)
        from wavemoments.models import ModelSpec
        from wavemoments.simulate import gen_series
        from wavemoments.wavelet import modwt_haar

        spec = ModelSpec((term,))
        acc = np.zeros(2)
        reps = 12
        for rep in range(reps):
            ts = gen_series(spec, 2 ** 17, seed=300 + rep)
            d = modwt_haar(ts.values, 3)
            acc += [np.mean(d.level(j) ** 2) for j in (2, 3)]
        np.testing.assert_allclose(acc / reps, nu2, rtol=0.05)


class TestProperties:
    def test_variance_homogeneity(self):
        spec = parse_model("AR1(0.6, 1.5)+WN(2.0)+RW(0.5)")
        base = implied_wv(spec, scales=SCALES).total
        k2 = 7.3
        scaled_spec = parse_model(
            f"AR1(0.6, {1.5 * k2})+WN({2.0 * k2})+RW({0.5 * k2})")
        scaled = implied_wv(scaled_spec, scales=SCALES).total
        np.testing.assert_allclose(scaled, k2 * base, rtol=1e-12)

    @pytest.mark.parametrize("text, slope", [
        ("WN(1.3)", -1.0), ("QN(0.7)", -2.0), ("DR(0.01)", 2.0)])
    def test_loglog_slopes(self, text, slope):
        taus = 2.0 ** np.arange(4, 11)
        nu2 = implied_wv(parse_model(text), scales=taus.astype(int)).total
        fitted = np.polyfit(np.log2(taus), np.log2(nu2), 1)[0]
        assert fitted == pytest.approx(slope, abs=0.05)

    def test_rw_slope_approaches_one(self):
        nu2 = implied_wv(parse_model("RW(1)"), scales=[512, 1024]).total
        local = np.log2(nu2[1] / nu2[0])
        assert local == pytest.approx(1.0, abs=0.05)


class TestEvaluator:
    def test_matches_implied_wv(self):
        spec = parse_model("AR1()+WN()")
        ev = ImpliedEvaluator(spec, SCALES)
        theta = np.array([0.8, 1.0, 0.5])
        expected = implied_wv(spec, theta, SCALES).total
        np.testing.assert_allclose(ev.total(theta), expected, rtol=1e-14)

    def test_partially_fixed_spec(self):
        from wavemoments.models import ModelSpec

        spec = parse_model("AR1(0.9, 1.0)+WN(2.0)")
        spec = ModelSpec(spec.terms, free=((False, True), (True,)))
        ev = ImpliedEvaluator(spec, SCALES)
        got = ev.total(np.array([1.0, 2.0]))
        expected = implied_wv(parse_model("AR1(0.9, 1.0)+WN(2.0)"),
                              scales=SCALES).total
        np.testing.assert_allclose(got, expected, rtol=1e-14)

    def test_normative_method_forced(self):
        spec = parse_model("AR1()")
        ev = ImpliedEvaluator(spec, SCALES, method="normative")
        theta = np.array([0.5, 1.0])
        closed = implied_wv(spec, theta, SCALES, method="closed").total
        np.testing.assert_allclose(ev.total(theta), closed, rtol=1e-10)
