import numpy as np
import pytest

from wavemoments.errors import ModelError
from wavemoments.models import (
    ModelSpec,
    ModelTerm,
    from_unconstrained,
    param_vector,
    parse_model,
    print_model,
    set_params,
    to_unconstrained,
    validate_model,
)


class TestParse:
    def test_single_wn_with_value(self):
        spec = parse_model("WN(sigma2=1)")
        assert len(spec.terms) == 1
        assert spec.terms[0].kind == "WN"
        assert spec.terms[0].params == (1.0,)

    def test_repeat_expansion(self):
        spec = parse_model("3*AR1()+RW()+WN()")
        assert [t.kind for t in spec.terms] == ["AR1", "AR1", "AR1", "RW", "WN"]
        assert all(all(p is None for p in t.params) for t in spec.terms)
        assert spec.n_free == 8

    def test_duplicate_singleton_rejected(self):
        with pytest.raises(ModelError, match="duplicate WN"):
            parse_model("WN()+WN()")

    def test_positional_values(self):
        spec = parse_model("AR1(0.9,1)+AR1(0.1,4)+DR(0.01)")
        assert spec.terms[0].params == (0.9, 1.0)
        assert spec.terms[2].params == (0.01,)

    def test_named_values(self):
        spec = parse_model("AR1(phi=.9, sigma2=.1)")
        assert spec.terms[0].params == (0.9, 0.1)

    @pytest.mark.parametrize("text", [
        "WN(sigma2 = 1)",
        "QN(q2 = .5)",
        "RW(gamma2 = .75)",
        "DR(omega = 0.10)",
        "AR1(phi = .9, sigma2 = .1)",
        "MA1(theta = .3, sigma2 = .5)",
        "ARMA11(phi = .9, theta = .2, sigma2 = 1)",
        "SARIMA(ar = 0.3, i = 0, ma = -0.27, sar = c(-0.12, -0.2), si = 1,"
        " sma = -0.9, sigma2 = 1.5, s = 12)",
        "3*AR1()+RW()+WN()",
        "AR1(0.9,1) + AR1(0.1,4) + DR(0.01)",
        "2*AR1() + DR()",
        "WN() + RW()",
        "WN() + RW() + DR()",
        "AR1(phi = .99, sigma2 = .01) + WN(sigma2 = 1)",
        "AR1()",
        "ARMA(3,1)",
        "2*AR1() + WN()",
    ])
    def test_accepts_every_published_listing(self, text):
        spec = parse_model(text)
        assert validate_model(spec) is spec

    def test_sarima_orders(self):
        spec = parse_model("SARIMA(ar=0.3, i=0, ma=-0.27, sar=c(-0.12,-0.2),"
                           " si=1, sma=-0.9, sigma2=1.5, s=12)")
        term = spec.terms[0]
        assert term.orders == (1, 0, 1, 2, 1, 1, 12)
        assert term.params == (0.3, -0.27, -0.12, -0.2, -0.9, 1.5)

    def test_arima_alias(self):
        spec = parse_model("ARIMA(1, 1, 1)")
        assert spec.terms[0].kind == "SARIMA"
        assert spec.terms[0].orders == (1, 1, 1, 0, 0, 0, 1)

    def test_syntax_error_reports_position(self):
        with pytest.raises(ModelError, match="position"):
            parse_model("AR1(0.9,,1)")

    def test_unknown_kind(self):
        with pytest.raises(ModelError, match="unknown model kind"):
            parse_model("GARCH()")

    def test_empty_string(self):
        with pytest.raises(ModelError, match="empty"):
            parse_model("   ")

    def test_trailing_garbage(self):
        with pytest.raises(ModelError, match="position"):
            parse_model("WN() RW()")

    def test_value_constraint_checked_at_parse(self):
        with pytest.raises(ModelError, match="sigma2 must be > 0"):
            parse_model("WN(sigma2=-1)")


class TestValidate:
    def test_nonstationary_ar1(self):
        with pytest.raises(ModelError, match=r"phi must lie strictly in \(-1, 1\)"):
            parse_model("AR1(phi=1.0, sigma2=1)")

    def test_duplicate_rw(self):
        with pytest.raises(ModelError, match="duplicate RW"):
            parse_model("RW()+RW()")

    def test_sarima_not_summable(self):
        with pytest.raises(ModelError, match="SARIMA cannot be combined"):
            parse_model("SARIMA(1,0,0,0,0,0,1)+WN()")

    def test_arma_block_stationarity(self):
        # phi1 + phi2 > 1 is outside the AR(2) stationarity triangle even
        # though each coefficient lies in (-1, 1)
        with pytest.raises(ModelError, match="nonstationary"):
            parse_model("ARMA(ar=(0.9, 0.9), ma=0.1, sigma2=1)")

    def test_arma_invertibility(self):
        with pytest.raises(ModelError, match="noninvertible"):
            parse_model("ARMA(ar=0.5, ma=(1.2, 0.9), sigma2=1)")

    def test_integration_order_capped(self):
        with pytest.raises(ModelError, match="integration orders beyond 1"):
            parse_model("SARIMA(0,2,0,0,0,0,1)")

    def test_multiple_arma_terms_warn(self):
        with pytest.warns(UserWarning, match="may not be identifiable"):
            parse_model("ARMA11()+ARMA11()")

    def test_multiple_ar1_terms_do_not_warn(self):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            parse_model("3*AR1()")


class TestPrintRoundTrip:
    @pytest.mark.parametrize("text", [
        "WN(sigma2=1.0)",
        "AR1(phi=0.9,sigma2=0.1)",
        "AR1()+AR1()+DR()",
        "ARMA(3,1)",
        "ARMA(ar=(0.5,0.2),ma=0.3,sigma2=1.0)",
        "SARIMA(ar=0.3,ma=-0.27,sar=(-0.12,-0.2),sma=-0.9,i=0,si=1,sigma2=1.5,s=12)",
        "AR1(phi=0.99,sigma2=0.01)+WN(sigma2=1.0)",
    ])
    def test_parse_print_identity(self, text):
        spec = parse_model(text)
        canonical = print_model(spec)
        again = parse_model(canonical)
        assert print_model(again) == canonical
        assert again == spec

    def test_canonical_uses_named_form(self):
        assert print_model(parse_model("AR1(.9, .1)")) == "AR1(phi=0.9,sigma2=0.1)"


class TestParamVector:
    def test_roundtrip_values(self):
        spec = parse_model("AR1(0.9,1)+AR1(0.1,4)+DR(0.01)")
        theta = param_vector(spec)
        np.testing.assert_allclose(theta, [0.9, 1.0, 0.1, 4.0, 0.01])

    def test_missing_value_raises(self):
        with pytest.raises(ModelError, match="without a value"):
            param_vector(parse_model("AR1()"))

    def test_set_params(self):
        spec = parse_model("AR1()+WN()")
        filled = set_params(spec, [0.5, 2.0, 3.0])
        np.testing.assert_allclose(param_vector(filled), [0.5, 2.0, 3.0])
        # original untouched
        assert spec.terms[0].params == (None, None)

    def test_labels(self):
        spec = parse_model("2*AR1()+WN()")
        assert spec.free_slot_labels() == [
            "AR1#1.phi", "AR1#1.sigma2", "AR1#2.phi", "AR1#2.sigma2", "WN#1.sigma2"]


class TestUnconstrainedTransform:
    def test_log_of_unit_variance_is_zero(self):
        spec = parse_model("WN()")
        assert to_unconstrained(np.array([1.0]), spec)[0] == 0.0

    def test_atanh_symmetry_at_zero(self):
        spec = parse_model("AR1()")
        x = to_unconstrained(np.array([0.0, 1.0]), spec)
        np.testing.assert_allclose(x, [0.0, 0.0])

    def test_round_trip_identity(self):
        spec = parse_model("AR1()+AR1()+DR()")
        theta = np.array([0.9, 0.1, 0.1, 4.0, 0.01])
        back = from_unconstrained(to_unconstrained(theta, spec), spec)
        np.testing.assert_allclose(back, theta, rtol=0, atol=1e-12)

    def test_round_trip_arma_block(self):
        spec = parse_model("ARMA(ar=(1.2,-0.4),ma=(0.5,0.2),sigma2=2.0)")
        theta = param_vector(spec)
        back = from_unconstrained(to_unconstrained(theta, spec), spec)
        np.testing.assert_allclose(back, theta, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("text, dim", [
        ("ARMA(2,2)", 5),
        ("ARMA(1,1)", 3),  # width-1 blocks still need the atanh transform
        ("ARMA(3,0)", 4),
    ])
    def test_from_unconstrained_never_violates(self, text, dim):
        spec = parse_model(text)
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = rng.normal(scale=4.0, size=dim)
            theta = from_unconstrained(x, spec)
            filled = set_params(spec, theta)
            validate_model(filled)

    def test_non_finite_rejected(self):
        spec = parse_model("WN()")
        with pytest.raises(ModelError, match="non-finite"):
            from_unconstrained(np.array([np.nan]), spec)
        with pytest.raises(ModelError, match="non-finite"):
            to_unconstrained(np.array([np.inf]), spec)


def test_model_term_frozen():
    term = ModelTerm("WN", (1.0,))
    with pytest.raises(Exception):
        term.kind = "RW"


def test_all_fixed_spec_rejected():
    spec = ModelSpec((ModelTerm("WN", (1.0,)),), free=((False,),))
    with pytest.raises(ModelError, match="no free parameters"):
        validate_model(spec)
