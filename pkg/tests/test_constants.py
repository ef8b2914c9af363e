import math

import numpy as np
import pytest

from qmsemigroup import constants as C
from qmsemigroup.errors import DegenerateInput, NonpositiveTime, ValidationError
from qmsemigroup.models import depolarizing, shipped_models
from qmsemigroup.semigroup import VerificationReport
from qmsemigroup.verify import WITNESS


def torus_f_poisson(t, terms=50):
    """Independent oracle for 2 sum_{m>=1} e^{-m^2 t} via Poisson summation."""
    s = 1.0 + 2.0 * sum(math.exp(-math.pi ** 2 * k * k / t) for k in range(1, terms))
    return math.sqrt(math.pi / t) * s - 1.0


class TestKappa:
    def test_zero_branch(self):
        assert C.kappa(0.0, 1.5) == pytest.approx(1 / 6, abs=1e-15)

    def test_formula(self):
        lam, t = 0.7, 1.3
        assert C.kappa(lam, t) == pytest.approx(lam / (2 * (1 - math.exp(-2 * lam * t))), rel=1e-14)

    def test_continuous_across_series(self):
        t = 2.0
        for lam in (1e-7, -1e-7, 2e-6, -2e-6):
            exact = lam / (2 * (1 - math.exp(-2 * lam * t)))
            assert C.kappa(lam, t) == pytest.approx(exact, rel=1e-9)

    def test_monotone_in_lambda(self):
        vals = [C.kappa(lam, 1.0) for lam in np.linspace(-1, 1, 41)]
        assert np.all(np.diff(vals) > 0)

    def test_bad_time(self):
        with pytest.raises(NonpositiveTime):
            C.kappa(0.0, 0.0)


class TestReturnTime:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_depolarizing_closed_form(self, d):
        # |T_t - E|_cb = e^{-t}(d^2 - 1) from the Choi kernel
        got = C.tcb_exact_ergodic(depolarizing(d))
        assert abs(got - math.log(2 * (d * d - 1))) < 1e-6

    def test_chain_z2(self):
        assert abs(C.tcb_exact_ergodic(shipped_models()["chain-Z2"]()) - math.log(2) / 2) < 1e-6

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_bound(self, d):
        assert C.tcb_bound(depolarizing(d)) == pytest.approx(3 * math.log(d) if d == 2 else 2 * math.log(d) + math.log(2))
        assert C.tcb_exact_ergodic(depolarizing(d)) <= C.tcb_bound(depolarizing(d))

    def test_ultracontractive_option(self):
        m = depolarizing(2)
        assert C.tcb_bound(m, (1.0, 0.0)) == pytest.approx(math.log(2))

    def test_non_ergodic_falls_back(self):
        m = shipped_models()["schur-3"]()
        t, method = C.tcb(m, "exact")
        assert method == "bound"
        assert t == pytest.approx((math.log(3) + math.log(2)) / (1 / 2))

    @pytest.mark.parametrize("name", sorted(shipped_models()))
    def test_exact_below_bound(self, name):
        m = shipped_models()[name]()
        if m.is_ergodic:
            assert C.tcb(m, "exact")[0] <= C.tcb_bound(m) + 1e-9


class TestCertificates:
    def test_invariants(self):
        with pytest.raises(ValidationError):
            C.CurvatureCertificate("intertwining", 0.0)
        with pytest.raises(ValidationError):
            C.CurvatureCertificate("magic", 0.0)
        bad = VerificationReport("intertwining", False, 1.0, 1e-8)
        with pytest.raises(ValidationError):
            C.CurvatureCertificate("intertwining", 0.0, bad)
        assert not C.CurvatureCertificate("assumed", 0.3).verified

    @pytest.mark.parametrize("name", sorted(shipped_models()))
    def test_shipped_certify(self, name):
        m = shipped_models()[name]()
        cert, rep = C.certify(m)
        assert cert is not None and cert.verified, rep

    def test_false_claim_rejected(self):
        m = depolarizing(3)
        m.curvature_hint = (1.0, "gradient-estimate")
        cert, rep = C.certify(m)
        assert cert is None and not rep.passed


class TestLowerBound:
    def test_depolarizing(self):
        m = depolarizing(3)
        cert, _ = C.certify(m)
        est = C.mlsi_lower_bound(m, cert, C.tcb_exact_ergodic(m))
        assert est.route == "bakry-emery"
        assert est.lower_bound == pytest.approx(2 / 3)
        assert set(est.candidates) == {"bakry-emery", "kappa-pipeline", "depolarizing-identity"}

    def test_zero_curvature_uses_kappa(self):
        m = shipped_models()["chain-Z2"]()
        cert, _ = C.certify(m)
        est = C.mlsi_lower_bound(m, cert, math.log(2) / 2)
        assert est.route == "kappa-pipeline"
        assert est.lower_bound == pytest.approx(1 / (2 * math.log(2)))

    def test_no_claim(self):
        est = C.mlsi_lower_bound(shipped_models()["schur-2"](), None, 1.0)
        assert est.lower_bound is None and est.route == "none"

    def test_estimate_rejects_inverted(self):
        with pytest.raises(ValidationError):
            C.MlsiEstimate(2.0, "bakry-emery", upper_bound=1.0)


class TestSearch:
    def test_witness_ratio(self):
        m = depolarizing(3)
        r = C.mlsi_ratio(m, WITNESS)
        closed = 0.5 * (1 + math.log(2 ** (5 / 3) / 3) / math.log(3 / (2 * math.sqrt(2))))
        assert r == pytest.approx(closed, abs=1e-12)
        assert r < 1

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            C.mlsi_ratio(depolarizing(2), np.eye(2))

    def test_search_bounds(self):
        m = depolarizing(3)
        up = C.optimal_mlsi_upper(m, n_starts=1, initial=[WITNESS], max_iters=500)
        assert 2 / 3 - 1e-9 <= up.upper_bound <= C.mlsi_ratio(m, WITNESS) + 1e-12

    def test_m2_is_one(self):
        up = C.optimal_mlsi_upper(depolarizing(2), n_starts=2, max_iters=1000)
        assert up.upper_bound == pytest.approx(1.0, abs=1e-4)


class TestGradientEstimate:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_scalar_max(self, d):
        r = C.ge_scalar_check(d, d, grid_resolution=400)
        assert abs(r["max_ratio"] - d) < 1e-6
        assert r["passed"]

    def test_scalar_fails_for_small_alpha(self):
        assert not C.ge_scalar_check(3, 2.0, grid_resolution=400)["passed"]

    def test_numeric_d3(self):
        m = depolarizing(3)
        assert not C.ge_numeric_check(m, m.derivation, 1.0).passed
        assert C.ge_numeric_check(m, m.derivation, 2 / 3).passed


class TestTorus:
    @pytest.mark.parametrize("t", [0.2, 0.7, 1.4, 3.0])
    def test_theta_oracle(self, t):
        assert C.torus_f(t) == pytest.approx(torus_f_poisson(t), rel=1e-12)

    @pytest.mark.parametrize("d", range(1, 11))
    def test_in_bracket(self, d):
        lo, hi = C.torus_bracket(d)
        t = C.torus_tcb(d)
        assert lo - 1e-6 <= t <= hi
        assert C.torus_f(t) <= 2 ** (-1 / d)
        assert C.torus_f(t - 2e-6) > 2 ** (-1 / d)

    def test_golden(self):
        assert math.log(4) <= C.torus_tcb(1) <= min(math.log(5), 1.41)
        assert C.torus_tcb(2) <= 1.08 + 1e-3
        assert C.torus_tcb(3) <= 0.98 + 1e-3

    def test_sandwich(self):
        for t in np.linspace(1, 3, 9):
            lo, f, hi = C.torus_sandwich(t)
            assert lo <= f <= hi

    def test_nonpositive_time(self):
        with pytest.raises(NonpositiveTime):
            C.torus_f(0.0)


def test_analyze_depolarizing():
    rep = C.analyze_model(depolarizing(2), search_starts=1, max_iters=300)
    assert rep.tcb == pytest.approx(math.log(6), abs=1e-6)
    assert rep.estimate.lower_bound <= rep.estimate.upper_bound + 1e-9
