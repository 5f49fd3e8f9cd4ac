import math

import numpy as np
import pytest
from scipy.integrate import quad

from witsolve import (BansalBasarLaw, GridSpec, ProblemParams, affine_optimal, affine_profile,
                      bansal_basar_profile, hermite_rule, monte_carlo_cost, witsenhausen_sign)
from witsolve.baselines import affine_closed_form_cost, affine_quintic, affine_roots
from witsolve.evaluation import PARAMETER_SETS

from oracles import quintic_real_roots_mp

R7 = hermite_rule(7)

# extended-precision (t, closed-form total) for every real root
QUINTIC = {
    "table2": [(0.68232780382801932737, 0.41858782039271004455)],
    "table4": [(0.20871215252208002314, 0.96000000000000010195),
               (1.5159802276928204652, 1.1823397054145307465),
               (4.7912878474779200297, 0.96000000000000000019)],
    "table3": [(0.00089433918774055692172, 0.0079992000793522555341)],
}


def quadrature_affine_cost(nu, params, n=100):
    """Closed form checked by integrating the affine pair over a 2-D Hermite grid."""
    r = hermite_rule(min(n, 64))
    x0 = math.sqrt(2) * params.sigma_x * r.nodes[:, None]
    v = math.sqrt(2) * params.sigma * r.nodes[None, :]
    w = r.weights[:, None] * r.weights[None, :] / math.pi
    snr = (params.sigma_x * nu) ** 2
    mu = snr / (params.sigma**2 + snr)
    g = nu * x0
    cost = params.k**2 * (g - x0) ** 2 + (g - mu * (g + v)) ** 2
    return float((w * cost).sum())


class TestAffine:
    @pytest.mark.parametrize("tag", sorted(QUINTIC))
    def test_roots_match_oracle(self, tag):
        p = PARAMETER_SETS[tag]
        got = affine_roots(p.k, p.sigma_x)
        want = [t for t in quintic_real_roots_mp(p.k, p.sigma_x) if 0 < t <= p.sigma_x]
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(want, [t for t, _ in QUINTIC[tag]], rtol=1e-15)

    @pytest.mark.parametrize("tag", sorted(PARAMETER_SETS))
    def test_root_certificate(self, tag):
        p = PARAMETER_SETS[tag]
        law = affine_optimal(p)
        t = law.t_root
        assert abs(affine_quintic(t, p.k, p.sigma_x)) <= 1e-9 * (1 + p.sigma_x * (1 + t * t) ** 2)
        assert law.nu == t / p.sigma_x

    @pytest.mark.parametrize("tag", sorted(PARAMETER_SETS))
    def test_cost_selection(self, tag):
        p = PARAMETER_SETS[tag]
        law = affine_optimal(p)
        for t in law.all_real_roots:
            assert sum(affine_closed_form_cost(t / p.sigma_x, p)) >= law.total

    def test_table2_value(self):
        law = affine_optimal(PARAMETER_SETS["table2"])
        assert law.nu == pytest.approx(0.68232780382801932737, rel=1e-11)
        assert law.total == pytest.approx(0.41858782039271004455, rel=1e-11)

    def test_table4_ties(self):
        # at k sigma_x = 1 the smallest and largest roots cost the same
        law = affine_optimal(PARAMETER_SETS["table4"])
        assert law.total == pytest.approx(0.96, abs=1e-12)
        assert law.t_root in (pytest.approx(0.2087121525220800), pytest.approx(4.79128784747792))

    def test_table1_total(self):
        law = affine_optimal(PARAMETER_SETS["table1"])
        assert law.total == pytest.approx(0.999999, abs=1e-9)

    @pytest.mark.parametrize("tag", sorted(PARAMETER_SETS))
    def test_mu_relation(self, tag):
        p = PARAMETER_SETS[tag]
        law = affine_optimal(p)
        assert law.mu == pytest.approx(p.sigma_x**2 * law.nu**2 / (1 + p.sigma_x**2 * law.nu**2),
                                       rel=1e-15)

    @pytest.mark.parametrize("tag", sorted(QUINTIC))
    def test_closed_form_vs_quadrature(self, tag):
        p = PARAMETER_SETS[tag]
        for t, total in QUINTIC[tag]:
            assert sum(affine_closed_form_cost(t / p.sigma_x, p)) == pytest.approx(total, rel=1e-12)
            assert quadrature_affine_cost(t / p.sigma_x, p) == pytest.approx(total, rel=1e-10)

    def test_requires_unit_noise(self):
        with pytest.raises(ValueError):
            affine_optimal(ProblemParams(1.0, 2.0, 1.0))

    def test_profile(self):
        p = PARAMETER_SETS["table2"]
        prof = affine_profile(affine_optimal(p), p)
        assert prof.provenance == "affine"
        assert prof.gamma1bar(0.0) == 0.0 and prof.gamma2(np.array(0.0)) == 0.0
        xs = GridSpec().grid(p)
        np.testing.assert_allclose(prof.gamma1bar(xs), -prof.gamma1bar(-xs), atol=1e-12)

    def test_identity_case(self):
        from witsolve.baselines import AffineLaw
        p = ProblemParams(1.0, 1.0, 3.0)
        prof = affine_profile(AffineLaw(nu=1.0, mu=9 / 10, t_root=3.0), p)
        xs = np.linspace(-5, 5, 11)
        np.testing.assert_array_equal(prof.gamma1bar(xs), xs)

    @pytest.mark.slow
    @pytest.mark.parametrize("tag", sorted(PARAMETER_SETS))
    def test_closed_form_vs_monte_carlo(self, tag):
        p = PARAMETER_SETS[tag]
        law = affine_optimal(p)
        rep = monte_carlo_cost(affine_profile(law, p), p)
        assert abs(rep.total - law.total) <= 3 * rep.se_total


class TestSign:
    def test_values(self):
        p = PARAMETER_SETS["table4"]
        prof = witsenhausen_sign(p)
        assert prof.gamma1bar(-3.0) == -5.0 and prof.gamma1bar(0.0) == 0.0
        assert prof.gamma2(np.array(0.0)) == 0.0
        assert prof.gamma2(np.array(1.0)) == pytest.approx(5 * math.tanh(5))

    def test_odd_on_grid(self):
        p = PARAMETER_SETS["table4"]
        prof = witsenhausen_sign(p)
        g = prof.curve_g1bar
        np.testing.assert_array_equal(g, -g[::-1])
        np.testing.assert_array_equal(prof.curve_x, -prof.curve_x[::-1])

    def test_table4_cost(self):
        p = PARAMETER_SETS["table4"]
        rep = monte_carlo_cost(witsenhausen_sign(p), p)
        assert abs(rep.total - 0.403509876415911) <= 0.004
        # stage 2 is a rare-event average; compare with its exact integral
        exact2 = quad(lambda v: 25 * (1 - math.tanh(5 * (5 + v))) ** 2
                      * math.exp(-v * v / 2) / math.sqrt(2 * math.pi), -40, 40,
                      points=[-5], limit=500)[0]
        assert abs(rep.stage2 - exact2) <= 3 * rep.se_stage2
        exact1 = 0.04 * (50 - 50 * math.sqrt(2 / math.pi))
        assert abs(rep.stage1 - exact1) <= 3 * rep.se_stage1

    def test_table1_cost(self):
        p = PARAMETER_SETS["table1"]
        rep = monte_carlo_cost(witsenhausen_sign(p), p)
        assert rep.total == pytest.approx(0.4041, abs=3 * rep.se_total + 1e-4)
        assert rep.stage2 < 1e-12


class TestBansalBasar:
    P3 = PARAMETER_SETS["table3"]

    @pytest.mark.parametrize("mode", ["control", "state"])
    def test_zero_output(self, mode):
        prof = bansal_basar_profile(BansalBasarLaw(5.0, 0.01006), self.P3, R7, mode)
        assert abs(float(prof.gamma2(np.array(0.0)))) <= 1e-12

    def test_identity_law(self):
        prof = bansal_basar_profile(BansalBasarLaw(0.0, 0.0), self.P3, R7, "control")
        assert abs(float(prof.gamma2(np.array(0.0)))) <= 1e-12
        np.testing.assert_array_equal(prof.gamma1bar(np.array([-2.0, 3.0])), [-2.0, 3.0])

    def test_first_stage(self):
        law = BansalBasarLaw(5.0, 0.01006)
        np.testing.assert_allclose(law.gamma1bar(np.array([-1.0, 0.0, 2.0])),
                                   [-1 - 5 - 0.01006, 0.0, 2 + 5 + 0.02012])

    def test_odd_on_grid(self):
        prof = bansal_basar_profile(BansalBasarLaw(5.0, 0.01006), self.P3, R7)
        np.testing.assert_allclose(prof.curve_g1bar, -prof.curve_g1bar[::-1], atol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            BansalBasarLaw(math.nan, 0.0)
        with pytest.raises(ValueError):
            bansal_basar_profile(BansalBasarLaw(1.0, 0.0), self.P3, R7, "neither")

    @pytest.mark.parametrize("mode", ["control", "state"])
    def test_finite_cost(self, mode):
        prof = bansal_basar_profile(BansalBasarLaw(5.0, 0.01006), self.P3, R7, mode)
        rep = monte_carlo_cost(prof, self.P3, n_samples=100_000)
        assert math.isfinite(rep.total) and rep.total > 0
