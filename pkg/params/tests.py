import math
import random

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from params.exponents import (
    Params,
    constant_profile_value,
    derive,
    exponent_table,
    pk_zero,
    pohozaev_thresholds,
    q_value,
)
from params.forms import ParamsForm


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


class DeriveTest(SimpleTestCase):
    def test_reference_values(self):
        exps = derive(make_params())
        self.assertAlmostEqual(exps.L, 2.3, places=12)
        self.assertAlmostEqual(exps.alpha, 2.1 / 2.3, places=12)
        self.assertAlmostEqual(exps.beta, 0.1 / 2.3, places=12)

    def test_sigma_zero(self):
        exps = derive(make_params(sigma=0.0))
        self.assertAlmostEqual(exps.L, 2.2, places=12)
        self.assertAlmostEqual(exps.alpha, 1 / 1.1, places=12)
        self.assertAlmostEqual(exps.beta, 0.1 / 2.2, places=12)

    def test_inspection_mode_p_equal_m(self):
        exps = derive(make_params(p=2.0, sigma=0.5))
        self.assertEqual(exps.beta, 0.0)
        self.assertAlmostEqual(exps.alpha, 1.0, places=12)

    def test_rejects_invalid_values(self):
        for bad in (make_params(m=1.0), make_params(sigma=-2.0), make_params(m=1.5, p=0.5, sigma=-1.9)):
            with self.assertRaises(ValidationError):
                derive(bad)

    def test_shooting_mode_requires_p_above_m(self):
        with self.assertRaises(ValidationError) as ctx:
            make_params(p=2.0).clean()
        self.assertIn('p', ctx.exception.message_dict)


class ExponentTableTest(SimpleTestCase):
    def test_reference_table(self):
        table = exponent_table(make_params())
        self.assertAlmostEqual(table.p_s, 4.8, places=12)
        self.assertAlmostEqual(table.p_c, 3.4, places=12)
        self.assertAlmostEqual(table.p_F, 2.42, places=12)
        self.assertAlmostEqual(table.sigma_star, 12.0, places=12)
        self.assertAlmostEqual(table.K_mN, 1.375, places=12)

    def test_low_dimensions_are_infinite(self):
        for N in (1, 2):
            table = exponent_table(make_params(N=N, sigma=0.0))
            self.assertEqual(table.p_s, math.inf)
            self.assertEqual(table.p_c, math.inf)
            self.assertTrue(3.0 < table.p_s)

    def test_random_grid_orderings(self):
        rng = random.Random(7)
        for _ in range(500):
            m = rng.uniform(1.05, 5.0)
            N = rng.randint(3, 12)
            sigma = rng.uniform(-1.9, 20.0)
            table = exponent_table(Params(m=m, N=N, p=m + 1, sigma=sigma))
            if N + sigma > 0:
                self.assertLess(table.p_c, table.p_s)
            if table.p_F > m:
                self.assertLess(table.p_F, table.p_s)
            self.assertGreater(table.sigma_star - table.sigma_lower, 0)

    def test_sigma_star_exceeds_sigma_lower_in_low_dimensions(self):
        for N in (1, 2):
            table = exponent_table(make_params(m=3.0, N=N))
            self.assertGreater(table.sigma_star, table.sigma_lower)


class ThresholdTest(SimpleTestCase):
    def test_pk_zero_values(self):
        self.assertAlmostEqual(pk_zero(2.0, 2, N=5), 3.0)
        self.assertAlmostEqual(pk_zero(2.0, 3, N=5), 2.5)
        self.assertAlmostEqual(pk_zero(2.0, 10 ** 9), 2.0, places=6)

    def test_pk_zero_capped_by_sobolev(self):
        # p_s(0) = 2.8 for N=12 lies below (mk-1)/(k-1) = 3
        self.assertAlmostEqual(pk_zero(2.0, 2, N=12), 2.8)

    def test_pk_zero_strictly_decreasing(self):
        values = [pk_zero(2.5, k) for k in range(2, 30)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))

    def test_pk_zero_rejects_small_k(self):
        with self.assertRaises(ValidationError):
            pk_zero(2.0, 1)

    def test_pohozaev_thresholds(self):
        p1, _ = pohozaev_thresholds(make_params(N=3, sigma=8.0))
        self.assertAlmostEqual(p1, 16 / 3, places=12)
        self.assertAlmostEqual(exponent_table(make_params(N=3, sigma=8.0)).p_F, 16 / 3, places=12)
        p1, _ = pohozaev_thresholds(make_params(sigma=5 / 3))
        self.assertAlmostEqual(p1, 2.0, places=12)
        _, p2 = pohozaev_thresholds(make_params(sigma=2.0))
        self.assertAlmostEqual(p2, 1.75, places=12)

    def test_p2_undefined_at_sigma_zero(self):
        _, p2 = pohozaev_thresholds(make_params(sigma=0.0))
        self.assertIsNone(p2)

    def test_p1_minus_fujita_sign(self):
        rng = random.Random(11)
        for _ in range(500):
            m = rng.uniform(1.1, 4.0)
            N = rng.randint(1, 10)
            sigma = rng.uniform(0.01, 30.0)
            params = Params(m=m, N=N, p=m + 1, sigma=sigma)
            diff = pohozaev_thresholds(params)[0] - exponent_table(params).p_F
            expected = sigma * (m - 1) - m * N - 2
            if abs(expected) > 1e-9:
                self.assertEqual(math.copysign(1, diff), math.copysign(1, expected))

    def test_q_value(self):
        self.assertAlmostEqual(q_value(make_params()), -13.47, delta=1e-10)

    def test_q_vanishes_at_p1(self):
        params = make_params(sigma=3.0)
        p1, _ = pohozaev_thresholds(params)
        self.assertAlmostEqual(q_value(params.with_p(p1)), 0.0, delta=1e-10)

    def test_constant_profile_value(self):
        self.assertAlmostEqual(constant_profile_value(make_params(sigma=0.0)), 0.9170, places=4)


class ParamsFormTest(SimpleTestCase):
    def test_valid_form(self):
        form = ParamsForm({'m': '2', 'N': '5', 'p': '2.1', 'sigma': '0.1'})
        self.assertTrue(form.is_valid())
        self.assertEqual(form.params, make_params())

    def test_invalid_m_reported_on_field(self):
        form = ParamsForm({'m': '0.5', 'N': '5', 'p': '2.1', 'sigma': '0.1'})
        self.assertFalse(form.is_valid())
        self.assertIn('m', form.errors)

    def test_p_optional_for_tables(self):
        form = ParamsForm({'m': '2', 'N': '2', 'sigma': '0'}, require_p=False)
        self.assertTrue(form.is_valid())

    def test_inspection_flag_allows_p_equal_m(self):
        form = ParamsForm({'m': '2', 'N': '5', 'p': '2', 'sigma': '0.5', 'inspection': 'on'})
        self.assertTrue(form.is_valid())
