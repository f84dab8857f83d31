import math
import unittest
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from core.exceptions import ComputationRefused
from core.gibbs import (
    discriminant,
    full_shift_pressure,
    gibbs_state,
    pressure_curve,
    solve_equilibrium,
    tail_table,
    verify_gibbs_property,
)
from core.inducing import doubling_scheme, induced_potential
from core.interval_map import Interval
from core.map_families import doubling
from core.potential import Potential, constant, hofbauer_keller, neg_log_deriv
from families.hofbauer_keller import hk_critical_b, hk_induced, hk_shifted_series
from pieces import AffinePiece

LOG2 = math.log(2.0)


def hk_pressure(b, K):
    return brentq(
        lambda S: hk_shifted_series(b, K, S).value - 1.0, 1e-6, 5.0, xtol=1e-14
    )


class TestFullShiftPressure(unittest.TestCase):
    def test_constant_potential(self):
        induced = induced_potential(constant(-LOG2), doubling_scheme(doubling(), 20))
        estimate = full_shift_pressure(induced)
        self.assertAlmostEqual(estimate.value, 0.0, places=12)
        self.assertLessEqual(estimate.lower, estimate.value)
        self.assertLessEqual(estimate.value, estimate.upper)

    def test_divergent_tail(self):
        scheme = doubling_scheme(doubling(), 10)
        induced = induced_potential(constant(0.0), scheme).shifted(-0.1)
        estimate = full_shift_pressure(induced)
        self.assertEqual(estimate.value, math.inf)
        self.assertIn("divergent", estimate.flags)
        with self.assertRaises(ComputationRefused):
            gibbs_state(induced)


class TestMaximalEntropyPipeline(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        fmap = doubling()
        cls.result = solve_equilibrium(fmap, constant(0.0), doubling_scheme(fmap, 40))

    def test_status_and_pressure(self):
        self.assertEqual(self.result.status, "projected")
        self.assertAlmostEqual(self.result.pressure, LOG2, places=10)
        self.assertAlmostEqual(self.result.Lambda, 2.0, places=8)
        self.assertAlmostEqual(self.result.entropy, LOG2, places=6)

    def test_projected_integrals(self):
        state = self.result.state
        self.assertAlmostEqual(state.integrate(lambda x: 1.0), 1.0, delta=1e-10)
        self.assertAlmostEqual(state.integrate(lambda x: x), 0.5, delta=1e-3)

    def test_tail_table_is_geometric(self):
        table = tail_table(self.result.state)
        self.assertEqual(len(table.rows), 40)
        self.assertEqual(table.model, "exponential")
        self.assertAlmostEqual(table.rate, LOG2, places=6)
        self.assertAlmostEqual(table.rows[4].weight, 2.0**-5, places=12)


class TestHofbauerKellerEquilibrium(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.fmap, cls.scheme, cls.induced = hk_induced(-0.5, 2, 40)
        cls.result = solve_equilibrium(
            cls.fmap, hofbauer_keller(-0.5, 2), cls.scheme, induced=cls.induced
        )

    def test_projected_with_positive_pressure(self):
        self.assertEqual(self.result.status, "projected")
        self.assertIsNotNone(self.result.Lambda)
        self.assertTrue(math.isfinite(self.result.Lambda))
        self.assertGreater(self.result.pressure, 0.0)
        self.assertAlmostEqual(self.result.pressure, hk_pressure(-0.5, 2), places=8)
        self.assertTrue(self.result.condition_a)

    def test_gibbs_constant(self):
        state = self.result.state
        self.assertTrue(state.exact)
        self.assertLessEqual(state.K, 1 + 1e-6)
        check = verify_gibbs_property(state, depth=6)
        self.assertTrue(check.holds)
        self.assertLessEqual(check.K, 1 + 1e-6)
        self.assertEqual(check.words_checked, sum(4**n for n in range(1, 7)))

    def test_exponential_tail(self):
        table = tail_table(self.result.state)
        self.assertEqual(table.model, "exponential")
        self.assertGreater(table.rate, 0.0)

    def test_discriminant_is_positive(self):
        report = discriminant(self.induced)
        self.assertAlmostEqual(report.p_star, 0.0, delta=1e-9)
        self.assertTrue(report.positive)
        expected = math.log(hk_shifted_series(-0.5, 2, 0.0).value)
        self.assertAlmostEqual(report.value, expected, places=9)


class TestHofbauerKellerBelowCritical(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        b = hk_critical_b(2) - 0.2
        cls.fmap, cls.scheme, cls.induced = hk_induced(b, 2, 40)
        cls.result = solve_equilibrium(
            cls.fmap, hofbauer_keller(b, 2), cls.scheme, induced=cls.induced
        )

    def test_not_projectable(self):
        self.assertEqual(self.result.status, "not_projectable")
        self.assertIsNone(self.result.Lambda)
        self.assertEqual(self.result.pressure, 0.0)

    def test_inducing_times_grow_logarithmically(self):
        fit = self.result.growth_fit
        self.assertEqual(fit.model, "log")
        self.assertGreater(fit.rate, 0.0)
        self.assertLessEqual(fit.residual, 0.1)

    def test_discriminant_is_not_positive(self):
        self.assertFalse(discriminant(self.induced).positive)


class TestGeometricBelowCritical(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        # K = ∞ with b < -log 2: P = 0 lives on the fixed point 0, off the scheme
        cls.fmap, cls.scheme, cls.induced = hk_induced(-1.0, None, 40)
        cls.result = solve_equilibrium(
            cls.fmap, hofbauer_keller(-1.0, None), cls.scheme, induced=cls.induced
        )

    def test_status_is_not_projectable(self):
        self.assertEqual(self.result.status, "not_projectable")
        self.assertIn(self.result.status, ("projected", "not_projectable"))

    def test_pressure_is_the_lower_bracket(self):
        self.assertEqual(self.result.pressure, 0.0)
        self.assertLess(self.result.induced_pressure, 0.0)
        self.assertTrue(any("does not see" in note for note in self.result.notes))

    def test_lambda_is_still_reported(self):
        self.assertIsNotNone(self.result.Lambda)
        self.assertTrue(math.isfinite(self.result.Lambda))
        self.assertIsNone(self.result.entropy)


class TestDiscriminantEdgeCases(unittest.TestCase):
    def test_finite_scheme(self):
        induced = induced_potential(
            hofbauer_keller(-0.5, 2), doubling_scheme(doubling(), 10)
        )
        report = discriminant(induced, [0.0, 1.0])
        self.assertTrue(report.finite_scheme)
        self.assertTrue(report.positive)

    def test_transition_outside_grid(self):
        induced = induced_potential(constant(0.0), doubling_scheme(doubling(), 10))
        with self.assertRaises(ComputationRefused):
            discriminant(induced, [1.0, 2.0, 3.0])


class TestMidpointGibbsState(unittest.TestCase):
    def test_weights_are_normalised(self):
        phi = Potential([(Interval(0, 1, True, True), AffinePiece(1.0, -1.0))])
        induced = induced_potential(phi, doubling_scheme(doubling(), 12))
        self.assertFalse(induced.branchwise_constant())
        state = gibbs_state(induced, depth=2)
        self.assertFalse(state.exact)
        self.assertAlmostEqual(state.total_mass, 1.0, places=12)
        self.assertGreater(state.K, 1.0)
        self.assertAlmostEqual(
            state.cylinder_measure((0, 1)), state.weights[0] * state.weights[1]
        )


class TestPressureCurve(unittest.TestCase):
    def test_geometric_potential_family(self):
        fmap = doubling()
        grid = [round(-0.5 + 0.1 * i, 10) for i in range(11)]
        curve = pressure_curve(
            fmap, lambda t: neg_log_deriv(fmap, t), grid, doubling_scheme(fmap, 20)
        )
        self.assertEqual([s.t for s in curve.samples], grid)
        for sample in curve.samples:
            self.assertEqual(sample.status, "projected")
            self.assertAlmostEqual(sample.pressure, (1 - sample.t) * LOG2, delta=1e-6)
            self.assertLessEqual(abs(sample.second_derivative), 1e-4)
            self.assertTrue(sample.tail_gate)
        self.assertEqual(curve.transitions, [])
        np.testing.assert_allclose(
            [s.derivative for s in curve.samples], -LOG2, atol=1e-6
        )


if __name__ == "__main__":
    unittest.main()
