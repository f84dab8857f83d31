import math
import unittest
from fractions import Fraction

from core.exceptions import BoundaryError, MapDefinitionError
from core.interval_map import Interval
from core.map_families import doubling
from core.potential import (
    Potential,
    beta_n,
    birkhoff_sum,
    bounded_range_margin,
    bv_lower_bound,
    constant,
    hofbauer_keller,
    lyapunov_exponent,
    lyapunov_lower_bound,
    neg_log_deriv,
    regularity_report,
    variation_n,
)
from families.regularity_examples import example1, example2
from pieces import AffinePiece, ConstantPiece

LOG2 = math.log(2.0)


class TestPotentialConstruction(unittest.TestCase):
    def test_pieces_must_cover_unit_interval(self):
        with self.assertRaises(MapDefinitionError):
            Potential([(Interval(0, Fraction(1, 2)), ConstantPiece(1.0))])

    def test_pieces_must_be_adjacent(self):
        with self.assertRaises(MapDefinitionError):
            Potential(
                [
                    (Interval(0, Fraction(1, 3)), ConstantPiece(1.0)),
                    (Interval(Fraction(1, 2), 1), ConstantPiece(2.0)),
                ]
            )

    def test_endpoint_rules(self):
        pieces = [
            (Interval(0, Fraction(1, 2)), ConstantPiece(1.0)),
            (Interval(Fraction(1, 2), 1), ConstantPiece(2.0)),
        ]
        self.assertEqual(Potential(pieces).evaluate(Fraction(1, 2)), 2.0)
        phi = Potential(pieces, endpoint_rule="right")
        self.assertEqual(phi.evaluate(Fraction(1, 2)), 1.0)

    def test_shift_is_kept_as_offset(self):
        phi = constant(0.0).shifted(0.5).shifted(-0.25)
        self.assertEqual(phi.offsets, (0.5, -0.25))
        self.assertAlmostEqual(phi.evaluate(Fraction(1, 3)), 0.25)
        self.assertAlmostEqual(phi.constant_value(), 0.25)
        inf, sup, _ = phi.base_bounds(Interval(0, 1, True, True))
        self.assertEqual((inf, sup), (0.0, 0.0))

    def test_affine_bounds(self):
        phi = Potential([(Interval(0, 1, True, True), AffinePiece(2.0, -1.0))])
        inf, sup, err = phi.bounds(Interval(0.25, 0.5))
        self.assertAlmostEqual(inf, -0.5)
        self.assertAlmostEqual(sup, 0.0)
        self.assertEqual(err, 0.0)


class TestHofbauerKellerPotential(unittest.TestCase):
    def setUp(self):
        self.phi = hofbauer_keller(-0.5, 2)

    def test_level_values(self):
        self.assertEqual(self.phi.evaluate(Fraction(3, 4)), -0.5)
        self.assertEqual(self.phi.evaluate(Fraction(1, 2)), -0.5)
        self.assertEqual(self.phi.evaluate(Fraction(3, 8)), -0.5)
        self.assertAlmostEqual(self.phi.evaluate(Fraction(1, 4)), 2 * math.log(3 / 4))
        self.assertEqual(self.phi.evaluate(Fraction(0)), 0.0)

    def test_global_bounds(self):
        inf, sup = self.phi.global_bounds()
        self.assertAlmostEqual(inf, 2 * math.log(3 / 4), places=14)
        self.assertEqual(sup, 0.0)

    def test_infinite_K_is_two_valued(self):
        phi = hofbauer_keller(-1.0, None)
        self.assertEqual(phi.evaluate(Fraction(1, 1024)), -1.0)
        self.assertEqual(phi.evaluate(Fraction(0)), 0.0)

    def test_variations_decay_like_log_ratio(self):
        fmap = doubling()
        for n in range(3, 7):
            self.assertAlmostEqual(
                variation_n(self.phi, fmap, n).value,
                2 * math.log((n + 2) / (n + 1)),
                places=12,
            )

    def test_range_margin_against_entropy(self):
        margin = bounded_range_margin(self.phi, LOG2)
        self.assertTrue(margin.holds)
        self.assertAlmostEqual(margin.margin, LOG2 + 2 * math.log(3 / 4), places=12)
        self.assertAlmostEqual(lyapunov_lower_bound(self.phi, LOG2), margin.margin)

    def test_beta_enclosure(self):
        beta = beta_n(self.phi, doubling(), 5)
        self.assertLessEqual(beta.lower, beta.upper)
        self.assertGreater(beta.upper, 0.0)


class TestDynamicalQuantities(unittest.TestCase):
    def test_geometric_potential_of_doubling_is_constant(self):
        phi = neg_log_deriv(doubling(), 1.0)
        self.assertAlmostEqual(phi.constant_value(), -LOG2, places=14)

    def test_lyapunov_exponent(self):
        self.assertAlmostEqual(
            lyapunov_exponent(doubling(), Fraction(1, 3), 10), LOG2, places=14
        )

    def test_birkhoff_sum_of_constant(self):
        self.assertAlmostEqual(
            birkhoff_sum(constant(0.7), doubling(), Fraction(1, 3), 6), 4.2
        )

    def test_birkhoff_sum_hits_boundary(self):
        with self.assertRaises(BoundaryError):
            birkhoff_sum(constant(0.0), doubling(), Fraction(1, 4), 3)

    def test_constant_has_no_distortion(self):
        report = regularity_report(constant(0.3), doubling(), 4)
        self.assertEqual(report.variation.upper, 0.0)
        self.assertEqual(report.beta.upper, 0.0)


class TestRegularityExamples(unittest.TestCase):
    def test_example1_is_bv_with_slow_variations(self):
        phi = example1()
        fmap = doubling()
        for n in range(1, 8):
            self.assertGreaterEqual(
                variation_n(phi, fmap, n).value, 1 / (n * LOG2) - 1e-12
            )
        bv = bv_lower_bound(phi, 1024)
        self.assertAlmostEqual(bv.value, 1 / LOG2, places=9)
        self.assertFalse(bv.diverging)

    def test_example2_variations_are_summable(self):
        phi = example2()
        fmap = doubling()
        for n in range(1, 7):
            self.assertLessEqual(
                variation_n(phi, fmap, n).upper, 4 * math.pi * 2.0**-n + 1e-12
            )

    def test_example2_bv_depends_on_amplitude(self):
        self.assertFalse(bv_lower_bound(example2(4), 4096).diverging)
        self.assertTrue(bv_lower_bound(example2(2), 4096).diverging)

    def test_example2_rejects_small_base(self):
        with self.assertRaises(ValueError):
            example2(1)


if __name__ == "__main__":
    unittest.main()
