import math
import unittest
from fractions import Fraction

from scipy.optimize import brentq

from core.exceptions import ComputationRefused
from core.interval_map import Interval, periodic_points
from core.map_families import doubling
from core.potential import constant, hofbauer_keller
from core.pressure import (
    gurevich_pressure,
    p_top,
    periodic_free_energy,
    recurrence_classify,
    variational_gap,
    z_n,
    z_n_star,
    z_top,
    znlowerbound_check,
)
from core.rome import tail_gap
from core.series import fit_exponential_rate
from families.hofbauer_keller import (
    hk_critical_b,
    hk_cycle_lower_bound,
    hk_shifted_series,
)

LOG2 = math.log(2.0)
UPPER_HALF = Interval(Fraction(1, 2), Fraction(1))
LOWER_HALF = Interval(Fraction(0), Fraction(1, 2))


def hk_pressure(b, K):
    """P(φ_{b,K}) as the root of Σ e^{s_n - nP} = 1."""
    return brentq(
        lambda S: hk_shifted_series(b, K, S).value - 1.0, 1e-6, 5.0, xtol=1e-14
    )


class TestTopologicalPressure(unittest.TestCase):
    def test_zero_potential_is_entropy(self):
        estimate = p_top(doubling(), constant(0.0), 10)
        self.assertAlmostEqual(estimate.value, LOG2, places=12)
        self.assertLessEqual(estimate.lower, estimate.value)
        self.assertLessEqual(estimate.value, estimate.upper)

    def test_z_top_matches_word_enumeration(self):
        fmap = doubling()
        phi = hofbauer_keller(-0.5, 2)
        m = 6
        best = []
        for cylinder in fmap.refine(m):
            # a dyadic image [j 2^-d, (j+1) 2^-d) with j >= 1 sits inside one
            # level; images touching 0 have sup 0
            total = 0.0
            interval = cylinder.interval
            for index in cylinder.word:
                total += 0.0 if interval.left == 0 else phi.evaluate(interval.midpoint)
                interval = fmap.branches[index].image_of(interval)
            best.append(total)
        expected = math.fsum(math.exp(v) for v in best)
        self.assertAlmostEqual(z_top(fmap, phi, m).value, expected, places=10)

    def test_constant_shift(self):
        fmap = doubling()
        for phi in (constant(0.0), hofbauer_keller(-0.5, 2)):
            c = 0.37
            base = p_top(fmap, phi, 10).value
            shifted = p_top(fmap, phi.shifted(c), 10).value
            self.assertAlmostEqual(shifted - base, c, delta=1e-10)
            base_g = gurevich_pressure(fmap, phi, None, 10).value
            shifted_g = gurevich_pressure(fmap, phi.shifted(c), None, 10).value
            self.assertAlmostEqual(shifted_g - base_g, c, delta=1e-10)
            for n in (3, 7):
                self.assertAlmostEqual(
                    z_n(fmap, phi.shifted(c), None, n) / z_n(fmap, phi, None, n),
                    math.exp(n * c),
                    places=9,
                )

    def test_range_needs_two_levels(self):
        with self.assertRaises(ValueError):
            p_top(doubling(), constant(0.0), 1)


class TestGurevichPressure(unittest.TestCase):
    def test_periodic_counts(self):
        fmap = doubling()
        for n in range(2, 10):
            zero = constant(0.0)
            self.assertAlmostEqual(z_n(fmap, zero, None, n), 2**n - 1, places=6)
            self.assertAlmostEqual(
                z_n(fmap, zero, UPPER_HALF, n), 2 ** (n - 1) - 1, places=6
            )

    def test_first_returns_against_orbit_filter(self):
        fmap = doubling()
        for n in range(2, 10):
            brute = 0
            for _, p in periodic_points(fmap, n):
                if not UPPER_HALF.contains(p):
                    continue
                q, returned = p, False
                for _ in range(n - 1):
                    q = fmap(q)
                    returned = returned or UPPER_HALF.contains(q)
                brute += not returned
            self.assertEqual(brute, 1)
            self.assertAlmostEqual(
                z_n_star(fmap, constant(0.0), UPPER_HALF, n), brute, places=12
            )

    def test_two_reference_cylinders_agree(self):
        estimate = gurevich_pressure(
            doubling(), constant(0.0), UPPER_HALF, 14, alternate_region=LOWER_HALF
        )
        self.assertAlmostEqual(estimate.value, LOG2, delta=1e-3)
        self.assertAlmostEqual(estimate.alternate, LOG2, delta=1e-3)

    def test_hk_cycles_bound_the_partition_function(self):
        fmap = doubling()
        phi = hofbauer_keller(-0.5, 2)
        for n in range(1, 10):
            bound = hk_cycle_lower_bound(-0.5, 2, n)
            self.assertGreaterEqual(z_n(fmap, phi, None, n), bound * (1 - 1e-12))

    def test_periodic_free_energy(self):
        energy = periodic_free_energy(doubling(), hofbauer_keller(-0.5, 2), 5)
        self.assertEqual(energy.value, 0.0)
        self.assertEqual(energy.period, 1)


class TestVariationalGap(unittest.TestCase):
    def test_zero_potential(self):
        report = variational_gap(doubling(), constant(0.0), 14)
        self.assertTrue(report.consistent)
        self.assertLessEqual(report.gap, 0.05)

    def test_hofbauer_keller(self):
        report = variational_gap(doubling(), hofbauer_keller(-0.5, 2), 14)
        self.assertTrue(report.consistent)
        self.assertLessEqual(report.gap, 0.05)


class TestRecurrence(unittest.TestCase):
    def test_entropy_rate_is_positive_recurrent(self):
        report = recurrence_classify(doubling(), constant(0.0), UPPER_HALF, 2.0, 14)
        self.assertEqual(report.first.verdict, "divergent")
        self.assertEqual(report.second.verdict, "convergent")
        self.assertEqual(report.classification, "positive_recurrent")

    def test_large_rate_is_transient(self):
        report = recurrence_classify(doubling(), constant(0.0), UPPER_HALF, 4.0, 14)
        self.assertEqual(report.classification, "transient")
        self.assertIsNone(report.second)

    def test_critical_hofbauer_keller_is_null_recurrent(self):
        b_2 = hk_critical_b(2)
        report = recurrence_classify(
            doubling(),
            hofbauer_keller(b_2, 2),
            LOWER_HALF,
            1.0,
            14,
            return_region=UPPER_HALF,
        )
        self.assertEqual(report.first.verdict, "divergent")
        self.assertGreater(report.first.rate, 0.0)
        # one first return of each length, weighted e^{s_n}
        self.assertEqual(report.second.verdict, "divergent")
        self.assertEqual(report.second.model, "log")
        self.assertEqual(report.classification, "null_recurrent")

    def test_rejects_nonpositive_rate(self):
        with self.assertRaises(ValueError):
            recurrence_classify(doubling(), constant(0.0), UPPER_HALF, 0.0)


class TestZnLowerBound(unittest.TestCase):
    def test_zero_potential(self):
        report = znlowerbound_check(doubling(), constant(0.0), 4, 14)
        self.assertAlmostEqual(report.eta, 1 - 2.0**-4, places=6)
        self.assertTrue(report.positive)
        self.assertTrue(report.stable)

    def test_hofbauer_keller(self):
        report = znlowerbound_check(doubling(), hofbauer_keller(-0.5, 2), 4, 14)
        self.assertTrue(report.positive)
        self.assertTrue(report.stable)
        self.assertEqual(report.window, (4, 14))
        running = [v for _, v in report.running_min]
        self.assertEqual(running, sorted(running, reverse=True))

    def test_wide_range_is_refused(self):
        with self.assertRaises(ComputationRefused):
            znlowerbound_check(doubling(), hofbauer_keller(-1.0, 2), 4, 8)


class TestTailGap(unittest.TestCase):
    def test_first_returns_decay_faster_than_half_the_gap(self):
        fmap = doubling()
        phi = hofbauer_keller(-0.5, 2)
        upper = Interval(Fraction(1, 2), Fraction(1), True, True)
        report = tail_gap(fmap, phi, upper, 3, 6)
        self.assertLess(report.rho_1, report.rho_0)
        self.assertGreater(report.gamma, 0.0)
        psi = phi.shifted(-hk_pressure(-0.5, 2))
        ns = list(range(6, 15))
        values = [z_n_star(fmap, psi, UPPER_HALF, n) for n in ns]
        rate, _ = fit_exponential_rate(ns, values)
        self.assertGreaterEqual(rate, report.gamma / 2)

    def test_rome_is_the_complement_of_x_hat(self):
        upper = Interval(Fraction(1, 2), Fraction(1), True, True)
        report = tail_gap(doubling(), hofbauer_keller(-0.5, 2), upper, 3, 6)
        self.assertEqual(report.vertices, 8)
        self.assertEqual(report.x_hat_vertices, 4)
        self.assertEqual(report.rome_size, 4)
        self.assertTrue(report.rome_valid)
        # [7/8, 1) covers itself, so X̂ carries a cycle
        self.assertFalse(report.rome_valid_g0)
        # paths avoiding [1/2, 1) only circle the fixed point 0
        self.assertAlmostEqual(report.h_star, 0.0, places=6)
        self.assertLess(report.margin_star, 0.0)
        self.assertGreater(report.margin, 0.0)
        self.assertEqual(len(report.warnings), 2)
        self.assertLess(report.rho_rome, report.rho_0)

    def test_zero_potential_removing_one_cylinder(self):
        cylinder = Interval(Fraction(1, 2), Fraction(5, 8), True, True)
        report = tail_gap(doubling(), constant(0.0), cylinder, 3, 6)
        self.assertAlmostEqual(report.rho_0, 2.0, delta=1e-6)
        self.assertLess(report.rho_1, 2.0)
        self.assertGreater(report.gamma, 0.0)
        self.assertEqual(report.x_hat_vertices, 1)
        self.assertEqual(report.rome_size, 7)
        self.assertTrue(report.rome_valid)
        self.assertTrue(report.rome_valid_g0)
        self.assertEqual(report.artificial_vertices, 0)
        self.assertGreater(report.margin_star, 0.0)
        self.assertEqual(report.warnings, [])

    def test_wide_range_is_refused(self):
        upper = Interval(Fraction(1, 2), Fraction(1), True, True)
        with self.assertRaises(ComputationRefused) as caught:
            tail_gap(doubling(), hofbauer_keller(-1.0, 2), upper, 3, 6)
        self.assertLess(caught.exception.diagnostic["margin"], 0.0)


if __name__ == "__main__":
    unittest.main()
