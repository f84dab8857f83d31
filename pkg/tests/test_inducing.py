import itertools
import math
import unittest
from fractions import Fraction

import numpy as np

from core.exceptions import ComputationRefused
from core.hofbauer import build_tower
from core.inducing import (
    YoungTower,
    young_tower,
    doubling_scheme,
    first_return_scheme,
    induced_potential,
    project_integral,
    shifted_induced,
    svi_report,
    svi_sufficient_a,
    svi_sufficient_b,
    tower_first_return_scheme,
)
from core.interval_map import Interval
from core.map_families import doubling, full_linear, piecewise_linear
from core.potential import constant, hofbauer_keller
from core.pressure import z0
from families.hofbauer_keller import HKFamily
from families.regularity_examples import example1, example2

LOG2 = math.log(2.0)
UPPER_HALF = Interval(Fraction(1, 2), Fraction(1), True, True)


def domains(scheme):
    return [(b.tau, b.domain.left, b.domain.right) for b in scheme.branches]


class TestSchemes(unittest.TestCase):
    def test_doubling_scheme_branches(self):
        scheme = doubling_scheme(doubling(), 10)
        self.assertEqual(len(scheme), 10)
        self.assertEqual(list(scheme.taus), list(range(1, 11)))
        third = scheme.branches[2]
        self.assertEqual(
            (third.domain.left, third.domain.right), (Fraction(9, 16), Fraction(5, 8))
        )
        self.assertEqual(third.word, (1, 0, 0))
        for index, branch in enumerate(scheme.branches):
            left, right = branch.domain.left, branch.domain.right
            self.assertEqual(
                scheme.orbit_point(index, left, branch.tau), Fraction(1, 2)
            )
            self.assertEqual(scheme.orbit_point(index, right, branch.tau), 1)

    def test_first_return_matches_closed_form(self):
        fmap = doubling()
        found = first_return_scheme(fmap, UPPER_HALF, 8)
        self.assertEqual(domains(found), domains(doubling_scheme(fmap, 8)))
        self.assertEqual(found.rejected, [])

    def test_first_return_against_word_oracle(self):
        fmap = full_linear(3)
        X = Interval(Fraction(0), Fraction(1, 3), True, True)
        found = first_return_scheme(fmap, X, 5)
        expected = []
        for tau in range(1, 6):
            for middle in itertools.product((1, 2), repeat=tau - 1):
                cylinder = fmap.cylinder_by_word((0,) + middle + (0,))
                expected.append((tau, cylinder.interval.left, cylinder.interval.right))
        self.assertEqual(sorted(domains(found)), sorted(expected))
        self.assertEqual(
            found.count_by_tau(), {tau: 2 ** (tau - 1) for tau in range(1, 6)}
        )

    def test_no_returns_is_refused(self):
        tent = piecewise_linear([0.0, 0.5, 1.0], [1.7, -1.7], 0.0)
        with self.assertRaises(ComputationRefused):
            first_return_scheme(tent, Interval(0.9, 1.0, True, True), 4)

    def test_tower_scheme_on_full_branch_map(self):
        fmap = doubling()
        tower = build_tower(fmap, 4)
        scheme = tower_first_return_scheme(fmap, tower, 0, (1,), 8)
        self.assertEqual(domains(scheme), domains(doubling_scheme(fmap, 8)))
        self.assertEqual(scheme.base_domain, 0)

    def test_branch_lookup(self):
        scheme = doubling_scheme(doubling(), 6)
        self.assertEqual(scheme.branch_at(Fraction(7, 8)), 0)
        self.assertEqual(scheme.branch_at(Fraction(19, 32)), 2)
        self.assertIsNone(scheme.branch_at(Fraction(1, 4)))
        self.assertEqual(scheme.induced_map(Fraction(19, 32)), Fraction(3, 4))


class TestInducedPotential(unittest.TestCase):
    def test_constant_potential(self):
        induced = induced_potential(constant(-LOG2), doubling_scheme(doubling(), 30))
        np.testing.assert_allclose(induced.sups, -LOG2 * np.arange(1, 31))
        self.assertTrue(induced.branchwise_constant())
        Z = z0(induced)
        self.assertAlmostEqual(Z.value, 1.0, places=12)
        self.assertTrue(Z.finite)

    def test_shift(self):
        induced = induced_potential(constant(0.0), doubling_scheme(doubling(), 5))
        shifted = shifted_induced(induced, 0.25)
        np.testing.assert_allclose(shifted.sups, -0.25 * np.arange(1, 6))
        self.assertEqual(shifted.shift, 0.25)
        self.assertAlmostEqual(shifted.evaluate(Fraction(19, 32)), -0.75)

    def test_hofbauer_keller_values(self):
        family = HKFamily(-0.5, 2)
        induced = induced_potential(
            family.potential(), doubling_scheme(doubling(), 12), family.tail()
        )
        for n in range(1, 13):
            self.assertAlmostEqual(induced.sups[n - 1], family.s(n), places=12)
            self.assertAlmostEqual(induced.infs[n - 1], family.s(n), places=12)

    def test_summable_variations_of_locally_constant_potential(self):
        induced = induced_potential(
            hofbauer_keller(-0.5, 2), doubling_scheme(doubling(), 8)
        )
        report = svi_report(induced)
        self.assertTrue(report.weakly_holder)
        self.assertTrue(all(v.upper == 0.0 for v in report.variations))


class TestSufficientConditions(unittest.TestCase):
    def test_variations_condition(self):
        fmap = doubling()
        self.assertEqual(svi_sufficient_a(constant(0.3), fmap, 6).satisfied, "yes")
        self.assertEqual(svi_sufficient_a(example2(), fmap, 8).satisfied, "yes")
        self.assertEqual(svi_sufficient_a(example1(), fmap, 8).satisfied, "no")

    def test_image_condition(self):
        report = svi_sufficient_b(doubling_scheme(doubling(), 30), 0.5)
        self.assertEqual(report.satisfied, "yes")
        self.assertEqual(report.condition, "images")


class TestProjection(unittest.TestCase):
    def setUp(self):
        self.N = 40
        self.scheme = doubling_scheme(doubling(), self.N)
        # μ_Φ for the measure of maximal entropy is normalised Lebesgue on X
        self.weights = np.array([2.0**-n for n in range(1, self.N + 1)])
        self.tail_tau = (self.N + 2) * 2.0**-self.N

    def test_total_mass(self):
        value = project_integral(
            self.scheme, self.weights, lambda x: 1.0, tail_tau_mass=self.tail_tau
        )
        self.assertAlmostEqual(value, 1.0, delta=1e-10)

    def test_mean(self):
        value = project_integral(
            self.scheme, self.weights, lambda x: x, tail_tau_mass=self.tail_tau
        )
        self.assertAlmostEqual(value, 0.5, delta=1e-3)

    def test_divergent_return_time_is_refused(self):
        with self.assertRaises(ComputationRefused):
            project_integral(
                self.scheme, self.weights, lambda x: x, tail_tau_mass=math.inf
            )

    def test_unknown_profile(self):
        with self.assertRaises(ValueError):
            project_integral(self.scheme, self.weights, lambda x: x, profile="beta")


class TestYoungTower(unittest.TestCase):
    def setUp(self):
        self.tower = young_tower(doubling_scheme(doubling(), 10))

    def test_floors(self):
        self.assertEqual(self.tower.floor_count, 55)
        interval = self.tower.floor_interval(2, 1)
        self.assertEqual(
            (interval.left, interval.right), (Fraction(1, 8), Fraction(1, 4))
        )

    def test_climb_and_return(self):
        x = Fraction(19, 32)
        point = (x, 2, 0)
        point = self.tower.step(point)
        self.assertEqual(point, (x, 2, 1))
        self.assertEqual(self.tower.project(point), Fraction(3, 16))
        point = self.tower.step(self.tower.step(point))
        self.assertEqual(point, (Fraction(3, 4), 0, 0))

    def test_lift_commutes_with_projection(self):
        phi = hofbauer_keller(-0.5, 2)
        lifted = self.tower.lift(phi)
        point = (Fraction(19, 32), 2, 2)
        self.assertEqual(lifted(point), phi.evaluate(Fraction(3, 8)))

    def test_abramov(self):
        self.assertAlmostEqual(YoungTower.abramov_entropy(2 * LOG2, 2.0), LOG2)


if __name__ == "__main__":
    unittest.main()
