import math
import time
import unittest
from fractions import Fraction

from core.exceptions import BoundaryError, MapDefinitionError
from core.interval_map import (
    Interval,
    cylinder_containing,
    horseshoe_count,
    lap_number,
    lap_submultiplicativity,
    periodic_points,
    topological_entropy,
)
from core.map_families import (
    doubling,
    from_branch_table,
    full_linear,
    manneville_pomeau,
    piecewise_linear,
)

LOG2 = math.log(2.0)


def tent():
    return piecewise_linear([Fraction(0), Fraction(1, 2), Fraction(1)], [2, -2], 0)


class TestInterval(unittest.TestCase):
    def test_half_open_membership(self):
        interval = Interval(Fraction(1, 4), Fraction(1, 2))
        self.assertTrue(interval.contains(Fraction(1, 4)))
        self.assertFalse(interval.contains(Fraction(1, 2)))
        self.assertEqual(interval.width, Fraction(1, 4))
        self.assertEqual(interval.midpoint, Fraction(3, 8))

    def test_overlap_requires_interior(self):
        a = Interval(Fraction(0), Fraction(1, 2))
        b = Interval(Fraction(1, 2), Fraction(1))
        self.assertIsNone(a.overlap(b))
        c = Interval(Fraction(1, 4), Fraction(3, 4))
        self.assertTrue(a.overlap(c).same_as(Interval(Fraction(1, 4), Fraction(1, 2))))

    def test_minus(self):
        whole = Interval(Fraction(0), Fraction(1))
        parts = whole.minus(Interval(Fraction(1, 4), Fraction(1, 2)))
        self.assertEqual(
            [(p.left, p.right) for p in parts],
            [(0, Fraction(1, 4)), (Fraction(1, 2), 1)],
        )


class TestMapDefinition(unittest.TestCase):
    def test_rejects_gap_between_branches(self):
        rows = [
            {"left": Fraction(0), "right": Fraction(1, 3), "slope": 3, "intercept": 0},
            {"left": Fraction(1, 2), "right": Fraction(1), "slope": 2, "intercept": -1},
        ]
        with self.assertRaises(MapDefinitionError):
            from_branch_table(rows)

    def test_rejects_missing_column(self):
        with self.assertRaises(MapDefinitionError):
            from_branch_table([{"left": 0, "right": 1, "slope": 1}])

    def test_rejects_constant_branch(self):
        with self.assertRaises(MapDefinitionError):
            piecewise_linear([Fraction(0), Fraction(1, 2), Fraction(1)], [2, 0], 0)

    def test_rejects_slope_count_mismatch(self):
        with self.assertRaises(MapDefinitionError):
            piecewise_linear([0, 0.5, 1], [2], 0)

    def test_manneville_pomeau_parameter_range(self):
        with self.assertRaises(MapDefinitionError):
            manneville_pomeau(1.5)

    def test_dyadic_maps_are_exact(self):
        fmap = doubling()
        self.assertTrue(fmap.exact)
        self.assertEqual(fmap.tolerance, 0)
        self.assertEqual(fmap(Fraction(3, 4)), Fraction(1, 2))


class TestPartitions(unittest.TestCase):
    def test_doubling_laps_are_powers_of_two(self):
        fmap = doubling()
        for n in range(1, 9):
            self.assertEqual(lap_number(fmap, n), 2**n)
            self.assertEqual(horseshoe_count(fmap, n), 2**n)

    def test_cylinders_tile_the_interval(self):
        level = tent().refine(5)
        self.assertEqual(level.cylinders[0].interval.left, 0)
        self.assertEqual(level.cylinders[-1].interval.right, 1)
        self.assertTrue(level.cylinders[-1].interval.closed_right)
        for left, right in zip(level.cylinders, level.cylinders[1:]):
            self.assertEqual(left.interval.right, right.interval.left)

    def test_lap_submultiplicativity(self):
        self.assertEqual(lap_submultiplicativity(doubling(), 8), [])
        self.assertEqual(lap_submultiplicativity(tent(), 8), [])
        self.assertEqual(lap_submultiplicativity(full_linear(3), 5), [])

    def test_pullback_follows_word(self):
        fmap = doubling()
        interval = fmap.pullback((1, 0), Interval(Fraction(0), Fraction(1), True, True))
        self.assertEqual(
            (interval.left, interval.right), (Fraction(1, 2), Fraction(3, 4))
        )

    def test_cylinder_containing(self):
        cylinder = cylinder_containing(doubling(), Fraction(1, 3), 3)
        self.assertEqual(cylinder.word, (0, 1, 0))
        interval = cylinder.interval
        self.assertEqual(
            (interval.left, interval.right), (Fraction(1, 4), Fraction(3, 8))
        )

    def test_itinerary_on_boundary_raises(self):
        with self.assertRaises(BoundaryError):
            doubling().itinerary(Fraction(1, 2), 2)
        with self.assertRaises(BoundaryError):
            doubling().itinerary(Fraction(1, 4), 3)


class TestEntropy(unittest.TestCase):
    def test_doubling_entropy_is_log_two(self):
        start = time.perf_counter()
        estimate = topological_entropy(doubling(), 10)
        self.assertLess(time.perf_counter() - start, 1.0)
        self.assertAlmostEqual(estimate.value, LOG2, delta=1e-12)
        self.assertLessEqual(estimate.lower, estimate.value)
        self.assertLessEqual(estimate.value, estimate.upper)

    def test_tent_and_tripling(self):
        self.assertAlmostEqual(topological_entropy(tent(), 10).value, LOG2, delta=1e-12)
        self.assertAlmostEqual(
            topological_entropy(full_linear(3), 6).value, math.log(3), delta=1e-12
        )

    def test_manneville_pomeau_has_full_branches(self):
        estimate = topological_entropy(manneville_pomeau(0.3), 8)
        self.assertAlmostEqual(estimate.value, LOG2, delta=1e-9)

    def test_needs_two_levels(self):
        with self.assertRaises(ValueError):
            topological_entropy(doubling(), 1)


class TestPeriodicPoints(unittest.TestCase):
    def test_doubling_period_counts(self):
        fmap = doubling()
        for n in range(1, 7):
            self.assertEqual(len(periodic_points(fmap, n)), 2**n - 1)

    def test_period_two_points(self):
        points = [p for _, p in periodic_points(doubling(), 2)]
        self.assertEqual(points, [Fraction(0), Fraction(1, 3), Fraction(2, 3)])
        fmap = doubling()
        for p in points:
            self.assertEqual(fmap(fmap(p)), p)


if __name__ == "__main__":
    unittest.main()
