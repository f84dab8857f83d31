import math
import time
import unittest
from fractions import Fraction

import numpy as np
import pytest

from core.exceptions import ComputationRefused, MapDefinitionError
from core.map_families import doubling
from core.potential import hofbauer_keller
from core.series import classify_series
from families.hofbauer_keller import (
    PHASE_TABLE,
    HKFamily,
    hk_critical_b,
    hk_cycle,
    hk_cycle_lower_bound,
    hk_phase,
    hk_series,
    phase_scan,
)
from families.manneville_pomeau import (
    mp_backward_orbit,
    mp_configuration,
    mp_configure_flat_pressure,
    mp_inducing_verdict,
    mp_scan,
)

LOG2 = math.log(2.0)


class TestHofbauerKellerSeries(unittest.TestCase):
    def test_series_against_direct_sum(self):
        for b, K in ((-0.5, 2), (-1.0, 5), (-2.0, 10)):
            family = HKFamily(b, K)
            direct = math.fsum(math.exp(family.s(n)) for n in range(1, 200001))
            # Σ_{n>200000} c (n+1)^-2 is below c / 200001
            slack = math.exp(family.log_tail_constant()) / 200001
            series = hk_series(b, K)
            self.assertLessEqual(series.lower, series.value)
            self.assertLessEqual(series.value, series.upper)
            self.assertAlmostEqual(series.value, direct, delta=slack + 1e-12)

    def test_partial_sums_of_increments(self):
        family = HKFamily(-0.7, 4)
        for n in range(1, 20):
            self.assertAlmostEqual(
                family.s(n), math.fsum(family.a(k) for k in range(n)), places=12
            )

    def test_infinite_K_is_geometric(self):
        series = hk_series(-1.0, None)
        self.assertAlmostEqual(
            series.value, math.exp(-1.0) / (1 - math.exp(-1.0)), places=14
        )

    def test_rejects_bad_parameters(self):
        with self.assertRaises(MapDefinitionError):
            HKFamily(0.1, 2)
        with self.assertRaises(MapDefinitionError):
            HKFamily(-0.5, -1)

    def test_K_zero_is_the_pure_log_ratio_potential(self):
        family = HKFamily(-0.5, 0)
        for n in (1, 5, 50):
            self.assertAlmostEqual(family.s(n), -2.0 * math.log(n + 1), places=12)
        series = hk_series(-0.5, 0)
        self.assertAlmostEqual(series.value, math.pi**2 / 6 - 1, places=10)
        self.assertEqual(hk_phase(-0.5, 0).regime, "subcritical")
        phi = hofbauer_keller(-0.5, 0)
        self.assertAlmostEqual(phi.evaluate(0.75), 2.0 * math.log(0.5), places=12)
        self.assertEqual(phi.evaluate(0), 0.0)


class TestCriticalParameter(unittest.TestCase):
    def test_series_equals_one_at_b_K(self):
        b_2 = hk_critical_b(2)
        self.assertLess(b_2, -LOG2)
        self.assertLessEqual(abs(hk_series(b_2, 2).value - 1.0), 1e-8)

    def test_b_K_increases_towards_minus_log_two(self):
        start = time.perf_counter()
        values = [hk_critical_b(K) for K in (2, 5, 10, 20, 50)]
        elapsed = time.perf_counter() - start
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])))
        self.assertLess(abs(values[-1] + LOG2), abs(values[0] + LOG2))
        self.assertTrue(all(v < -LOG2 for v in values))
        self.assertLess(elapsed, 1.0)

    def test_needs_K_at_least_two(self):
        with self.assertRaises(MapDefinitionError):
            hk_critical_b(1)


class TestPhaseTable(unittest.TestCase):
    def setUp(self):
        self.b_2 = hk_critical_b(2)

    def check_row(self, row, regime):
        self.assertEqual(row.regime, regime)
        self.assertEqual(
            (row.pressure_positive, row.gibbs, row.unique), PHASE_TABLE[regime]
        )
        self.assertEqual(row.accessible, row.pressure_positive)

    def test_above_critical(self):
        self.check_row(hk_phase(-0.5, 2), "supercritical")
        self.check_row(hk_phase(self.b_2 + 0.05, 2), "supercritical")

    def test_at_critical(self):
        row = hk_phase(self.b_2, 2)
        self.check_row(row, "critical_null_recurrent")
        self.assertTrue(row.boundary)

    def test_below_critical(self):
        self.check_row(hk_phase(self.b_2 - 0.3, 2), "subcritical")

    def test_infinite_K(self):
        # Σ e^{nb} = 1 exactly at b = -log 2, where the return-time moment is finite
        self.check_row(hk_phase(-LOG2, None), "critical_positive_recurrent")
        self.check_row(hk_phase(-0.5, None), "supercritical")
        self.check_row(hk_phase(-1.0, None), "subcritical")

    def test_phase_scan(self):
        grid = np.linspace(-1.2, -0.4, 9)
        b_K, rows = phase_scan(2, grid)
        self.assertEqual(len(rows), len(grid) + 1)
        self.assertEqual([b for b, _ in rows], sorted(b for b, _ in rows))
        for b, row in rows:
            if b == b_K:
                self.assertTrue(row.boundary)
            elif b > b_K:
                self.assertEqual(row.regime, "supercritical")
            else:
                self.assertEqual(row.regime, "subcritical")


class TestCycles(unittest.TestCase):
    def test_cycle_points(self):
        fmap = doubling()
        for n in range(2, 9):
            cycle = hk_cycle(n)
            self.assertEqual(len(set(cycle)), n)
            self.assertEqual(cycle[0], Fraction(2 ** (n - 1), 2**n - 1))
            for k in range(1, n):
                self.assertEqual(fmap(cycle[k]), cycle[k - 1])
            self.assertEqual(fmap(cycle[0]), cycle[-1])

    def test_rejects_empty_cycle(self):
        with self.assertRaises(ValueError):
            hk_cycle(0)

    def test_cycle_bound_diverges_at_critical(self):
        b_2 = hk_critical_b(2)
        terms = [hk_cycle_lower_bound(b_2, 2, n) for n in range(1, 2001)]
        fit = classify_series(terms)
        self.assertEqual(fit.verdict, "divergent")
        self.assertEqual(fit.model, "log")


class TestMannevillePomeau(unittest.TestCase):
    @pytest.mark.slow
    def test_backward_orbit_residual_does_not_drift(self):
        orbit = mp_backward_orbit(0.3, 5000)
        self.assertTrue(np.all(np.diff(orbit.ys) < 0))
        self.assertTrue(np.all(orbit.residuals <= 1e-13))
        residual = orbit.asymptotic_residual()[99:5000]
        middle = len(residual) // 2
        lower, upper = residual[:middle], residual[middle:]
        self.assertLessEqual(np.ptp(upper), 2 * np.ptp(lower))
        self.assertEqual(len(orbit.rows()), 5000)

    @pytest.mark.slow
    def test_flat_pressure_is_not_projectable(self):
        config = mp_configure_flat_pressure(0.3, -1.0)
        self.assertTrue(config.pressure_zero)
        self.assertLessEqual(config.series.upper, 1.0)
        self.assertEqual(config.K, 2 * config.N)
        self.assertLess(config.p1, config.p2)
        verdict = mp_inducing_verdict(config)
        self.assertEqual(verdict.status, "not_projectable")
        self.assertEqual(verdict.configuration, config)

    @pytest.mark.slow
    def test_large_b_is_projected(self):
        config = mp_configuration(0.3, -0.5, 5)
        self.assertFalse(config.pressure_zero)
        self.assertGreater(config.series.lower, 1.0)
        self.assertEqual(mp_inducing_verdict(config).status, "projected")

    def test_refusals(self):
        with self.assertRaises(ComputationRefused):
            mp_configure_flat_pressure(0.4, -1.0)
        with self.assertRaises(ComputationRefused):
            mp_configure_flat_pressure(0.3, -0.5)
        with self.assertRaises(MapDefinitionError):
            mp_backward_orbit(1.5, 10)

    def test_scan_marks_refused_rows(self):
        rows = mp_scan([0.3, 0.4], [-0.5])
        self.assertEqual([(a, b) for a, b, _ in rows], [(0.3, -0.5), (0.4, -0.5)])
        self.assertTrue(all(config is None for _, _, config in rows))


if __name__ == "__main__":
    unittest.main()
