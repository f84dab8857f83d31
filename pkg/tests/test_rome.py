import random
import unittest
from fractions import Fraction

import numpy as np

from core.exceptions import ComputationRefused
from core.rome import (
    WeightedDigraph,
    characteristic_identity_check,
    perturbation_bound_check,
    rome_matrix,
    spectral_radius,
    vertex_split,
    verify_rome,
)

SAMPLES = (Fraction(1, 3), Fraction(-2, 5), Fraction(2), Fraction(7, 2))


def rome5():
    edges = [
        ("a", "a", Fraction(1, 3)),
        ("a", "b", Fraction(1, 2)),
        ("a", "c", 1),
        ("b", "a", 1),
        ("b", "e", 3),
        ("c", "d", Fraction(2, 3)),
        ("c", "e", Fraction(1, 5)),
        ("d", "a", 2),
        ("d", "b", 1),
        ("e", "a", Fraction(1, 4)),
    ]
    return WeightedDigraph.from_edges(edges, "abcde")


def random_rational_graph(
    rng: random.Random, size: int, density: float = 0.4
) -> WeightedDigraph:
    graph = WeightedDigraph(range(size))
    for i in range(size):
        for j in range(size):
            if rng.random() < density:
                graph.add_edge(i, j, Fraction(rng.randint(1, 9), rng.randint(1, 9)))
    return graph


def greedy_rome(graph: WeightedDigraph):
    rome = list(graph.vertices)
    for v in list(rome):
        smaller = [u for u in rome if u != v]
        if verify_rome(graph, smaller):
            rome = smaller
    return rome


def random_irreducible_matrix(rng: np.random.Generator, size: int) -> np.ndarray:
    matrix = rng.uniform(0.1, 1.0, (size, size)) * (rng.random((size, size)) < 0.4)
    for i in range(size):
        matrix[i, (i + 1) % size] = rng.uniform(0.1, 1.0)
    return matrix


class TestRome(unittest.TestCase):
    def test_verify_rome(self):
        graph = rome5()
        self.assertTrue(verify_rome(graph, ["a", "b"]))
        self.assertTrue(verify_rome(graph, ["a"]))
        # a has a self-loop
        self.assertFalse(verify_rome(graph, ["b", "c"]))

    def test_rome_matrix_entries(self):
        matrix = rome_matrix(rome5(), ["a", "b"])
        # a -> c -> d -> b and the direct arrow a -> b
        self.assertEqual(
            matrix.entries[("a", "b")], {1: Fraction(1, 2), 3: Fraction(2, 3)}
        )
        # b -> e -> a and b -> a
        self.assertEqual(matrix.entries[("b", "a")], {1: 1, 2: Fraction(3, 4)})
        self.assertEqual(matrix.max_length, 3)

    def test_edge_list_record(self):
        record = rome5().to_edge_list()
        self.assertIn(["a", "b", "1/2"], record["edges"])
        graph = WeightedDigraph.from_edge_list(record)
        self.assertEqual(graph.vertices, list("abcde"))
        self.assertEqual(graph.weight("c", "e"), Fraction(1, 5))
        self.assertEqual(graph.weight("e", "c"), 0)

    def test_rejects_non_rome(self):
        with self.assertRaises(ValueError):
            rome_matrix(rome5(), ["c"])

    def test_identity_on_fixed_graph(self):
        report = characteristic_identity_check(rome5(), ["a", "b"], SAMPLES)
        self.assertTrue(report.all_equal)
        self.assertEqual(report.rome_size, 2)

    def test_identity_at_zero_with_long_paths(self):
        graph = rome5()
        report = characteristic_identity_check(graph, ["a", "b"], (0,))
        sample = report.samples[0]
        self.assertTrue(sample.equal)
        self.assertEqual(Fraction(sample.rhs), Fraction(str(graph.to_sympy().det())))
        self.assertTrue(characteristic_identity_check(graph, ["a"]).all_equal)

    def test_identity_on_random_graphs(self):
        rng = random.Random(20240611)
        for _ in range(20):
            graph = random_rational_graph(rng, rng.randint(3, 8))
            rome = greedy_rome(graph)
            report = characteristic_identity_check(graph, rome, SAMPLES)
            self.assertTrue(report.all_equal, msg=f"rome {rome}")
            self.assertEqual(len(report.samples), len(SAMPLES))

    def test_identity_refuses_large_graphs(self):
        graph = random_rational_graph(random.Random(1), 13)
        with self.assertRaises(ComputationRefused):
            characteristic_identity_check(graph, list(graph.vertices), SAMPLES)


class TestSpectralRadius(unittest.TestCase):
    def test_against_eigenvalues(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            matrix = rng.uniform(0.05, 1.0, (6, 6))
            expected = max(abs(np.linalg.eigvals(matrix)))
            result = spectral_radius(matrix)
            self.assertAlmostEqual(result.rho, expected, delta=1e-9)
            self.assertTrue(result.irreducible)
            self.assertAlmostEqual(sum(result.left_vector), 1.0, places=12)

    def test_reducible_uses_dominant_block(self):
        result = spectral_radius(np.array([[2.0, 1.0], [0.0, 3.0]]))
        self.assertAlmostEqual(result.rho, 3.0, places=10)
        self.assertFalse(result.irreducible)
        self.assertEqual(result.components, 2)

    def test_rejects_negative_entries(self):
        with self.assertRaises(ValueError):
            spectral_radius(np.array([[1.0, -1.0], [1.0, 1.0]]))


class TestVertexSplit(unittest.TestCase):
    def test_split_preserves_radius_and_duplicates_eigenvector(self):
        rng = np.random.default_rng(11)
        self_loops = 0
        for trial in range(100):
            size = int(rng.integers(2, 7))
            matrix = random_irreducible_matrix(rng, size)
            if trial % 3 == 0:
                matrix[0, 0] = rng.uniform(0.1, 1.0)
            graph = WeightedDigraph.from_matrix(matrix)
            v = 0 if trial % 3 == 0 else int(rng.integers(0, size))
            self_loops += graph.weight(v, v) > 0
            split = vertex_split(graph, v)
            before = spectral_radius(graph)
            after = spectral_radius(split)
            self.assertAlmostEqual(after.rho, before.rho, delta=1e-9)

            old = dict(zip(graph.vertices, before.left_vector))
            new = dict(zip(split.vertices, after.left_vector))
            reference = next(u for u in graph.vertices if u != v)
            for u in split.vertices:
                original = u[0] if isinstance(u, tuple) else u
                np.testing.assert_allclose(
                    new[u] / new[reference], old[original] / old[reference], rtol=1e-6
                )
        self.assertGreater(self_loops, 0)

    def test_self_loop_becomes_complete_bipartite_block(self):
        graph = WeightedDigraph.from_edges([(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0)])
        split = vertex_split(graph, 0)
        self.assertEqual(len(split), 3)
        self.assertEqual(split.weight((0, 0), (0, 0)), 1.0)
        self.assertEqual(split.weight((0, 0), (0, 1)), 1.0)
        self.assertEqual(split.weight((0, 1), 1), 2.0)
        self.assertEqual(split.weight(1, (0, 0)), 1.0)
        self.assertEqual(split.weight(1, (0, 1)), 1.0)

    def test_needs_outgoing_arrow(self):
        graph = WeightedDigraph.from_edges([(0, 1, 1.0)])
        with self.assertRaises(ValueError):
            vertex_split(graph, 1)


class TestPerturbation(unittest.TestCase):
    def setUp(self):
        self.U = np.array([[0.5, 1.0, 0.2], [0.3, 0.1, 0.9], [1.0, 0.4, 0.3]])
        self.U_seq = [self.U] * 20
        self.V_seq = [self.U * 2.0**-n for n in range(1, 21)]

    def test_ratio_decreases_to_one(self):
        report = perturbation_bound_check(self.U_seq, self.V_seq)
        self.assertAlmostEqual(report.tau, 0.5, places=12)
        self.assertTrue(report.ratio_nonincreasing)
        self.assertLessEqual(report.final_gap, 1e-6)
        ratios = [row.ratio for row in report.rows]
        self.assertTrue(all(b < a for a, b in zip(ratios, ratios[1:])))
        self.assertAlmostEqual(ratios[0], 1.5, places=9)

    def test_zero_perturbation(self):
        report = perturbation_bound_check([self.U] * 3, [np.zeros((3, 3))] * 3)
        self.assertTrue(all(abs(row.ratio - 1.0) < 1e-12 for row in report.rows))

    def test_refusals(self):
        with self.assertRaises(ComputationRefused):
            perturbation_bound_check([self.U] * 3, [self.U] * 3)
        with self.assertRaises(ComputationRefused):
            perturbation_bound_check([self.U], [-self.U * 0.1])
        with self.assertRaises(ValueError):
            perturbation_bound_check([self.U] * 2, [self.U * 0.1])


if __name__ == "__main__":
    unittest.main()
