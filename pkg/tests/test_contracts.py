import unittest

from pydantic import ValidationError

from contracts.estimates import PressureEstimate, RecurrenceReport, SeriesFit
from contracts.run_config import MapSpec, RunConfig


class TestRunConfigContract(unittest.TestCase):
    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config.map.family, "doubling")
        self.assertEqual(config.potential.name, "constant")
        self.assertEqual(config.scheme.kind, "doubling")
        self.assertEqual(config.format, "both")
        self.assertEqual(config.x_interval, (0.5, 1.0))

    def test_nested_record(self):
        config = RunConfig.model_validate(
            {
                "map": {"family": "full_linear", "params": {"k": 3}},
                "potential": {"name": "hk", "params": {"b": -0.5, "K": 2}},
                "scheme": {
                    "kind": "first_return",
                    "n_max": 12,
                    "interval": [0.0, 0.25],
                },
                "n_max": 10,
            }
        )
        self.assertEqual(config.map, MapSpec(family="full_linear", params={"k": 3}))
        self.assertEqual(config.scheme.interval, (0.0, 0.25))

    def test_unknown_keys_are_rejected(self):
        with self.assertRaises(ValidationError):
            RunConfig.model_validate({"n_maks": 10})
        with self.assertRaises(ValidationError):
            RunConfig.model_validate({"map": {"familly": "doubling"}})

    def test_windows(self):
        with self.assertRaises(ValidationError):
            RunConfig(n_min=20, n_max=10)
        with self.assertRaises(ValidationError):
            RunConfig(region=(0.6, 0.2))
        with self.assertRaises(ValidationError):
            RunConfig(lam=0.0)
        with self.assertRaises(ValidationError):
            RunConfig(K=1)


class TestEstimateContracts(unittest.TestCase):
    def test_pressure_estimate_defaults(self):
        estimate = PressureEstimate(value=0.5, lower=0.4, upper=0.6)
        self.assertEqual(estimate.flags, [])
        self.assertIsNone(estimate.alternate)

    def test_recurrence_report_alias(self):
        fit = SeriesFit(verdict="divergent", model="log")
        report = RecurrenceReport.model_validate(
            {"class": "transient", "lam": 2.0, "first": fit}
        )
        self.assertEqual(report.classification, "transient")
        self.assertEqual(report.model_dump(by_alias=True)["class"], "transient")


if __name__ == "__main__":
    unittest.main()
