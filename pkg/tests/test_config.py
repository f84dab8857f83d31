import importlib
import logging
import os
import unittest

from config import logging_config
from config.config import Config


class TestConfig(unittest.TestCase):
    def test_config_defaults(self):
        self.assertEqual(Config.TOLERANCE, 1e-12)
        self.assertEqual(Config.IDENTIFICATION_FACTOR, 10)
        self.assertEqual(Config.DIVERGENCE_CEILING, 1e6)
        self.assertEqual(Config.FIT_RESIDUAL, 0.05)
        self.assertIsInstance(Config.MAX_CYLINDERS, int)
        self.assertIsInstance(Config.PERIODIC_BRACKET_PERIOD, int)
        self.assertEqual(Config.SAMPLES_PER_PIECE, 33)

    def test_config_env_override(self):
        os.environ["THERMO_FIT_RESIDUAL"] = "0.2"
        os.environ["THERMO_OUTPUT_DIR"] = "elsewhere"
        import config.config as config_mod

        try:
            importlib.reload(config_mod)
            self.assertEqual(config_mod.Config.FIT_RESIDUAL, 0.2)
            self.assertEqual(config_mod.Config.OUTPUT_DIR, "elsewhere")
        finally:
            del os.environ["THERMO_FIT_RESIDUAL"]
            del os.environ["THERMO_OUTPUT_DIR"]
            importlib.reload(config_mod)


class TestLoggingConfig(unittest.TestCase):
    def test_logging_setup(self):
        try:
            logging_config.setup_logging()
        except Exception as e:
            self.fail(f"setup_logging() raised {e}")
        logger = logging.getLogger()
        self.assertTrue(logger.hasHandlers())

    def test_level_override(self):
        logging_config.setup_logging("debug")
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        logging_config.setup_logging()


if __name__ == "__main__":
    unittest.main()
