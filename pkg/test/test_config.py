import unittest
import os
import tempfile

import numpy as np

from ftsdos.config import ScenarioConfig, ConfigError, OUTPUT_ROOT_ENV
from ftsdos.engine import TriggerKind
from ftsdos.plant import HoldStrategy


class ScenarioConfigTest(unittest.TestCase):
    def test_minimal(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        self.assertEqual("minimal", config.name)
        np.testing.assert_array_equal([1.], config.x0)
        self.assertEqual("dos_intervals", config.dos_source)
        self.assertFalse(config.is_sweep)
        self.assertIsNone(config.seed)

    def test_defaults(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        policy = config.build_policy()
        self.assertEqual(TriggerKind.hybrid_etm, policy.kind)
        self.assertEqual(HoldStrategy.hold_last, policy.strategy)
        self.assertAlmostEqual(0.1, policy.delta_bar)
        self.assertAlmostEqual(1e-4, config.scenario.step)

    def test_schedule(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        schedule = config.build_schedule()
        self.assertEqual([[0.5, 0.25]], schedule.as_list())
        self.assertEqual(1., schedule.horizon)

    def test_name_from_filename(self):
        config = ScenarioConfig("data/example_time_triggered.cfg")
        self.assertEqual("example_time_triggered", config.name)

    def test_hash_ignores_layout(self):
        first = ScenarioConfig("test/data/minimal.cfg")
        second = ScenarioConfig("test/data/minimal_reordered.cfg")
        self.assertEqual(first.config_hash(), second.config_hash())
        self.assertEqual(64, len(first.config_hash()))

    def test_hash_differs(self):
        first = ScenarioConfig("test/data/minimal.cfg")
        second = ScenarioConfig("data/example_no_dos.cfg")
        self.assertNotEqual(first.config_hash(), second.config_hash())

    def test_output_dir(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        path = config.output_dir("out")
        self.assertEqual("out", os.path.dirname(path))
        self.assertEqual("minimal-" + config.config_hash()[:16], os.path.basename(path))

    def test_output_dir_env(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        old = os.environ.get(OUTPUT_ROOT_ENV)
        os.environ[OUTPUT_ROOT_ENV] = "elsewhere"
        try:
            self.assertTrue(config.output_dir().startswith("elsewhere"))
        finally:
            if old is None:
                del os.environ[OUTPUT_ROOT_ENV]
            else:
                os.environ[OUTPUT_ROOT_ENV] = old

    def test_include(self):
        config = ScenarioConfig("data/example_dos_hold.cfg")
        self.assertEqual(7, len(config.intervals))
        self.assertEqual(["decay", "growth", "measure"], list(config.outputs.checks))

    def test_sweep(self):
        config = ScenarioConfig("data/sweep_duty.cfg")
        self.assertTrue(config.is_sweep)
        self.assertIsNone(config.dos_source)
        schedule = config.build_schedule(duty=0.5)
        self.assertGreater(len(schedule), 0)

    def test_constraints_characterized(self):
        config = ScenarioConfig("data/example_dos_hold.cfg")
        constraints = config.constraints(config.build_schedule())
        self.assertAlmostEqual(1., constraints.eta)
        self.assertAlmostEqual(0.1, constraints.kappa)

    def test_kappa_follows_delta_bar(self):
        with tempfile.TemporaryDirectory() as root:
            filename = os.path.join(root, "kappa.cfg")
            with open(filename, "w") as f:
                print("[scenario]\nschema_version 1\nx0 1.0\nhorizon 1.0\n\n[policy]\ndelta_bar 0.05\n\n"
                      "[dos_intervals]\n0.5 0.25", file=f)
            config = ScenarioConfig(filename)
            self.assertAlmostEqual(0.05, config.analysis.kappa)
            self.assertAlmostEqual(0.05, config.constraints(config.build_schedule()).kappa)

            with open(filename, "a") as f:
                print("\n[analysis]\nkappa 0.3", file=f)
            self.assertAlmostEqual(0.3, ScenarioConfig(filename).analysis.kappa)

    def test_metadata(self):
        config = ScenarioConfig("test/data/minimal.cfg")
        meta = config.metadata()
        self.assertIsNone(meta["seed"])
        self.assertIsNone(meta["prng"])
        self.assertEqual(1., meta["horizon"])


class ConfigErrorTest(unittest.TestCase):
    def assertConfigError(self, filename, lineno, text):
        with self.assertRaises(ConfigError) as ctx:
            ScenarioConfig(os.path.join("test/data", filename))
        self.assertEqual(lineno, ctx.exception.args[2] if len(ctx.exception.args) > 2 else None)
        self.assertIn(text, str(ctx.exception))
        self.assertIn(filename, str(ctx.exception))

    def test_missing_x0(self):
        self.assertConfigError("missing_x0.cfg", None, "x0")

    def test_unknown_key(self):
        self.assertConfigError("unknown_key.cfg", 4, "colour")

    def test_unknown_section(self):
        self.assertConfigError("unknown_section.cfg", 5, "plotting")

    def test_two_sources(self):
        self.assertConfigError("two_sources.cfg", 8, "more than one DoS source")

    def test_schema_version(self):
        self.assertConfigError("schema_v2.cfg", 2, "schema_version")

    def test_step_too_large(self):
        self.assertConfigError("big_step.cfg", 5, "delta_lower")

    def test_bad_kind(self):
        self.assertConfigError("bad_kind.cfg", 6, "sometimes")

    def test_duplicate_key(self):
        self.assertConfigError("duplicate_key.cfg", 4, "twice")

    def test_bad_interval(self):
        self.assertConfigError("bad_interval.cfg", 7, "sigma tau")

    def test_outside_domain(self):
        self.assertConfigError("sections.cfg", 4, "domain")

    def test_syntax_error(self):
        self.assertConfigError("orphan.cfg", 2, "outside of any section")

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ScenarioConfig("test/data/no_such_file.cfg")


if __name__ == '__main__':
    unittest.main()
