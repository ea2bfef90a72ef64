import unittest
import os
import math
import tempfile

import numpy as np

from ftsdos.plant import builtin_example
from ftsdos.dos import DosSchedule
from ftsdos.engine import SimLog, TriggerPolicy, simulate
from ftsdos.output import (csv_header, write_csv, read_csv, write_result, read_result, write_svg, jsonable,
                           log_summary, load_log)


class OutputTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.model, cls.cert = builtin_example()
        cls.schedule = DosSchedule([(0.3, 0.2)], 1.)
        cls.log = simulate(cls.model, cls.cert, TriggerPolicy(), cls.schedule, [2.], 1., h=1e-3)

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def path(self, name):
        return os.path.join(self.tmpdir.name, name)

    def test_header(self):
        self.assertEqual(["t", "x1", "x2", "u1", "V", "err_norm", "denied", "event", "transmitted"],
                         csv_header(2, 1))

    def test_csv(self):
        write_csv(self.log, self.path("out.csv"))
        with open(self.path("out.csv")) as f:
            lines = f.readlines()
        self.assertEqual("t,x1,u1,V,err_norm,denied,event,transmitted\n", lines[0])
        self.assertEqual(len(self.log) + 1, len(lines))

    def test_csv_read(self):
        write_csv(self.log, self.path("out.csv"))
        data = read_csv(self.path("out.csv"))
        np.testing.assert_array_equal(self.log.times, data["times"])
        np.testing.assert_array_equal(self.log.states, data["states"])
        np.testing.assert_array_equal(self.log.denied, data["denied"])
        self.assertEqual(len(set(self.log.event_rows())), int(np.count_nonzero(data["event"])))

    def test_csv_empty(self):
        log = SimLog(np.zeros(0), np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0), np.zeros(0),
                     np.zeros(0, dtype=bool), [])
        write_csv(log, self.path("empty.csv"))
        with open(self.path("empty.csv")) as f:
            self.assertEqual(1, len(f.readlines()))
        data = read_csv(self.path("empty.csv"))
        self.assertEqual(0, len(data["times"]))

    def test_csv_bad_header(self):
        with open(self.path("bad.csv"), "w") as f:
            print("time,x1", file=f)
        with self.assertRaises(ValueError):
            read_csv(self.path("bad.csv"))

    def test_jsonable(self):
        doc = jsonable({"a": np.float64(1.5), "b": np.int64(3), "c": math.inf, "d": np.array([1., np.nan]),
                        "e": np.bool_(True), "f": (1, 2)})
        self.assertEqual({"a": 1.5, "b": 3, "c": None, "d": [1., None], "e": True, "f": [1, 2]}, doc)
        self.assertIsInstance(doc["b"], int)
        self.assertIsInstance(doc["e"], bool)

    def test_result(self):
        write_result({"value": np.float64(2.), "bad": math.nan}, self.path("result.json"))
        self.assertEqual({"value": 2., "bad": None}, read_result(self.path("result.json")))

    def test_load_log(self):
        write_csv(self.log, self.path("out.csv"))
        write_result({"run": log_summary(self.log)}, self.path("result.json"))
        log = load_log(self.path("out.csv"), read_result(self.path("result.json")))
        self.assertEqual(self.log.n_events, log.n_events)
        self.assertEqual(self.log.status, log.status)
        self.assertEqual(self.log.policy.strategy, log.policy.strategy)
        self.assertAlmostEqual(self.log.min_inter_event, log.min_inter_event)
        np.testing.assert_array_equal(self.log.lyapunov, log.lyapunov)
        for ours, theirs in zip(self.log.events, log.events):
            self.assertEqual(ours.t, theirs.t)
            self.assertEqual(ours.transmitted, theirs.transmitted)

    def test_svg(self):
        write_svg(self.log, self.schedule, self.path("figure.svg"), cert=self.cert, title="test")
        with open(self.path("figure.svg")) as f:
            self.assertIn("<svg", f.read())

    def test_svg_deterministic(self):
        write_svg(self.log, self.schedule, self.path("a.svg"), cert=self.cert)
        write_svg(self.log, self.schedule, self.path("b.svg"), cert=self.cert)
        with open(self.path("a.svg"), "rb") as a, open(self.path("b.svg"), "rb") as b:
            self.assertEqual(a.read(), b.read())


if __name__ == '__main__':
    unittest.main()
