import unittest
import logging
import math

import numpy as np

from ftsdos.plant import builtin_example, linear_decay, HoldStrategy
from ftsdos.dos import DosSchedule
from ftsdos.analysis import settling_time
from ftsdos.engine import (TriggerPolicy, TriggerKind, RunStatus, SimLog, Event, integrate_step, locate_trigger,
                           simulate, simulate_time_triggered, ZENO_GUARD)

# Seven 0.6 s attacks over a 5 s horizon
HEAVY_DOS = [(0.05, 0.6), (0.76, 0.6), (1.47, 0.6), (2.18, 0.6), (2.89, 0.6), (3.60, 0.6), (4.31, 0.6)]

SETTLE_REFERENCE = 2. * math.log(1. + math.sqrt(3.))


def exact_reference(t):
    """
    Closed-loop solution of the example from x0 = 3 under continuous feedback.
    """
    w = (1. + math.sqrt(3.)) * np.exp(-np.asarray(t) / 2.) - 1.
    return np.square(np.maximum(w, 0.))


class TriggerPolicyTest(unittest.TestCase):
    def test_from_strings(self):
        policy = TriggerPolicy(kind="hybrid-etm", strategy="zero_input")
        self.assertEqual(TriggerKind.hybrid_etm, policy.kind)
        self.assertEqual(HoldStrategy.zero_input, policy.strategy)
        self.assertTrue(policy.uses_trigger)
        self.assertFalse(TriggerPolicy(kind="time_triggered").uses_trigger)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            TriggerPolicy(lam=1.)
        with self.assertRaises(ValueError):
            TriggerPolicy(delta_bar=0.01, delta_lower=0.02)
        with self.assertRaises(ValueError):
            TriggerPolicy(period=0.)
        with self.assertRaises(KeyError):
            TriggerPolicy(kind="self_triggered")

    def test_as_dict(self):
        doc = TriggerPolicy(lam=0.3).as_dict()
        self.assertEqual("hybrid_etm", doc["kind"])
        self.assertEqual("hold_last", doc["strategy"])
        self.assertEqual(0.3, doc["lambda"])


class IntegratorTest(unittest.TestCase):
    def test_rk4_step(self):
        model, _ = linear_decay()
        x = integrate_step(model, np.array([1.]), np.array([0.]), 0., 0.01)
        self.assertAlmostEqual(math.exp(-0.01), x[0], places=10)

    def test_held_input(self):
        model, _ = linear_decay()
        x = integrate_step(model, np.array([0.]), np.array([1.]), 0., 0.1)
        self.assertAlmostEqual(1. - math.exp(-0.1), x[0], places=6)

    def test_invalid_step(self):
        model, _ = linear_decay()
        with self.assertRaises(ValueError):
            integrate_step(model, np.array([1.]), np.array([0.]), 0., 0.)

    def test_linear_reference(self):
        model, _ = linear_decay()
        policy = TriggerPolicy(kind=TriggerKind.continuous_feedback_reference)
        log = simulate(model, None, policy, None, [1.], 1., h=1e-3)
        self.assertEqual(1001, len(log))
        np.testing.assert_allclose(np.exp(-log.times), log.states[:, 0], rtol=1e-10)

    def test_example_reference(self):
        model, cert = builtin_example()
        policy = TriggerPolicy(kind=TriggerKind.continuous_feedback_reference)
        log = simulate(model, cert, policy, None, [3.], 3., h=1e-4)
        self.assertEqual(RunStatus.completed, log.status)
        before = log.times <= 1.9
        np.testing.assert_allclose(exact_reference(log.times[before]), log.states[before, 0], atol=1e-6)
        self.assertAlmostEqual(SETTLE_REFERENCE, settling_time(log, 1e-6), delta=5e-3)
        self.assertGreaterEqual(log.settled_at, settling_time(log, 1e-6))
        self.assertTrue(np.all(log.states[log.times > log.settled_at] == 0))


class LocateTriggerTest(unittest.TestCase):
    def test_crossing(self):
        self.assertAlmostEqual(0.3, locate_trigger(lambda t: t - 0.3, (0., 1.)), delta=1e-8)

    def test_already_positive(self):
        self.assertEqual(0.5, locate_trigger(lambda t: 1., (0.5, 1.)))

    def test_no_crossing(self):
        with self.assertRaises(ValueError):
            locate_trigger(lambda t: -1., (0., 1.))
        with self.assertRaises(ValueError):
            locate_trigger(lambda t: t, (1., 1.))


class EventTriggeredTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.model, cls.cert = builtin_example()
        cls.log = simulate(cls.model, cls.cert, TriggerPolicy(), None, [3.], 5., h=1e-4)

    def test_settles(self):
        log = self.log
        self.assertEqual(RunStatus.completed, log.status)
        self.assertIsNotNone(log.settled_at)
        settled = settling_time(log, 1e-3)
        self.assertGreaterEqual(settled, 1.6)
        self.assertLessEqual(settled, 2.2)
        self.assertGreaterEqual(log.settled_at, 1.9)
        self.assertLessEqual(log.settled_at, 2.2)
        self.assertTrue(np.all(log.states[log.times >= log.settled_at] == 0))

    def test_event_count(self):
        self.assertGreaterEqual(self.log.n_events, 30)
        self.assertLessEqual(self.log.n_events, 50)
        self.assertEqual(self.log.n_events, self.log.n_transmissions)
        self.assertTrue(all(e.t <= self.log.settled_at for e in self.log.events))

    def test_first_event(self):
        first = self.log.events[0]
        self.assertEqual(0., first.t)
        self.assertTrue(first.transmitted)
        np.testing.assert_array_equal([3.], first.state)

    def test_no_zeno(self):
        self.assertGreater(self.log.min_inter_event, ZENO_GUARD)
        gaps = np.diff([e.t for e in self.log.events])
        self.assertAlmostEqual(np.min(gaps), self.log.min_inter_event)

    def test_trigger_respected(self):
        # Between events the error stays at or below the trigger level, up to the localisation tolerance
        log = self.log
        level = np.power(log.lyapunov, self.cert.a) * self.cert.c * (1. - self.cert.lam)
        gain = 32. * np.square(log.errors)
        live = log.norms > 1e-3
        self.assertTrue(np.all(gain[live] <= level[live] * (1. + 1e-3) + 1e-9))

    def test_grid(self):
        self.assertEqual(50001, len(self.log))
        self.assertEqual(5., self.log.times[-1])
        self.assertFalse(np.any(self.log.denied))

    def test_deterministic(self):
        again = simulate(self.model, self.cert, TriggerPolicy(), None, [3.], 5., h=1e-4)
        np.testing.assert_array_equal(self.log.states, again.states)
        self.assertEqual([e.t for e in self.log.events], [e.t for e in again.events])


class TimeTriggeredTest(unittest.TestCase):
    def test_transmission_count(self):
        model, _ = builtin_example()
        log = simulate_time_triggered(model, [3.], 0.02, 5., h=1e-3)
        self.assertEqual(250, log.n_transmissions)
        self.assertEqual(250, log.n_events)
        self.assertAlmostEqual(4.98, log.events[-1].t)
        self.assertAlmostEqual(0.02, log.min_inter_event)

    def test_invalid_period(self):
        model, _ = builtin_example()
        with self.assertRaises(ValueError):
            simulate_time_triggered(model, [3.], 0., 5.)


class DosTest(unittest.TestCase):
    def setUp(self):
        self.model, self.cert = builtin_example()
        self.schedule = DosSchedule(HEAVY_DOS, 5.)

    def test_retry_after_denial(self):
        schedule = DosSchedule([(0., 0.35)], 5.)
        log = simulate(self.model, self.cert, TriggerPolicy(), schedule, [1.], 1., h=1e-3)
        times = [e.t for e in log.events[:5]]
        np.testing.assert_allclose([0., 0.1, 0.2, 0.3, 0.4], times)
        self.assertEqual([False, False, False, False, True], [e.transmitted for e in log.events[:5]])
        self.assertTrue(all(e.during_dos for e in log.events[:4]))
        # Without any sample the actuator applies zero and x = 1 is an open loop equilibrium
        np.testing.assert_allclose([1.], log.events[3].state)

    def test_hold_last_settles(self):
        log = simulate(self.model, self.cert, TriggerPolicy(), self.schedule, [3.], 5., h=1e-3)
        self.assertEqual(RunStatus.completed, log.status)
        self.assertIsNotNone(settling_time(log, 1e-3))
        self.assertGreaterEqual(log.n_events - log.n_transmissions, 5)
        self.assertGreater(log.min_inter_event, ZENO_GUARD)
        np.testing.assert_array_equal(self.schedule.denied_mask(log.times), log.denied)

    def test_zero_input_diverges(self):
        policy = TriggerPolicy(strategy="zero_input")
        logging.disable(logging.WARNING)
        log = simulate(self.model, self.cert, policy, self.schedule, [3.], 5., h=1e-3, divergence_bound=3.)
        logging.disable(logging.NOTSET)
        self.assertEqual(RunStatus.diverged, log.status)
        self.assertLess(len(log), 5001)
        self.assertTrue(np.all(np.isfinite(log.states)))
        self.assertGreater(log.norms[-1], 3.)

    def test_continuous_etm_zeno_under_dos(self):
        policy = TriggerPolicy(kind="continuous_etm")
        logging.disable(logging.WARNING)
        log = simulate(self.model, self.cert, policy, self.schedule, [3.], 5., h=1e-3)
        logging.disable(logging.NOTSET)
        self.assertEqual(RunStatus.zeno, log.status)
        self.assertLess(len(log), 5001)


class ValidationTest(unittest.TestCase):
    def setUp(self):
        self.model, self.cert = builtin_example()

    def test_step_too_large(self):
        with self.assertRaises(ValueError):
            simulate(self.model, self.cert, TriggerPolicy(), None, [1.], 1., h=0.01)

    def test_fractional_steps(self):
        with self.assertRaises(ValueError):
            simulate(self.model, self.cert, TriggerPolicy(), None, [1.], 1.00005, h=1e-3)

    def test_needs_certificate(self):
        with self.assertRaises(ValueError):
            simulate(self.model, None, TriggerPolicy(), None, [1.], 1., h=1e-3)

    def test_outside_domain(self):
        with self.assertRaises(ValueError):
            simulate(self.model, self.cert, TriggerPolicy(), None, [3.5], 1., h=1e-3)

    def test_dimension(self):
        with self.assertRaises(ValueError):
            simulate(self.model, self.cert, TriggerPolicy(), None, [1., 1.], 1., h=1e-3)

    def test_short_schedule(self):
        with self.assertRaises(ValueError):
            simulate(self.model, self.cert, TriggerPolicy(), DosSchedule.empty(0.5), [1.], 1., h=1e-3)

    def test_origin(self):
        log = simulate(self.model, self.cert, TriggerPolicy(), None, [0.], 1., h=1e-3)
        self.assertEqual(0., log.settled_at)
        self.assertEqual(1, log.n_events)
        self.assertTrue(np.all(log.states == 0))


class SimLogTest(unittest.TestCase):
    def test_event_rows(self):
        events = [Event(0., True, False, np.array([1.])), Event(0.25, True, False, np.array([0.5])),
                  Event(0.3, False, True, np.array([0.4]))]
        times = np.linspace(0., 1., 11)
        log = SimLog(times, np.zeros(11), np.zeros(11), np.zeros(11), np.zeros(11), np.zeros(11, dtype=bool),
                     events, status="completed")
        np.testing.assert_array_equal([0, 3, 3], log.event_rows())
        self.assertEqual(3, log.n_events)
        self.assertEqual(2, log.n_transmissions)
        self.assertEqual((11, 1), log.states.shape)
        self.assertEqual(RunStatus.completed, log.status)


if __name__ == '__main__':
    unittest.main()
