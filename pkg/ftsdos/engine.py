"""
Module containing the fixed-step closed-loop simulator.

The plant is integrated with the classical fourth order Runge-Kutta method on a uniform grid.
The input is piecewise constant and only changes at event instants, which split the grid steps.
Event instants come from one of four policies:

* continuous_etm - transmit when γ(4‖e‖) > c(1-λ)V^a(x), e measured from the last successful sample
* hybrid_etm - as continuous_etm after a successful transmission (Case I), retry after delta_bar
  after a denied one (Case II)
* time_triggered - transmit every period
* continuous_feedback_reference - no network, u = ψ(x) at every integrator stage
"""
import logging
import math

from collections import namedtuple

import numpy as np
from scipy import interpolate, optimize

from ftsdos.util import SimpleEnum
from ftsdos.plant import HoldStrategy, held_input
from ftsdos.certificates import GAIN_FACTOR
from ftsdos.dos import DosSchedule

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-4
SETTLE_EPSILON = 1e-6
ZENO_GUARD = 1e-6
TRIGGER_XTOL = 1e-8
DIVERGENCE_BOUND = 1e6
EVENT_TOL = 1e-12

TriggerKind = SimpleEnum.enum("TriggerKind", ["continuous_etm", "hybrid_etm", "time_triggered",
                                              "continuous_feedback_reference"])
RunStatus = SimpleEnum.enum("RunStatus", ["completed", "diverged", "zeno"])

Event = namedtuple("Event", ["t", "transmitted", "during_dos", "state"])


def _as_item(enum, val):
    if isinstance(val, SimpleEnum.EnumItem):
        return val
    return enum.lookup(val)


class TriggerPolicy:
    """
    When to sample and what the actuator does while transmissions are denied.
    """
    __slots__ = ["kind", "lam", "delta_bar", "delta_lower", "period", "strategy"]

    def __init__(self, kind=TriggerKind.hybrid_etm, lam=None, delta_bar=0.1, delta_lower=0.01,
                 period=0.02, strategy=HoldStrategy.hold_last):
        """
        Create a trigger policy.

        :param kind: TriggerKind item or its name
        :param lam: Triggering parameter λ in (0, 1), None to use the certificate's value
        :param delta_bar: Retry interval after a denied transmission
        :param delta_lower: Lower bound on retry intervals, also bounds the step size
        :param period: Sampling period of the time-triggered policy
        :param strategy: HoldStrategy item or its name
        """
        self.kind = _as_item(TriggerKind, kind)
        self.strategy = _as_item(HoldStrategy, strategy)
        if lam is not None and not 0 < lam < 1:
            raise ValueError("lambda must lie in (0, 1), got {0}".format(lam))
        if not delta_lower > 0:
            raise ValueError("delta_lower must be positive, got {0}".format(delta_lower))
        if not delta_bar > 0:
            raise ValueError("delta_bar must be positive, got {0}".format(delta_bar))
        if self.kind == TriggerKind.hybrid_etm and delta_lower > delta_bar:
            raise ValueError("delta_lower {0} exceeds delta_bar {1}".format(delta_lower, delta_bar))
        if not period > 0:
            raise ValueError("period must be positive, got {0}".format(period))
        self.lam = None if lam is None else float(lam)
        self.delta_bar = float(delta_bar)
        self.delta_lower = float(delta_lower)
        self.period = float(period)

    def __repr__(self):
        return "<TriggerPolicy: {0}, {1}>".format(self.kind, self.strategy)

    @property
    def uses_trigger(self):
        return self.kind in (TriggerKind.continuous_etm, TriggerKind.hybrid_etm)

    def as_dict(self):
        return {"kind": str(self.kind), "lambda": self.lam, "delta_bar": self.delta_bar,
                "delta_lower": self.delta_lower, "period": self.period, "strategy": str(self.strategy)}


class SimLog:
    """
    Trajectory and event record of one run.

    Grid quantities are numpy arrays with one row per grid instant.  A run that stopped early
    (divergence or Zeno guard) holds only the rows up to the stop.
    """
    __slots__ = ["times", "states", "inputs", "lyapunov", "errors", "denied", "events",
                 "settled_at", "min_inter_event", "status", "step", "horizon", "policy", "model_name"]

    def __init__(self, times, states, inputs, lyapunov, errors, denied, events, settled_at=None,
                 min_inter_event=math.inf, status=RunStatus.completed, step=None, horizon=None,
                 policy=None, model_name=None):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float).reshape(len(self.times), -1)
        self.inputs = np.asarray(inputs, dtype=float).reshape(len(self.times), -1)
        self.lyapunov = np.asarray(lyapunov, dtype=float)
        self.errors = np.asarray(errors, dtype=float)
        self.denied = np.asarray(denied, dtype=bool)
        self.events = list(events)
        self.settled_at = settled_at
        self.min_inter_event = min_inter_event
        self.status = _as_item(RunStatus, status)
        self.step = step
        self.horizon = horizon
        self.policy = policy
        self.model_name = model_name

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return "<SimLog: {0} rows, {1} events, {2}>".format(len(self), len(self.events), self.status)

    @property
    def norms(self):
        return np.linalg.norm(self.states, axis=1)

    @property
    def n_events(self):
        return len(self.events)

    @property
    def n_transmissions(self):
        return sum(1 for event in self.events if event.transmitted)

    def event_rows(self):
        """
        Index of the first grid row at or after each event instant.
        """
        times = np.array([event.t for event in self.events], dtype=float)
        rows = np.searchsorted(self.times, times - EVENT_TOL, side="left")
        return np.minimum(rows, max(len(self.times) - 1, 0))


def _rk4(rhs, x, t, h):
    k1 = rhs(x, t)
    k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(x + h * k3, t + h)
    return x + (h / 6.) * (k1 + 2. * k2 + 2. * k3 + k4)


def integrate_step(model, x, u, t, h):
    """
    Advance the plant by one classical Runge-Kutta step with the input held constant.

    :param model: PlantModel
    :param x: State vector
    :param u: Input vector, held over the step
    :param t: Start time
    :param h: Step length, positive
    :return: State at t + h
    """
    if not h > 0:
        raise ValueError("Step length must be positive, got {0}".format(h))
    x = np.asarray(x, dtype=float)
    return _rk4(lambda y, s: model.dynamics(y, u, s), x, t, h)


def locate_trigger(condition, bracket, xtol=TRIGGER_XTOL):
    """
    Find the instant a trigger condition becomes positive.

    :param condition: Callable of time, positive once the event must fire
    :param bracket: (t_lo, t_hi) with condition(t_hi) > 0
    :param xtol: Absolute time tolerance
    :return: Crossing time, t_lo if the condition is already positive there
    """
    t_lo, t_hi = bracket
    if not t_hi > t_lo:
        raise ValueError("Empty bracket ({0}, {1})".format(t_lo, t_hi))
    f_lo = condition(t_lo)
    if f_lo > 0:
        return t_lo
    if not condition(t_hi) > 0:
        raise ValueError("Trigger condition does not change sign on ({0}, {1})".format(t_lo, t_hi))
    return optimize.bisect(condition, t_lo, t_hi, xtol=xtol)


class ClosedLoopRun:
    """
    Mutable state of a single closed-loop run.  Call run() once to obtain the SimLog.
    """
    def __init__(self, model, cert, policy, schedule, x0, horizon, h=DEFAULT_STEP,
                 divergence_bound=DIVERGENCE_BOUND):
        x0 = np.array(x0, dtype=float).reshape(-1)
        if x0.shape != (model.state_dim,):
            raise ValueError("Initial state has dimension {0}, plant {1} expects {2}".format(
                len(x0), model.name, model.state_dim))
        if not np.all(np.isfinite(x0)):
            raise ValueError("Initial state must be finite")
        if not horizon > 0 or not h > 0:
            raise ValueError("Horizon and step must be positive")
        if h > policy.delta_lower / 10. * (1. + 1e-9):
            raise ValueError("Step {0} exceeds delta_lower / 10 = {1}".format(h, policy.delta_lower / 10.))
        n_steps = int(round(horizon / h))
        if n_steps < 1 or abs(n_steps * h - horizon) > 1e-9 * horizon:
            raise ValueError("Horizon {0} is not a whole number of steps of {1}".format(horizon, h))
        if policy.uses_trigger and cert is None:
            raise ValueError("Event-triggered policies need a certificate")
        if cert is not None and np.linalg.norm(x0) > cert.domain_radius:
            raise ValueError("Initial state outside the certificate domain of radius {0}".format(cert.domain_radius))
        if schedule is None:
            schedule = DosSchedule.empty(horizon)
        if schedule.horizon < horizon:
            raise ValueError("DoS schedule ends at {0}, before the horizon {1}".format(schedule.horizon, horizon))

        self.model = model
        self.cert = cert
        self.policy = policy
        self.schedule = schedule
        self.horizon = float(horizon)
        self.h = float(h)
        self.divergence_bound = float(divergence_bound)
        self.times = np.linspace(0., self.horizon, n_steps + 1)

        if cert is not None:
            lam = cert.lam if policy.lam is None else policy.lam
            self._trigger_gain = cert.c * (1. - lam)

        self.x = x0
        self.u = np.zeros(model.input_dim)
        self.sample = None
        self.pending = None
        self.events = []
        self.min_gap = math.inf
        self.status = RunStatus.completed
        self.settled = False
        self.settled_at = None
        self.below_since = None
        self._period_index = 0

    @property
    def reference(self):
        return self.policy.kind == TriggerKind.continuous_feedback_reference

    def _rhs(self, x, t):
        if self.reference:
            return self.model.closed_loop(x, t)
        return self.model.dynamics(x, self.u, t)

    def _advance(self, seg, dt):
        if self.settled or dt <= 0:
            return self.x
        with np.errstate(over="ignore", invalid="ignore"):
            return _rk4(self._rhs, self.x, seg, dt)

    def _error_norm(self, x):
        if self.reference:
            return 0.
        if self.sample is None:
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(self.sample - x))

    def trigger_value(self, x):
        """
        Positive when an event must fire at state x.

        Errors below the settle threshold never fire, which stops events accumulating at the settling instant.
        """
        err = self._error_norm(x)
        v = max(self.cert.value(x), 0.)
        gap = float(self.cert.gamma(GAIN_FACTOR * err)) - self._trigger_gain * v ** self.cert.a
        return min(gap, err - SETTLE_EPSILON)

    def _localize(self, seg, t_end, x_end, g_end):
        if self.settled:
            slopes = np.zeros((2, self.model.state_dim))
        else:
            slopes = np.vstack((self._rhs(self.x, seg), self._rhs(x_end, t_end)))
        spline = interpolate.CubicHermiteSpline([seg, t_end], np.vstack((self.x, x_end)), slopes, axis=0)

        def condition(s):
            if s >= t_end:
                return g_end
            return self.trigger_value(spline(s))

        return locate_trigger(condition, (seg, t_end))

    def _diverged(self, x):
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > self.divergence_bound:
            self.status = RunStatus.diverged
            return True
        return False

    def _next_period(self):
        self._period_index += 1
        nxt = self._period_index * self.policy.period
        return nxt if nxt < self.horizon - EVENT_TOL else None

    def _event(self, t):
        """
        Attempt a transmission at t.

        :return: False if the Zeno guard stopped the run
        """
        if self.events:
            gap = t - self.events[-1].t
            if gap < ZENO_GUARD:
                logger.warning("Zeno guard: events at {0} and {1}".format(self.events[-1].t, t))
                self.status = RunStatus.zeno
                return False
            self.min_gap = min(self.min_gap, gap)

        denied = self.schedule.is_denied(t)
        self.events.append(Event(t, not denied, denied, self.x.copy()))
        if denied:
            self.u = held_input(self.model, self.policy.strategy, self.sample)
        else:
            self.sample = self.x.copy()
            self.u = self.model.feedback(self.sample)
        logger.debug("Event at {0}: {1}".format(t, "denied" if denied else "transmitted"))

        kind = self.policy.kind
        if kind == TriggerKind.time_triggered:
            self.pending = self._next_period()
        elif kind == TriggerKind.hybrid_etm and denied:
            nxt = t + self.policy.delta_bar
            self.pending = nxt if nxt < self.horizon - EVENT_TOL else None
        else:
            self.pending = None
        return True

    def _step(self, t0, t1):
        """
        Integrate from grid time t0 to t1, firing any events in between.

        :return: False if the run must stop
        """
        seg = t0
        while seg < t1:
            if self.pending is not None and self.pending <= t1 + EVENT_TOL:
                target = min(self.pending, t1)
                self.x = self._advance(seg, target - seg)
                seg = target
                if self._diverged(self.x) or not self._event(target):
                    return False
                continue

            x_end = self._advance(seg, t1 - seg)
            if self._diverged(x_end):
                self.x = x_end
                return False
            if self.policy.uses_trigger and self.pending is None:
                g_end = self.trigger_value(x_end)
            else:
                g_end = 0.
            if g_end > 0:
                t_event = self._localize(seg, t1, x_end, g_end)
                if t_event < self.horizon - EVENT_TOL:
                    self.x = self._advance(seg, t_event - seg)
                    seg = t_event
                    if not self._event(t_event):
                        return False
                    continue
            self.x = x_end
            seg = t1
        return True

    def _update_settled(self, t):
        if self.settled:
            return
        if np.linalg.norm(self.x) < SETTLE_EPSILON:
            if self.below_since is None:
                self.below_since = t
            if t - self.below_since >= self.policy.delta_bar - EVENT_TOL or np.all(self.x == 0):
                self.settled = True
                self.settled_at = t
                self.x = np.zeros_like(self.x)
                logger.debug("Settled at {0}".format(t))
        else:
            self.below_since = None

    def _row(self, i, states, inputs, lyapunov, errors):
        states[i] = self.x
        if self.reference:
            inputs[i] = self.model.feedback(self.x)
        else:
            inputs[i] = self.u
        lyapunov[i] = np.nan if self.cert is None else self.cert.value(self.x)
        errors[i] = self._error_norm(self.x)

    def run(self):
        """
        Execute the run.

        :return: SimLog
        """
        n_rows = len(self.times)
        states = np.zeros((n_rows, self.model.state_dim))
        inputs = np.zeros((n_rows, self.model.input_dim))
        lyapunov = np.zeros(n_rows)
        errors = np.zeros(n_rows)

        self._update_settled(0.)
        self._event(0.)
        self._row(0, states, inputs, lyapunov, errors)
        rows = 1

        for i in range(n_rows - 1):
            t1 = self.times[i + 1]
            if not self._step(self.times[i], t1):
                if self.status == RunStatus.diverged:
                    logger.warning("Run diverged at t={0}".format(t1))
                    if np.all(np.isfinite(self.x)):
                        self._row(rows, states, inputs, lyapunov, errors)
                        rows += 1
                break
            self._update_settled(t1)
            self._row(rows, states, inputs, lyapunov, errors)
            rows += 1

        times = self.times[:rows]
        log = SimLog(times, states[:rows], inputs[:rows], lyapunov[:rows], errors[:rows],
                     self.schedule.denied_mask(times), self.events, settled_at=self.settled_at,
                     min_inter_event=self.min_gap, status=self.status, step=self.h, horizon=self.horizon,
                     policy=self.policy, model_name=self.model.name)
        logger.info("Run finished: {0} events, {1} transmitted, status {2}, settled at {3}".format(
            log.n_events, log.n_transmissions, log.status, log.settled_at))
        return log


def simulate(model, cert, policy, schedule, x0, horizon, h=DEFAULT_STEP, divergence_bound=DIVERGENCE_BOUND):
    """
    Simulate the sampled-data closed loop under a trigger policy and DoS schedule.

    :param model: PlantModel
    :param cert: LyapunovCertificate, may be None for time-triggered and reference runs
    :param policy: TriggerPolicy
    :param schedule: DosSchedule, None for no attack
    :param x0: Initial state
    :param horizon: Simulated time, a whole number of steps
    :param h: Step length, at most delta_lower / 10
    :param divergence_bound: State norm above which the run is stopped as diverged
    :return: SimLog
    """
    return ClosedLoopRun(model, cert, policy, schedule, x0, horizon, h, divergence_bound).run()


def simulate_time_triggered(model, x0, period, horizon, h=DEFAULT_STEP, cert=None, schedule=None,
                            strategy=HoldStrategy.hold_last):
    """
    Simulate with a transmission attempt every period, starting at t = 0 and excluding t = horizon.

    :return: SimLog
    """
    if not period > 0:
        raise ValueError("period must be positive, got {0}".format(period))
    policy = TriggerPolicy(kind=TriggerKind.time_triggered, period=period,
                           delta_lower=max(10. * h, min(period, 0.01)), strategy=strategy)
    return simulate(model, cert, policy, schedule, x0, horizon, h)
