"""
Module containing checks of simulated trajectories against the analytic bounds.

Each check returns a BoundReport.  Checks never modify the SimLog they are given.

* decay    - on each inter-event interval that starts with a successful transmission and sees no DoS,
             V^(1-a)(t) ≤ V^(1-a)(t_k) - (1-a) cλ (t - t_k)
* growth   - from the first denied transmission attempt to the next successful one (hold-last input),
             V^(1-a)(t) ≤ V^(1-a)(t_s) + (1-a) ω₂ (t - t_s)
* envelope - ‖x(t)‖ stays below the state envelope implied by the stability margin
* measure  - the time affected by DoS, including the wait for the next successful transmission,
             stays below κ + t/θ + Δ̄(η + t/τ_D)
"""
import logging
import math

from collections import namedtuple

import numpy as np

from ftsdos.util import sliding, tolerance
from ftsdos.certificates import state_envelope
from ftsdos.engine import SETTLE_EPSILON, TriggerKind, RunStatus
from ftsdos.plant import HoldStrategy

logger = logging.getLogger(__name__)

DECAY = "etm-decay"
GROWTH = "dos-growth"
ENVELOPE = "dos-envelope"
MEASURE = "dos-measure"

ENVELOPE_TOLERANCE = 1e-6

BoundViolation = namedtuple("BoundViolation", ["t", "lhs", "rhs", "residual"])


class BoundReport:
    """
    Outcome of checking one bound along a trajectory.

    A report passes when it has no violations and the bound's preconditions hold for the run.
    """
    __slots__ = ["bound_id", "violations", "max_residual", "intervals_checked", "points_checked",
                 "points_skipped", "preconditions_met", "note"]

    def __init__(self, bound_id):
        self.bound_id = bound_id
        self.violations = []
        self.max_residual = -math.inf
        self.intervals_checked = 0
        self.points_checked = 0
        self.points_skipped = 0
        self.preconditions_met = True
        self.note = ""

    @property
    def passed(self):
        return self.preconditions_met and not self.violations

    def __repr__(self):
        return "<BoundReport {0}: {1}, {2} violations over {3} intervals>".format(
            self.bound_id, "passed" if self.passed else "failed", len(self.violations), self.intervals_checked)

    def compare(self, times, lhs, rhs, tol, mask=None):
        """
        Record every point where lhs exceeds rhs by more than tol.

        :param times: Times of the points
        :param lhs: Left hand side values
        :param rhs: Right hand side values
        :param tol: Tolerance, scalar or array
        :param mask: Optional boolean array of points to include, excluded points count as skipped
        """
        residual = lhs - rhs
        if mask is None:
            mask = np.ones(len(times), dtype=bool)
        self.points_skipped += int(np.count_nonzero(~mask))
        self.points_checked += int(np.count_nonzero(mask))
        if np.any(mask):
            self.max_residual = max(self.max_residual, float(np.max(residual[mask])))
        bad = mask & (residual > tol)
        for i in np.nonzero(bad)[0]:
            self.violations.append(BoundViolation(float(times[i]), float(lhs[i]), float(rhs[i]), float(residual[i])))

    def as_dict(self):
        return {
            "bound_id": self.bound_id,
            "passed": self.passed,
            "violations": [list(v) for v in self.violations],
            "max_residual": None if math.isinf(self.max_residual) else self.max_residual,
            "intervals_checked": self.intervals_checked,
            "points_checked": self.points_checked,
            "points_skipped": self.points_skipped,
            "preconditions_met": self.preconditions_met,
            "note": self.note,
        }


def _rows(log, t_start, t_end):
    lo = int(np.searchsorted(log.times, t_start, side="left"))
    hi = int(np.searchsorted(log.times, t_end, side="right"))
    return lo, hi


def _lam(log, cert):
    if log.policy is not None and log.policy.lam is not None:
        return log.policy.lam
    return cert.lam


def _strategy(log):
    return HoldStrategy.hold_last if log.policy is None else log.policy.strategy


def check_decay(log, cert, settle_epsilon=SETTLE_EPSILON):
    """
    Check the per-interval finite-time decay of V between events.

    Only intervals that start with a successful transmission and contain no denied grid instant
    are checked.  Points inside the numerical equilibrium band ‖x‖ ≤ settle_epsilon are skipped.

    :param log: SimLog
    :param cert: LyapunovCertificate
    :param settle_epsilon: Radius of the equilibrium band
    :return: BoundReport
    """
    report = BoundReport(DECAY)
    if log.policy is not None and log.policy.kind == TriggerKind.time_triggered:
        report.note = "not applicable to time-triggered sampling"
        return report
    if not log.events or not len(log):
        return report

    b = 1. - cert.a
    rate = b * cert.c * _lam(log, cert)
    norms = log.norms
    for _, event, nxt in sliding(log.events):
        if not event.transmitted:
            continue
        t_end = nxt.t if nxt is not None else log.times[-1]
        lo, hi = _rows(log, event.t, t_end)
        if hi <= lo or np.any(log.denied[lo:hi]):
            continue
        report.intervals_checked += 1
        times = log.times[lo:hi]
        lhs = np.power(np.maximum(log.lyapunov[lo:hi], 0.), b)
        rhs = cert.value(event.state) ** b - rate * (times - event.t)
        report.compare(times, lhs, rhs, tolerance(rhs), mask=norms[lo:hi] > settle_epsilon)

    if not report.passed:
        logger.warning("Decay bound violated at {0} points".format(len(report.violations)))
    return report


def check_growth(log, cert, schedule):
    """
    Check the growth bound of V while transmissions are denied and the last input is held.

    Each checked interval runs from the first denied attempt after a successful transmission to
    the next successful transmission.  Points outside the certificate domain are skipped.

    :param log: SimLog
    :param cert: LyapunovCertificate with mu set
    :param schedule: DosSchedule the run was simulated with
    :return: BoundReport
    """
    report = BoundReport(GROWTH)
    if _strategy(log) != HoldStrategy.hold_last:
        report.note = "growth bound assumes the hold-last strategy"
        return report
    if not len(schedule) or not len(log):
        return report

    b = 1. - cert.a
    rate = b * cert.omega2
    norms = log.norms
    events = log.events
    for i, event in enumerate(events):
        if not event.during_dos or event.t > schedule.horizon or not schedule.is_denied(event.t):
            continue
        if i > 0 and events[i - 1].during_dos:
            continue
        t_end = next((e.t for e in events[i + 1:] if e.transmitted), log.times[-1])
        lo, hi = _rows(log, event.t, t_end)
        if hi <= lo:
            continue
        report.intervals_checked += 1
        times = log.times[lo:hi]
        lhs = np.power(np.maximum(log.lyapunov[lo:hi], 0.), b)
        rhs = cert.value(event.state) ** b + rate * (times - event.t)
        report.compare(times, lhs, rhs, tolerance(rhs), mask=norms[lo:hi] <= cert.domain_radius)

    if not report.passed:
        logger.warning("Growth bound violated at {0} points".format(len(report.violations)))
    return report


def check_envelope(log, cert, margin):
    """
    Check the state norm against the envelope implied by a satisfied stability margin.

    The envelope assumes the hold-last strategy, a report for any other strategy fails
    with a note saying the preconditions are unmet.

    :param log: SimLog
    :param cert: LyapunovCertificate
    :param margin: StabilityMargin with satisfied set
    :return: BoundReport
    """
    if not margin.satisfied:
        raise ValueError("State envelope requires a satisfied stability margin")
    report = BoundReport(ENVELOPE)
    if not len(log):
        return report
    if _strategy(log) != HoldStrategy.hold_last:
        report.preconditions_met = False
        report.note = "preconditions unmet: envelope assumes the hold-last strategy, run used {0}".format(
            _strategy(log))

    norms = log.norms
    envelope = state_envelope(cert, norms[0], margin, log.times)
    report.intervals_checked = 1
    report.compare(log.times, norms, envelope, ENVELOPE_TOLERANCE)
    if log.status == RunStatus.diverged:
        report.preconditions_met = False
        report.note = (report.note + "; " if report.note else "") + "run diverged"
    return report


def _affected_spans(log, schedule, t):
    successes = np.array([e.t for e in log.events if e.transmitted], dtype=float)
    denied = np.array([e.t for e in log.events if e.during_dos], dtype=float)
    spans = []
    for sigma, tau in schedule:
        if sigma >= t:
            break
        end = sigma + tau
        attempts = denied[(denied >= sigma) & (denied < end)]
        if len(attempts):
            j = int(np.searchsorted(successes, end, side="left"))
            end = successes[j] if j < len(successes) else math.inf
        spans.append((sigma, min(end, t)))
    return spans


def _merged_length(spans):
    total = 0.
    cur_start, cur_end = None, None
    for start, end in spans:
        if cur_end is None or start > cur_end:
            if cur_end is not None:
                total += cur_end - cur_start
            cur_start, cur_end = start, end
        else:
            cur_end = max(cur_end, end)
    if cur_end is not None:
        total += cur_end - cur_start
    return total


def affected_measure(log, schedule, delta_bar, constraints, t):
    """
    Measure of the DoS-affected time in [0, t) and its analytic bound.

    A DoS interval that denied at least one transmission attempt is extended to the next successful
    transmission; an interval that denied nothing contributes only its own length.

    :param log: SimLog
    :param schedule: DosSchedule
    :param delta_bar: Retry interval Δ̄
    :param constraints: DosCharacterization holding η, 1/τ_D, κ, 1/θ
    :param t: Time at which to measure
    :return: (measured, bound)
    """
    measured = _merged_length(_affected_spans(log, schedule, t))
    bound = (constraints.kappa + t * constraints.inv_theta +
             delta_bar * (constraints.eta + t * constraints.inv_tau_d))
    return measured, bound


def check_affected_measure(log, schedule, delta_bar, constraints):
    """
    Check affected_measure against its bound at the end of every affected span and at the end of the log.

    :return: BoundReport
    """
    report = BoundReport(MEASURE)
    if not len(log):
        return report
    t_final = float(log.times[-1])
    checkpoints = sorted({end for _, end in _affected_spans(log, schedule, t_final) if 0 < end <= t_final} |
                         {t_final})
    measured, bound = zip(*(affected_measure(log, schedule, delta_bar, constraints, t) for t in checkpoints))
    report.intervals_checked = len(schedule)
    measured, bound = np.array(measured), np.array(bound)
    report.compare(np.array(checkpoints), measured, bound, tolerance(bound))
    return report


def settling_time(log, epsilon):
    """
    First instant after which ‖x‖ < epsilon through the end of the log.

    :param log: SimLog
    :param epsilon: Threshold, positive
    :return: Settling time, or None if the run never settles or diverged
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if log.status == RunStatus.diverged or not len(log):
        return None
    above = np.nonzero(log.norms >= epsilon)[0]
    if not len(above):
        return float(log.times[0])
    last = above[-1]
    if last == len(log) - 1:
        return None
    return float(log.times[last + 1])


def inter_event_intervals(log):
    """
    Time between consecutive events.

    :param log: SimLog
    :return: (event times from the second event on, intervals to the previous event)
    """
    times = np.array([e.t for e in log.events], dtype=float)
    return times[1:], np.diff(times)


def communication_summary(log, period):
    """
    Compare the number of transmissions of a run with periodic sampling at the same horizon.

    :param log: SimLog
    :param period: Sampling period of the periodic reference
    :return: Dictionary of counts and the fraction of periodic transmissions used
    """
    horizon = log.horizon if log.horizon is not None else float(log.times[-1])
    periodic = int(math.ceil(horizon / period - 1e-9))
    return {
        "events": log.n_events,
        "transmissions": log.n_transmissions,
        "denied": log.n_events - log.n_transmissions,
        "periodic_transmissions": periodic,
        "fraction_of_periodic": log.n_transmissions / periodic,
    }
