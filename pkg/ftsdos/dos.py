"""
Module containing DoS attack schedules, their frequency/duration characterisation and generators.

A schedule is an ordered list of non-overlapping half-open intervals [σ, σ+τ) inside [0, horizon).
The attack is constrained by

    n(t)   ≤ η + t/τ_D      (frequency: n(t) is the number of intervals started before t)
    |Ξ(t)| ≤ κ + t/θ        (duration: |Ξ(t)| is the denied time in [0, t))
"""
import bisect
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

VERIFY_POINTS = 10000
ASSUMPTION_TOLERANCE = 1e-9
MAX_REJECTIONS = 100000

PRNG_NAME = "PCG64"


class ScheduleError(ValueError):
    """
    Exception raised for malformed schedules or queries outside the schedule horizon.
    """
    pass


class InfeasibleConstraintsError(ValueError):
    """
    Exception raised when no schedule can satisfy the requested constraints.
    """
    pass


class DosSchedule:
    """
    Ordered, non-overlapping DoS intervals on [0, horizon).
    """
    __slots__ = ["intervals", "horizon", "_starts", "_ends"]

    def __init__(self, intervals, horizon):
        """
        Create a schedule.

        :param intervals: Iterable of (σ, τ) pairs in increasing order of σ
        :param horizon: End of the schedule
        """
        if not horizon > 0:
            raise ScheduleError("Schedule horizon must be positive, got {0}".format(horizon))
        intervals = tuple((float(sigma), float(tau)) for sigma, tau in intervals)
        prev_end = 0.
        for i, (sigma, tau) in enumerate(intervals):
            if sigma < 0 or not tau > 0:
                raise ScheduleError("Interval {0} ({1}, {2}) must have σ ≥ 0 and τ > 0".format(i, sigma, tau))
            if sigma < prev_end:
                raise ScheduleError("Interval {0} starting at {1} overlaps the previous interval".format(i, sigma))
            if sigma + tau > horizon * (1. + 1e-12):
                raise ScheduleError("Interval {0} ends at {1}, beyond horizon {2}".format(i, sigma + tau, horizon))
            prev_end = sigma + tau

        self.intervals = intervals
        self.horizon = float(horizon)
        self._starts = np.array([sigma for sigma, _ in intervals], dtype=float)
        self._ends = np.array([sigma + tau for sigma, tau in intervals], dtype=float)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __repr__(self):
        return "<DosSchedule: {0} intervals on [0, {1})>".format(len(self), self.horizon)

    def __eq__(self, other):
        return isinstance(other, DosSchedule) and self.intervals == other.intervals and self.horizon == other.horizon

    @classmethod
    def empty(cls, horizon):
        return cls([], horizon)

    def _check_time(self, t):
        if not 0 <= t <= self.horizon:
            raise ScheduleError("Time {0} outside schedule [0, {1}]".format(t, self.horizon))

    def is_denied(self, t):
        """
        Whether a transmission at time t is denied.

        :param t: Time in [0, horizon]
        :return: True if t lies in some [σ, σ+τ)
        """
        self._check_time(t)
        i = bisect.bisect_right(self._starts, t) - 1
        return i >= 0 and t < self._ends[i]

    def denied_mask(self, times):
        """
        Vectorised is_denied over an array of times.
        """
        times = np.asarray(times, dtype=float)
        idx = np.searchsorted(self._starts, times, side="right") - 1
        mask = idx >= 0
        mask[mask] = times[mask] < self._ends[idx[mask]]
        return mask

    def count_transitions(self, t):
        """
        Number of off-to-on transitions in [0, t), n(t).
        """
        self._check_time(t)
        return int(np.searchsorted(self._starts, t, side="left"))

    def total_denied(self, t):
        """
        Lebesgue measure of denied time in [0, t), |Ξ(t)|.
        """
        self._check_time(t)
        return float(np.sum(np.clip(np.minimum(self._ends, t) - self._starts, 0., None)))

    def denied_until(self, times):
        """
        Vectorised total_denied over an array of times.
        """
        times = np.asarray(times, dtype=float)
        overlap = np.minimum(self._ends[np.newaxis, :], times[:, np.newaxis]) - self._starts[np.newaxis, :]
        return np.sum(np.clip(overlap, 0., None), axis=1)

    def as_list(self):
        return [[sigma, tau] for sigma, tau in self.intervals]


def _rate(period):
    return 0. if math.isinf(period) else 1. / period


class DosCharacterization:
    """
    Frequency and duration parameters of a DoS schedule.

    Rates are stored as 1/τ_D and 1/θ, a rate of zero meaning no constraint is needed.
    """
    __slots__ = ["eta", "inv_tau_d", "kappa", "inv_theta", "duty_cycle"]

    def __init__(self, eta, inv_tau_d, kappa, inv_theta, duty_cycle=None):
        if eta < 0 or kappa < 0 or inv_tau_d < 0 or inv_theta < 0:
            raise ValueError("DoS characterisation parameters must be non-negative")
        self.eta = float(eta)
        self.inv_tau_d = float(inv_tau_d)
        self.kappa = float(kappa)
        self.inv_theta = float(inv_theta)
        self.duty_cycle = duty_cycle

    @classmethod
    def from_periods(cls, eta, tau_d, kappa, theta):
        """
        Build from dwell time τ_D and duration parameter θ, either of which may be infinite.
        """
        if not tau_d > 0 or not theta > 0:
            raise ValueError("tau_d and theta must be positive")
        return cls(eta, _rate(tau_d), kappa, _rate(theta))

    @property
    def tau_d(self):
        return math.inf if self.inv_tau_d == 0 else 1. / self.inv_tau_d

    @property
    def theta(self):
        return math.inf if self.inv_theta == 0 else 1. / self.inv_theta

    def as_dict(self):
        return {"eta": self.eta, "inv_tau_d": self.inv_tau_d, "kappa": self.kappa,
                "inv_theta": self.inv_theta, "duty_cycle": self.duty_cycle}

    def __repr__(self):
        return "<DosCharacterization: eta={0}, 1/tau_d={1}, kappa={2}, 1/theta={3}>".format(
            self.eta, self.inv_tau_d, self.kappa, self.inv_theta)


def characterize(schedule, eta, kappa):
    """
    Fit the smallest rates 1/τ_D and 1/θ for which the schedule satisfies both constraints.

    With the offsets η and κ fixed, the frequency constraint is tightest just after each σ
    and the duration constraint at the end of each interval.

    :param schedule: DosSchedule
    :param eta: Frequency offset η ≥ 0
    :param kappa: Duration offset κ ≥ 0
    :return: DosCharacterization
    """
    if eta < 0 or kappa < 0:
        raise ValueError("eta and kappa must be non-negative")

    inv_tau_d = 0.
    inv_theta = 0.
    denied = 0.
    for n, (sigma, tau) in enumerate(schedule, start=1):
        excess = n - eta
        if excess > 0:
            if sigma == 0:
                inv_tau_d = math.inf
            else:
                inv_tau_d = max(inv_tau_d, excess / sigma)

        end = sigma + tau
        denied += tau
        if denied - kappa > 0:
            inv_theta = max(inv_theta, (denied - kappa) / end)

    duty = schedule.total_denied(schedule.horizon) / schedule.horizon
    return DosCharacterization(eta, inv_tau_d, kappa, inv_theta, duty_cycle=duty)


class AssumptionReport:
    """
    Result of verifying a schedule against frequency and duration constraints.

    Each violation is (t, constraint, lhs, rhs) with constraint "frequency" or "duration".
    """
    __slots__ = ["violations", "points_checked"]

    def __init__(self):
        self.violations = []
        self.points_checked = 0

    @property
    def passed(self):
        return not self.violations

    def worst(self, constraint=None):
        candidates = [v for v in self.violations if constraint is None or v[1] == constraint]
        if not candidates:
            return None
        return max(candidates, key=lambda v: v[2] - v[3])

    def __repr__(self):
        return "<AssumptionReport: {0}, {1} violations in {2} points>".format(
            "passed" if self.passed else "failed", len(self.violations), self.points_checked)


def check_assumptions(schedule, constraints, n_points=VERIFY_POINTS):
    """
    Verify the frequency and duration constraints on a dense grid plus every interval endpoint.

    The counting function jumps at each σ, so σ is also evaluated as a right limit.

    :param schedule: DosSchedule
    :param constraints: DosCharacterization holding η, 1/τ_D, κ, 1/θ
    :param n_points: Number of uniform grid points
    :return: AssumptionReport
    """
    report = AssumptionReport()
    grid = np.linspace(0., schedule.horizon, n_points)
    times = np.unique(np.concatenate((grid, schedule._starts, np.minimum(schedule._ends, schedule.horizon))))

    counts = np.searchsorted(schedule._starts, times, side="left").astype(float)
    rhs = constraints.eta + times * constraints.inv_tau_d
    # Right limits just after each start
    counts = np.concatenate((counts, np.arange(1, len(schedule) + 1, dtype=float)))
    rhs = np.concatenate((rhs, constraints.eta + schedule._starts * constraints.inv_tau_d))
    where = np.concatenate((times, schedule._starts))
    for i in np.nonzero(counts > rhs + ASSUMPTION_TOLERANCE)[0]:
        report.violations.append((float(where[i]), "frequency", float(counts[i]), float(rhs[i])))

    denied = schedule.denied_until(times)
    rhs = constraints.kappa + times * constraints.inv_theta
    for i in np.nonzero(denied > rhs + ASSUMPTION_TOLERANCE)[0]:
        report.violations.append((float(times[i]), "duration", float(denied[i]), float(rhs[i])))

    report.violations.sort()
    report.points_checked = len(where) + len(times)
    return report


def make_rng(seed):
    """
    Create the generator used for all randomised schedules.

    :param seed: Integer seed or numpy SeedSequence
    :return: numpy Generator backed by PCG64
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def generate_random(constraints, horizon, seed):
    """
    Draw a random schedule that satisfies the given constraints.

    Intervals are placed left to right.  Each proposal draws an off time and a duration
    uniformly with means matched to the constraint envelope; a proposal that would break a
    constraint is rejected and its off time is skipped.  Since the constraint left hand sides are
    piecewise linear, checking the new interval's start and end is exact.

    :param constraints: DosCharacterization holding η, 1/τ_D, κ, 1/θ
    :param horizon: Schedule horizon
    :param seed: Integer seed or numpy SeedSequence
    :return: DosSchedule
    """
    if not horizon > 0:
        raise ValueError("Horizon must be positive")
    if not math.isfinite(constraints.inv_tau_d):
        raise ValueError("Frequency rate 1/tau_d must be finite")
    if constraints.inv_theta >= 1:
        raise InfeasibleConstraintsError("Duration rate 1/theta = {0} leaves no time for transmission".format(
            constraints.inv_theta))
    if constraints.kappa == 0 and constraints.inv_theta == 0:
        return DosSchedule.empty(horizon)
    if constraints.eta < 1 and constraints.inv_tau_d == 0:
        return DosSchedule.empty(horizon)

    rng = make_rng(seed)
    expected_count = max(1., constraints.eta + horizon * constraints.inv_tau_d)
    cycle = horizon / expected_count
    duty = min(constraints.inv_theta + constraints.kappa / horizon, 0.99)
    max_off = 2. * cycle * (1. - duty)
    max_on = 2. * cycle * duty

    intervals = []
    denied = 0.
    frontier = 0.
    rejections = 0
    while frontier < horizon:
        sigma = frontier + rng.uniform(0., max_off)
        tau = rng.uniform(0., max_on)
        if sigma >= horizon:
            break
        tau = min(tau, horizon - sigma)
        if not tau > 0:
            frontier = sigma
            continue

        count = len(intervals) + 1
        end = sigma + tau
        if (count <= constraints.eta + sigma * constraints.inv_tau_d and
                denied + tau <= constraints.kappa + end * constraints.inv_theta):
            intervals.append((sigma, tau))
            denied += tau
            frontier = end
        else:
            rejections += 1
            if rejections >= MAX_REJECTIONS:
                raise InfeasibleConstraintsError("No admissible interval after {0} proposals".format(rejections))
            frontier = sigma

    schedule = DosSchedule(intervals, horizon)
    logger.debug("Generated {0} DoS intervals with {1} rejections".format(len(schedule), rejections))
    return schedule


def periodic_schedule(period, duty, horizon, offset=0.):
    """
    Periodic attack active for duty * period at the start of each period.

    :param period: Attack period, positive
    :param duty: Fraction of each period under attack, in [0, 1)
    :param horizon: Schedule horizon
    :param offset: Start of the first period
    :return: DosSchedule
    """
    if not period > 0:
        raise ValueError("Period must be positive")
    if not 0 <= duty < 1:
        raise ValueError("Duty cycle must lie in [0, 1), got {0}".format(duty))
    if offset < 0:
        raise ValueError("Offset must be non-negative")

    intervals = []
    if duty > 0:
        k = 0
        while True:
            sigma = offset + k * period
            if sigma >= horizon:
                break
            tau = min(duty * period, horizon - sigma)
            if tau > 0:
                intervals.append((sigma, tau))
            k += 1
    return DosSchedule(intervals, horizon)
