"""
Module containing ISS-Lyapunov certificates and the analytic quantities derived from them.

A certificate bundles the Lyapunov function V, its class-K sandwich bounds α₁ ≤ V ≤ α₂,
the input gain γ and the constants of the decrease condition
dV/dt ≤ -c V^a + γ(‖e‖) on a ball of radius domain_radius.
"""
import logging
import math

from collections import namedtuple

import numpy as np
from scipy import optimize

logger = logging.getLogger(__name__)

DEFAULT_GRID_DENSITY = 10000
DEFAULT_DIRECTIONS = 1000
SANDWICH_TOLERANCE = 1e-9
MAX_WITNESSES = 1000

# Factor applied to the state norm inside the gain condition γ(4‖x‖) ≤ μ α₁(‖x‖)^a
GAIN_FACTOR = 4.


class InvalidCertificateError(ValueError):
    """
    Exception raised when a certificate's construction invariants do not hold.
    """
    pass


class UnsatisfiedMarginError(ValueError):
    """
    Exception raised when a settling bound is requested for a margin with xi <= 0.
    """
    pass


class LyapunovCertificate:
    """
    Immutable ISS-Lyapunov certificate.

    V must accept an array of shape (..., n) and return an array of shape (...).
    """
    __slots__ = ["V", "alpha1", "alpha2", "gamma", "c", "a", "lam", "mu", "domain_radius", "state_dim"]

    def __init__(self, V, alpha1, alpha2, gamma, c, a, lam, mu, domain_radius, state_dim=1):
        """
        Create a certificate and validate its invariants.

        :param V: Lyapunov function, vectorised over the last axis
        :param alpha1: Lower class-K bound
        :param alpha2: Upper class-K bound
        :param gamma: Input gain class-K function
        :param c: Decay coefficient, positive
        :param a: Decay exponent in (0, 1)
        :param lam: Triggering parameter in (0, 1)
        :param mu: Gain condition constant, positive, or None if not yet known
        :param domain_radius: Radius of the ball on which the certificate holds
        :param state_dim: Dimension of the state vector
        """
        if not 0 < a < 1:
            raise InvalidCertificateError("Decay exponent a must lie in (0, 1), got {0}".format(a))
        if not c > 0:
            raise InvalidCertificateError("Decay coefficient c must be positive, got {0}".format(c))
        if not 0 < lam < 1:
            raise InvalidCertificateError("Triggering parameter lambda must lie in (0, 1), got {0}".format(lam))
        if mu is not None and not mu > 0:
            raise InvalidCertificateError("Gain constant mu must be positive, got {0}".format(mu))
        if not domain_radius > 0:
            raise InvalidCertificateError("Domain radius must be positive, got {0}".format(domain_radius))
        if int(state_dim) < 1:
            raise InvalidCertificateError("State dimension must be at least one")

        radii = np.linspace(0., domain_radius, 1001)
        try:
            lower, upper = alpha1(radii), alpha2(radii)
        except ValueError as e:
            raise InvalidCertificateError("Sandwich bounds not defined on the domain: {0}".format(e))
        if np.any(lower > upper + SANDWICH_TOLERANCE * np.maximum(1., np.abs(upper))):
            raise InvalidCertificateError("alpha1 exceeds alpha2 on the certificate domain")

        self.V = V
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.gamma = gamma
        self.c = float(c)
        self.a = float(a)
        self.lam = float(lam)
        self.mu = None if mu is None else float(mu)
        self.domain_radius = float(domain_radius)
        self.state_dim = int(state_dim)

    def __repr__(self):
        return "<LyapunovCertificate: c={0}, a={1}, lambda={2}, mu={3}, radius={4}>".format(
            self.c, self.a, self.lam, self.mu, self.domain_radius)

    def replace(self, **kwargs):
        """
        Return a copy of this certificate with some fields replaced.

        :param kwargs: Field values to replace
        :return: New LyapunovCertificate
        """
        fields = {key: getattr(self, key) for key in self.__slots__}
        for key in kwargs:
            if key not in fields:
                raise TypeError("LyapunovCertificate has no field '{0}'".format(key))
        fields.update(kwargs)
        return type(self)(**fields)

    def value(self, x):
        """
        Evaluate V at a single state.

        :param x: State vector
        :return: V(x) as float
        """
        return float(self.V(np.asarray(x, dtype=float)))

    def require_mu(self):
        if self.mu is None:
            raise InvalidCertificateError("Certificate has no gain constant mu, see min_mu")
        return self.mu

    @property
    def omega1(self):
        return self.c * self.lam

    @property
    def omega2(self):
        return self.c * (1. - self.lam) + 2. * self.require_mu()

    def describe(self):
        return {
            "c": self.c, "a": self.a, "lambda": self.lam, "mu": self.mu,
            "domain_radius": self.domain_radius, "state_dim": self.state_dim,
            "alpha1": self.alpha1.describe(), "alpha2": self.alpha2.describe(),
            "gamma": self.gamma.describe()
        }


CertificateViolation = namedtuple("CertificateViolation", ["kind", "point", "residual"])


class CertificateReport:
    """
    Result of a sampled verification of a certificate.

    Holds every failing sample up to MAX_WITNESSES per kind, sorted worst first, and the total counts.
    """
    __slots__ = ["violations", "counts", "samples", "seed"]

    KINDS = ("nonfinite", "zero", "positivity", "lower_bound", "upper_bound", "gain")

    def __init__(self, seed=None):
        self.violations = []
        self.counts = {kind: 0 for kind in self.KINDS}
        self.samples = 0
        self.seed = seed

    @property
    def accepted(self):
        return not any(self.counts.values())

    def add(self, kind, points, residuals):
        """
        Record failing samples of one kind.

        :param kind: One of CertificateReport.KINDS
        :param points: Array of failing sample points
        :param residuals: Array of positive residuals, same length as points
        """
        residuals = np.atleast_1d(residuals)
        if not len(residuals):
            return
        self.counts[kind] += len(residuals)
        stored = sum(1 for v in self.violations if v.kind == kind)
        room = MAX_WITNESSES - stored
        if room <= 0:
            return
        order = np.argsort(-residuals)[:room]
        for i in order:
            self.violations.append(CertificateViolation(kind, np.array(points[i], dtype=float, ndmin=1),
                                                        float(residuals[i])))
        self.violations.sort(key=lambda v: -v.residual)

    def worst(self, kind=None):
        """
        Return the violation with largest residual, optionally restricted to one kind.
        """
        for violation in self.violations:
            if kind is None or violation.kind == kind:
                return violation
        return None

    def __repr__(self):
        if self.accepted:
            return "<CertificateReport: accepted, {0} samples>".format(self.samples)
        return "<CertificateReport: rejected, {0}>".format(
            ", ".join("{0}={1}".format(k, v) for k, v in self.counts.items() if v))


def _directions(state_dim, n_directions, seed):
    if state_dim == 1:
        return np.array([[1.], [-1.]])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    dirs = rng.standard_normal((n_directions, state_dim))
    return dirs / np.linalg.norm(dirs, axis=1)[:, np.newaxis]


def _tol(vals):
    return SANDWICH_TOLERANCE * np.maximum(1., np.abs(vals))


def check_certificate(cert, grid_density=DEFAULT_GRID_DENSITY, n_directions=DEFAULT_DIRECTIONS, seed=0):
    """
    Verify a certificate's pointwise conditions on a sampled grid.

    Checks V is finite, V(0) = 0, V > 0 away from the origin, α₁(‖x‖) ≤ V(x) ≤ α₂(‖x‖) and
    γ(4r) ≤ μ α₁(r)^a on [0, domain_radius].  For state dimension above one the
    radial grid is repeated along n_directions random unit directions drawn from seed.

    :param cert: LyapunovCertificate with mu set
    :param grid_density: Number of radial samples
    :param n_directions: Number of random directions for multi-dimensional states
    :param seed: Seed of the direction sampler, recorded in the report
    :return: CertificateReport
    """
    if grid_density < 2:
        raise ValueError("Certificate check needs at least two radial samples, got {0}".format(grid_density))
    mu = cert.require_mu()
    report = CertificateReport(seed=seed if cert.state_dim > 1 else None)
    radii = np.linspace(0., cert.domain_radius, grid_density)
    positive = radii > 0

    origin = np.zeros(cert.state_dim)
    v_origin = float(cert.V(origin))
    if not math.isfinite(v_origin):
        report.add("nonfinite", [origin], [math.inf])
    elif v_origin != 0:
        report.add("zero", [origin], [abs(v_origin)])

    lower = cert.alpha1(radii)
    upper = cert.alpha2(radii)
    for direction in _directions(cert.state_dim, n_directions, seed):
        points = radii[:, np.newaxis] * direction[np.newaxis, :]
        vals = cert.V(points)
        report.samples += len(radii)

        nonfinite = ~np.isfinite(vals)
        report.add("nonfinite", points[nonfinite], np.full(np.count_nonzero(nonfinite), math.inf))

        nonpos = positive & (vals <= 0)
        report.add("positivity", points[nonpos], np.abs(vals[nonpos]) + SANDWICH_TOLERANCE)

        res = lower - vals
        bad = res > _tol(vals)
        report.add("lower_bound", points[bad], res[bad])

        res = vals - upper
        bad = res > _tol(upper)
        report.add("upper_bound", points[bad], res[bad])

    r = radii[positive]
    try:
        lhs = cert.gamma(GAIN_FACTOR * r)
    except ValueError as e:
        raise InvalidCertificateError("Gain function not defined on 4 x domain: {0}".format(e))
    rhs = mu * np.power(cert.alpha1(r), cert.a)
    res = lhs - rhs
    bad = res > _tol(rhs)
    report.add("gain", r[bad][:, np.newaxis] * np.ones(cert.state_dim) / math.sqrt(cert.state_dim), res[bad])

    if report.accepted:
        logger.info("Certificate accepted on {0} samples".format(report.samples))
    else:
        logger.warning("Certificate rejected: {0}".format(report))
    return report


def _gain_ratio(cert, r):
    denom = np.power(cert.alpha1(r), cert.a)
    if np.any(denom == 0):
        raise InvalidCertificateError("alpha1 vanishes at positive radius")
    return cert.gamma(GAIN_FACTOR * r) / denom


def min_mu(cert, domain_radius=None, grid_density=DEFAULT_GRID_DENSITY):
    """
    Smallest gain constant mu for which γ(4r) ≤ μ α₁(r)^a holds on (0, R].

    The supremum of the ratio is located on a uniform grid and then refined by a bounded
    golden-section search around the best grid point.

    :param cert: Certificate, its mu field is ignored
    :param domain_radius: Radius R, defaults to the certificate's domain radius
    :param grid_density: Number of grid samples
    :return: Supremum of γ(4r) / α₁(r)^a
    """
    radius = cert.domain_radius if domain_radius is None else float(domain_radius)
    if not radius > 0:
        raise ValueError("Domain radius must be positive")
    radii = np.linspace(radius / grid_density, radius, grid_density)
    ratios = _gain_ratio(cert, radii)
    if not np.all(np.isfinite(ratios)):
        raise InvalidCertificateError("Gain ratio is not finite on the domain")

    best = int(np.argmax(ratios))
    sup = float(ratios[best])
    lo = radii[max(best - 1, 0)]
    hi = radii[min(best + 1, len(radii) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda r: -float(_gain_ratio(cert, r)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-6 * hi})
        sup = max(sup, -float(res.fun))
    return sup


class StabilityMargin(namedtuple("StabilityMargin", ["omega1", "omega2", "xi", "rho", "threshold", "satisfied"])):
    """
    Decay and growth rates under DoS and the resulting sufficient stability condition.
    """
    __slots__ = ()

    def as_dict(self):
        return dict(self._asdict())


def _rate(period):
    return 0. if math.isinf(period) else 1. / period


def stability_margin(cert, delta_bar, theta, tau_d, kappa, eta):
    """
    Compute the DoS stability margin of a certificate.

    :param cert: LyapunovCertificate with mu set
    :param delta_bar: Retry interval after a denied transmission, positive
    :param theta: DoS duration parameter, greater than one, may be infinite
    :param tau_d: DoS dwell time parameter, positive, may be infinite
    :param kappa: DoS duration offset, non-negative
    :param eta: DoS frequency offset, non-negative
    :return: StabilityMargin
    """
    mu = cert.require_mu()
    if not delta_bar > 0:
        raise ValueError("delta_bar must be positive, got {0}".format(delta_bar))
    if not theta > 1:
        raise ValueError("theta must exceed one, got {0}".format(theta))
    if not tau_d > 0:
        raise ValueError("tau_d must be positive, got {0}".format(tau_d))
    if kappa < 0 or eta < 0:
        raise ValueError("kappa and eta must be non-negative")

    omega1 = cert.c * cert.lam
    omega2 = cert.c * (1. - cert.lam) + 2. * mu
    total = cert.c + 2. * mu
    pressure = _rate(theta) + delta_bar * _rate(tau_d)
    xi = omega1 - pressure * total
    rho = total * (kappa + delta_bar * eta)
    threshold = omega1 / total
    return StabilityMargin(omega1, omega2, xi, rho, threshold, xi > 0)


def settling_bound(cert, V0, margin):
    """
    Upper bound on the settling time under DoS.

    Solves the state envelope for zero: (V0^(1-a) + (1-a) rho) / ((1-a) xi).

    :param cert: LyapunovCertificate
    :param V0: Initial Lyapunov value, non-negative
    :param margin: StabilityMargin with xi > 0
    :return: Settling time bound
    """
    if not margin.xi > 0:
        raise UnsatisfiedMarginError("Settling bound requires xi > 0, got {0}".format(margin.xi))
    if V0 < 0:
        raise ValueError("V0 must be non-negative")
    b = 1. - cert.a
    return (V0 ** b + b * margin.rho) / (b * margin.xi)


def settling_bound_continuous(cert, V0):
    """
    Settling time bound under continuous feedback, V0^(1-a) / (c (1-a)).
    """
    b = 1. - cert.a
    return V0 ** b / (cert.c * b)


def settling_bound_etm(cert, V0):
    """
    Settling time bound of the event-triggered loop without DoS, V0^(1-a) / (c λ (1-a)).
    """
    b = 1. - cert.a
    return V0 ** b / (cert.c * cert.lam * b)


def state_envelope(cert, x0_norm, margin, t):
    """
    Upper bound on ‖x(t)‖ under DoS.

    α₁⁻¹( max(0, α₂(‖x₀‖)^(1-a) + (1-a)(ρ - ξ t))^(1/(1-a)) )

    :param cert: LyapunovCertificate
    :param x0_norm: Norm of the initial state
    :param margin: StabilityMargin
    :param t: Time or numpy array of times
    :return: Envelope with the shape of t
    """
    b = 1. - cert.a
    t = np.asarray(t, dtype=float)
    inner = float(cert.alpha2(x0_norm)) ** b + b * (margin.rho - margin.xi * t)
    inner = np.maximum(inner, 0.)
    env = cert.alpha1.inverse(np.power(inner, 1. / b))
    if np.ndim(env) == 0:
        return float(env)
    return env
