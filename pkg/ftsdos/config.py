"""
Module containing the scenario file schema.

A scenario file uses the section format of ftsdos.parsers.cfg.  Every section is validated against
a typed Options schema and the result resolves into the objects a run needs: plant, certificate,
trigger policy and DoS schedule.
"""
import os
import logging

import numpy as np

from ftsdos.interface import Options
from ftsdos.parsers.cfg import CFG, CFGError
from ftsdos.classk import ClassKForms
from ftsdos.plant import get_plant, HoldStrategy
from ftsdos.engine import TriggerPolicy, TriggerKind
from ftsdos.dos import (DosSchedule, DosCharacterization, ScheduleError, InfeasibleConstraintsError,
                        characterize, generate_random, periodic_schedule, PRNG_NAME)
from ftsdos.certificates import InvalidCertificateError
from ftsdos.util import canonical_hash

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "FTSDOS_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "ftsdos_out"

CHECKS = ("decay", "growth", "envelope", "measure")

SCHEMA = {
    "scenario": [
        ("schema_version", 0),
        ("name", ""),
        ("plant", "example"),
        ("x0", (0.,)),
        ("horizon", 5.),
        ("step", 1e-4),
        ("divergence_bound", 1e6),
    ],
    "certificate": [
        ("lambda", 0.5),
        ("mu", 0.),
        ("radius", 3.),
        ("alpha1", ("",)),
        ("alpha2", ("",)),
        ("gamma", ("",)),
    ],
    "policy": [
        ("kind", "hybrid_etm"),
        ("delta_bar", 0.1),
        ("delta_lower", 0.01),
        ("period", 0.02),
        ("strategy", "hold_last"),
    ],
    "dos_generator": [
        ("eta", 1.),
        ("tau_d", 10.),
        ("kappa", 0.),
        ("theta", 10.),
        ("seed", 0),
    ],
    "dos_periodic": [
        ("period", 1.),
        ("duty", 0.),
        ("offset", 0.),
    ],
    "analysis": [
        ("eta", 1.),
        ("kappa", 0.),
        ("settle_epsilon", 1e-3),
    ],
    "outputs": [
        ("csv", True),
        ("svg", True),
        ("report", True),
        ("checks", CHECKS),
    ],
    "sweep": [
        ("duty_cycles", (0.1,)),
        ("period", 0.5),
    ],
}

DOS_SOURCES = ("dos_intervals", "dos_generator", "dos_periodic")
REQUIRED = {"scenario": ("schema_version", "x0")}


class ConfigError(Exception):
    """
    Exception raised for any problem with a scenario file.

    Arguments are message, filename and line number.
    """
    def __str__(self):
        msg, filename, lineno = (self.args + (None, None))[:3]
        if lineno is None:
            return "{0}: {1}".format(filename, msg)
        return "{0}:{1}: {2}".format(filename, lineno, msg)

    def __repr__(self):
        return "ConfigError({0})".format(str(self))


class ScenarioConfig:
    """
    Validated contents of a scenario file.
    """
    __slots__ = ["filename", "options", "intervals", "dos_source", "_linenos"]

    def __init__(self, filename):
        """
        Read and validate a scenario file.

        :param filename: Path of the scenario file
        :raises ConfigError: on any syntax or schema problem
        """
        self.filename = filename
        self.options = {name: Options(default) for name, default in SCHEMA.items()}
        self.intervals = []
        self.dos_source = None
        self._linenos = {}

        try:
            cfg = CFG(filename)
        except CFGError as e:
            msg = "section [{0}] appears twice".format(e.section) if hasattr(e, "section") else e.args[0]
            raise ConfigError(msg, e.filename, e.lineno)
        except OSError as e:
            raise ConfigError("cannot read scenario file: {0}".format(e.strerror), filename)

        sources = []
        for section in cfg:
            if section.name == "dos_intervals":
                self._read_intervals(section)
            elif section.name in SCHEMA:
                self._read_section(section)
            else:
                raise ConfigError("unknown section [{0}]".format(section.name), section.filename, section.lineno)
            if section.name in DOS_SOURCES:
                sources.append(section)
            self._linenos[section.name] = (section.filename, section.lineno)

        for name, keys in REQUIRED.items():
            for key in keys:
                if (name, key) not in self._linenos:
                    raise ConfigError("missing required key '{0}' in [{1}]".format(key, name), filename)

        if self.scenario.schema_version != SCHEMA_VERSION:
            raise ConfigError("unsupported schema_version {0}, expected {1}".format(
                self.scenario.schema_version, SCHEMA_VERSION), *self._where("scenario", "schema_version"))

        if len(sources) > 1:
            raise ConfigError("more than one DoS source: {0}".format(
                ", ".join("[{0}]".format(s.name) for s in sources)), sources[1].filename, sources[1].lineno)
        if not sources and not self.is_sweep:
            raise ConfigError("no DoS source, add one of {0}".format(
                ", ".join("[{0}]".format(s) for s in DOS_SOURCES)), filename)
        self.dos_source = sources[0].name if sources else None
        if ("analysis", "kappa") not in self._linenos:
            self.options["analysis"].set("kappa", self.options["policy"].delta_bar)

        self._validate()
        if not self.options["scenario"].name:
            self.options["scenario"].set("name", os.path.splitext(os.path.basename(filename))[0])

    def _where(self, section, key=None):
        if key is not None and (section, key) in self._linenos:
            return self._linenos[(section, key)]
        return self._linenos.get(section, (self.filename, None))

    def _read_section(self, section):
        opts = self.options[section.name]
        for lineno, toks in section.numbered():
            key, values = toks[0], toks[1:]
            if (section.name, key) in self._linenos:
                raise ConfigError("key '{0}' given twice".format(key), section.filename, lineno)
            if key not in opts:
                raise ConfigError("unknown key '{0}' in [{1}]".format(key, section.name), section.filename, lineno)
            if not values:
                raise ConfigError("missing value for '{0}'".format(key), section.filename, lineno)
            if type(opts[key]) is not tuple and len(values) > 1:
                raise ConfigError("'{0}' takes a single value".format(key), section.filename, lineno)
            try:
                opts.set(key, values if type(opts[key]) is tuple else values[0])
            except ValueError as e:
                raise ConfigError("invalid value for '{0}': {1}".format(key, e), section.filename, lineno)
            self._linenos[(section.name, key)] = (section.filename, lineno)

    def _read_intervals(self, section):
        for lineno, toks in section.numbered():
            if len(toks) != 2:
                raise ConfigError("DoS interval lines take 'sigma tau'", section.filename, lineno)
            try:
                self.intervals.append((float(toks[0]), float(toks[1])))
            except ValueError:
                raise ConfigError("invalid DoS interval '{0}'".format(" ".join(toks)), section.filename, lineno)

    def _validate(self):
        scenario = self.scenario
        if not np.all(np.isfinite(scenario.x0)):
            raise ConfigError("x0 must be finite", *self._where("scenario", "x0"))
        for key in ("horizon", "step", "divergence_bound"):
            if not scenario[key] > 0:
                raise ConfigError("{0} must be positive".format(key), *self._where("scenario", key))
        for key in ("kind", "strategy"):
            enum = TriggerKind if key == "kind" else HoldStrategy
            try:
                enum.lookup(self.options["policy"][key])
            except KeyError as e:
                raise ConfigError("invalid policy {0}: {1}".format(key, e.args[0]), *self._where("policy", key))
        for check in self.options["outputs"].checks:
            if check not in CHECKS:
                raise ConfigError("unknown check '{0}', expected some of {1}".format(check, ", ".join(CHECKS)),
                                  *self._where("outputs", "checks"))
        if self.is_sweep:
            for duty in self.options["sweep"].duty_cycles:
                if not 0 <= duty < 1:
                    raise ConfigError("duty cycles must lie in [0, 1)", *self._where("sweep", "duty_cycles"))
        # Build everything once so that bad values are reported with their line
        _, cert = self.build_plant()
        policy = self.build_policy()
        if self.dos_source is not None:
            self.build_schedule()

        step, horizon = scenario.step, scenario.horizon
        if step > policy.delta_lower / 10. * (1. + 1e-9):
            raise ConfigError("step {0} exceeds delta_lower / 10".format(step), *self._where("scenario", "step"))
        n_steps = int(round(horizon / step))
        if n_steps < 1 or abs(n_steps * step - horizon) > 1e-9 * horizon:
            raise ConfigError("horizon is not a whole number of steps", *self._where("scenario", "horizon"))
        if cert is None and policy.uses_trigger:
            raise ConfigError("plant '{0}' has no certificate, event-triggered policies need one".format(
                scenario.plant), *self._where("policy", "kind"))
        if cert is not None and np.linalg.norm(self.x0) > cert.domain_radius:
            raise ConfigError("x0 lies outside the certificate domain of radius {0}".format(cert.domain_radius),
                              *self._where("scenario", "x0"))

    def __getattr__(self, item):
        if item == "options":
            raise AttributeError(item)
        try:
            return self.options[item]
        except KeyError:
            raise AttributeError(item)

    @property
    def name(self):
        return self.options["scenario"].name

    @property
    def is_sweep(self):
        return "sweep" in self._linenos

    @property
    def x0(self):
        return np.array(self.options["scenario"].x0, dtype=float)

    @property
    def seed(self):
        if self.dos_source == "dos_generator":
            return self.options["dos_generator"].seed
        return None

    def build_plant(self):
        """
        Build the plant and certificate, applying the [certificate] overrides.

        :return: (PlantModel, LyapunovCertificate or None)
        """
        cert_opts = self.options["certificate"]
        kwargs = {"lam": cert_opts["lambda"], "domain_radius": cert_opts.radius}
        if cert_opts.mu > 0:
            kwargs["mu"] = cert_opts.mu
        try:
            model, cert = get_plant(self.scenario.plant, dim=len(self.scenario.x0), **kwargs)
            if cert is not None:
                forms = ClassKForms()
                overrides = {}
                for key in ("alpha1", "alpha2", "gamma"):
                    toks = cert_opts[key]
                    if toks and toks[0]:
                        overrides[key] = forms.create(toks[0], *(float(tok) for tok in toks[1:]))
                if overrides:
                    cert = cert.replace(**overrides)
        except KeyError as e:
            raise ConfigError(e.args[0], *self._where("scenario", "plant"))
        except (ValueError, InvalidCertificateError) as e:
            raise ConfigError("invalid certificate: {0}".format(e), *self._where("certificate"))
        return model, cert

    def build_policy(self):
        opts = self.options["policy"]
        try:
            return TriggerPolicy(kind=opts.kind, lam=self.options["certificate"]["lambda"],
                                 delta_bar=opts.delta_bar, delta_lower=opts.delta_lower,
                                 period=opts.period, strategy=opts.strategy)
        except (ValueError, KeyError) as e:
            raise ConfigError("invalid policy: {0}".format(e), *self._where("policy"))

    def generator_constraints(self):
        opts = self.options["dos_generator"]
        try:
            return DosCharacterization.from_periods(opts.eta, opts.tau_d, opts.kappa, opts.theta)
        except ValueError as e:
            raise ConfigError("invalid DoS generator: {0}".format(e), *self._where("dos_generator"))

    def build_schedule(self, duty=None):
        """
        Build the DoS schedule of the scenario.

        :param duty: Duty cycle of a sweep point, replaces the configured DoS source
        :return: DosSchedule
        """
        horizon = self.scenario.horizon
        try:
            if duty is not None:
                return periodic_schedule(self.options["sweep"].period, duty, horizon)
            if self.dos_source == "dos_intervals":
                return DosSchedule(self.intervals, horizon)
            if self.dos_source == "dos_generator":
                return generate_random(self.generator_constraints(), horizon, self.seed)
            if self.dos_source == "dos_periodic":
                opts = self.options["dos_periodic"]
                return periodic_schedule(opts.period, opts.duty, horizon, opts.offset)
            return DosSchedule.empty(horizon)
        except (ScheduleError, InfeasibleConstraintsError, ValueError) as e:
            raise ConfigError("invalid DoS schedule: {0}".format(e), *self._where(self.dos_source or "sweep"))

    def constraints(self, schedule):
        """
        DoS parameters used for the stability margin and the affected measure check.

        Generated schedules use the generator's constraints, any other schedule is characterised
        with the [analysis] offsets.

        :param schedule: DosSchedule built from this scenario
        :return: DosCharacterization
        """
        if self.dos_source == "dos_generator":
            return self.generator_constraints()
        opts = self.options["analysis"]
        return characterize(schedule, opts.eta, opts.kappa)

    def canonical(self):
        """
        Resolved contents of the scenario as a JSON serialisable dictionary.
        """
        doc = {name: dict(opts.as_dict()) for name, opts in self.options.items()}
        doc["dos_intervals"] = [list(interval) for interval in self.intervals]
        doc["dos_source"] = self.dos_source
        for name, opts in doc.items():
            if isinstance(opts, dict):
                for key, val in opts.items():
                    if isinstance(val, tuple):
                        opts[key] = list(val)
                    elif isinstance(val, float) and not np.isfinite(val):
                        opts[key] = repr(val)
        return doc

    def config_hash(self):
        return canonical_hash(self.canonical())

    def output_dir(self, root=None):
        """
        Directory the outputs of this scenario are written to.

        :param root: Output root, defaults to $FTSDOS_OUTPUT_ROOT or ./ftsdos_out
        :return: Path named after the scenario and its configuration hash
        """
        if root is None:
            root = os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)
        return os.path.join(root, "{0}-{1}".format(self.name, self.config_hash()[:16]))

    def metadata(self):
        return {"seed": self.seed, "prng": PRNG_NAME if self.seed is not None else None,
                "step": self.scenario.step, "horizon": self.scenario.horizon}
