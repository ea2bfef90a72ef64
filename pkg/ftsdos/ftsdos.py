import os
import glob
import logging
import platform

from collections import OrderedDict
from multiprocessing import Pool

import numpy as np
import scipy
import matplotlib

import ftsdos
from ftsdos.config import ScenarioConfig, ConfigError, DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV
from ftsdos.engine import simulate, RunStatus, TriggerKind
from ftsdos.dos import characterize, check_assumptions
from ftsdos.certificates import (stability_margin, settling_bound, settling_bound_continuous,
                                 settling_bound_etm)
from ftsdos.analysis import (check_decay, check_growth, check_envelope, check_affected_measure,
                             settling_time, communication_summary)
from ftsdos.output import write_csv, write_svg, write_result, read_result, load_log, log_summary
from ftsdos.util import canonical_hash, atomic_write, format_float

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_BOUND = 4

CSV_NAME = "trajectory.csv"
SVG_NAME = "figure.svg"
RESULT_NAME = "result.json"
SWEEP_NAME = "sweep.csv"


def versions():
    return OrderedDict([("ftsdos", ftsdos.__version__), ("numpy", np.__version__), ("scipy", scipy.__version__),
                        ("matplotlib", matplotlib.__version__), ("python", platform.python_version())])


def output_root(root=None):
    if root is not None:
        return root
    return os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)


def margin_for(cert, policy, constraints):
    """
    Stability margin of a run, or None if it cannot be computed.

    The margin needs a certificate with mu and a duration parameter theta above one.
    """
    if cert is None or cert.mu is None:
        return None
    try:
        return stability_margin(cert, policy.delta_bar, constraints.theta, constraints.tau_d,
                                constraints.kappa, constraints.eta)
    except ValueError as e:
        logger.info("No stability margin: {0}".format(e))
        return None


def run_checks(checks, log, cert, schedule, policy, constraints, margin):
    """
    Run the requested bound checks that apply to the policy of a run.

    :param checks: Iterable of check names from the [outputs] section
    :return: OrderedDict of bound id to BoundReport
    """
    reports = OrderedDict()
    if cert is None:
        return reports
    hybrid = policy.kind == TriggerKind.hybrid_etm
    if "decay" in checks and policy.kind != TriggerKind.time_triggered:
        report = check_decay(log, cert)
        reports[report.bound_id] = report
    if "growth" in checks and hybrid:
        report = check_growth(log, cert, schedule)
        reports[report.bound_id] = report
    if "envelope" in checks and hybrid and margin is not None and margin.satisfied:
        report = check_envelope(log, cert, margin)
        reports[report.bound_id] = report
    if "measure" in checks and hybrid:
        report = check_affected_measure(log, schedule, policy.delta_bar, constraints)
        reports[report.bound_id] = report
    return reports


def exit_code(log, reports):
    if log.status != RunStatus.completed:
        return EXIT_DIVERGED
    if not all(report.passed for report in reports.values()):
        return EXIT_BOUND
    return EXIT_OK


def settling_bounds(cert, x0, margin):
    if cert is None:
        return None
    v0 = cert.value(x0)
    bounds = OrderedDict([("continuous", settling_bound_continuous(cert, v0)),
                          ("event_triggered", settling_bound_etm(cert, v0)),
                          ("dos", None)])
    if margin is not None and margin.satisfied:
        bounds["dos"] = settling_bound(cert, v0, margin)
    return bounds


def run_scenario(filename, root=None):
    """
    Run a scenario file and write its outputs.

    :param filename: Scenario file
    :param root: Output root directory, see ScenarioConfig.output_dir
    :return: (exit code, result document)
    """
    config = ScenarioConfig(filename)
    if config.is_sweep:
        return run_sweep(config, root)

    model, cert = config.build_plant()
    policy = config.build_policy()
    schedule = config.build_schedule()
    scenario = config.scenario
    logger.info("Scenario {0}: plant {1}, policy {2}, {3} DoS intervals".format(
        config.name, model.name, policy.kind, len(schedule)))

    log = simulate(model, cert, policy, schedule, config.x0, scenario.horizon, scenario.step,
                   scenario.divergence_bound)
    constraints = config.constraints(schedule)
    margin = margin_for(cert, policy, constraints)
    reports = run_checks(config.outputs.checks, log, cert, schedule, policy, constraints, margin)
    code = exit_code(log, reports)
    for report in reports.values():
        if not report.passed:
            logger.warning("Check {0} failed: {1}".format(report.bound_id, report.note or
                                                         "{0} violations".format(len(report.violations))))

    result = OrderedDict([
        ("scenario", config.name),
        ("config_file", os.path.basename(filename)),
        ("config_hash", config.config_hash()),
        ("schema_version", scenario.schema_version),
        ("exit_code", code),
        ("run", log_summary(log)),
        ("settling_time", settling_time(log, config.analysis.settle_epsilon)),
        ("settling_bounds", settling_bounds(cert, config.x0, margin)),
        ("margin", None if margin is None else margin.as_dict()),
        ("dos", OrderedDict([("source", config.dos_source), ("intervals", schedule.as_list()),
                             ("characterization", constraints.as_dict())])),
        ("communication", communication_summary(log, policy.period)),
        ("checks", OrderedDict((key, report.as_dict()) for key, report in reports.items())),
        ("metadata", dict(config.metadata(), versions=versions())),
    ])

    outdir = config.output_dir(output_root(root))
    write_outputs(config, outdir, log, schedule, cert, result)
    return code, result


def write_outputs(config, outdir, log, schedule, cert, result):
    os.makedirs(outdir, exist_ok=True)
    if os.path.exists(os.path.join(outdir, RESULT_NAME)):
        logger.info("Overwriting outputs in {0}".format(outdir))
    if config.outputs.csv:
        write_csv(log, os.path.join(outdir, CSV_NAME))
    if config.outputs.svg:
        write_svg(log, schedule, os.path.join(outdir, SVG_NAME), cert=cert, title=config.name)
    if config.outputs.report:
        write_result(result, os.path.join(outdir, RESULT_NAME))
    logger.info("Outputs written to {0}".format(outdir))


def run_sweep(config, root=None):
    """
    Run one periodic DoS schedule per duty cycle of the [sweep] section.

    Writes sweep.csv and a result document, and reports the largest duty cycle at which the run
    still settled next to the analytic threshold on the duration rate.

    :param config: ScenarioConfig with a [sweep] section
    :param root: Output root directory
    :return: (exit code, result document)
    """
    model, cert = config.build_plant()
    policy = config.build_policy()
    scenario = config.scenario
    analysis = config.analysis
    rows = []
    for duty in sorted(config.sweep.duty_cycles):
        schedule = config.build_schedule(duty=duty)
        log = simulate(model, cert, policy, schedule, config.x0, scenario.horizon, scenario.step,
                       scenario.divergence_bound)
        constraints = characterize(schedule, analysis.eta, analysis.kappa)
        margin = margin_for(cert, policy, constraints)
        rows.append(OrderedDict([
            ("duty_cycle", duty),
            ("status", str(log.status)),
            ("settled_at", log.settled_at),
            ("events", log.n_events),
            ("transmissions", log.n_transmissions),
            ("inv_theta", constraints.inv_theta),
            ("margin_satisfied", bool(margin is not None and margin.satisfied)),
        ]))
        logger.info("Duty cycle {0}: {1}, settled at {2}".format(duty, log.status, log.settled_at))

    settled = [row["duty_cycle"] for row in rows if row["status"] == "completed" and row["settled_at"] is not None]
    threshold = None
    if cert is not None and cert.mu is not None:
        threshold = cert.c * cert.lam / (cert.c + 2. * cert.mu)

    result = OrderedDict([
        ("scenario", config.name),
        ("config_file", os.path.basename(config.filename)),
        ("config_hash", config.config_hash()),
        ("schema_version", scenario.schema_version),
        ("exit_code", EXIT_OK),
        ("sweep", rows),
        ("largest_settling_duty", max(settled) if settled else None),
        ("threshold", threshold),
        ("metadata", dict(config.metadata(), versions=versions())),
    ])

    outdir = config.output_dir(output_root(root))
    os.makedirs(outdir, exist_ok=True)
    with atomic_write(os.path.join(outdir, SWEEP_NAME)) as f:
        print(",".join(rows[0].keys()) if rows else "duty_cycle", file=f)
        for row in rows:
            print(",".join(_cell(val) for val in row.values()), file=f)
    write_result(result, os.path.join(outdir, RESULT_NAME))
    return EXIT_OK, result


def _cell(val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return str(int(val))
    if isinstance(val, float):
        return format_float(val)
    val = str(val)
    if "," in val or '"' in val:
        return '"{0}"'.format(val.replace('"', '""'))
    return val


def _failed_row(filename, msg):
    logger.error(msg)
    return OrderedDict([("file", os.path.basename(filename)), ("scenario", ""), ("exit_code", EXIT_CONFIG),
                        ("status", ""), ("settled_at", None), ("events", None), ("error", msg)])


def _batch_worker(args):
    filename, root = args
    try:
        code, result = run_scenario(filename, root)
    except ConfigError as e:
        return _failed_row(filename, str(e))
    except (OSError, ValueError) as e:
        return _failed_row(filename, "{0}: {1}".format(filename, e))
    run = result.get("run", {})
    return OrderedDict([("file", os.path.basename(filename)), ("scenario", result["scenario"]), ("exit_code", code),
                        ("status", run.get("status", "sweep")), ("settled_at", run.get("settled_at")),
                        ("events", run.get("n_events")), ("error", "")])


def run_batch(directory, jobs=1, root=None, quiet=False):
    """
    Run every scenario file in a directory, optionally in parallel.

    Each scenario is run in isolation, so results do not depend on the number of jobs.

    :param directory: Directory containing *.cfg scenario files
    :param jobs: Number of worker processes
    :param root: Output root directory
    :param quiet: Hide the progress bar
    :return: (largest exit code, list of summary rows)
    """
    files = sorted(glob.glob(os.path.join(directory, "*.cfg")))
    if not files:
        raise ConfigError("no scenario files (*.cfg) found", directory)
    tasks = [(filename, root) for filename in files]
    logger.info("Running {0} scenarios with {1} jobs".format(len(files), jobs))

    if jobs > 1:
        with Pool(jobs) as pool:
            rows = pool.map(_batch_worker, tasks)
    else:
        iterator = tasks
        if not quiet:
            try:
                from tqdm import tqdm
                iterator = tqdm(tasks, ncols=80)
            except ImportError:
                pass
        rows = [_batch_worker(task) for task in iterator]

    names = [os.path.basename(f) for f in files]
    summary_dir = os.path.join(output_root(root), "batch-{0}".format(canonical_hash(names)[:16]))
    os.makedirs(summary_dir, exist_ok=True)
    with atomic_write(os.path.join(summary_dir, "summary.csv")) as f:
        print(",".join(rows[0].keys()), file=f)
        for row in rows:
            print(",".join(_cell(val) for val in row.values()), file=f)
    return max(row["exit_code"] for row in rows), rows


def characterize_scenario(filename):
    """
    Characterise the DoS schedule of a scenario.

    :return: Dictionary of counts, fitted rates and the verification result
    """
    config = ScenarioConfig(filename)
    schedule = config.build_schedule()
    horizon = schedule.horizon
    constraints = config.constraints(schedule)
    fitted = characterize(schedule, config.analysis.eta, config.analysis.kappa)
    report = check_assumptions(schedule, constraints)
    return OrderedDict([
        ("scenario", config.name),
        ("intervals", len(schedule)),
        ("transitions", schedule.count_transitions(horizon)),
        ("denied_time", schedule.total_denied(horizon)),
        ("duty_cycle", fitted.duty_cycle),
        ("eta", fitted.eta),
        ("kappa", fitted.kappa),
        ("inv_tau_d", fitted.inv_tau_d),
        ("inv_theta", fitted.inv_theta),
        ("constraints", constraints.as_dict()),
        ("assumptions_hold", report.passed),
    ])


def margin_scenario(filename):
    """
    Stability margin of a scenario's certificate and DoS schedule.

    :return: Dictionary with the margin fields and the settling bounds
    """
    config = ScenarioConfig(filename)
    _, cert = config.build_plant()
    if cert is None:
        raise ConfigError("plant '{0}' has no certificate".format(config.scenario.plant), filename)
    policy = config.build_policy()
    schedule = config.build_schedule()
    constraints = config.constraints(schedule)
    margin = margin_for(cert, policy, constraints)
    threshold = cert.omega1 / (cert.c + 2. * cert.require_mu())
    return OrderedDict([
        ("scenario", config.name),
        ("threshold", threshold),
        ("pressure", constraints.inv_theta + policy.delta_bar * constraints.inv_tau_d),
        ("margin", None if margin is None else margin.as_dict()),
        ("settling_bounds", settling_bounds(cert, config.x0, margin)),
    ])


def check_scenario(filename, root=None):
    """
    Re-run the bound checks on the stored outputs of a scenario without simulating.

    :return: (exit code, OrderedDict of bound id to BoundReport)
    """
    config = ScenarioConfig(filename)
    outdir = config.output_dir(output_root(root))
    csv_name = os.path.join(outdir, CSV_NAME)
    result_name = os.path.join(outdir, RESULT_NAME)
    if not os.path.exists(csv_name) or not os.path.exists(result_name):
        raise ConfigError("no stored run in {0}, run the scenario with csv and report outputs first".format(outdir),
                          filename)

    log = load_log(csv_name, read_result(result_name))
    _, cert = config.build_plant()
    policy = config.build_policy()
    schedule = config.build_schedule()
    constraints = config.constraints(schedule)
    margin = margin_for(cert, policy, constraints)
    reports = run_checks(config.outputs.checks, log, cert, schedule, policy, constraints, margin)
    return exit_code(log, reports), reports
