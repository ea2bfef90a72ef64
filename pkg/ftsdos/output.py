"""
Module containing writers and readers for run outputs: trajectory CSV, SVG figure and result document.

All files are written through ftsdos.util.atomic_write.
"""
import json
import logging
import math

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ftsdos.util import atomic_write, format_float
from ftsdos.engine import SimLog, Event, TriggerPolicy
from ftsdos.certificates import GAIN_FACTOR
from ftsdos.analysis import inter_event_intervals

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "ftsdos"


def csv_header(state_dim, input_dim):
    return (["t"] + ["x{0}".format(i + 1) for i in range(state_dim)] +
            ["u{0}".format(i + 1) for i in range(input_dim)] +
            ["V", "err_norm", "denied", "event", "transmitted"])


def write_csv(log, filename):
    """
    Write the grid trajectory of a run.

    Event flags are set on the first grid row at or after each event instant.

    :param log: SimLog
    :param filename: Output CSV file
    """
    n_rows = len(log)
    event_flag = np.zeros(n_rows, dtype=int)
    transmitted_flag = np.zeros(n_rows, dtype=int)
    if n_rows:
        for row, event in zip(log.event_rows(), log.events):
            event_flag[row] = 1
            if event.transmitted:
                transmitted_flag[row] = 1

    with atomic_write(filename) as f:
        print(",".join(csv_header(log.states.shape[1], log.inputs.shape[1])), file=f)
        for i in range(n_rows):
            vals = ([log.times[i]] + list(log.states[i]) + list(log.inputs[i]) +
                    [log.lyapunov[i], log.errors[i]])
            flags = [int(log.denied[i]), event_flag[i], transmitted_flag[i]]
            print(",".join([format_float(val) for val in vals] + [str(flag) for flag in flags]), file=f)


def read_csv(filename):
    """
    Read a trajectory CSV written by write_csv.

    :param filename: CSV file
    :return: Dictionary of numpy arrays keyed times, states, inputs, lyapunov, errors, denied, event, transmitted
    """
    with open(filename) as f:
        header = f.readline().strip().split(",")
        lines = [line for line in f if line.strip()]

    state_dim = sum(1 for col in header if col.startswith("x"))
    input_dim = sum(1 for col in header if col.startswith("u"))
    if header != csv_header(state_dim, input_dim):
        raise ValueError("Unexpected CSV header in {0}".format(filename))

    if lines:
        data = np.loadtxt(lines, delimiter=",", ndmin=2)
    else:
        data = np.zeros((0, len(header)))
    xs = slice(1, 1 + state_dim)
    us = slice(1 + state_dim, 1 + state_dim + input_dim)
    col = 1 + state_dim + input_dim
    return {
        "times": data[:, 0],
        "states": data[:, xs],
        "inputs": data[:, us],
        "lyapunov": data[:, col],
        "errors": data[:, col + 1],
        "denied": data[:, col + 2].astype(bool),
        "event": data[:, col + 3].astype(bool),
        "transmitted": data[:, col + 4].astype(bool),
    }


def event_to_dict(event):
    return {"t": event.t, "transmitted": bool(event.transmitted), "during_dos": bool(event.during_dos),
            "state": [float(x) for x in event.state]}


def event_from_dict(doc):
    return Event(float(doc["t"]), bool(doc["transmitted"]), bool(doc["during_dos"]),
                 np.array(doc["state"], dtype=float))


def _finite_or_none(val):
    if val is None or math.isinf(val) or math.isnan(val):
        return None
    return val


def log_summary(log):
    """
    JSON serialisable summary of a run: status, settling, events and policy.
    """
    return {
        "status": str(log.status),
        "settled_at": log.settled_at,
        "min_inter_event": _finite_or_none(log.min_inter_event),
        "n_events": log.n_events,
        "n_transmissions": log.n_transmissions,
        "step": log.step,
        "horizon": log.horizon,
        "model": log.model_name,
        "policy": None if log.policy is None else log.policy.as_dict(),
        "events": [event_to_dict(event) for event in log.events],
    }


def load_log(csv_name, result):
    """
    Rebuild a SimLog from a trajectory CSV and the matching result document.

    :param csv_name: CSV file written by write_csv
    :param result: Result document dictionary holding a "run" entry from log_summary
    :return: SimLog
    """
    data = read_csv(csv_name)
    run = result["run"]
    policy = None
    if run.get("policy") is not None:
        doc = run["policy"]
        policy = TriggerPolicy(kind=doc["kind"], lam=doc["lambda"], delta_bar=doc["delta_bar"],
                               delta_lower=doc["delta_lower"], period=doc["period"], strategy=doc["strategy"])
    min_gap = run.get("min_inter_event")
    return SimLog(data["times"], data["states"], data["inputs"], data["lyapunov"], data["errors"],
                  data["denied"], [event_from_dict(e) for e in run["events"]], settled_at=run.get("settled_at"),
                  min_inter_event=math.inf if min_gap is None else min_gap, status=run["status"],
                  step=run.get("step"), horizon=run.get("horizon"), policy=policy, model_name=run.get("model"))


def jsonable(obj):
    """
    Convert a result document to plain JSON types.

    Numpy scalars and arrays become Python numbers and lists, non-finite floats become None.
    """
    if isinstance(obj, dict):
        return {str(key): jsonable(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(val) for val in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _finite_or_none(float(obj))
    return obj


def write_result(doc, filename):
    """
    Write a result document as indented JSON with sorted keys.
    """
    with atomic_write(filename) as f:
        json.dump(jsonable(doc), f, indent=2, sort_keys=True, allow_nan=False)
        print(file=f)


def read_result(filename):
    with open(filename) as f:
        return json.load(f)


def write_svg(log, schedule, filename, cert=None, title=None):
    """
    Plot a run: state with events, error norm against the trigger threshold, and inter-event intervals.

    DoS intervals are shaded on every panel.

    :param log: SimLog
    :param schedule: DosSchedule the run was simulated with
    :param filename: Output SVG file
    :param cert: LyapunovCertificate, used for the trigger threshold curve
    :param title: Figure title
    """
    fig, (ax_state, ax_err, ax_gap) = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
    for ax in (ax_state, ax_err, ax_gap):
        for sigma, tau in schedule:
            ax.axvspan(sigma, sigma + tau, color="0.85", zorder=0, linewidth=0)
        ax.grid(True, linewidth=0.3)

    for i in range(log.states.shape[1]):
        ax_state.plot(log.times, log.states[:, i], linewidth=1, label="x{0}".format(i + 1))
    if log.events:
        sent = [e for e in log.events if e.transmitted]
        lost = [e for e in log.events if not e.transmitted]
        if sent:
            ax_state.plot([e.t for e in sent], [e.state[0] for e in sent], "o", markersize=3,
                          color="tab:green", label="transmitted")
        if lost:
            ax_state.plot([e.t for e in lost], [e.state[0] for e in lost], "x", markersize=4,
                          color="tab:red", label="denied")
    ax_state.set_ylabel("state")
    ax_state.legend(loc="upper right", fontsize="small")

    ax_err.plot(log.times, log.errors, linewidth=1, label="|e|")
    if cert is not None and len(log) and log.policy is not None and log.policy.uses_trigger:
        lam = cert.lam if log.policy.lam is None else log.policy.lam
        level = cert.c * (1. - lam) * np.power(np.maximum(log.lyapunov, 0.), cert.a)
        ax_err.plot(log.times, cert.gamma.inverse(level) / GAIN_FACTOR, "--", linewidth=0.8,
                    label="threshold")
    ax_err.set_ylabel("error norm")
    ax_err.legend(loc="upper right", fontsize="small")

    times, gaps = inter_event_intervals(log)
    if len(times):
        markers, stems, base = ax_gap.stem(times, gaps)
        plt.setp(markers, markersize=3)
        plt.setp(stems, linewidth=0.8)
        plt.setp(base, visible=False)
    ax_gap.set_ylabel("inter-event time")
    ax_gap.set_xlabel("t")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    with atomic_write(filename, "wb") as f:
        fig.savefig(f, format="svg", metadata={"Date": None})
    plt.close(fig)
