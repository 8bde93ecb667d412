"""Experiment campaigns: random networks, method comparison and CSV emission.

A campaign is driven by a JSON config whose keys carry their units. Every
trial derives its own seed from the master seed and the trial index, so a
single trial can be reproduced in isolation and the CSV outputs do not
depend on the worker count.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, maxmin, mcoracle
from .closedform import se, sinr_all
from .netgen import SystemConfig, dbm_to_watt, generate_network
from .pilot import from_assignment

log = logging.getLogger(__name__)

METHODS = ("random", "smart", "brute", "proposed")

DEFAULTS = {
    # system
    "cells": 4,
    "users_per_cell": 2,
    "pilot_length": None,  # None means equal to users_per_cell
    "antennas": 300,
    "coherence_symbols": 200,
    "noise_dbm": -96.0,
    "bandwidth_mhz": 20.0,  # documents the noise figure only; SE is per Hz
    "pilot_max_mw": 200.0,
    "data_power_mw": 200.0,
    "baseline_pilot_mw": 200.0,
    "area_side_km": 1.0,
    "min_distance_km": 0.035,
    "shadow_std_db": 7.0,
    # campaign
    "trials": 200,
    "seed": 2016,
    "methods": list(METHODS),
    "workers": 1,
    "sweep": None,  # {"key": "users_per_cell", "values": [2, 4, 6]}
    # proposed method
    "random_starts": 5,
    "warm_start_smart": True,
    "max_iters": maxmin.MAX_ITERS,
    "stop_tol": maxmin.STOP_TOL,
    # oracle check
    "verify_networks": 5,
    "verify_allocations": 3,
    "verify_samples": mcoracle.DEFAULT_SAMPLES,
    "verify_tolerance": 0.01,
    "verify_cells": "all",  # "all" or "rotate" (one BS per allocation)
}

SWEEPABLE = ("users_per_cell", "antennas", "pilot_length", "cells")


class ConfigError(ValueError):
    """Invalid campaign configuration; the message names the offending key."""


def load_config(source=None, **overrides) -> dict:
    """Merge a JSON file (or dict) and keyword overrides onto :data:`DEFAULTS`.

    Unknown keys raise :class:`ConfigError` immediately.
    """
    if source is None:
        raw = {}
    elif isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {source} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    for key in raw:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
    conf = copy.deepcopy(DEFAULTS)
    conf.update(raw)
    _check(conf)
    return conf


def _check(conf: dict) -> None:
    def positive_int(key):
        v = conf[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{key} must be a positive integer, got {v!r}")

    for key in ("cells", "users_per_cell", "antennas", "coherence_symbols", "trials", "workers", "max_iters",
                "verify_networks", "verify_allocations"):
        positive_int(key)
    if conf["pilot_length"] is not None:
        positive_int("pilot_length")
    if not isinstance(conf["seed"], int) or conf["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if not isinstance(conf["random_starts"], int) or conf["random_starts"] < 0:
        raise ConfigError("random_starts must be a nonnegative integer")
    methods = conf["methods"]
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
        conf["methods"] = methods
    if not methods or any(m not in METHODS for m in methods):
        raise ConfigError(f"methods must be a nonempty subset of {list(METHODS)}, got {methods!r}")
    if conf["random_starts"] == 0 and not conf["warm_start_smart"] and "proposed" in methods:
        raise ConfigError("random_starts is 0 and warm_start_smart is off: the proposed method has no start")
    if conf["verify_cells"] not in ("all", "rotate"):
        raise ConfigError("verify_cells must be 'all' or 'rotate'")
    for key in ("pilot_max_mw", "data_power_mw", "baseline_pilot_mw", "area_side_km", "stop_tol",
                "verify_tolerance"):
        if not conf[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if conf["verify_samples"] < mcoracle.MIN_SAMPLES:
        raise ConfigError(f"verify_samples must be at least {mcoracle.MIN_SAMPLES}")
    sweep = conf["sweep"]
    if sweep is not None:
        if not isinstance(sweep, dict) or set(sweep) != {"key", "values"}:
            raise ConfigError("sweep must be an object with exactly 'key' and 'values'")
        if sweep["key"] not in SWEEPABLE:
            raise ConfigError(f"sweep key must be one of {list(SWEEPABLE)}, got {sweep['key']!r}")
        if not sweep["values"]:
            raise ConfigError("sweep values must be a nonempty list")
    tau_p = conf["pilot_length"] or conf["users_per_cell"]
    if tau_p >= conf["coherence_symbols"]:
        raise ConfigError(
            f"pilot_length {tau_p} leaves no data symbols in a coherence block of {conf['coherence_symbols']}"
        )
    if conf["baseline_pilot_mw"] > tau_p * conf["pilot_max_mw"]:
        raise ConfigError("baseline_pilot_mw exceeds the pilot budget pilot_length * pilot_max_mw")
    try:
        system_config(conf)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def system_config(conf: dict) -> SystemConfig:
    K = conf["users_per_cell"]
    return SystemConfig(
        L=conf["cells"],
        K=K,
        M=conf["antennas"],
        tau_p=conf["pilot_length"] or K,
        tau_c=conf["coherence_symbols"],
        noise_power=float(dbm_to_watt(conf["noise_dbm"])),
        p_max=conf["pilot_max_mw"] / 1e3,
        data_power=conf["data_power_mw"] / 1e3,
        area_side_km=conf["area_side_km"],
        min_distance_km=conf["min_distance_km"],
        shadow_std_db=conf["shadow_std_db"],
    )


def trial_seed(master: int, trial: int) -> np.random.SeedSequence:
    """Seed of trial ``trial``; independent of how many trials run or in which order."""
    return np.random.SeedSequence(master, spawn_key=(trial,))


@dataclass
class TrialResult:
    trial_id: int
    seed: int
    min_se: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    wall_ms: dict = field(default_factory=dict)


def run_trial(conf: dict, trial: int) -> TrialResult:
    """Draw one network and evaluate every enabled method on it."""
    cfg = system_config(conf)
    ss = trial_seed(conf["seed"], trial)
    net_seed, assign_seed, start_seed = ss.spawn(3)
    result = TrialResult(trial, int(ss.generate_state(1)[0]))
    net = generate_network(cfg, net_seed)
    methods = conf["methods"]
    power = conf["baseline_pilot_mw"] / 1e3

    def timed(name, fn):
        t0 = time.perf_counter()
        out = fn()
        result.wall_ms[name] = (time.perf_counter() - t0) * 1e3
        return out

    smart = None
    if "random" in methods:
        alloc = timed("random", lambda: from_assignment(baselines.random_assignment(cfg, assign_seed, power), cfg))
        result.min_se["random"] = se(alloc, net, cfg).min_se
    if "smart" in methods or ("proposed" in methods and conf["warm_start_smart"]):
        smart = timed("smart", lambda: from_assignment(baselines.smart_assignment(cfg, net, power), cfg))
        if "smart" in methods:
            result.min_se["smart"] = se(smart, net, cfg).min_se
        else:
            result.wall_ms.pop("smart")
    if "brute" in methods:
        bf = timed("brute", lambda: baselines.brute_force(cfg, net))
        result.min_se["brute"] = bf.min_se
    if "proposed" in methods:
        warm = [smart] if conf["warm_start_smart"] else []
        best, _ = timed("proposed", lambda: maxmin.multistart(
            cfg, net, conf["random_starts"], warm, seed=start_seed,
            max_iters=conf["max_iters"], stop_tol=conf["stop_tol"],
        ))
        result.min_se["proposed"] = best.min_se
        result.iterations["proposed"] = best.iterations
        if smart is not None:
            floor = se(smart, net, cfg).min_se
            if best.min_se < floor - 1e-6:
                log.warning("trial %d: proposed %.6g below its smart warm start %.6g", trial, best.min_se, floor)
    return result


def _run_trials(conf: dict, workers: int) -> list[TrialResult]:
    trials = range(conf["trials"])
    if workers <= 1:
        results = [run_trial(conf, t) for t in trials]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, [conf] * len(trials), trials))
    return sorted(results, key=lambda r: r.trial_id)


def _fmt(x: float) -> str:
    return repr(float(x))


def cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Sorted samples and their empirical cumulative probabilities ``i / n``."""
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def summarize(results: list[TrialResult], methods) -> list[dict]:
    """Per-method mean and 95%-likely (5th percentile) min-SE."""
    rows = []
    for m in methods:
        v = np.array([r.min_se[m] for r in results])
        its = [r.iterations[m] for r in results if m in r.iterations]
        rows.append({
            "method": m,
            "trials": len(v),
            "mean_min_se": float(v.mean()),
            "p5_min_se": float(np.percentile(v, 5)),
            "median_min_se": float(np.median(v)),
            "min_min_se": float(v.min()),
            "max_min_se": float(v.max()),
            "mean_iterations": float(np.mean(its)) if its else "",
        })
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_outputs(results: list[TrialResult], methods, out: Path) -> list[dict]:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "trials.csv", ["trial_id", "seed", "method", "min_se_bps_hz", "iterations"], [
        [r.trial_id, r.seed, m, _fmt(r.min_se[m]), r.iterations.get(m, "")] for r in results for m in methods
    ])
    for m in methods:
        x, p = cdf([r.min_se[m] for r in results])
        _write_csv(out / f"cdf_{m}.csv", ["se", "cumulative_probability"], [[_fmt(a), _fmt(b)] for a, b in zip(x, p)])
    summary = summarize(results, methods)
    keys = list(summary[0])
    _write_csv(out / "summary.csv", keys, [[_fmt(s[k]) if isinstance(s[k], float) else s[k] for k in keys]
                                           for s in summary])
    # wall times vary run to run, so they live outside the CSVs
    with open(out / "timing.json", "w") as fh:
        json.dump({str(r.trial_id): r.wall_ms for r in results}, fh, indent=1)
    return summary


def run_campaign(conf: dict, out_dir, workers: int | None = None) -> dict:
    """Run all trials (and sweep points) and write CSV artifacts under ``out_dir``.

    Returns ``{sweep value or None: summary rows}``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    workers = workers or conf["workers"]
    methods = [m for m in METHODS if m in conf["methods"]]
    with open(out / "config.json", "w") as fh:
        json.dump(conf, fh, indent=1, sort_keys=True)
    sweep = conf["sweep"]
    if sweep is None:
        points = [(None, conf, out)]
    else:
        points = []
        for v in sweep["values"]:
            # pilot_length None keeps tau_p tied to users_per_cell
            c = dict(conf, sweep=None, **{sweep["key"]: v})
            try:
                _check(c)
            except ConfigError as exc:
                raise ConfigError(f"sweep {sweep['key']}={v}: {exc}") from exc
            points.append((v, c, out / f"{sweep['key']}_{v}"))
    summaries = {}
    for value, c, path in points:
        log.info("running %d trials%s", c["trials"], "" if value is None else f" at {sweep['key']}={value}")
        results = _run_trials(c, workers)
        summaries[value] = write_outputs(results, methods, path)
    if sweep is not None:
        _write_csv(out / "sweep.csv", [sweep["key"], "method", "mean_min_se", "p5_min_se"], [
            [v, s["method"], _fmt(s["mean_min_se"]), _fmt(s["p5_min_se"])] for v, rows in summaries.items()
            for s in rows
        ])
    return summaries


@dataclass
class VerifyReport:
    rows: list  # (network, allocation, cell, user, closed_form, empirical, rel_dev)
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(r[-1] for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def verify_oracle(conf: dict) -> VerifyReport:
    """Compare closed-form SINRs with Monte Carlo estimates on random networks and allocations.

    Allocations are random feasible power splits over all basis vectors.
    With ``verify_cells = "rotate"`` only one BS (cycling through the cells)
    is simulated per allocation, which cuts the cost by a factor ``L``.
    """
    cfg = system_config(conf)
    rows = []
    counter = 0
    for n in range(conf["verify_networks"]):
        ss = trial_seed(conf["seed"], n)
        net_seed, alloc_seed, mc_seed = ss.spawn(3)
        net = generate_network(cfg, net_seed)
        for a, (aseed, mseed) in enumerate(zip(alloc_seed.spawn(conf["verify_allocations"]),
                                               mc_seed.spawn(conf["verify_allocations"]))):
            alloc = maxmin.init_powers(cfg, net, "uniform-random", aseed)
            exact = sinr_all(alloc, net, cfg)
            cells = range(cfg.L) if conf["verify_cells"] == "all" else [counter % cfg.L]
            counter += 1
            for l, cseed in zip(cells, mseed.spawn(cfg.L)):
                emp = mcoracle.empirical_sinr_cell(alloc, net, cfg, l, conf["verify_samples"], cseed)
                for k in range(cfg.K):
                    dev = abs(emp[k] - exact[l, k]) / exact[l, k]
                    rows.append((n, a, l, k, float(exact[l, k]), float(emp[k]), float(dev)))
                    log.info("net %d alloc %d user (%d,%d): closed %.6g empirical %.6g dev %.2e",
                             n, a, l, k, exact[l, k], emp[k], dev)
    return VerifyReport(rows, conf["verify_tolerance"])


def write_verify(report: VerifyReport, path) -> None:
    _write_csv(Path(path), ["network", "allocation", "cell", "user", "sinr_closed_form", "sinr_empirical",
                            "relative_deviation"], [list(r[:4]) + [_fmt(x) for x in r[4:]] for r in report.rows])
