"""Command-line entry point: simulate, analyze, and parameter sweeps.

Exit codes: 0 success, 1 validation/input failure, 2 runtime divergence.
stderr carries diagnostics; stdout carries one final JSON status line.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .analysis import (
    avalanche_size_histogram,
    branching_summary,
    detect_avalanches,
    fit_power_law,
    quiescent_boltzmann_score,
)
from .config import ConfigError, SimConfig, load_config, validate_config
from .simulation import (
    SimulationError,
    run_simulation,
    write_rewires_csv,
    write_run_json,
    write_snapshots_csv,
    write_spikes_csv,
)

log = logging.getLogger("edm")

SEED_MIX_CONSTANT = 0x9E3779B97F4A7C15  # large odd constant for sweep seeds
_SEED_MASK = (1 << 64) - 1


def derive_seed(base_seed: int, cell_index: int) -> int:
    return (base_seed ^ (cell_index * SEED_MIX_CONSTANT)) & _SEED_MASK


def _status(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        log.error("config rejected: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        artifacts = run_simulation(cfg)
    except SimulationError as exc:
        log.error("simulation diverged: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_spikes_csv(out / "spikes.csv", artifacts.spikes)
    write_rewires_csv(out / "rewires.csv", artifacts.rewires)
    write_snapshots_csv(out / "snapshots.csv", artifacts.snapshots)
    boltzmann = quiescent_boltzmann_score(artifacts)
    write_run_json(
        out / "run.json",
        artifacts,
        extra={"boltzmann_fit": boltzmann, "seed_rule": "config seed, or --seed override"},
    )
    _status(
        {
            "status": "ok",
            "command": "simulate",
            "out": str(out),
            "n_spikes": len(artifacts.spikes),
            "n_rewires": len(artifacts.rewires),
        }
    )
    return 0


def _read_spikes_csv(path: str) -> np.ndarray:
    times = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "t_ms,agent_id":
            raise ValueError(f"malformed CSV header at line 1 of {path}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"malformed CSV row at line {ln} of {path}")
            try:
                times.append(float(parts[0]))
                int(parts[1])
            except ValueError:
                raise ValueError(f"malformed CSV row at line {ln} of {path}") from None
    return np.asarray(times)


def _read_snapshots_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    times, sigma = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("t_ms,mean_v,mean_activity,sigma_global"):
            raise ValueError(f"malformed CSV header at line 1 of {path}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"malformed CSV row at line {ln} of {path}")
            try:
                times.append(float(parts[0]))
                sigma.append(float(parts[3]))
            except ValueError:
                raise ValueError(f"malformed CSV row at line {ln} of {path}") from None
    return np.asarray(times), np.asarray(sigma)


def cmd_analyze(args) -> int:
    out = Path(args.out)
    try:
        spike_times = _read_spikes_csv(args.spikes)
        snap_t, snap_sigma = _read_snapshots_csv(args.snapshots)
    except (OSError, ValueError) as exc:
        log.error("input rejected: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    (out / "plotdata").mkdir(exist_ok=True)

    avalanches = detect_avalanches(spike_times, args.bin)
    sizes, counts = avalanche_size_histogram(avalanches)
    fit_doc = None
    if len(avalanches) >= 50:
        try:
            fit = fit_power_law([a.size for a in avalanches])
            fit_doc = dataclasses.asdict(fit)
        except ValueError as exc:
            log.info("power-law fit skipped: %s", exc)
    branching_doc = None
    if snap_sigma.size:
        branching_doc = dataclasses.asdict(branching_summary(snap_sigma))

    boltzmann_doc = None
    run_json = Path(args.spikes).parent / "run.json"
    if run_json.exists():
        try:
            boltzmann_doc = json.loads(run_json.read_text()).get("boltzmann_fit")
        except (OSError, json.JSONDecodeError):
            pass

    stats = {
        "n_spikes": int(spike_times.size),
        "n_avalanches": len(avalanches),
        "avalanche_histogram": {
            "size": sizes.tolist(),
            "count": counts.tolist(),
        },
        "power_law_fit": fit_doc,
        "branching": branching_doc,
        "boltzmann_fit": boltzmann_doc,
        "bin_ms": args.bin,
    }
    with open(out / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "plotdata" / "avalanche_sizes.csv", "w", encoding="utf-8") as fh:
        fh.write("z,count\n")
        for s, c in zip(sizes, counts):
            fh.write(f"{s},{c}\n")
    with open(out / "plotdata" / "branching_series.csv", "w", encoding="utf-8") as fh:
        fh.write("t_ms,sigma_global\n")
        for t, s in zip(snap_t, snap_sigma):
            fh.write(f"{t!r},{s!r}\n")
    _status(
        {
            "status": "ok",
            "command": "analyze",
            "out": str(out),
            "n_avalanches": len(avalanches),
        }
    )
    return 0


def _load_sweep_spec(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    required = {"base_config", "axis", "values", "replicates", "out_dir"}
    missing = required - set(spec)
    if missing:
        raise ConfigError(f"sweep spec missing keys: {sorted(missing)}")
    if not spec["values"]:
        raise ConfigError("sweep values must be nonempty")
    base = load_config(str(Path(path).parent / spec["base_config"])
                       if not os.path.isabs(spec["base_config"])
                       else spec["base_config"])
    axis = spec["axis"]
    if not hasattr(base, axis) or not isinstance(getattr(base, axis), (int, float)):
        raise ConfigError(f"sweep axis {axis!r} is not a numeric config field")
    spec["_base"] = base
    return spec


def _sweep_cell(task: tuple) -> dict:
    cfg_dict, axis, value, rep, cell_index, base_seed, out_dir = task
    row = {
        "axis_value": value,
        "replicate": rep,
        "sigma_terminal": None,
        "lambda_hat": None,
        "mean_activity": None,
        "status": "failed",
    }
    try:
        cfg_dict = dict(cfg_dict)
        cfg_dict[axis] = value
        cfg = validate_config(SimConfig.from_dict(cfg_dict))
        cfg.seed = derive_seed(base_seed, cell_index)
        artifacts = run_simulation(cfg)
        cell_dir = Path(out_dir) / f"{axis}_{value}" / f"rep_{rep}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        write_spikes_csv(cell_dir / "spikes.csv", artifacts.spikes)
        write_rewires_csv(cell_dir / "rewires.csv", artifacts.rewires)
        write_snapshots_csv(cell_dir / "snapshots.csv", artifacts.snapshots)
        write_run_json(
            cell_dir / "run.json",
            artifacts,
            extra={
                "seed_rule": "base_seed XOR (cell_index * 0x9E3779B97F4A7C15), 64-bit",
                "cell_index": cell_index,
            },
        )
        lam = None
        avalanches = detect_avalanches(
            [t for t, _ in artifacts.spikes], cfg.avalanche_bin
        )
        if len(avalanches) >= 50:
            try:
                lam = fit_power_law([a.size for a in avalanches]).exponent
            except ValueError:
                lam = None
        row.update(
            sigma_terminal=artifacts.summary["sigma_terminal"],
            lambda_hat=lam,
            mean_activity=artifacts.summary["mean_activity"],
            status="ok",
        )
    except (ConfigError, SimulationError, ValueError) as exc:
        row["status"] = f"failed: {exc}"
    return row


def cmd_sweep(args) -> int:
    try:
        spec = _load_sweep_spec(args.spec)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        log.error("sweep spec rejected: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    base: SimConfig = spec["_base"]
    out_dir = Path(spec["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    cell_index = 0
    for value in spec["values"]:
        for rep in range(int(spec["replicates"])):
            tasks.append(
                (base.to_dict(), spec["axis"], value, rep, cell_index,
                 base.seed, str(out_dir))
            )
            cell_index += 1
    if args.parallel > 1:
        with Pool(processes=args.parallel) as pool:
            rows = pool.map(_sweep_cell, tasks)
    else:
        rows = [_sweep_cell(t) for t in tasks]
    summary_path = out_dir / "sweep_summary.csv"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("axis_value,replicate,sigma_terminal,lambda_hat,mean_activity,status\n")
        for r in rows:
            fh.write(
                f"{r['axis_value']},{r['replicate']},"
                f"{'' if r['sigma_terminal'] is None else repr(r['sigma_terminal'])},"
                f"{'' if r['lambda_hat'] is None else repr(r['lambda_hat'])},"
                f"{'' if r['mean_activity'] is None else repr(r['mean_activity'])},"
                f"{r['status'].split(':')[0]}\n"
            )
    n_ok = sum(1 for r in rows if r["status"] == "ok")
    _status(
        {
            "status": "ok" if n_ok else "failed",
            "command": "sweep",
            "out": str(out_dir),
            "cells_ok": n_ok,
            "cells_total": len(rows),
        }
    )
    return 0 if n_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edm",
        description="Decision-network simulator and criticality analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation")
    sim.add_argument("--config", required=True, help="JSON config path")
    sim.add_argument("--seed", type=int, default=None, help="override config seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="analyze spike/snapshot logs")
    ana.add_argument("--spikes", required=True, help="spikes.csv path")
    ana.add_argument("--snapshots", required=True, help="snapshots.csv path")
    ana.add_argument("--bin", type=float, default=0.2, help="avalanche bin width, ms")
    ana.add_argument("--out", required=True, help="output directory")
    ana.set_defaults(func=cmd_analyze)

    swp = sub.add_parser("sweep", help="run a parameter sweep")
    swp.add_argument("--spec", required=True, help="sweep spec JSON path")
    swp.add_argument("--parallel", type=int, default=1, help="worker pool size")
    swp.set_defaults(func=cmd_sweep)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("EDM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
