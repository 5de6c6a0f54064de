"""Command-line runner: ``weakprobe <fig2|fig3|tomo|traj> --config PATH [--key value ...]``.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import KEYS, ExperimentConfig, build_config, read_config_file, state_label
from .errors import ConfigError, NumericalError
from .experiments import (SCATTER_COLUMNS, Frame, basis_scatter, fidelity_curve, initial_state, make_setup,
                          single_trajectory, tomography_run)
from .qmat import bloch_from_cartesian
from .trajectory import default_workers

log = logging.getLogger("weakprobe")

FIG3_COLUMNS = ("g", "beta", "init", "duration_tau_m", "n_steps", "n_runs", "mean_fidelity", "stderr")
TRAJ_COLUMNS = ("step_index", "bin_index", "bin_center_current", "state_r", "state_theta", "state_phi",
                "running_fidelity")
_STREAM = {"fig2": 2, "fig3": 3, "tomo": 4, "traj": 5}


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _frame(cfg: ExperimentConfig) -> Frame:
    return Frame(energy_splitting=cfg.E, delta_t=cfg.delta_t, sigma=cfg.sigma, bin_width=cfg.delta_I,
                 bin_range_sigmas=cfg.bin_range_sigmas)


def _header(cfg: ExperimentConfig, extra: dict) -> list[str]:
    lines = [f"weakprobe {__version__}", f"experiment: {cfg.experiment}"]
    for key, value in {**cfg.snapshot(), **extra}.items():
        if key == "experiment":
            continue
        lines.append(f"{key}: {value!r}" if not isinstance(value, str) else f"{key}: {value}")
    return lines


def _write_csv(path: Path, header: list[str], columns, rows) -> Path:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def _seed(cfg: ExperimentConfig, *stream) -> tuple:
    return (cfg.master_seed, _STREAM[cfg.experiment], *stream)


def run_fig2(cfg: ExperimentConfig) -> list[Path]:
    """Basis scatter: one CSV per (g, beta, initial state)."""
    out = Path(cfg.output)
    paths = []
    for gi, g in enumerate(cfg.g):
        for bi, beta in enumerate(cfg.beta):
            setup = make_setup(g, beta, _frame(cfg))
            for ii, spec in enumerate(cfg.init):
                seed = _seed(cfg, gi, bi, ii)
                rows = basis_scatter(setup, initial_state(spec, setup.qp), cfg.n_runs, cfg.duration, seed,
                                     workers=cfg.workers)
                rows = [[int(r[0]), *r[1:7], int(r[7])] for r in rows]
                header = _header(cfg, dict(this_g=g, this_beta=beta, this_init=state_label(spec), tau_m=setup.tau_m,
                                           n_steps=setup.steps(cfg.duration), n_bins=setup.bins.n_bins, seed=seed))
                name = f"fig2_g{g:g}_beta{beta:.4f}_{state_label(spec)}.csv"
                paths.append(_write_csv(out / name, header, SCATTER_COLUMNS, rows))
                log.info("wrote %s", out / name)
    return paths


def run_fig3(cfg: ExperimentConfig) -> list[Path]:
    """Mean fidelity +- standard error versus duration for each (g, beta, initial state)."""
    rows = []
    for gi, g in enumerate(cfg.g):
        for bi, beta in enumerate(cfg.beta):
            setup = make_setup(g, beta, _frame(cfg))
            for ii, spec in enumerate(cfg.init):
                curve = fidelity_curve(setup, initial_state(spec, setup.qp), cfg.n_runs, cfg.durations(),
                                       _seed(cfg, gi, bi, ii), workers=cfg.workers)
                for d, n, m, se in zip(curve.durations_tau, curve.steps, curve.mean, curve.stderr):
                    rows.append((g, beta, state_label(spec), d, int(n), cfg.n_runs, m, se))
    path = Path(cfg.output) / "fig3.csv"
    _write_csv(path, _header(cfg, dict(durations=cfg.durations())), FIG3_COLUMNS, rows)
    return [path]


def run_tomo(cfg: ExperimentConfig) -> list[Path]:
    """Tomography report (JSON) for every (g, beta, initial state)."""
    results = []
    for gi, g in enumerate(cfg.g):
        for bi, beta in enumerate(cfg.beta):
            setup = make_setup(g, beta, _frame(cfg))
            for ii, spec in enumerate(cfg.init):
                res = tomography_run(setup, initial_state(spec, setup.qp), cfg.n_runs, cfg.duration,
                                     _seed(cfg, gi, bi, ii), workers=cfg.workers)
                est, truth = res.estimate, bloch_from_cartesian(res.true_bloch)
                results.append({
                    "g": g,
                    "beta": beta,
                    "init": state_label(spec),
                    "n_runs": cfg.n_runs,
                    "excluded": res.excluded,
                    "estimate": {"r": est.bloch.r, "theta": est.bloch.theta, "phi": est.bloch.phi},
                    "residual": est.residual,
                    "moment_condition": est.moment_condition,
                    "clustered_warning": est.clustered,
                    "true_state": {"r": truth.r, "theta": truth.theta, "phi": truth.phi},
                    "bloch_error": res.error,
                })
    meta = {"version": __version__, **{k: v for k, v in cfg.snapshot().items()}}
    meta["init"] = [state_label(s) for s in cfg.init]
    path = Path(cfg.output) / "tomo.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"meta": meta, "results": results}, indent=2, sort_keys=True) + "\n")
    return [path]


def run_traj(cfg: ExperimentConfig) -> list[Path]:
    """Full single-trajectory dump: record, conditioned state and running fidelity per step."""
    setup = make_setup(cfg.g[0], cfg.beta[0], _frame(cfg))
    seed = _seed(cfg, 0)
    res = single_trajectory(setup, initial_state(cfg.init[0], setup.qp), cfg.duration, seed)
    rows = []
    for t, (k, st, f) in enumerate(zip(res.record, res.state_history, res.fidelity_history)):
        x, y = 2.0 * st[2], -2.0 * st[3]
        b = bloch_from_cartesian((x, y, st[0] - st[1]))
        rows.append((t, int(k), setup.bins.bin_centers[k], b.r, b.theta, b.phi, f))
    header = _header(cfg, dict(tau_m=setup.tau_m, n_steps=len(rows), n_bins=setup.bins.n_bins, seed=seed))
    return [_write_csv(Path(cfg.output) / "traj.csv", header, TRAJ_COLUMNS, rows)]


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "tomo": run_tomo, "traj": run_traj}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakprobe", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=sorted(RUNNERS))
    parser.add_argument("--config", help="flat key = value file; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    for key in KEYS:
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        parser.add_argument(*names, dest=key, default=None, metavar="VALUE")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        file_values = read_config_file(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in KEYS}
        cfg = build_config(args.experiment, file_values, overrides, default_workers=default_workers())
        paths = RUNNERS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"weakprobe: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"weakprobe: numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"weakprobe: I/O error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
