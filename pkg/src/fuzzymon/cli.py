"""Command-line front end: evolve, sample, figure and regime commands.

Every command reads a flat key-value config (see ``fuzzymon.config``),
is deterministic given (config, seed), and emits CSV for time series or
JSON for scalar reports.  Output files start with a header line carrying
the sha256 of the resolved configuration.  Exit codes: 0 success, 2 for
configuration or input problems, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from fuzzymon.config import ConfigError, ExperimentConfig
from fuzzymon.core import (
    MeasurementSpec,
    Readout,
    classify_regime,
    time_scales,
)
from fuzzymon.oracles import most_probable_readout
from fuzzymon.sampling import _run_chunks, band_probability_profile
from fuzzymon.selective import evolve_selective

__all__ = ["main"]

FULL = "%.17g"


def _header(cfg: ExperimentConfig, command: str) -> str:
    return f"# fuzzymon-{command} config_sha256={cfg.sha256()} seed={cfg.seed}"


def _write_csv(path: Path, header: str, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(FULL % v if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _write_json(path: Path, header_cfg: ExperimentConfig, command: str, payload) -> None:
    doc = {
        "command": command,
        "config_sha256": header_cfg.sha256(),
        "seed": header_cfg.seed,
        **payload,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load_readout_file(path: str, meas: MeasurementSpec) -> Readout:
    try:
        values = np.loadtxt(path, ndmin=1)
    except OSError as exc:
        raise ConfigError(f"cannot read readout file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed readout file {path}: {exc}") from exc
    if values.ndim != 1 or values.size != meas.n_steps:
        raise ConfigError(
            f"readout file {path}: need {meas.n_steps} values, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"readout file {path}: non-finite values")
    return Readout(values, meas.dt)


def _resolve_readout(cfg: ExperimentConfig) -> Readout:
    if cfg.readout_kind == "constant":
        level = float(cfg.system.levels[cfg.readout_level_index])
        return Readout.constant(level, cfg.measurement)
    if cfg.readout_kind == "file":
        return _load_readout_file(cfg.readout_path, cfg.measurement)
    mp = most_probable_readout(
        cfg.initial,
        cfg.system,
        cfg.measurement,
        self_consistent=cfg.readout_self_consistent,
    )
    return mp.curve


def cmd_evolve(cfg: ExperimentConfig, out_dir: Path, fmt: str) -> int:
    readout = _resolve_readout(cfg)
    traj = evolve_selective(
        cfg.initial, readout, cfg.system, cfg.measurement, cfg.record_stride
    )
    columns = ["t"]
    for i in range(cfg.system.n_levels):
        columns += [f"re_c{i + 1}", f"im_c{i + 1}"]
    columns += ["prob_density", "readout_e"]
    n_steps = cfg.measurement.n_steps
    rows = []
    for idx, state in enumerate(traj.states):
        t = float(traj.times[idx])
        step = min(int(round(t / cfg.measurement.dt)), n_steps - 1)
        row = [t]
        for c in state.coeffs:
            row += [float(c.real), float(c.imag)]
        p_idx = min(int(round(t / cfg.measurement.dt)), n_steps)
        row += [float(traj.prob_density[p_idx]), float(readout.values[step])]
        rows.append(row)
    path = out_dir / "evolve.csv"
    _write_csv(path, _header(cfg, "evolve"), columns, rows)
    print(f"wrote {path} (final probability density {traj.prob_density[-1]:.6g})")
    return 0


def cmd_sample(cfg: ExperimentConfig, out_dir: Path, fmt: str) -> int:
    meas = cfg.measurement
    levels = cfg.system.levels
    centers = np.tile(levels[:, None], (1, meas.n_steps))

    def per_chunk(reads: np.ndarray) -> np.ndarray:
        return np.stack(
            [np.mean((reads - centers[i][None, :]) ** 2, axis=-1) for i in range(levels.size)],
            axis=1,
        )

    finals, _, _, reads, msd_levels = _run_chunks(
        cfg.initial,
        cfg.system,
        meas,
        cfg.n_samples,
        cfg.seed,
        False,
        None,
        cfg.store_readouts,
        cfg.workers or None,
        per_chunk=per_chunk,
    )
    prob = np.sum(np.abs(finals) ** 2, axis=1)

    readout_dir = out_dir / "readouts"
    paths = [""] * cfg.n_samples
    if cfg.store_readouts:
        readout_dir.mkdir(parents=True, exist_ok=True)
        for i in range(cfg.n_samples):
            p = readout_dir / f"member_{i:06d}.txt"
            np.savetxt(p, reads[i], fmt=FULL)
            paths[i] = str(p.relative_to(out_dir))

    columns = ["member", "final_p"]
    flags = []
    for li in range(levels.size):
        for w in cfg.band_widths:
            columns.append(f"in_band_l{li + 1}_w{_fmt_w(w)}")
            flags.append((li, (w * meas.delta_e_t) ** 2))
    columns.append("readout_path")
    rows = []
    for i in range(cfg.n_samples):
        row = [i, float(prob[i])]
        row += [int(msd_levels[i, li] <= thr) for li, thr in flags]
        row.append(paths[i])
        rows.append(row)
    path = out_dir / "ensemble.csv"
    _write_csv(path, _header(cfg, "sample"), columns, rows)

    fractions = {
        columns[2 + j]: float(
            np.mean(msd_levels[:, flags[j][0]] <= flags[j][1])
        )
        for j in range(len(flags))
    }
    print(f"wrote {path}")
    for name, frac in fractions.items():
        print(f"  {name}: fraction {frac:.4f}")
    return 0


def _fmt_w(w: float) -> str:
    return ("%g" % w).replace(".", "p")


def cmd_figure(cfg: ExperimentConfig, out_dir: Path, fmt: str) -> int:
    system = cfg.system
    if system.n_levels != 2 or system.two_level_v() is None:
        raise ConfigError("figure command needs a driven two-level system")
    meas = cfg.measurement
    v = system.two_level_v()
    t_r = math.pi / v
    if cfg.figure_ratio is not None:
        d_e = system.gap()
        kappa = 2.0 * math.pi * cfg.figure_ratio / (t_r * d_e * d_e)
        meas = MeasurementSpec(kappa=kappa, duration=meas.duration, dt=meas.dt)
    scales = time_scales(system, meas)

    mp = most_probable_readout(cfg.initial, system, meas, self_consistent=True)
    traj = evolve_selective(cfg.initial, mp.curve, system, meas)

    # panel (a): state populations under the most probable readout
    rows_a = []
    for idx, state in enumerate(traj.states):
        t = float(traj.times[idx])
        pops = state.populations()
        c = state.coeffs
        rows_a.append(
            [
                t,
                float(c[0].real),
                float(c[0].imag),
                float(c[1].real),
                float(c[1].imag),
                float(traj.prob_density[idx]),
                float(pops[0]),
                float(pops[1]),
            ]
        )
    path_a = out_dir / "figure_states.csv"
    _write_csv(
        path_a,
        _header(cfg, "figure"),
        ["t", "re_c1", "im_c1", "re_c2", "im_c2", "prob_density", "pop1", "pop2"],
        rows_a,
    )

    # panel (b): the curve with mean-square band envelopes W=2 and W=3
    ts = meas.grid()
    rows_b = []
    for k in range(meas.n_steps):
        e = float(mp.curve.values[k])
        rows_b.append(
            [
                float(ts[k]),
                e,
                e - 2.0 * scales.delta_e_t,
                e + 2.0 * scales.delta_e_t,
                e - 3.0 * scales.delta_e_t,
                e + 3.0 * scales.delta_e_t,
            ]
        )
    path_b = out_dir / "figure_readout.csv"
    _write_csv(
        path_b,
        _header(cfg, "figure"),
        ["t", "e_prob", "lo_w2", "hi_w2", "lo_w3", "hi_w3"],
        rows_b,
    )

    # panel (c): band probabilities over a grid of widths, shared samples
    profile = band_probability_profile(
        cfg.initial,
        mp.curve,
        cfg.figure_band_widths,
        system,
        meas,
        cfg.figure_n_samples,
        cfg.seed,
        smooth_window=cfg.figure_smooth_window * t_r,
        workers=cfg.workers or None,
    )
    path_c = out_dir / "figure_bands.csv"
    _write_csv(
        path_c,
        _header(cfg, "figure"),
        ["w", "probability", "stderr"],
        [[w, p, se] for (w, p, se) in profile],
    )
    print(f"wrote {path_a}\nwrote {path_b}\nwrote {path_c}")
    return 0


def cmd_regime(cfg: ExperimentConfig, out_dir: Path | None, fmt: str) -> int:
    scales = time_scales(cfg.system, cfg.measurement)
    label = classify_regime(
        cfg.measurement.duration, scales, cfg.much_ratio, cfg.same_order
    )
    payload = {
        "duration": cfg.measurement.duration,
        "t_lr": scales.t_lr,
        "t_r": scales.t_r,
        "delta_e_t": scales.delta_e_t,
        "nu": scales.nu,
        "regime": label,
        "much_ratio": cfg.much_ratio,
        "same_order": cfg.same_order,
    }
    print(json.dumps(payload, indent=2))
    if out_dir is not None:
        _write_json(out_dir / "regime.json", cfg, "regime", payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzymon",
        description="Continuous fuzzy energy-monitoring experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evolve", "evolve one readout record and dump the trajectory"),
        ("sample", "draw an ensemble of readouts with band memberships"),
        ("figure", "emit the three-panel correlation figure data"),
        ("regime", "report time scales and the regime label"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--seed", type=int, default=None, help="override sample.seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--format",
            choices=("csv", "json"),
            default="csv",
            help="preferred output format where applicable",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {
            "evolve": cmd_evolve,
            "sample": cmd_sample,
            "figure": cmd_figure,
            "regime": cmd_regime,
        }[args.command]
        return handler(cfg, out_dir, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
