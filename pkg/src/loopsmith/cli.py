"""Command-line interface.

Every subcommand reads the project configuration (defaults, then an
optional JSON file, then --set overrides), computes its analysis, prints
a short summary, and writes artifacts into the output directory in the
requested format. The effective-configuration hash is embedded in every
artifact so results can be traced back to their settings.

Exit codes: 0 on success, 2 for configuration problems, 3 for numeric
failures (no crossover, divergence, and the like).
"""
from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .actuator import electrical_tf, mechanical_tf
from .config import (
    ProjectConfig,
    apply_overrides,
    build_controller,
    config_hash,
    default_project_config,
    load_config,
)
from .drive import assemble_drive, design_lead_lag, lead_tf
from .errors import ConfigError, MetricError, NumericError
from .fblin import fl_margins
from .gangs import gang_bode, injection_step, sensitivity_report, six_gangs
from .lti import Polynomial, RationalTF, bode, margins, poly_roots, tf_const
from .poleplace import (
    close_with_current_loop,
    closed_loop_tf,
    design_position_controller,
    max_stable_step,
)
from .sim import frf_bin, simulate, step_metrics

__all__ = ["main"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_kv_csv(path: Path, payload: dict, digest: str) -> None:
    lines = [f"# config {digest}", "key,value"]
    for k, v in payload.items():
        if isinstance(v, float):
            v = format(v, ".9g")
        lines.append(f"{k},{v}")
    path.write_text("\n".join(lines) + "\n")


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for k, v in payload.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, f"{key}."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            for i, item in enumerate(np.asarray(v).ravel()):
                flat[f"{key}[{i}]"] = complex(item) if np.iscomplexobj(item) else float(item)
        else:
            flat[key] = v
    return flat


def _print_kv(payload: dict) -> None:
    for k, v in _flatten(payload).items():
        if isinstance(v, float):
            v = format(v, ".6g")
        print(f"{k} = {v}")


def _blocks(cfg: ProjectConfig, fidelity: str = "ideal", lead_in_forward: bool = False):
    return assemble_drive(
        cfg.drive, electrical_tf(cfg.actuator), fidelity=fidelity,
        lead_in_forward=lead_in_forward,
    )


def _inner_loop_tf(cfg: ProjectConfig) -> RationalTF:
    kind = cfg.control.current_loop
    if kind == "dc":
        return tf_const(1.0)
    if kind == "first_order":
        w = 2.0 * math.pi * cfg.control.current_loop_bw_hz
        return RationalTF(Polynomial([w]), Polynomial([1.0, w]))
    track = six_gangs(_blocks(cfg)).reference_to_output
    return track / track.dc_gain()


def cmd_design(cfg: ProjectConfig, args, out: Path) -> int:
    plant = electrical_tf(cfg.actuator)
    designed = design_lead_lag(cfg.design, plant, cfg.drive)
    _, geom = lead_tf(designed)
    loop = assemble_drive(designed, plant).loop
    m = margins(loop)
    digest = config_hash(cfg)
    payload = {
        "config_hash": digest,
        "r_1": designed.r_1,
        "r_2": designed.r_2,
        "r_ld": designed.r_ld,
        "c_ld": designed.c_ld,
        "c_lg": designed.c_lg,
        "alpha": geom.alpha,
        "tau": geom.tau,
        "phi_max_deg": geom.phi_max,
        "f_peak_hz": geom.omega_max / (2.0 * math.pi),
        "gain_crossover_hz": m.gain_crossover,
        "phase_margin_deg": m.phase_margin,
    }
    if args.format == "json":
        _write_json(out / "design.json", payload)
    elif args.format == "csv":
        _write_kv_csv(out / "design.csv", payload, digest)
    else:
        from . import plotting

        fr = bode(loop, np.logspace(0, 7, 701))
        plotting.plot_bode(fr, out / "design.svg", title="designed loop", margins=m)
    _print_kv(payload)
    return 0


def cmd_gangs(cfg: ProjectConfig, args, out: Path) -> int:
    gangs = six_gangs(_blocks(cfg, args.fidelity, args.lead_in_forward))
    responses = gang_bode(gangs, args.fmin, args.fmax)
    digest = config_hash(cfg)
    summary = {
        "config_hash": digest,
        "fidelity": args.fidelity,
        "dc_gain_db": {
            name: 20.0 * math.log10(abs(tf.dc_gain())) if tf.dc_gain() != 0 else None
            for name, _, tf in gangs.items()
        },
    }
    if args.format == "svg":
        from . import plotting

        plotting.plot_gangs(responses, out / "gangs.svg",
                            title=f"closed-loop gangs ({args.fidelity})")
    elif args.format == "json":
        _write_json(out / "gangs.json", summary)
    else:
        for name, fr in responses.items():
            fr.to_csv(out / f"gang_{name}.csv", comment=f"config {digest}")
    _print_kv(summary)
    return 0


def cmd_bode(cfg: ProjectConfig, args, out: Path) -> int:
    loop = _blocks(cfg, args.fidelity, args.lead_in_forward).loop
    grid = np.logspace(math.log10(args.fmin), math.log10(args.fmax),
                       int(args.points))
    fr = bode(loop, grid)
    digest = config_hash(cfg)
    if args.format == "svg":
        from . import plotting

        plotting.plot_bode(fr, out / "bode.svg", title="loop transmission",
                           margins=margins(loop))
    elif args.format == "json":
        _write_json(out / "bode.json", {
            "config_hash": digest,
            "freq_hz": fr.freq_hz,
            "mag_db": fr.mag_db,
            "phase_deg": fr.phase_deg,
        })
    else:
        fr.to_csv(out / "bode.csv", comment=f"config {digest}")
    m = margins(loop)
    _print_kv({"gain_crossover_hz": m.gain_crossover,
               "phase_margin_deg": m.phase_margin})
    return 0


def cmd_margins(cfg: ProjectConfig, args, out: Path) -> int:
    blocks = _blocks(cfg, args.fidelity, args.lead_in_forward)
    gangs = six_gangs(blocks)
    report = sensitivity_report(gangs)
    report = {"config_hash": config_hash(cfg), **report}
    if args.format == "svg":
        from . import plotting

        fr = bode(gangs.loop, np.logspace(0, 7, 701))
        plotting.plot_bode(fr, out / "margins.svg", title="loop transmission",
                           margins=margins(gangs.loop))
    elif args.format == "json":
        _write_json(out / "margins.json", report)
    else:
        _write_kv_csv(out / "margins.csv", report, report["config_hash"])
    _print_kv(report)
    return 0


def cmd_poleplace(cfg: ProjectConfig, args, out: Path) -> int:
    ctl = cfg.control
    design = design_position_controller(
        cfg.actuator, ctl.omega_n, ctl.zeta, drive=args.drive,
        observer_factor=ctl.observer_factor, lambda0=ctl.lambda0,
    )
    digest = config_hash(cfg)
    payload: dict = {
        "config_hash": digest,
        "drive": args.drive,
        "f_n_hz": ctl.f_n_hz,
        "zeta": ctl.zeta,
        "k": design.k[0],
        "g": design.g,
    }
    if args.drive == "voltage":
        closed = closed_loop_tf(design.model, design.k, design.l, design.g)
        payload["l"] = design.l[:, 0]
        payload["compensator_eigenvalues"] = design.compensator_eigenvalues
        a_e = design.model.a - design.l @ design.model.c
        payload["observer_max_fe_step"] = max_stable_step(a_e)
    else:
        red = design.reduced
        closed = close_with_current_loop(
            mechanical_tf(cfg.actuator), _inner_loop_tf(cfg),
            (float(design.k[0, 0]), float(design.k[0, 1])), design.g,
        )
        payload["observer"] = {
            "a_hat": red.a_hat, "b_hat": red.b_hat, "f_hat": red.f_hat,
            "l": red.l, "lambda0": red.lambda0,
            "max_fe_step": 2.0 / red.lambda0,
        }
    payload["closed_loop_poles"] = poly_roots(closed.den)
    if args.format == "json":
        _write_json(out / "poleplace.json", payload)
    elif args.format == "csv":
        _write_kv_csv(out / "poleplace.csv", _flatten(payload), digest)
    else:
        from . import plotting
        from .lti import step_response

        t = np.linspace(0.0, 10.0 / ctl.f_n_hz, 2001)
        y = step_response(closed, t)
        plotting.plot_step(t, y, out / "poleplace.svg", "angle [rad]",
                           title=f"closed-loop step ({args.drive} drive)")
    _print_kv(payload)
    return 0


def cmd_simulate(cfg: ProjectConfig, args, out: Path) -> int:
    controller = build_controller(cfg)
    trace = simulate(cfg.actuator, controller, cfg.sim)
    digest = config_hash(cfg)
    summary: dict = {
        "config_hash": digest,
        "controller": cfg.control.controller,
        "samples": len(trace.t),
        "peak_current_a": float(np.max(np.abs(trace.i_c))),
        "peak_voltage_v": float(np.max(np.abs(trace.v_c))),
    }
    if cfg.sim.reference.kind == "step":
        try:
            m = step_metrics(trace)
            summary.update({
                "rise_time_10_90_s": m.rise_time_10_90,
                "overshoot_pct": m.overshoot_pct,
                "settling_time_2pct_s": m.settling_time_2pct,
                "steady_state_error_pct": m.steady_state_error_pct,
            })
        except MetricError:
            pass
    if args.format == "svg":
        from . import plotting

        plotting.plot_trace(trace, out / "trace.svg",
                            title=cfg.control.controller)
    elif args.format == "json":
        _write_json(out / "trace.json", {
            "config_hash": digest,
            **{name: getattr(trace, name) for name in trace._COLUMNS},
            "summary": summary,
        })
    else:
        trace.to_csv(out / "trace.csv", comment=f"config {digest}")
    _print_kv(summary)
    return 0


def _sweep_point(payload: tuple) -> tuple[float, complex]:
    cfg_dict, f_hz, amplitude, cycles, settle_cycles = payload
    cfg = ProjectConfig.from_dict(cfg_dict)
    duration = (settle_cycles + cycles) / f_hz
    sim_cfg = dataclasses.replace(
        cfg.sim,
        duration=duration,
        reference=dataclasses.replace(
            cfg.sim.reference, kind="sine", amplitude=amplitude,
            frequency_hz=f_hz,
        ),
    )
    controller = build_controller(cfg)
    trace = simulate(cfg.actuator, controller, sim_cfg)
    return f_hz, frf_bin(trace, f_hz, cycles)


def cmd_sweep(cfg: ProjectConfig, args, out: Path) -> int:
    freqs = np.logspace(math.log10(args.fmin), math.log10(args.fmax),
                        int(args.points))
    amplitude = math.radians(args.amplitude_deg)
    jobs = [
        (cfg.to_dict(), float(f), amplitude, args.cycles, args.settle_cycles)
        for f in freqs
    ]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    from .lti import FrequencyResponse

    fr = FrequencyResponse.from_complex(
        np.array([f for f, _ in results]),
        np.array([v for _, v in results]),
    )
    digest = config_hash(cfg)
    if args.format == "svg":
        from . import plotting

        plotting.plot_bode(fr, out / "sweep.svg",
                           title=f"measured FRF ({cfg.control.controller})")
    elif args.format == "json":
        _write_json(out / "sweep.json", {
            "config_hash": digest,
            "freq_hz": fr.freq_hz,
            "mag_db": fr.mag_db,
            "phase_deg": fr.phase_deg,
        })
    else:
        fr.to_csv(out / "sweep.csv", comment=f"config {digest}")
    i3 = np.nonzero(fr.mag_db < fr.mag_db[0] - 3.0)[0]
    bw = float(fr.freq_hz[i3[0]]) if i3.size else None
    _print_kv({"points": len(freqs), "first_minus_3db_hz": bw})
    return 0


def cmd_report(cfg: ProjectConfig, args, out: Path) -> int:
    """Full analysis pipeline: design, loop analysis, position control,
    and simulations, with figures rendered next to the delimited data."""
    from . import plotting

    digest = config_hash(cfg)
    report: dict = {"config_hash": digest}

    plant = electrical_tf(cfg.actuator)
    designed = design_lead_lag(cfg.design, plant, cfg.drive)
    _, geom = lead_tf(designed)
    report["design"] = {
        "r_ld": designed.r_ld, "c_ld": designed.c_ld, "c_lg": designed.c_lg,
        "alpha": geom.alpha, "phi_max_deg": geom.phi_max,
    }

    blocks = assemble_drive(cfg.drive, plant)
    gangs = six_gangs(blocks)
    report["loop"] = sensitivity_report(gangs)
    responses = gang_bode(gangs)
    for name, fr in responses.items():
        fr.to_csv(out / f"gang_{name}.csv", comment=f"config {digest}")
    plotting.plot_gangs(responses, out / "gangs.svg", title="closed-loop gangs")
    loop_fr = bode(blocks.loop, np.logspace(0, 7, 701))
    loop_fr.to_csv(out / "bode.csv", comment=f"config {digest}")
    plotting.plot_bode(loop_fr, out / "bode.svg", title="loop transmission",
                       margins=margins(blocks.loop))

    t_inj, y_inj = injection_step(gangs.disturbance_to_output)
    plotting.plot_step(t_inj, 1e3 * y_inj, out / "injection.svg",
                       "current [mA]", title="0.2 V disturbance step")

    ctl = cfg.control
    designs = {}
    for drive in ("voltage", "current"):
        d = design_position_controller(
            cfg.actuator, ctl.omega_n, ctl.zeta, drive=drive,
            observer_factor=ctl.observer_factor, lambda0=ctl.lambda0,
        )
        entry = {"k": d.k[0], "g": d.g}
        if drive == "voltage":
            entry["l"] = d.l[:, 0]
            entry["compensator_eigenvalues"] = d.compensator_eigenvalues
        else:
            entry["observer"] = dataclasses.asdict(d.reduced)
        designs[drive] = entry
    report["poleplace"] = designs

    report["simulations"] = {}
    for name in ("pole_place_voltage", "pole_place_current", "fl_current"):
        run_cfg = dataclasses.replace(
            cfg, control=dataclasses.replace(ctl, controller=name)
        )
        trace = simulate(run_cfg.actuator, build_controller(run_cfg), run_cfg.sim)
        trace.to_csv(out / f"trace_{name}.csv", comment=f"config {digest}")
        plotting.plot_trace(trace, out / f"trace_{name}.svg", title=name)
        entry = {
            "peak_current_a": float(np.max(np.abs(trace.i_c))),
            "peak_voltage_v": float(np.max(np.abs(trace.v_c))),
        }
        if run_cfg.sim.reference.kind == "step":
            try:
                m = step_metrics(trace)
                entry.update({
                    "rise_time_10_90_s": m.rise_time_10_90,
                    "overshoot_pct": m.overshoot_pct,
                    "steady_state_error_pct": m.steady_state_error_pct,
                })
            except MetricError:
                pass
        report["simulations"][name] = entry

    flm = fl_margins(ctl.omega_n, ctl.zeta,
                     w_f=ctl.velocity_filter_factor * ctl.omega_n,
                     delay=cfg.sim.delay_samples / cfg.sim.f_s)
    report["fl_margins"] = {
        "gain_crossover_hz": flm.gain_crossover,
        "phase_margin_deg": flm.phase_margin,
        "bandwidth_3db_hz": flm.bandwidth_3db,
    }

    _write_json(out / "report.json", report)
    _write_kv_csv(out / "report.csv", _flatten(report), digest)
    _print_kv({"config_hash": digest, "artifacts": str(out)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopsmith",
        description="Design and analysis toolkit for a magnetically "
                    "restored rotary actuator and its drive electronics.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON project configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append",
                        default=[], dest="overrides",
                        help="override a config value by dotted path")
    common.add_argument("--out", metavar="DIR",
                        help="artifact directory (default: config output_dir)")
    common.add_argument("--format", choices=("csv", "json", "svg"),
                        default="csv", help="artifact format")

    freq = argparse.ArgumentParser(add_help=False)
    freq.add_argument("--fmin", type=float, default=1.0,
                      help="lower frequency bound in Hz")
    freq.add_argument("--fmax", type=float, default=1e7,
                      help="upper frequency bound in Hz")

    fidelity = argparse.ArgumentParser(add_help=False)
    fidelity.add_argument("--fidelity", choices=("ideal", "nonideal"),
                          default="ideal", help="op-amp fidelity for the blocks")
    fidelity.add_argument("--lead-in-forward", action="store_true",
                          help="move the lead shape into the forward path")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common],
                   help="size the lead-lag compensator for the crossover target")
    sub.add_parser("gangs", parents=[common, freq, fidelity],
                   help="compute the six closed-loop gangs")
    p = sub.add_parser("bode", parents=[common, freq, fidelity],
                       help="loop-transmission frequency response")
    p.add_argument("--points", type=int, default=701,
                   help="number of grid points")
    sub.add_parser("margins", parents=[common, fidelity],
                   help="stability margins and sensitivity peaks")
    p = sub.add_parser("poleplace", parents=[common],
                       help="pole-placement gains and observers")
    p.add_argument("--drive", choices=("voltage", "current"),
                   default="voltage", help="drive architecture to design for")
    sub.add_parser("simulate", parents=[common],
                   help="run the hybrid closed-loop simulation")
    p = sub.add_parser("sweep", parents=[common],
                       help="measure the closed-loop FRF by sine sweeps")
    p.add_argument("--fmin", type=float, default=50.0)
    p.add_argument("--fmax", type=float, default=2000.0)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--cycles", type=int, default=5,
                   help="measurement cycles per frequency")
    p.add_argument("--settle-cycles", type=int, default=5,
                   help="cycles discarded before measuring")
    p.add_argument("--amplitude-deg", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel simulation processes")
    sub.add_parser("report", parents=[common],
                   help="full pipeline: design, analysis, simulations, figures")
    return parser


_COMMANDS = {
    "design": cmd_design,
    "gangs": cmd_gangs,
    "bode": cmd_bode,
    "margins": cmd_margins,
    "poleplace": cmd_poleplace,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_project_config()
        if args.overrides:
            cfg = apply_overrides(cfg, args.overrides)
        out = Path(args.out if args.out else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
