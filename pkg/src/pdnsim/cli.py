"""Command-line entry point.

Subcommands: default-config, validate, netlist, dc, tran, sweep, compare,
calibrate.  Exit codes: 0 success, 1 validation error, 2 solver failure,
3 I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

from . import __version__
from .analysis import (DEFAULT_DT_S, DEFAULT_T_END_S, SWEEP_AXES,
                       compare_configurations, evaluate, ir_map_to_csv,
                       run_sweep)
from .builder import assemble_netlist
from .calibrate import grid_search
from .config import (ScenarioConfig, benchmark_config, builtin_power_map,
                     config_from_json, config_to_json, load_config,
                     validate_config)
from .errors import SolverError, ValidationError
from .heatmap import emit_heatmap
from .mna import waveform_to_csv
from .netlist import netlist_to_text

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser():
    p = _Parser(prog="pdnsim",
                description="PDN simulator: DC IR drop, transient supply "
                            "noise and design-space sweeps")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out-dir", default=".", help="output directory")
        sp.add_argument("--power-map", choices=["uniform", "hotspot"],
                        help="override the power map with a builtin kind")
        sp.add_argument("--seed", type=int, default=0,
                        help="reserved; the solver is deterministic")

    def tran_flags(sp):
        sp.add_argument("--dt", type=float, default=DEFAULT_DT_S, help="time step [s]")
        sp.add_argument("--t-end", type=float, default=DEFAULT_T_END_S,
                        help="simulation window [s]")
        sp.add_argument("--method", choices=["trap", "be"], default="trap",
                        help="integration method")

    sp = sub.add_parser("default-config", help="emit the default scenario with "
                                               "every assumed value visible")
    sp.add_argument("--benchmark", default="on_package_4",
                    help="on_package_{1,2,4} | backside | chip_on_vrm_3d")
    sp.add_argument("--power-map", choices=["uniform", "hotspot"], default="hotspot")
    sp.add_argument("--out", help="write to file instead of stdout")

    sp = sub.add_parser("validate", help="validate a scenario file")
    common(sp)

    sp = sub.add_parser("netlist", help="export the assembled netlist as text")
    common(sp)

    sp = sub.add_parser("dc", help="DC IR-drop map (CSV + SVG heatmap)")
    common(sp)

    sp = sub.add_parser("tran", help="step-response waveform CSV")
    common(sp)
    tran_flags(sp)

    sp = sub.add_parser("sweep", help="parameter sweep -> CSV")
    common(sp)
    tran_flags(sp)
    sp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sp.add_argument("--values", required=True,
                    help="comma-separated axis values, e.g. 1,5,10,15")
    sp.add_argument("--no-transient", action="store_true",
                    help="DC metrics only (faster)")

    sp = sub.add_parser("compare", help="metric table for several scenarios")
    sp.add_argument("--config", action="append", required=True,
                    help="scenario JSON file (repeat; first is the reference)")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--power-map", choices=["uniform", "hotspot"])
    sp.add_argument("--seed", type=int, default=0)
    tran_flags(sp)
    sp.add_argument("--no-transient", action="store_true")

    sp = sub.add_parser("calibrate", help="grid-search the unpublished "
                                          "parasitic knobs against the "
                                          "transient anchors")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--tile-count", type=int, default=30)
    sp.add_argument("--dt", type=float, default=25e-12)
    sp.add_argument("--t-end", type=float, default=150e-9)

    return p


def _load(args) -> ScenarioConfig:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise _IoFail(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError([f"config is not valid JSON: {exc}"]) from exc
    if getattr(args, "power_map", None):
        cfg = dataclasses.replace(
            cfg, power_map=builtin_power_map(args.power_map, cfg.chip))
    return validate_config(cfg)


class _IoFail(Exception):
    pass


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IoFail(f"cannot write {path}: {exc}") from exc
    return str(path)


def _manifest(args, out_dir, outputs, extra=None):
    import os
    doc = {
        "command": args.command,
        "tool_version": __version__,
        "outputs": outputs,
        "wall_clock_s": None,  # filled by caller
        "parameters": {k: getattr(args, k) for k in
                       ("dt", "t_end", "method", "axis", "values", "power_map")
                       if hasattr(args, k)},
    }
    if extra:
        doc.update(extra)
    return os.path.join(out_dir, "manifest.json"), doc


def _finish_manifest(path, doc, t0):
    doc["wall_clock_s"] = time.perf_counter() - t0
    _write(path, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _run(args) -> int:
    import os
    t0 = time.perf_counter()
    out_dir = getattr(args, "out_dir", ".")
    if out_dir != ".":
        os.makedirs(out_dir, exist_ok=True)

    if args.command == "default-config":
        cfg = benchmark_config(args.benchmark, power_map_kind=args.power_map)
        text = config_to_json(cfg)
        if args.out:
            _write(args.out, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    if args.command == "validate":
        _load(args)
        print("ok")
        return EXIT_OK

    if args.command == "netlist":
        cfg = _load(args)
        net = assemble_netlist(cfg)
        out = _write(os.path.join(out_dir, "netlist.txt"), netlist_to_text(net))
        print(f"{net.node_count} nodes, {len(net.elements)} elements -> {out}")
        return EXIT_OK

    if args.command == "dc":
        cfg = _load(args)
        res = evaluate(cfg, transient=False)
        csv_path = _write(os.path.join(out_dir, "ir_map.csv"), ir_map_to_csv(res.ir_map))
        svg_path = emit_heatmap(res.ir_map, os.path.join(out_dir, "ir_map.svg"))
        mpath, doc = _manifest(args, out_dir, [csv_path, str(svg_path)],
                               {"config_snapshot": json.loads(config_to_json(res.config)),
                                "max_ir_drop_mv": res.ir_map.max_mv})
        _finish_manifest(mpath, doc, t0)
        print(f"max IR drop: {res.ir_map.max_mv:.3f} mV "
              f"(mean {res.ir_map.mean_mv:.3f} mV) -> {csv_path}")
        return EXIT_OK

    if args.command == "tran":
        cfg = _load(args)
        res = evaluate(cfg, transient=True, dt=args.dt, t_end=args.t_end,
                       method=args.method)
        csv_path = _write(os.path.join(out_dir, "waveform.csv"),
                          waveform_to_csv(res.waveform))
        mpath, doc = _manifest(args, out_dir, [csv_path],
                               {"config_snapshot": json.loads(config_to_json(res.config)),
                                "max_psn_mv": res.psn.max_psn_mv,
                                "first_droop_mv": res.psn.first_droop_mv,
                                "settling_mv": res.psn.settling_mv})
        _finish_manifest(mpath, doc, t0)
        print(f"max PSN: {res.psn.max_psn_mv:.3f} mV "
              f"(first droop {res.psn.first_droop_mv:.3f} mV) -> {csv_path}")
        return EXIT_OK

    if args.command == "sweep":
        cfg = _load(args)
        values = [float(v) for v in args.values.split(",") if v]
        sweep = run_sweep(cfg, args.axis, values,
                          transient=not args.no_transient,
                          dt=args.dt, t_end=args.t_end, method=args.method)
        csv_path = _write(os.path.join(out_dir, "sweep.csv"), sweep.to_csv())
        mpath, doc = _manifest(args, out_dir, [csv_path],
                               {"config_snapshot": json.loads(config_to_json(cfg)),
                                "failures": [p.error for p in sweep.failures]})
        _finish_manifest(mpath, doc, t0)
        for p in sweep.points:
            status = p.error or "ok"
            print(f"{sweep.axis}={p.value:g}: ir={p.max_ir_drop_mv} "
                  f"psn={p.max_psn_mv} [{status}]")
        return EXIT_OK

    if args.command == "compare":
        cfgs = []
        for path in args.config:
            a = argparse.Namespace(config=path, power_map=args.power_map)
            cfgs.append(_load(a))
        report = compare_configurations(cfgs, transient=not args.no_transient,
                                        dt=args.dt, t_end=args.t_end,
                                        method=args.method)
        csv_path = _write(os.path.join(out_dir, "compare.csv"), report.to_csv())
        txt = report.to_text()
        _write(os.path.join(out_dir, "compare.txt"), txt)
        mpath, doc = _manifest(args, out_dir, [csv_path])
        _finish_manifest(mpath, doc, t0)
        sys.stdout.write(txt)
        return EXIT_OK

    if args.command == "calibrate":
        best, history = grid_search(tile_count=args.tile_count, dt=args.dt,
                                    t_end=args.t_end, log=print)
        out = _write(os.path.join(out_dir, "calibration.json"),
                     json.dumps({"best": best, "history": history},
                                indent=2, sort_keys=True) + "\n")
        print(f"best knobs: {best['knobs']} (score {best['score']:.4f}) -> {out}")
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return _run(args)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"validation error: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _IoFail as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
