"""Batch experiment runner.

``ncclora run`` ingests a JSON experiment spec (or a shipped preset),
evaluates the analytical curves, optionally validates them by simulation,
and writes one CSV per curve plus a JSON run manifest and rendered
figures.  ``ncclora layout`` solves and prints a single ring layout.

Exit codes: 0 success, 2 spec parse/validation error, 3 infeasible
scenario, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analytics, energy, geometry, phy, report
from .analytics import LayoutError, LinkBudget, SchemeSpec
from .geometry import D2dParams
from .numerics import NumericsError
from .phy import DutyCycleError, PhyConfig
from .simulator import ALOHA_MODES, CI_Z, Scenario, estimate_curve

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

OUTPUT_KINDS = ("outage", "cooperation", "current", "layout", "tables")
SWEEP_VARIABLES = ("distance", "density", "target")
#: curve kinds that sweep a probe device over gateway distances
DISTANCE_OUTPUTS = ("outage", "cooperation", "current")

CSV_HEADER = ("sweep_value", "analytic_value", "simulated_value",
              "ci_low", "ci_high", "sf_used")
TABLE_HEADER = ("sf", "time_on_air_ms", "bit_rate_kbps", "payload_symbols",
                "sensitivity_dbm", "snr_threshold_db", "duty_cycle")

PRESETS = ("fig4a", "fig4b", "fig5", "fig6", "fig7", "table3")


class SpecError(ValueError):
    """The experiment spec failed parsing or validation."""


# ------------------------------------------------------------ spec parsing

def _need(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise SpecError(f"{where}: missing required field {key!r}")
    return _typed(mapping[key], key, kind, where)


def _typed(value, key: str, kind, where: str):
    if kind is float and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise SpecError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: tuple, where: str) -> None:
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise SpecError(f"{where}: unknown fields {sorted(unknown)}")


def _build(cls, data: dict, where: str):
    """Construct a config dataclass, turning ValueError into SpecError."""
    if not isinstance(data, dict):
        raise SpecError(f"{where}: expected an object")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from exc


def parse_spec(text: str, source: str = "<spec>") -> dict:
    """Parse and validate an experiment spec into resolved objects."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{source}: top level must be an object")
    _reject_unknown(raw, ("name", "scenario", "trials", "seed", "sweep",
                          "curves"), source)

    name = _need(raw, "name", str, source)
    scenario_raw = _need(raw, "scenario", dict, source)
    _reject_unknown(scenario_raw, ("density", "target_outage", "aloha_mode",
                                   "phy", "budget", "d2d"), "scenario")
    density = _need(scenario_raw, "density", float, "scenario")
    target = _need(scenario_raw, "target_outage", float, "scenario")
    if density <= 0.0 or not np.isfinite(density):
        raise SpecError("scenario.density: must be finite and positive")
    if not 0.0 < target < 1.0:
        raise SpecError("scenario.target_outage: must be in (0, 1)")
    mode = _typed(scenario_raw.get("aloha_mode", "density-doubling"),
                  "aloha_mode", str, "scenario")
    if mode not in ALOHA_MODES:
        raise SpecError(f"scenario.aloha_mode: must be one of {ALOHA_MODES}")
    cfg = _build(PhyConfig, scenario_raw.get("phy", {}), "scenario.phy")
    budget = _build(LinkBudget, scenario_raw.get("budget", {}),
                    "scenario.budget")
    d2d = _build(D2dParams, scenario_raw.get("d2d", {}), "scenario.d2d")

    curves_raw = _need(raw, "curves", list, source)
    if not curves_raw:
        raise SpecError("curves: need at least one requested curve")
    curves = []
    for i, c in enumerate(curves_raw):
        where = f"curves[{i}]"
        if not isinstance(c, dict):
            raise SpecError(f"{where}: expected an object")
        _reject_unknown(c, ("output", "scheme", "tx_power_dbm"), where)
        output = _need(c, "output", str, where)
        if output not in OUTPUT_KINDS:
            raise SpecError(f"{where}.output: must be one of {OUTPUT_KINDS}")
        scheme = None
        if output != "tables":
            try:
                scheme = SchemeSpec.from_name(_need(c, "scheme", str, where))
            except ValueError as exc:
                raise SpecError(f"{where}.scheme: {exc}") from exc
        power = c.get("tx_power_dbm")
        if power is not None:
            power = _typed(power, "tx_power_dbm", float, where)
        curves.append({"output": output, "scheme": scheme,
                       "tx_power_dbm": power})

    sweep_raw = raw.get("sweep")
    sweep = None
    if sweep_raw is None:
        if any(c["output"] in DISTANCE_OUTPUTS for c in curves):
            raise SpecError("sweep: required for outage/cooperation/current curves")
    else:
        if not isinstance(sweep_raw, dict):
            raise SpecError("sweep: expected an object")
        _reject_unknown(sweep_raw, ("variable", "values"), "sweep")
        variable = _need(sweep_raw, "variable", str, "sweep")
        if variable not in SWEEP_VARIABLES:
            raise SpecError(f"sweep.variable: must be one of {SWEEP_VARIABLES}")
        values = _need(sweep_raw, "values", list, "sweep")
        if not values:
            raise SpecError("sweep.values: must not be empty")
        try:
            values = [float(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise SpecError(f"sweep.values: {exc}") from exc
        if any(not np.isfinite(v) or v <= 0.0 for v in values):
            raise SpecError("sweep.values: values must be finite and positive")
        if sorted(values) != values:
            raise SpecError("sweep.values: values must be sorted ascending")
        if variable == "target" and any(v >= 1.0 for v in values):
            raise SpecError("sweep.values: outage targets must be below 1")
        sweep = {"variable": variable, "values": values}

    if sweep is not None and sweep["variable"] != "distance":
        bad = [c["output"] for c in curves if c["output"] in DISTANCE_OUTPUTS]
        if bad:
            raise SpecError(
                f"sweep.variable: {sweep['variable']} sweep cannot drive "
                f"{sorted(set(bad))} curves; those need a distance sweep")

    trials = _typed(raw.get("trials", 10_000), "trials", int, source)
    if trials < 1:
        raise SpecError("trials: must be at least 1")
    seed = _typed(raw.get("seed", 0), "seed", int, source)
    if seed < 0:
        raise SpecError("seed: must be non-negative")

    return {"name": name, "density": density, "target_outage": target,
            "aloha_mode": mode, "cfg": cfg, "budget": budget, "d2d": d2d,
            "curves": curves, "sweep": sweep, "trials": trials, "seed": seed}


def load_preset(name: str) -> str:
    if name not in PRESETS:
        raise SpecError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return (resources.files("ncclora") / "presets" / f"{name}.json").read_text()


# ----------------------------------------------------------- curve running

def _curve_stem(spec_name: str, curve: dict) -> str:
    parts = [spec_name, curve["output"]]
    if curve["scheme"] is not None:
        parts.append(curve["scheme"].kind.value)
    if curve["tx_power_dbm"] is not None:
        parts.append(f"{curve['tx_power_dbm']:g}dbm")
    return "_".join(parts)


def _child_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(seed, index)).generate_state(1)[0])


def _phy_table_rows(cfg: PhyConfig) -> list[dict]:
    rows = []
    for sf in geometry.SF_RANGE:
        rows.append({
            "sf": sf,
            "time_on_air_ms": 1e3 * phy.time_on_air(cfg, sf),
            "bit_rate_kbps": 1e-3 * phy.bit_rate(cfg, sf),
            "payload_symbols": phy.payload_symbols(cfg, sf),
            "sensitivity_dbm": phy.sensitivity_dbm(sf),
            "snr_threshold_db": phy.snr_threshold_db(sf),
            "duty_cycle": phy.duty_cycle(cfg, sf),
        })
    return rows


def _distance_rows(curve: dict, spec: dict, trials: int, mode: str,
                   analytic_only: bool, child_seed: int):
    """Rows + figure curve + manifest notes for one distance-swept curve."""
    scheme = curve["scheme"]
    budget = spec["budget"]
    if curve["tx_power_dbm"] is not None:
        budget = LinkBudget(**{**asdict(budget),
                               "tx_power_dbm": curve["tx_power_dbm"]})
    scenario = Scenario.build(scheme, spec["density"], spec["target_outage"],
                              spec["cfg"], budget, spec["d2d"],
                              aloha_mode=mode)
    layout = scenario.layout
    radius = layout.network_radius
    kept = [v for v in spec["sweep"]["values"]
            if geometry.INNER_FLOOR_M <= v <= radius]
    dropped = [v for v in spec["sweep"]["values"] if v not in kept]

    analytic = np.empty(len(kept))
    sfs = np.empty(len(kept), dtype=int)
    for i, d in enumerate(kept):
        bd = analytics.scheme_outage(d, layout, scheme, spec["density"],
                                     spec["cfg"], budget, spec["d2d"],
                                     area_mode="exact")
        sfs[i] = bd.sf
        if curve["output"] == "outage":
            analytic[i] = bd.scheme_outage
        elif curve["output"] == "cooperation":
            analytic[i] = bd.cooperation
        else:
            analytic[i] = energy.scheme_current_at(
                d, layout, scheme, spec["density"], spec["cfg"], budget,
                spec["d2d"], area_mode="exact")

    sim = ci_lo = ci_hi = None
    if not analytic_only and kept:
        rep = estimate_curve(scenario, kept, trials, child_seed)
        if curve["output"] == "outage":
            sim, ci_lo, ci_hi = rep.outage, rep.ci_low, rep.ci_high
        elif curve["output"] == "cooperation":
            sim = rep.cooperation_rate
            half = CI_Z * np.sqrt(sim * (1.0 - sim) / trials)
            ci_lo, ci_hi = np.clip(sim - half, 0, 1), np.clip(sim + half, 0, 1)
        else:
            sim = rep.mean_current_a
            d2d_cur = energy.avg_current_d2d(spec["cfg"])
            half = (CI_Z * d2d_cur
                    * np.sqrt(rep.neighbor_rate * (1 - rep.neighbor_rate) / trials))
            ci_lo, ci_hi = sim - half, sim + half

    rows = []
    for i, d in enumerate(kept):
        rows.append((d, analytic[i],
                     None if sim is None else float(sim[i]),
                     None if ci_lo is None else float(ci_lo[i]),
                     None if ci_hi is None else float(ci_hi[i]),
                     int(sfs[i])))
    label = scheme.kind.value
    if curve["tx_power_dbm"] is not None:
        label += f" @{curve['tx_power_dbm']:g}dBm"
    fig_curve = report.CurveData(
        label=label, output=curve["output"], sweep_values=np.asarray(kept),
        analytic=analytic, simulated=sim, ci_low=ci_lo, ci_high=ci_hi)
    return rows, fig_curve, layout, dropped


def _layout_rows(curve: dict, spec: dict):
    """Ring boundaries; swept over density/target when requested."""
    scheme = curve["scheme"]
    budget = spec["budget"]
    if curve["tx_power_dbm"] is not None:
        budget = LinkBudget(**{**asdict(budget),
                               "tx_power_dbm": curve["tx_power_dbm"]})
    sweep = spec["sweep"]
    rows = []
    layouts = []
    if sweep is None or sweep["variable"] == "distance":
        points = [(None, spec["density"], spec["target_outage"])]
    elif sweep["variable"] == "density":
        points = [(v, v, spec["target_outage"]) for v in sweep["values"]]
    else:
        points = [(v, spec["density"], v) for v in sweep["values"]]
    for sweep_value, density, target in points:
        layout = analytics.solve_ring_layout(scheme, density, target,
                                             spec["cfg"], budget, spec["d2d"])
        layouts.append(layout)
        for sf, boundary in zip(geometry.SF_RANGE, layout.boundaries):
            rows.append((sf if sweep_value is None else sweep_value,
                         boundary, None, None, None, sf))
    # a single solved layout is reportable as such; a swept family is not
    return rows, layouts[0] if len(layouts) == 1 else None


def run_experiment(spec: dict, out_dir: Path, trials: int | None = None,
                   seed: int | None = None, mode: str | None = None,
                   analytic_only: bool = False, figures: bool = True) -> dict:
    """Execute every requested curve; returns the manifest dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = spec["trials"] if trials is None else trials
    seed = spec["seed"] if seed is None else seed
    mode = spec["aloha_mode"] if mode is None else mode
    if trials < 1:
        raise SpecError("trials: must be at least 1")
    if seed < 0:
        raise SpecError("seed: must be non-negative")
    if mode not in ALOHA_MODES:
        raise SpecError(f"mode: must be one of {ALOHA_MODES}")

    stems = [_curve_stem(spec["name"], c) for c in spec["curves"]]
    if len(set(stems)) != len(stems):
        raise SpecError("curves: duplicate output/scheme/power combinations")

    manifest_curves = []
    fig_groups: dict[str, list[report.CurveData]] = {}
    layout_group: dict[str, tuple[float, ...]] = {}
    table_rows_for_fig = None
    for index, curve in enumerate(spec["curves"]):
        stem = stems[index]
        path = out_dir / f"{stem}.csv"
        child = _child_seed(seed, index)
        entry = {"output": curve["output"],
                 "scheme": None if curve["scheme"] is None
                 else curve["scheme"].kind.value,
                 "tx_power_dbm": curve["tx_power_dbm"],
                 "file": path.name, "seed": child,
                 "layout": None, "dropped_sweep_values": []}

        if curve["output"] == "tables":
            table_rows = _phy_table_rows(spec["cfg"])
            _write_table_csv(path, table_rows)
            table_rows_for_fig = table_rows
        elif curve["output"] == "layout":
            rows, layout = _layout_rows(curve, spec)
            _write_curve_csv(path, rows)
            if layout is not None:
                entry["layout"] = list(layout.boundaries)
                label = curve["scheme"].kind.value
                if curve["tx_power_dbm"] is not None:
                    label += f" @{curve['tx_power_dbm']:g}dBm"
                layout_group[label] = layout.boundaries
        else:
            rows, fig_curve, layout, dropped = _distance_rows(
                curve, spec, trials, mode, analytic_only, child)
            _write_curve_csv(path, rows)
            entry["layout"] = list(layout.boundaries)
            entry["dropped_sweep_values"] = dropped
            fig_groups.setdefault(curve["output"], []).append(fig_curve)
        manifest_curves.append(entry)

    figure_files = []
    if figures:
        for output, curves in fig_groups.items():
            fig_path = out_dir / f"{spec['name']}_{output}.png"
            report.render_curve_figure(output, curves,
                                       spec["sweep"]["variable"], fig_path)
            figure_files.append(fig_path.name)
        if layout_group:
            fig_path = out_dir / f"{spec['name']}_layout.png"
            report.render_layout_figure(layout_group, fig_path)
            figure_files.append(fig_path.name)
        if table_rows_for_fig is not None:
            fig_path = out_dir / f"{spec['name']}_tables.png"
            report.render_table_figure(table_rows_for_fig, fig_path)
            figure_files.append(fig_path.name)

    manifest = {
        "name": spec["name"], "version": __version__, "seed": seed,
        "trials": trials, "aloha_mode": mode, "analytic_only": analytic_only,
        "scenario": {"density": spec["density"],
                     "target_outage": spec["target_outage"],
                     "phy": asdict(spec["cfg"]),
                     "budget": asdict(spec["budget"]),
                     "d2d": asdict(spec["d2d"])},
        "sweep": spec["sweep"],
        "curves": manifest_curves,
        "figures": sorted(figure_files),
    }
    with open(out_dir / f"{spec['name']}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_curve_csv(path: Path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_table_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in TABLE_HEADER])


# ------------------------------------------------------------- subcommands

def _cmd_run(args) -> int:
    if (args.spec is None) == (args.preset is None):
        raise SpecError("exactly one of --spec and --preset is required")
    if args.spec is not None:
        path = Path(args.spec)
        if not path.exists():
            raise SpecError(f"spec file not found: {path}")
        spec = parse_spec(path.read_text(), str(path))
    else:
        spec = parse_spec(load_preset(args.preset), f"preset:{args.preset}")
    run_experiment(spec, Path(args.out), trials=args.trials, seed=args.seed,
                   mode=args.mode, analytic_only=args.analytic_only,
                   figures=not args.no_figures)
    return EXIT_OK


def _cmd_layout(args) -> int:
    try:
        scheme = SchemeSpec.from_name(args.scheme)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    cfg = PhyConfig() if args.slot_seconds is None \
        else PhyConfig(slot_seconds=args.slot_seconds)
    budget = LinkBudget() if args.tx_power_dbm is None \
        else LinkBudget(tx_power_dbm=args.tx_power_dbm)
    layout = analytics.solve_ring_layout(scheme, args.density, args.target,
                                         cfg, budget)
    print(f"scheme: {scheme.kind.value}  density: {args.density:g} /m^2  "
          f"target outage: {args.target:g}")
    lower = layout.inner_floor
    for sf, upper in zip(geometry.SF_RANGE, layout.boundaries):
        duty = phy.duty_cycle(cfg, sf)
        print(f"  SF{sf}: boundary {upper:12.3f} m  width {upper - lower:11.3f} m"
              f"  duty {duty:.6f}")
        lower = upper
    radius = layout.network_radius
    print(f"network radius: {radius:.3f} m")
    print(f"supported devices: {analytics.supported_devices(args.density, radius):.1f}")
    return EXIT_OK


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="ncclora",
        description="Outage and energy experiments for cooperative LoRa uplinks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment spec or preset")
    run.add_argument("--spec", help="path to a JSON experiment spec")
    run.add_argument("--preset", help=f"shipped preset ({', '.join(PRESETS)})")
    run.add_argument("--trials", type=int, help="override trials per point")
    run.add_argument("--seed", type=int, help="override the RNG seed")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--analytic-only", action="store_true",
                     help="skip the Monte Carlo columns")
    run.add_argument("--mode", choices=ALOHA_MODES,
                     help="override the interference model")
    run.add_argument("--no-figures", action="store_true",
                     help="skip PNG rendering")

    layout = sub.add_parser("layout", help="solve and print one ring layout")
    layout.add_argument("--scheme", required=True,
                        help="lora, rt-lora or ncc-lora")
    layout.add_argument("--density", type=float, required=True,
                        help="device density per m^2")
    layout.add_argument("--target", type=float, required=True,
                        help="boundary outage target")
    layout.add_argument("--slot-seconds", type=float,
                        help="slot length override")
    layout.add_argument("--tx-power-dbm", type=float,
                        help="uplink transmit power override")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        if args.command == "layout":
            return _cmd_layout(args)
        return _cmd_run(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (LayoutError, DutyCycleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid parameter combinations surfaced past spec validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
