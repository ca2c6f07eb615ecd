"""
Scenario-driven command line front end.

Subcommands:

* ``run`` evaluates a scenario (builtin name or config file) and writes
  the requested CSV/JSON artifacts plus a run manifest;
* ``validate`` executes the internal consistency and oracle checks and
  reports each one as measured-vs-threshold;
* ``convergence`` sweeps a tolerance / truncation / grid ladder and
  tabulates successive differences;
* ``list-scenarios`` prints the builtin scenario registry.

Configs are flat INI-style key/value files; every quantity is in Hartree
atomic units unless the key carries a unit suffix (``energy_keV``,
``E0_V_per_m``), converted at parse time with 1 keV = 1000/27.211386 Ha
and 1 a.u. of field = 5.14220675e11 V/m.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import validate as validate_mod
from .delta_pt import DeltaPerturbation
from .field_analysis import (
    GridSpec,
    evaluate_map,
    find_zeros,
    make_evaluator,
    nodal_lines,
    nodal_lines_to_json,
    to_binary,
    to_csv,
    vortex_set_to_json,
    default_workers,
)
from .homogeneous import HomogeneousField
from .lg_core import PacketParams
from .numerics import NonConvergenceError, QuadratureConfig
from .xfield_pt import XFieldPerturbation

HARTREE_PER_KEV = 1000.0 / 27.211386
VOLT_PER_METER_PER_AU = 5.14220675e11

KNOWN_OUTPUTS = ("density_map", "phase_map", "nodal", "zeros", "symmetry_report")


class ConfigError(ValueError):
    """Scenario configuration problem; message names the offending key."""


def pbar_from_kev(energy_kev, mass=1.0):
    return math.sqrt(2.0 * mass * energy_kev * HARTREE_PER_KEV)


def field_au_from_v_per_m(value):
    return value / VOLT_PER_METER_PER_AU


@dataclass
class Scenario:
    name: str
    packet: PacketParams
    perturbation: object
    t: float
    z: float  # nan means packet center pbar t / m
    half_extent: float  # nan means 3.5 * sigma_perp(t)
    n: int
    outputs: tuple
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def resolved_z(self):
        if math.isnan(self.z):
            return self.packet.pbar * self.t / self.packet.mass
        return self.z

    def resolved_half_extent(self):
        if math.isnan(self.half_extent):
            return 3.5 * self.packet.sigma_perp(self.t)
        return self.half_extent


_FIG_LAMBDA = {1: 30.0, 3: 0.2, 5: 0.007, 7: 2e-4, 2: 3.0, 4: 0.045, 6: 0.002, 8: 4e-5}
_FIG5_E0 = field_au_from_v_per_m(1.0e7)


def _paper_packet(l):
    return PacketParams(sigma=0.02, pbar=pbar_from_kev(2.0), l=l)


def builtin_scenarios():
    """Scenario registry mirroring the published figure parameter sets."""
    reg = {}
    for l in (1, 3, 5, 7):
        reg[f"fig1_l{l}"] = Scenario(
            name=f"fig1_l{l}", packet=_paper_packet(l),
            perturbation=DeltaPerturbation(lam=_FIG_LAMBDA[l], rho0=10.0, z0=0.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("density_map",),
        )
        reg[f"fig3_l{l}"] = Scenario(
            name=f"fig3_l{l}", packet=_paper_packet(l),
            perturbation=DeltaPerturbation(lam=_FIG_LAMBDA[l], rho0=10.0, z0=0.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("nodal", "zeros"),
        )
        reg[f"fig5_l{l}"] = Scenario(
            name=f"fig5_l{l}", packet=_paper_packet(l),
            perturbation=XFieldPerturbation(E0=_FIG5_E0, a=0.0, d=10.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("density_map", "phase_map"),
        )
    for l in (2, 4, 6, 8):
        reg[f"fig2_l{l}"] = Scenario(
            name=f"fig2_l{l}", packet=_paper_packet(l),
            perturbation=DeltaPerturbation(lam=_FIG_LAMBDA[l], rho0=10.0, z0=0.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("density_map",),
        )
        reg[f"fig4_l{l}"] = Scenario(
            name=f"fig4_l{l}", packet=_paper_packet(l),
            perturbation=DeltaPerturbation(lam=_FIG_LAMBDA[l], rho0=10.0, z0=0.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("nodal", "zeros"),
        )
        reg[f"fig6_l{l}"] = Scenario(
            name=f"fig6_l{l}", packet=_paper_packet(l),
            perturbation=XFieldPerturbation(E0=_FIG5_E0, a=0.0, d=10.0),
            t=3500.0, z=float("nan"), half_extent=float("nan"), n=161,
            outputs=("nodal", "zeros"),
        )
    return reg


def _require(section, key, cast=float):
    if key not in section:
        raise ConfigError(f"missing key '{key}' in section [{section.name}]")
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"invalid value for key '{key}': {section[key]!r}") from exc


def parse_scenario(path) -> Scenario:
    """Parse a flat INI scenario file."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    if "packet" not in cp:
        raise ConfigError("missing section [packet]")
    pk = cp["packet"]
    sigma = _require(pk, "sigma")
    l = _require(pk, "l", int)
    mass = float(pk.get("mass", 1.0))
    charge = float(pk.get("charge", -1.0))
    if "pbar" in pk and "energy_keV" in pk:
        raise ConfigError("give either 'pbar' or 'energy_keV', not both")
    if "pbar" in pk:
        pbar = _require(pk, "pbar")
    elif "energy_keV" in pk:
        pbar = pbar_from_kev(_require(pk, "energy_keV"), mass)
    else:
        raise ConfigError("missing key 'pbar' or 'energy_keV' in section [packet]")
    try:
        packet = PacketParams(sigma=sigma, pbar=pbar, l=l, mass=mass, charge=charge)
    except ValueError as exc:
        raise ConfigError(f"invalid packet: {exc}") from exc

    if "perturbation" not in cp:
        raise ConfigError("missing section [perturbation]")
    pe = cp["perturbation"]
    kind = pe.get("type", "")
    if kind == "delta":
        pert = DeltaPerturbation(
            lam=_require(pe, "lambda"), rho0=_require(pe, "rho0"), z0=float(pe.get("z0", 0.0))
        )
    elif kind == "xfield":
        if "E0_V_per_m" in pe:
            e0 = field_au_from_v_per_m(_require(pe, "E0_V_per_m"))
        else:
            e0 = _require(pe, "E0")
        pert = XFieldPerturbation(E0=e0, a=float(pe.get("a", 0.0)), d=_require(pe, "d"))
    elif kind == "homogeneous":
        prof = pe.get("profile", "constant")
        if prof == "constant":
            pert = HomogeneousField.constant(_require(pe, "E0"))
        elif prof == "sinusoid":
            pert = HomogeneousField.sinusoid(_require(pe, "E0"), _require(pe, "omega"))
        else:
            raise ConfigError(f"unsupported homogeneous profile '{prof}'")
    else:
        raise ConfigError(f"unknown perturbation type '{kind}' (key 'type')")

    if "grid" not in cp:
        raise ConfigError("missing section [grid]")
    gr = cp["grid"]
    t = _require(gr, "t")
    z = float("nan") if gr.get("z", "center") == "center" else _require(gr, "z")
    half = (
        float("nan")
        if gr.get("half_extent", "auto") == "auto"
        else _require(gr, "half_extent")
    )
    n = int(gr.get("n", 161))

    cfg_kwargs = {}
    if "quadrature" in cp:
        for key in cp["quadrature"]:
            if key not in (
                "rel_tol", "abs_tol", "max_subdivisions", "xi_cutoff",
                "tail_switch_u", "singularity_guard_delta",
            ):
                raise ConfigError(f"unknown quadrature key '{key}'")
            cast = int if key == "max_subdivisions" else float
            cfg_kwargs[key] = cast(cp["quadrature"][key])
    try:
        quad = QuadratureConfig(**cfg_kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid quadrature config: {exc}") from exc

    if "outputs" not in cp or "artifacts" not in cp["outputs"]:
        raise ConfigError("missing key 'artifacts' in section [outputs]")
    outputs = tuple(
        s.strip() for s in cp["outputs"]["artifacts"].split(",") if s.strip()
    )
    if not outputs:
        raise ConfigError("key 'outputs' lists no artifacts")
    for o in outputs:
        if o not in KNOWN_OUTPUTS:
            raise ConfigError(f"unknown artifact '{o}' in key 'outputs'")

    name = os.path.splitext(os.path.basename(path))[0]
    return Scenario(
        name=name, packet=packet, perturbation=pert, t=t, z=z,
        half_extent=half, n=n, outputs=outputs, quadrature=quad,
    )


def run_scenario(scn: Scenario, out_dir, workers=None, fmt="csv"):
    """Produce the scenario's artifacts; returns the manifest dict."""
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.time()
    z = scn.resolved_z()
    half = scn.resolved_half_extent()
    cfg = scn.quadrature
    manifest = {
        "scenario": scn.name,
        "packet": repr(scn.packet),
        "perturbation": repr(scn.perturbation),
        "quadrature": repr(cfg),
        "grid": {"half_extent": half, "n": scn.n, "t": scn.t, "z": z},
        "outputs": list(scn.outputs),
        "artifacts": {},
        "timings_s": {},
    }

    need_map = any(o in scn.outputs for o in ("density_map", "phase_map", "nodal", "symmetry_report"))
    writer = to_csv if fmt == "csv" else to_binary
    ext = "csv" if fmt == "csv" else "bin"

    fmap = None
    if need_map:
        from .field_analysis import FieldMap

        tm = time.time()
        grid0 = GridSpec.centered(half, scn.n, scn.t, z, which="zeroth")
        grid1 = GridSpec.centered(half, scn.n, scn.t, z, which="first")
        gridt = GridSpec.centered(half, scn.n, scn.t, z, which="total")
        map0 = evaluate_map(grid0, scn.packet, None, cfg, workers=workers)
        map1 = evaluate_map(grid1, scn.packet, scn.perturbation, cfg, workers=workers)
        fmap = FieldMap(grid=gridt, values=map0.values + map1.values,
                        metadata=dict(map1.metadata, which="total"))
        manifest["timings_s"]["map"] = round(time.time() - tm, 3)

    if "density_map" in scn.outputs or "phase_map" in scn.outputs:
        for which, m in (("zeroth", map0), ("first", map1), ("total", fmap)):
            path = os.path.join(out_dir, f"{scn.name}_{which}.{ext}")
            writer(m, path)
            manifest["artifacts"][f"{which}_map"] = os.path.basename(path)
        manifest["artifacts"]["fingerprint"] = fmap.metadata["fingerprint"]

    if "nodal" in scn.outputs:
        tm = time.time()
        polys = {part: nodal_lines(fmap, part) for part in ("real", "imag")}
        path = os.path.join(out_dir, f"{scn.name}_nodal.json")
        nodal_lines_to_json(polys, path)
        manifest["artifacts"]["nodal"] = os.path.basename(path)
        manifest["timings_s"]["nodal"] = round(time.time() - tm, 3)

    if "zeros" in scn.outputs:
        tm = time.time()
        search_radius = 3.0 / scn.packet.sigma
        zgrid = GridSpec.centered(half, scn.n, scn.t, z, which="total")
        zmap = fmap if fmap is not None else evaluate_map(
            zgrid, scn.packet, scn.perturbation, cfg, workers=workers,
            mask_radius=1.05 * search_radius,
        )
        vs = find_zeros(zmap, scn.packet, scn.perturbation, cfg, search_radius=search_radius)
        path = os.path.join(out_dir, f"{scn.name}_zeros.json")
        vortex_set_to_json(vs, path)
        manifest["artifacts"]["zeros"] = os.path.basename(path)
        manifest["zero_count"] = len(vs.zeros)
        manifest["total_charge"] = vs.total_charge
        manifest["timings_s"]["zeros"] = round(time.time() - tm, 3)

    if "symmetry_report" in scn.outputs:
        from .field_analysis import check_symmetry

        tm = time.time()
        first = GridSpec.centered(half, scn.n if scn.n % 2 else scn.n + 1, scn.t, z, which="first")
        fmap1 = evaluate_map(first, scn.packet, scn.perturbation, cfg, workers=workers)
        sign = (-1) ** (scn.packet.l + 1)
        dev = check_symmetry(fmap1, sign)
        manifest["symmetry_report"] = {
            "expected_sign": sign,
            "max_relative_deviation": dev,
        }

    manifest["timings_s"]["total"] = round(time.time() - t0, 3)
    with open(os.path.join(out_dir, f"{scn.name}_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def convergence_study(scn: Scenario, parameter, ladder, workers=None):
    """Probe-point (or zero-position) ladder with successive differences."""
    if len(ladder) < 3:
        raise ConfigError("convergence ladder needs at least 3 values")
    z = scn.resolved_z()
    sp = scn.packet.sigma_perp(scn.t)
    probes = [(0.8 * sp, 0.3 * sp), (-0.5 * sp, 0.9 * sp), (1.2 * sp, -0.4 * sp)]
    rows = []

    if parameter in ("rel_tol", "xi_cutoff"):
        values = []
        for v in ladder:
            kw = {parameter: float(v)}
            cfg = QuadratureConfig(
                **{
                    **{
                        "rel_tol": scn.quadrature.rel_tol,
                        "abs_tol": scn.quadrature.abs_tol,
                        "max_subdivisions": scn.quadrature.max_subdivisions,
                        "xi_cutoff": scn.quadrature.xi_cutoff,
                        "tail_switch_u": scn.quadrature.tail_switch_u,
                        "singularity_guard_delta": scn.quadrature.singularity_guard_delta,
                    },
                    **kw,
                }
            )
            ev = make_evaluator("total", scn.packet, scn.perturbation, cfg, scn.t, z)
            xs = np.array([p[0] for p in probes])
            ys = np.array([p[1] for p in probes])
            values.append(ev(xs, ys))
        diffs = [
            float(np.max(np.abs(values[i + 1] - values[i]) / np.abs(values[i + 1])))
            for i in range(len(values) - 1)
        ]
        for i, v in enumerate(ladder):
            rows.append(
                {
                    "value": v,
                    "probes": [repr(c) for c in values[i]],
                    "diff_to_next": diffs[i] if i < len(diffs) else None,
                }
            )
        monotone = all(diffs[i + 1] <= diffs[i] for i in range(len(diffs) - 1))
        return {"parameter": parameter, "rows": rows, "diffs": diffs, "monotone": monotone}

    if parameter == "grid":
        half = scn.resolved_half_extent()
        search_radius = 3.0 / scn.packet.sigma
        positions = []
        for n in ladder:
            grid = GridSpec.centered(half, int(n), scn.t, z, which="total")
            fmap = evaluate_map(
                grid, scn.packet, scn.perturbation, scn.quadrature,
                workers=workers, mask_radius=1.05 * search_radius,
            )
            vs = find_zeros(fmap, scn.packet, scn.perturbation, scn.quadrature,
                            search_radius=search_radius)
            positions.append([(zz.x, zz.y) for zz in vs.zeros])
        diffs = []
        for a, b in zip(positions[:-1], positions[1:]):
            if len(a) != len(b):
                diffs.append(float("inf"))
                continue
            d = 0.0
            for (xa, ya) in a:
                d = max(d, min(math.hypot(xa - xb, ya - yb) for (xb, yb) in b))
            diffs.append(d)
        for i, n in enumerate(ladder):
            rows.append(
                {
                    "value": n,
                    "zero_count": len(positions[i]),
                    "diff_to_next": diffs[i] if i < len(diffs) else None,
                }
            )
        cell = 2.0 * scn.resolved_half_extent() / (int(ladder[-2]) - 1)
        threshold = 0.5 * math.hypot(cell, cell) / 4.0
        return {
            "parameter": "grid",
            "rows": rows,
            "diffs": diffs,
            "cauchy_threshold": threshold,
            "converged": bool(diffs and diffs[-1] <= threshold),
        }

    raise ConfigError(f"unknown convergence parameter '{parameter}'")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vpl", description="twisted-packet perturbation laboratory"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: VPL_WORKERS or cpu count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="evaluate a scenario and write artifacts")
    p_run.add_argument("scenario", help="builtin scenario name or config file path")
    p_run.add_argument("--out", default="vpl-out", help="output directory")
    p_run.add_argument("--tol", type=float, default=None, help="override rel_tol")
    p_run.add_argument("--format", choices=("csv", "binary"), default="csv")

    p_val = sub.add_parser("validate", parents=[common], help="run the invariant/oracle check suite")
    p_val.add_argument("--level", choices=("fast", "full"), default="fast")
    p_val.add_argument("--out", default=None, help="optional report JSON path")

    p_conv = sub.add_parser("convergence", parents=[common], help="tolerance/truncation/grid ladder")
    p_conv.add_argument("scenario")
    p_conv.add_argument("--parameter", choices=("rel_tol", "xi_cutoff", "grid"), required=True)
    p_conv.add_argument("--ladder", required=True, help="comma-separated ladder values")
    p_conv.add_argument("--out", default=None, help="optional table JSON path")

    sub.add_parser("list-scenarios", parents=[common], help="print builtin scenario names")

    args = parser.parse_args(argv)
    workers = getattr(args, "workers", None)
    if workers is None:
        workers = default_workers()

    try:
        if args.command == "list-scenarios":
            for name, scn in sorted(builtin_scenarios().items()):
                kind = type(scn.perturbation).__name__
                print(f"{name:10s}  l={scn.packet.l}  {kind}  outputs={','.join(scn.outputs)}")
            return 0

        if args.command == "validate":
            report = validate_mod.run_checks(args.level)
            failed = validate_mod.print_report(report)
            if args.out:
                with open(args.out, "w") as fh:
                    json.dump(report, fh, indent=1, sort_keys=True)
            return 4 if failed else 0

        scenario_arg = args.scenario
        reg = builtin_scenarios()
        if scenario_arg in reg:
            scn = reg[scenario_arg]
        elif os.path.exists(scenario_arg):
            scn = parse_scenario(scenario_arg)
        else:
            raise ConfigError(
                f"'{scenario_arg}' is neither a builtin scenario nor a config file"
            )

        if args.command == "run":
            if args.tol is not None:
                scn.quadrature = QuadratureConfig(
                    rel_tol=args.tol,
                    abs_tol=scn.quadrature.abs_tol,
                    max_subdivisions=scn.quadrature.max_subdivisions,
                    xi_cutoff=scn.quadrature.xi_cutoff,
                    tail_switch_u=scn.quadrature.tail_switch_u,
                    singularity_guard_delta=scn.quadrature.singularity_guard_delta,
                )
            manifest = run_scenario(scn, args.out, workers=workers, fmt=args.format)
            print(json.dumps(manifest, indent=1, sort_keys=True))
            return 0

        if args.command == "convergence":
            ladder = [float(v) for v in args.ladder.split(",")]
            result = convergence_study(scn, args.parameter, ladder, workers=workers)
            for row in result["rows"]:
                print(row)
            keyline = {k: v for k, v in result.items() if k != "rows"}
            print(keyline)
            if args.out:
                with open(args.out, "w") as fh:
                    json.dump(result, fh, indent=1, sort_keys=True)
            if result.get("monotone") is False:
                print("warning: error decay is not monotone", file=sys.stderr)
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
