"""Batch command-line front end.

Three subcommands: ``feasibility`` (side-condition report for an ideal
polygon), ``solve`` (one of the boundary-data regimes, emitting the field as
CSV plus mesh and convergence summaries as JSON), and ``diagnose`` (flux,
modulus and exhaustion reports).  JSON config in, CSV/JSON out; outputs are
deterministic bytes for a fixed config, and every file carries the config
hash so a run can be reproduced.

Exit codes: 0 success, 1 error, 2 negative-but-valid verdict (infeasible).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

TOOL_VERSION = "0.1.0"
THREAD_ENV = "SCHERKBENCH_THREADS"


def _cap_threads():
    cap = os.environ.get(THREAD_ENV)
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header(config: dict) -> dict:
    return {"tool_version": TOOL_VERSION, "config_hash": _config_hash(config)}


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


# -- config -> domain objects --------------------------------------------------


def _metric(config):
    from .geometry import Metric

    kappa = float(config.get("kappa", -1.0))
    return Metric(kappa)


def _polygon(config):
    from .geometry import IdealPoint
    from .polygons import IdealPolygon

    poly_cfg = config["polygon"]
    angles = [float(a) for a in poly_cfg["angles"]]
    if len(angles) % 2:
        raise ValueError("polygon needs an even number of vertex angles")
    return IdealPolygon(tuple(IdealPoint(a) for a in angles), _metric(config))


def _family(config, polygon):
    from .polygons import HorocycleFamily, default_family

    levels = config.get("levels")
    if levels is None:
        return default_family(polygon, margin=float(config.get("margin", 1.0)))
    return HorocycleFamily(tuple(float(v) for v in levels))


def _solver_config(config):
    from .solver import SolverConfig

    mesh = config.get("mesh", {})
    return SolverConfig(
        newton_tol=float(config.get("newton_tol", 1e-10)),
        max_iter=int(config.get("max_iter", 80)),
        refine_levels=int(mesh.get("refine", 0)),
        continuation_steps=int(config.get("continuation_steps", 1)),
        mesh_rings=int(mesh.get("rings", 14)),
        mesh_side=int(mesh.get("side", 16)),
        mesh_arc=int(mesh.get("arc", 6)),
        mesh_theta=int(mesh.get("theta", 10)),
        mesh_grading=float(mesh.get("grading", 0.0)),
    )


# -- output emission -----------------------------------------------------------


def _write_field_csv(path: Path, field, config):
    with open(path, "w", newline="") as fh:
        fh.write(f"# tool_version={TOOL_VERSION} config_hash={_config_hash(config)}\n")
        writer = csv.writer(fh)
        writer.writerow(["node", "x", "y", "u"])
        for i, ((x, y), v) in enumerate(zip(field.mesh.nodes, field.values)):
            writer.writerow([i, repr(float(x)), repr(float(y)), repr(float(v))])


def _write_mesh_json(path: Path, mesh, config):
    payload = _header(config)
    payload.update(
        {
            "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
            "triangles": [[int(a) for a in t] for t in mesh.triangles],
            "boundary_edges": [[int(a) for a in e] for e in mesh.boundary_edges],
            "boundary_tags": [mesh.pieces[int(p)].tag for p in mesh.edge_piece],
        }
    )
    _write_json(path, payload)


# -- subcommands ----------------------------------------------------------------


def cmd_feasibility(config: dict, out: Path, force: bool) -> int:
    from .polygons import js_feasible

    polygon = _polygon(config)
    family = _family(config, polygon)
    report = js_feasible(polygon, family)
    payload = _header(config)
    payload["report"] = report.to_dict()
    _write_json(out / "feasibility.json", payload)
    return 0 if report.feasible else 2


def cmd_solve(config: dict, out: Path, force: bool) -> int:
    from .polygons import js_feasible
    from .solver import (
        SolverError,
        solve_dirichlet_at_infinity,
        solve_ideal_scherk,
        solve_mixed_boundary,
        solve_scherk_sequence,
    )

    mode = config.get("mode", "ideal")
    cfg = _solver_config(config)
    try:
        if mode == "ideal":
            polygon = _polygon(config)
            family = _family(config, polygon)
            if not force and not js_feasible(polygon, family).feasible:
                print("polygon is infeasible (use --force to bypass)", file=sys.stderr)
                return 2
            fld = solve_ideal_scherk(polygon, family, T=float(config.get("T", 6.0)), cfg=cfg)
            fields = {"field": fld}
        elif mode == "mixed":
            polygon = _polygon(config)
            family = _family(config, polygon)
            fld = solve_mixed_boundary(
                polygon,
                [int(i) for i in config.get("sides_plus", [])],
                [int(i) for i in config.get("sides_minus", [])],
                {int(k): float(v) for k, v in config.get("sides_finite", {}).items()},
                family,
                T=float(config.get("T", 6.0)),
                cfg=cfg,
            )
            fields = {"field": fld}
        elif mode == "halfplane":
            from .geometry import Geodesic

            gamma = Geodesic(1.0 + 0j, 0.0, _metric(config))
            radii = [float(n) for n in config.get("radii", (2, 3, 4))]
            solved = solve_scherk_sequence(gamma, n_list=radii, cfg=cfg)
            fields = {f"field_n{n:g}": f for n, f in zip(radii, solved)}
        elif mode == "infinity":
            phi_spec = config.get("phi", {"type": "constant", "value": 0.0})
            if phi_spec["type"] == "constant":
                c = float(phi_spec["value"])
                phi = lambda th: c  # noqa: E731
            elif phi_spec["type"] == "sin":
                phi = math.sin
            elif phi_spec["type"] == "cos":
                phi = math.cos
            else:
                raise ValueError(f"unknown phi type {phi_spec['type']!r}")
            radii = [float(n) for n in config.get("radii", (2, 3, 4))]
            solved = solve_dirichlet_at_infinity(phi, n_list=radii, cfg=cfg, metric=_metric(config))
            fields = {f"field_n{n:g}": f for n, f in zip(radii, solved)}
        else:
            raise ValueError(f"unknown solve mode {mode!r}")
    except SolverError as exc:
        payload = _header(config)
        payload["error"] = str(exc)
        payload["residual_history"] = list(exc.residual_history or [])
        _write_json(out / "failure.json", payload)
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1

    summary = _header(config)
    summary["mode"] = mode
    summary["fields"] = {}
    for name, fld in fields.items():
        _write_field_csv(out / f"{name}.csv", fld, config)
        _write_mesh_json(out / f"{name}_mesh.json", fld.mesh, config)
        summary["fields"][name] = {
            "nodes": int(fld.mesh.num_nodes),
            "min": float(fld.values.min()),
            "max": float(fld.values.max()),
            "residual_history": [float(r) for r in fld.meta.get("residual_history", [])],
        }
    if mode == "halfplane" and len(fields) > 1:
        import numpy as np

        # compare on a compact inside the smallest half-disk
        solved = list(fields.values())
        r = 0.5 * math.tanh(0.25 * min(radii))
        pts = [
            (r * f * math.cos(a), r * f * math.sin(a))
            for f in (0.3, 0.6, 0.9)
            for a in np.linspace(0.2, math.pi - 0.2, 9)
        ]
        vals = [f.interpolate(pts) for f in solved]
        monotone = all(
            bool(np.all(b >= a - 1e-8)) for a, b in zip(vals[:-1], vals[1:])
        )
        summary["monotonicity"] = "pass" if monotone else "fail"
    _write_json(out / "summary.json", summary)
    return 0


def cmd_diagnose(config: dict, out: Path, force: bool) -> int:
    import numpy as np

    from .diagnostics import conformal_modulus, flux, run_exhaustion
    from .meshing import build_flat_annulus_mesh
    from .solver import EuclideanMetric, ScalarField, solve_ideal_scherk

    tasks = config.get("tasks", ["modulus_selftest"])
    payload = _header(config)

    for task in tasks:
        if task == "modulus_selftest":
            r_in, r_out = 0.3, 0.3 * math.e
            mesh = build_flat_annulus_mesh(r_in, r_out, n_rings=48, n_theta=96)
            u = ScalarField(mesh, np.zeros(mesh.num_nodes), EuclideanMetric())
            am = conformal_modulus(u, (0j, r_in * 1.0001), (0j, r_out * 0.9999))
            payload["modulus_selftest"] = {
                "modulus": am.modulus,
                "expected": 1.0 / (2.0 * math.pi),
                "error": abs(am.modulus - 1.0 / (2.0 * math.pi)),
            }
        elif task == "flux_loop":
            polygon = _polygon(config)
            family = _family(config, polygon)
            cfg = _solver_config(config)
            fld = solve_ideal_scherk(polygon, family, T=float(config.get("T", 6.0)), cfg=cfg)
            th = np.linspace(0.0, 2.0 * math.pi, 65)
            r = float(config.get("loop_radius", 0.2))
            loop = [(r * math.cos(a), r * math.sin(a)) for a in th]
            loop[-1] = loop[0]
            res = flux(fld, loop, polygon.metric)
            payload["flux_loop"] = {
                "value": res.value,
                "length": res.length,
                "ratio": abs(res.value) / res.length,
            }
        elif task == "exhaustion":
            polygon = _polygon(config)
            states = run_exhaustion(
                polygon,
                steps=int(config.get("steps", 1)),
                eps=config.get("eps"),
                cfg=_solver_config(config),
                T=float(config.get("T", 6.0)),
            )
            payload["exhaustion"] = [s.report() for s in states]
        else:
            raise ValueError(f"unknown diagnose task {task!r}")

    _write_json(out / "diagnose.json", payload)
    return 0


# -- entry point -----------------------------------------------------------------


def main(argv=None) -> int:
    _cap_threads()
    parser = argparse.ArgumentParser(
        prog="scherkbench",
        description="Feasibility, minimal-surface solves and diagnostics on the disk chart.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("feasibility", cmd_feasibility),
        ("solve", cmd_solve),
        ("diagnose", cmd_diagnose),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--force", action="store_true", help="skip feasibility precheck")
        p.add_argument("--seed", type=int, default=None, help="reserved; all algorithms deterministic")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config)
        if not isinstance(config, dict):
            raise ValueError("config must be a JSON object")
        kappa = float(config.get("kappa", -1.0))
        if kappa >= 0:
            raise ValueError("kappa must be negative")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(config, out, args.force)
    except Exception as exc:  # CLI boundary: report, don't traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
