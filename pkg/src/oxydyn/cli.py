"""Batch command-line front end.

Usage: oxydyn --config run.json --out results/

The JSON config has an optional "model" block (ModelParams fields), a
required "task" block with a "name" and task-specific options, and an
optional "thresholds" block. Unknown keys anywhere are rejected. Exit
codes: 0 success, 2 config error, 3 numerical failure, 4 bracket/branch
error from a threshold search.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .equilibria import (boundary_equilibria, coexistence_equilibria,
                         extinction_state, EquilibriumReport)
from .errors import (BracketError, BranchError, ConfigError, OxydynError)
from .integrate import integrate
from .model import ModelParams, eval_jacobian
from .pde import Grid1D, apply_initial_condition, run as pde_run
from .slowfast import find_folds, trace_critical_manifold
from .stability import (bifurcation_diagram, hopf_threshold,
                        saddle_node_threshold)
from .turing import critical_wavenumber, turing_test
from . import diagnostics

TASKS = ("equilibria", "hopf", "saddle-node", "diagram", "manifold",
         "ode", "pde", "turing", "classify")

MODEL_FIELDS = tuple(f.name for f in dataclasses.fields(ModelParams))

DEFAULT_THRESHOLDS = {
    "extinction": 1e-6,
    "anoxia_fraction": 0.05,
    "omz_fraction": 0.5,
}


@dataclass
class RunConfig:
    params: ModelParams
    task: str
    options: dict
    thresholds: dict
    out: str | None = None


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _require_number(val, path, lo=None, hi=None, lo_open=False):
    if not isinstance(val, (int, float)) or isinstance(val, bool) \
            or not math.isfinite(float(val)):
        _fail(path, "must be a finite number")
    val = float(val)
    if lo is not None and (val <= lo if lo_open else val < lo):
        _fail(path, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and val > hi:
        _fail(path, f"must be <= {hi}")
    return val


def _require_int(val, path, lo=1):
    if not isinstance(val, int) or isinstance(val, bool):
        _fail(path, "must be an integer")
    if val < lo:
        _fail(path, f"must be >= {lo}")
    return val


def _require_pair(val, path):
    if not isinstance(val, list) or len(val) != 2:
        _fail(path, "must be a list of two numbers")
    return [_require_number(val[i], f"{path}[{i}]") for i in range(2)]


def _require_triple(val, path, lo=None):
    if not isinstance(val, list) or len(val) != 3:
        _fail(path, "must be a list of three numbers")
    return [_require_number(val[i], f"{path}[{i}]", lo=lo) for i in range(3)]


def _require_choice(val, path, choices):
    if val not in choices:
        _fail(path, f"must be one of {sorted(choices)}")
    return val


def _check_keys(block: dict, path: str, allowed):
    for key in block:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else key, "unknown key")


def _pde_options(task: dict, path: str) -> dict:
    opts = {
        "D": _require_number(task.get("D", 1.0), f"{path}.D", lo=0,
                             lo_open=True),
        "L": _require_number(task.get("L", 500.0), f"{path}.L", lo=0,
                             lo_open=True),
        "dx": _require_number(task.get("dx", 1.0), f"{path}.dx", lo=0,
                              lo_open=True),
        "dt": _require_number(task.get("dt", 0.01), f"{path}.dt", lo=0,
                              lo_open=True),
        "t_end": _require_number(task.get("t_end", 2000.0),
                                 f"{path}.t_end", lo=0, lo_open=True),
    }
    if "snapshot_stride" in task:
        opts["snapshot_stride"] = _require_int(
            task["snapshot_stride"], f"{path}.snapshot_stride")
    if "base" in task:
        opts["base"] = _require_triple(task["base"], f"{path}.base", lo=0)
    ic = task.get("ic", {"kind": "reference"})
    if not isinstance(ic, dict):
        _fail(f"{path}.ic", "must be an object")
    _check_keys(ic, f"{path}.ic", {"kind", "amp_c", "amp_u", "half_width"})
    kind = _require_choice(ic.get("kind", "reference"), f"{path}.ic.kind",
                           {"reference", "bump"})
    opts["ic"] = {
        "kind": kind,
        "amp_c": _require_number(ic.get("amp_c", 0.5), f"{path}.ic.amp_c"),
        "amp_u": _require_number(ic.get("amp_u", 0.2), f"{path}.ic.amp_u"),
        "half_width": _require_number(ic.get("half_width", 10.0),
                                      f"{path}.ic.half_width", lo=0,
                                      lo_open=True),
    }
    return opts


def _validate_task(task: dict) -> tuple[str, dict]:
    if not isinstance(task, dict):
        _fail("task", "must be an object")
    if "name" not in task:
        _fail("task.name", "is required")
    name = _require_choice(task["name"], "task.name", set(TASKS))
    allowed = {
        "equilibria": {"name", "grid_bounds", "grid_n"},
        "hopf": {"name", "which", "bracket", "tol", "walk_steps"},
        "saddle-node": {"name", "which", "bracket", "tol"},
        "diagram": {"name", "which", "range", "n_samples", "t_transient",
                    "t_window", "dt"},
        "manifold": {"name", "seed", "arc_step", "max_points"},
        "ode": {"name", "ic", "dt", "t_end", "record_stride", "method"},
        "pde": {"name", "D", "L", "dx", "dt", "t_end", "snapshot_stride",
                "ic", "base"},
        "turing": {"name", "D", "k2_max", "dk2", "L"},
        "classify": {"name", "D", "L", "dx", "dt", "t_end",
                     "snapshot_stride", "ic", "base"},
    }[name]
    _check_keys(task, "task", allowed)

    if name == "equilibria":
        opts = {}
        if "grid_bounds" in task:
            opts["grid_bounds"] = _require_pair(task["grid_bounds"],
                                                "task.grid_bounds")
        opts["grid_n"] = _require_int(task.get("grid_n", 40),
                                      "task.grid_n", lo=2)
    elif name in ("hopf", "saddle-node"):
        if "which" not in task:
            _fail("task.which", "is required")
        if "bracket" not in task:
            _fail("task.bracket", "is required")
        opts = {
            "which": _require_choice(task["which"], "task.which",
                                     {"mu1", "mu2"}),
            "bracket": _require_pair(task["bracket"], "task.bracket"),
            "tol": _require_number(task.get("tol", 1e-6), "task.tol",
                                   lo=0, lo_open=True),
        }
        if name == "hopf":
            opts["walk_steps"] = _require_int(task.get("walk_steps", 16),
                                              "task.walk_steps", lo=2)
    elif name == "diagram":
        for req in ("which", "range", "n_samples"):
            if req not in task:
                _fail(f"task.{req}", "is required")
        opts = {
            "which": _require_choice(task["which"], "task.which",
                                     {"mu1", "mu2"}),
            "range": _require_pair(task["range"], "task.range"),
            "n_samples": _require_int(task["n_samples"], "task.n_samples",
                                      lo=2),
            "t_transient": _require_number(task.get("t_transient", 2000.0),
                                           "task.t_transient", lo=500),
            "t_window": _require_number(task.get("t_window", 1000.0),
                                        "task.t_window", lo=500),
            "dt": _require_number(task.get("dt", 1e-3), "task.dt", lo=0,
                                  lo_open=True),
        }
    elif name == "manifold":
        if "seed" not in task:
            _fail("task.seed", "is required")
        opts = {
            "seed": _require_triple(task["seed"], "task.seed"),
            "arc_step": _require_number(task.get("arc_step", 0.01),
                                        "task.arc_step", lo=0, lo_open=True),
            "max_points": _require_int(task.get("max_points", 2000),
                                       "task.max_points", lo=2),
        }
    elif name == "ode":
        if "ic" not in task:
            _fail("task.ic", "is required")
        opts = {
            "ic": _require_triple(task["ic"], "task.ic", lo=0),
            "dt": _require_number(task.get("dt", 1e-3), "task.dt", lo=0,
                                  lo_open=True),
            "t_end": _require_number(task.get("t_end", 100.0), "task.t_end",
                                     lo=0, lo_open=True),
            "record_stride": _require_int(task.get("record_stride", 1),
                                          "task.record_stride"),
            "method": _require_choice(task.get("method", "rk4"),
                                      "task.method", {"rk4", "euler"}),
        }
    elif name in ("pde", "classify"):
        opts = _pde_options(task, "task")
    elif name == "turing":
        opts = {
            "D": _require_number(task.get("D", 1.0), "task.D", lo=0,
                                 lo_open=True),
            "k2_max": _require_number(task.get("k2_max", 4.0),
                                      "task.k2_max", lo=0, lo_open=True),
            "dk2": _require_number(task.get("dk2", 1e-3), "task.dk2",
                                   lo=0, lo_open=True),
            "L": _require_number(task.get("L", 500.0), "task.L", lo=0,
                                 lo_open=True),
        }
    return name, opts


def parse_config(text: str) -> RunConfig:
    """Parse and schema-validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _check_keys(doc, "", {"model", "task", "thresholds", "out"})
    if "task" not in doc:
        _fail("task", "is required")

    model = doc.get("model", {})
    if not isinstance(model, dict):
        _fail("model", "must be an object")
    _check_keys(model, "model", set(MODEL_FIELDS))
    for key, val in model.items():
        _require_number(val, f"model.{key}")
    try:
        params = ModelParams(**model)
    except ConfigError as exc:
        raise ConfigError(f"model: {exc}") from exc

    thresholds = dict(DEFAULT_THRESHOLDS)
    tblock = doc.get("thresholds", {})
    if not isinstance(tblock, dict):
        _fail("thresholds", "must be an object")
    _check_keys(tblock, "thresholds", set(DEFAULT_THRESHOLDS))
    if "extinction" in tblock:
        thresholds["extinction"] = _require_number(
            tblock["extinction"], "thresholds.extinction", lo=0,
            lo_open=True)
    for key in ("anoxia_fraction", "omz_fraction"):
        if key in tblock:
            thresholds[key] = _require_number(
                tblock[key], f"thresholds.{key}", lo=0, hi=1.0,
                lo_open=True)

    name, opts = _validate_task(doc["task"])
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        _fail("out", "must be a string path")
    return RunConfig(params=params, task=name, options=opts,
                     thresholds=thresholds, out=out)


def emit_config(cfg: RunConfig) -> dict:
    """Effective config as a plain JSON-compatible dict. Parsing the
    emitted document reproduces the config (round trip)."""
    doc = {
        "model": {f: getattr(cfg.params, f) for f in MODEL_FIELDS},
        "task": {"name": cfg.task, **cfg.options},
        "thresholds": dict(cfg.thresholds),
    }
    if cfg.out is not None:
        doc["out"] = cfg.out
    return doc


def _report_dict(rep: EquilibriumReport) -> dict:
    return {
        "location": list(rep.location.as_array()),
        "kind": rep.kind.value,
        "eigenvalues": [[float(e.real), float(e.imag)]
                        for e in rep.eigenvalues],
        "stability": rep.stability.value if rep.stability else None,
        "unstable_dim": rep.unstable_dim,
        "marginal": rep.marginal,
    }


def _attractor_dict(summary) -> dict | None:
    if summary is None:
        return None
    return {
        "kind": summary.kind.value,
        "c_mean": summary.c_mean,
        "c_min": summary.c_min,
        "c_max": summary.c_max,
        "period": summary.period,
    }


def _write_json(out_dir: str, name: str, payload):
    with open(os.path.join(out_dir, name), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(out_dir: str, name: str, header: str, columns):
    data = np.column_stack(columns)
    np.savetxt(os.path.join(out_dir, name), data, delimiter=",",
               header=header, comments="", fmt="%.15g")


def _resolve_base(p: ModelParams, opts: dict):
    if "base" in opts:
        return np.asarray(opts["base"], dtype=float)
    reports = coexistence_equilibria(p)
    if not reports:
        raise ConfigError(
            "no coexistence equilibrium found to use as the homogeneous "
            "base state; provide task.base explicitly")
    return reports[-1].location.as_array()


def _run_pde(cfg: RunConfig):
    opts = cfg.options
    p = cfg.params
    grid = Grid1D(L=opts["L"], dx=opts["dx"])
    base = _resolve_base(p, opts)
    ic = apply_initial_condition(
        grid, base, kind=opts["ic"]["kind"], amp_c=opts["ic"]["amp_c"],
        amp_u=opts["ic"]["amp_u"], half_width=opts["ic"]["half_width"],
        params=p)
    record = pde_run(p, opts["D"], grid, ic, dt=opts["dt"],
                     t_end=opts["t_end"],
                     snapshot_stride=opts.get("snapshot_stride"),
                     c_star=float(base[0]),
                     anoxia_fraction=cfg.thresholds["anoxia_fraction"])
    return grid, base, record


def run_task(cfg: RunConfig, out_dir: str) -> None:
    """Dispatch to the named task and write its artifacts into out_dir."""
    p = cfg.params
    opts = cfg.options
    os.makedirs(out_dir, exist_ok=True)
    started = time.time()

    if cfg.task == "equilibria":
        kw = {"grid_n": opts["grid_n"]}
        if "grid_bounds" in opts:
            kw["grid_bounds"] = tuple(opts["grid_bounds"])
        payload = {
            "extinction": _report_dict(extinction_state(p)),
            "boundary": [_report_dict(r) for r in boundary_equilibria(p)],
            "coexistence": [_report_dict(r)
                            for r in coexistence_equilibria(p, **kw)],
        }
        _write_json(out_dir, "equilibria.json", payload)

    elif cfg.task == "hopf":
        value = hopf_threshold(p, opts["which"], tuple(opts["bracket"]),
                               tol=opts["tol"],
                               walk_steps=opts["walk_steps"])
        _write_json(out_dir, "threshold.json",
                    {"kind": "Hopf", "which": opts["which"],
                     "bracket": opts["bracket"], "value": value})

    elif cfg.task == "saddle-node":
        value = saddle_node_threshold(p, opts["which"],
                                      tuple(opts["bracket"]),
                                      tol=opts["tol"])
        _write_json(out_dir, "threshold.json",
                    {"kind": "SaddleNode", "which": opts["which"],
                     "bracket": opts["bracket"], "value": value})

    elif cfg.task == "diagram":
        diagram = bifurcation_diagram(
            p, opts["which"], tuple(opts["range"]), opts["n_samples"],
            t_transient=opts["t_transient"], t_window=opts["t_window"],
            dt=opts["dt"])
        payload = {
            "parameter": diagram.parameter,
            "values": list(map(float, diagram.values)),
            "samples": [{
                "value": s.value,
                "equilibria": [_report_dict(r) for r in s.equilibria],
                "near": _attractor_dict(s.near),
                "far": _attractor_dict(s.far),
                "error": s.error,
            } for s in diagram.samples],
            "thresholds": [{"value": v, "kind": k.value}
                           for v, k in diagram.thresholds],
        }
        _write_json(out_dir, "diagram.json", payload)

    elif cfg.task == "manifold":
        branch = trace_critical_manifold(p, np.asarray(opts["seed"]),
                                         arc_step=opts["arc_step"],
                                         max_points=opts["max_points"])
        _write_csv(out_dir, "manifold.csv", "c,u,v,attracting",
                   [branch.points[:, 0], branch.points[:, 1],
                    branch.points[:, 2],
                    branch.attracting.astype(float)])
        folds = find_folds(branch, p)
        _write_json(out_dir, "folds.json", [{
            "location": list(f.location.as_array()),
            "kind": f.kind.value,
            "degeneracy": list(f.degeneracy),
            "det_residual": f.det_residual,
        } for f in folds])

    elif cfg.task == "ode":
        traj = integrate(p, np.asarray(opts["ic"]), dt=opts["dt"],
                         t_end=opts["t_end"],
                         record_stride=opts["record_stride"],
                         method=opts["method"],
                         extinction_threshold=cfg.thresholds["extinction"])
        _write_csv(out_dir, "trajectory.csv", "t,c,u,v",
                   [traj.times, traj.states[:, 0], traj.states[:, 1],
                    traj.states[:, 2]])
        _write_json(out_dir, "events.json",
                    [{"time": t, "kind": k} for t, k in traj.events])

    elif cfg.task in ("pde", "classify"):
        grid, base, record = _run_pde(cfg)
        _write_csv(out_dir, "means.csv", "t,c_mean,u_mean,v_mean",
                   [record.times, record.mean_series[:, 0],
                    record.mean_series[:, 1], record.mean_series[:, 2]])
        _write_json(out_dir, "events.json",
                    [{"time": t, "kind": k} for t, k in record.events])
        if cfg.task == "pde":
            for snap in record.snapshots:
                _write_csv(out_dir, f"snap_t{snap.time:.2f}.csv",
                           "x,c,u,v", [grid.x, snap.c, snap.u, snap.v])
        else:
            regime = diagnostics.classify_regime(
                record, c_ref=float(base[0]),
                omz_fraction=cfg.thresholds["omz_fraction"])
            _write_json(out_dir, "regime.json", {
                "label": regime.label.value,
                "evidence": regime.evidence,
                "config_echo": emit_config(cfg),
            })

    elif cfg.task == "turing":
        base = coexistence_equilibria(p)
        if not base:
            raise ConfigError("no coexistence equilibrium for the Turing "
                              "analysis")
        eq = base[-1].location.as_array()
        curve = turing_test(p, eq, opts["D"], k2_max=opts["k2_max"],
                            dk2=opts["dk2"])
        _write_csv(out_dir, "dispersion.csv", "k2,p2,p1,p0,max_growth",
                   [curve.samples[:, i] for i in range(5)])
        kt2 = critical_wavenumber(eval_jacobian(p, eq), opts["D"])
        nearest_mode = None
        if kt2 is not None:
            m = max(1, round(math.sqrt(kt2) * opts["L"] / math.pi))
            nearest_mode = (m * math.pi / opts["L"]) ** 2
        _write_json(out_dir, "verdict.json", {
            "verdict": curve.verdict.value,
            "unstable_band": list(curve.unstable_band)
            if curve.unstable_band else None,
            "k_T2": kt2,
            "nearest_admissible_k2": nearest_mode,
            "equilibrium": list(eq),
        })

    _write_json(out_dir, "metadata.json", {
        "config": emit_config(cfg),
        "wall_time_s": time.time() - started,
        "version": __version__,
    })


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oxydyn",
        description="Batch runner for the oxygen-plankton dynamics toolkit")
    parser.add_argument("--config", required=True,
                        help="path to a JSON run configuration")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config 'out')")
    args = parser.parse_args(argv)

    threads = os.environ.get("OXYDYN_THREADS")
    if threads:
        try:
            import numba
            numba.set_num_threads(max(1, int(threads)))
        except (ValueError, ImportError):
            pass

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.out
    if not out_dir:
        print("config error: no output directory (--out or 'out')",
              file=sys.stderr)
        return 2

    try:
        run_task(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BracketError, BranchError) as exc:
        os.makedirs(out_dir, exist_ok=True)
        _write_json(out_dir, "error.json",
                    {"error": type(exc).__name__, "message": str(exc)})
        print(f"search error: {exc}", file=sys.stderr)
        return 4
    except OxydynError as exc:
        os.makedirs(out_dir, exist_ok=True)
        _write_json(out_dir, "error.json",
                    {"error": type(exc).__name__, "message": str(exc)})
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
