"""Declarative scenario runner.

Usage:
    fockgibbs run <config.json> [--out DIR] [--seed N] [--threads N]
    fockgibbs validate [--suite NAME] [--seed N] [--out DIR]

A config is a JSON object with blocks:

    lattice   {"m": int>=2, "h": >0, "kappa": >=0, "w0": float, "r0": >=0,
               "tilt": float, "gamma": (0,1)}          (defaults shown in README)
    fock      {"statistics": "fermionic"|"bosonic", "n_max": int, "dim_cap": int}
    task      {"kind": "thermo_scan" | "entropy_curve" | "free_energy_curve"
                       | "reconstruct" | "validate", ...task parameters}
    output    {"directory": str}

Numbers in CSV files carry 17 significant digits so identical config + seed
reproduce byte-identical tables. Exit codes: 0 ok, 1 failed validation
check, 2 malformed config, 3 basis dimension cap exceeded, 4 solver
non-convergence (residuals recorded in the report).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigError, ConvergenceError, DimensionCapError
from .fock import DEFAULT_DIMENSION_CAP, build_hamiltonian, enumerate_basis, number_operator
from .gibbs import entropy, fock_spectrum, gibbs_state, thermo_scan
from .lattice import default_spec
from .moments import moment_fields
from .solvers import (
    MultiplierFields,
    ReconstructOptions,
    entropy_curve,
    free_energy_curve,
    reconstruct_local_gibbs,
)
from .validate import SUITES, run_suites

TASK_KINDS = ("thermo_scan", "entropy_curve", "free_energy_curve", "reconstruct", "validate")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _require(block, key, path, types, predicate=None, what=""):
    if key not in block:
        raise ConfigError(f"missing required key '{path}.{key}'")
    value = block[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ConfigError(f"key '{path}.{key}' has the wrong type")
    if predicate is not None and not predicate(value):
        raise ConfigError(f"key '{path}.{key}' out of range{': ' + what if what else ''}")
    return value


def _optional(block, key, default, types, predicate=None, what="", path=""):
    if key not in block:
        return default
    return _require(block, key, path, types, predicate, what)


def _number_list(block, key, path, positive=False, nonnegative=False, sorted_=True):
    value = _require(block, key, path, list)
    if not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"key '{path}.{key}' must be a nonempty list of numbers")
    arr = [float(v) for v in value]
    if positive and any(v <= 0 for v in arr):
        raise ConfigError(f"key '{path}.{key}' must be strictly positive")
    if nonnegative and any(v < 0 for v in arr):
        raise ConfigError(f"key '{path}.{key}' must be nonnegative")
    if sorted_ and any(b <= a for a, b in zip(arr, arr[1:])):
        raise ConfigError(f"key '{path}.{key}' must be strictly increasing")
    return arr


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def validate_config(cfg) -> dict:
    """Normalize and range-check a raw config dict."""
    out = {}
    lattice = cfg.get("lattice", {})
    if not isinstance(lattice, dict):
        raise ConfigError("key 'lattice' must be an object")
    out["lattice"] = {
        "m": _optional(lattice, "m", 4, int, lambda v: v >= 2, "m >= 2", "lattice"),
        "h": _optional(lattice, "h", 1.0, (int, float), lambda v: v > 0, "h > 0", "lattice"),
        "kappa": _optional(lattice, "kappa", 0.5, (int, float), lambda v: v >= 0, "kappa >= 0", "lattice"),
        "w0": _optional(lattice, "w0", 0.4, (int, float), path="lattice"),
        "r0": _optional(lattice, "r0", 1.0, (int, float), lambda v: v >= 0, "r0 >= 0", "lattice"),
        "tilt": _optional(lattice, "tilt", 0.0, (int, float), path="lattice"),
        "gamma": _optional(lattice, "gamma", 0.5, (int, float), lambda v: 0 < v < 1, "0 < gamma < 1", "lattice"),
    }
    fock = cfg.get("fock", {})
    if not isinstance(fock, dict):
        raise ConfigError("key 'fock' must be an object")
    statistics = _optional(fock, "statistics", "fermionic", str, lambda v: v in ("fermionic", "bosonic"),
                           "fermionic or bosonic", "fock")
    n_max = _optional(fock, "n_max", None, int, lambda v: v >= 0, "n_max >= 0", "fock")
    if statistics == "bosonic" and n_max is None:
        raise ConfigError("key 'fock.n_max' is required for bosonic statistics")
    out["fock"] = {
        "statistics": statistics,
        "n_max": n_max,
        "dim_cap": _optional(fock, "dim_cap", DEFAULT_DIMENSION_CAP, int, lambda v: v >= 1, "dim_cap >= 1", "fock"),
    }
    task = cfg.get("task")
    if not isinstance(task, dict):
        raise ConfigError("missing required key 'task'")
    kind = _require(task, "kind", "task", str, lambda v: v in TASK_KINDS, f"one of {TASK_KINDS}")
    norm = {"kind": kind, "seed": _optional(task, "seed", 0, int, lambda v: v >= 0, "seed >= 0", "task")}
    if kind == "thermo_scan":
        norm["alphas"] = _number_list(task, "alphas", "task", nonnegative=True)
        norm["betas"] = _number_list(task, "betas", "task", positive=True)
    elif kind == "entropy_curve":
        if "a_grid" in task:
            norm["a_grid"] = _number_list(task, "a_grid", "task", positive=True)
        else:
            norm["points"] = _require(task, "points", "task", int, lambda v: v >= 2, "points >= 2")
            span = _number_list(task, "span", "task", positive=True)
            if len(span) != 2 or not (0 < span[0] < span[1] < 1):
                raise ConfigError("key 'task.span' must be two fractions 0 < lo < hi < 1")
            norm["span"] = span
    elif kind == "free_energy_curve":
        norm["beta"] = _require(task, "beta", "task", (int, float), lambda v: v > 0, "beta > 0")
        if "a_grid" in task:
            norm["a_grid"] = _number_list(task, "a_grid", "task", positive=True)
        else:
            norm["points"] = _require(task, "points", "task", int, lambda v: v >= 2, "points >= 2")
            span = _number_list(task, "span", "task", positive=True)
            if len(span) != 2 or not (0 < span[0] < span[1] < 1):
                raise ConfigError("key 'task.span' must be two fractions 0 < lo < hi < 1")
            norm["span"] = span
    elif kind == "reconstruct":
        ref = task.get("reference")
        if not isinstance(ref, dict):
            raise ConfigError("missing required key 'task.reference'")
        norm["reference"] = {
            "alpha": _optional(ref, "alpha", 0.0, (int, float), lambda v: v >= 0, "alpha >= 0", "task.reference"),
            "beta": _require(ref, "beta", "task.reference", (int, float), lambda v: v > 0, "beta > 0"),
            "tilt": _optional(ref, "tilt", 0.0, (int, float), path="task.reference"),
        }
        norm["tol"] = _optional(task, "tol", 1e-6, (int, float), lambda v: v > 0, "tol > 0", "task")
        norm["max_iter"] = _optional(task, "max_iter", 500, int, lambda v: v >= 1, "max_iter >= 1", "task")
        norm["initializations"] = _optional(task, "initializations", 1, int, lambda v: 1 <= v <= 10,
                                            "1..10", "task")
    elif kind == "validate":
        suites = task.get("suites")
        if suites is not None:
            if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
                raise ConfigError("key 'task.suites' must be a list of suite names")
            unknown = [s for s in suites if s not in SUITES]
            if unknown:
                raise ConfigError(f"unknown validation suites {unknown}; available: {sorted(SUITES)}")
        norm["suites"] = suites
    out["task"] = norm
    output = cfg.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("key 'output' must be an object")
    out["output"] = {"directory": _optional(output, "directory", "out", str, path="output")}
    return out


def _build_instance(cfg):
    lat = cfg["lattice"]
    spec = default_spec(
        lat["m"], h=lat["h"], kappa=lat["kappa"], w0=lat["w0"], r0=lat["r0"],
        tilt=lat["tilt"], gamma=lat["gamma"],
    )
    fock_cfg = cfg["fock"]
    basis = enumerate_basis(fock_cfg["statistics"], lat["m"], fock_cfg["n_max"], fock_cfg["dim_cap"])
    return spec, basis


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else _fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


def emit_plotdata(kind, payload, outdir: Path, report):
    """Write plot-ready whitespace-separated files next to the CSVs."""
    written = []
    if kind == "thermo_scan":
        scan = payload
        if scan.alphas.size == 0:
            report["warnings"].append("thermo_scan produced an empty table; no plot data written")
            return written
        for j, beta in enumerate(scan.betas):
            path = outdir / f"plot_N_vs_alpha_beta{j}.dat"
            lines = [f"# beta = {_fmt(beta)}", "# alpha N"]
            for i, alpha in enumerate(scan.alphas):
                lines.append(f"{_fmt(alpha)} {_fmt(scan.N[i, j])}")
            path.write_text("\n".join(lines) + "\n")
            written.append(path.name)
    elif kind == "entropy_curve":
        points = payload
        if not points:
            report["warnings"].append("entropy_curve produced no points; no plot data written")
            return written
        path = outdir / "plot_f_vs_a.dat"
        lines = ["# a f"] + [f"{_fmt(p.a)} {_fmt(p.f)}" for p in points]
        path.write_text("\n".join(lines) + "\n")
        written.append(path.name)
    elif kind == "free_energy_curve":
        points = payload
        if not points:
            report["warnings"].append("free_energy_curve produced no points; no plot data written")
            return written
        path = outdir / "plot_g_vs_a.dat"
        lines = ["# a g"] + [f"{_fmt(p.a)} {_fmt(p.g)}" for p in points]
        path.write_text("\n".join(lines) + "\n")
        written.append(path.name)
    elif kind == "reconstruct":
        spec, targets, achieved = payload
        x = spec.x
        edges = 0.5 * (x[:-1] + x[1:])
        for name, grid, tgt, got in (
            ("overlay_n.dat", x, targets.n, achieved.n),
            ("overlay_u.dat", edges, targets.u, achieved.u),
            ("overlay_e.dat", x, targets.e, achieved.e),
        ):
            path = outdir / name
            lines = ["# x target achieved"]
            for xi, ti, gi in zip(grid, tgt, got):
                lines.append(f"{_fmt(xi)} {_fmt(ti)} {_fmt(gi)}")
            path.write_text("\n".join(lines) + "\n")
            written.append(name)
    return written


def _task_thermo_scan(cfg, outdir, report):
    spec, basis = _build_instance(cfg)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    scan = thermo_scan(ham, nop, cfg["task"]["alphas"], cfg["task"]["betas"])
    rows = []
    for i, a in enumerate(scan.alphas):
        for j, b in enumerate(scan.betas):
            fd_n = scan.fd_number[i, j] if scan.fd_number is not None else np.nan
            fd_e = scan.fd_energy[i, j] if scan.fd_energy is not None else np.nan
            rows.append(
                (a, b, scan.logZ[i, j], scan.N[i, j], scan.E[i, j], scan.S[i, j],
                 None if np.isnan(fd_n) else fd_n, None if np.isnan(fd_e) else fd_e)
            )
    write_csv(outdir / "thermo_scan.csv",
              ["alpha", "beta", "logZ", "N", "E", "S", "fd_minus_dlogZ_dalpha", "fd_minus_dlogZ_dbeta"],
              rows)
    report["outputs"].append("thermo_scan.csv")
    report["outputs"].extend(emit_plotdata("thermo_scan", scan, outdir, report))


def _resolve_grid(cfg_task, spectrum, beta=None):
    if "a_grid" in cfg_task:
        return np.asarray(cfg_task["a_grid"], dtype=float)
    lo, hi = cfg_task["span"]
    if beta is None:
        top = float(spectrum.energies.mean())
    else:
        top = spectrum.stats(0.0, beta).N
    return np.linspace(lo, hi, cfg_task["points"]) * top


def _task_entropy_curve(cfg, outdir, report):
    spec, basis = _build_instance(cfg)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    points = entropy_curve(ham, nop, _resolve_grid(cfg["task"], fock_spectrum(ham, nop)))
    write_csv(outdir / "entropy_curve.csv", ["a", "beta0", "f", "S_check"],
              [(p.a, p.beta0, p.f, p.S_check) for p in points])
    report["outputs"].append("entropy_curve.csv")
    report["outputs"].extend(emit_plotdata("entropy_curve", points, outdir, report))
    f_vals = [p.f for p in points]
    report["checks"].append({
        "name": "entropy_curve strictly decreasing",
        "passed": bool(all(b < a for a, b in zip(f_vals, f_vals[1:]))),
    })


def _task_free_energy_curve(cfg, outdir, report):
    spec, basis = _build_instance(cfg)
    ham = build_hamiltonian(spec, basis)
    nop = number_operator(basis)
    beta = float(cfg["task"]["beta"])
    grid = _resolve_grid(cfg["task"], fock_spectrum(ham, nop), beta=beta)
    points = free_energy_curve(ham, nop, beta, grid)
    write_csv(outdir / "free_energy_curve.csv", ["a", "alpha0", "g", "F_check"],
              [(p.a, p.alpha0, p.g, p.F_check) for p in points])
    report["outputs"].append("free_energy_curve.csv")
    report["outputs"].extend(emit_plotdata("free_energy_curve", points, outdir, report))
    g_vals = [p.g for p in points]
    report["checks"].append({
        "name": "free_energy_curve strictly decreasing",
        "passed": bool(all(b < a for a, b in zip(g_vals, g_vals[1:]))),
    })


def _task_reconstruct(cfg, outdir, report, seed):
    spec, basis = _build_instance(cfg)
    task = cfg["task"]
    ref_cfg = task["reference"]
    lat = cfg["lattice"]
    ref_spec = default_spec(
        lat["m"], h=lat["h"], kappa=lat["kappa"], w0=lat["w0"], r0=lat["r0"],
        tilt=ref_cfg["tilt"], gamma=lat["gamma"],
    )
    ham_ref = build_hamiltonian(ref_spec, basis)
    nop = number_operator(basis)
    rho_ref, _ = gibbs_state(ham_ref, nop, ref_cfg["alpha"], ref_cfg["beta"])
    targets = moment_fields(rho_ref, spec)
    opts = ReconstructOptions(tol=task["tol"], max_iter=task["max_iter"])
    rng = np.random.default_rng(seed)
    inits = ["presolve", "zero"]
    while len(inits) < task["initializations"]:
        inits.append(MultiplierFields(
            rng.normal(scale=0.2, size=spec.m),
            rng.normal(scale=0.2, size=spec.m - 1),
            1.0 + rng.normal(scale=0.2, size=spec.m),
        ))
    results = [
        reconstruct_local_gibbs(spec, basis, targets, opts, init=init)
        for init in inits[: task["initializations"]]
    ]
    res = results[0]
    write_csv(outdir / "reconstruct_trace.csv", ["iteration", "dual_value", "residual_inf"], res.trace)
    x = spec.x
    rows = []
    for i in range(spec.m):
        u_t = targets.u[i] if i < spec.m - 1 else None
        u_a = res.achieved.u[i] if i < spec.m - 1 else None
        rows.append((i, x[i], targets.n[i], res.achieved.n[i], u_t, u_a, targets.e[i], res.achieved.e[i]))
    write_csv(outdir / "reconstruct_fields.csv",
              ["site", "x", "n_target", "n_achieved", "u_target", "u_achieved", "e_target", "e_achieved"],
              rows)
    report["outputs"].extend(["reconstruct_trace.csv", "reconstruct_fields.csv"])
    report["outputs"].extend(
        emit_plotdata("reconstruct", (spec, targets, res.achieved), outdir, report)
    )
    s_ref = entropy(rho_ref)
    s_star = entropy(res.rho)
    report["checks"].append({"name": "residual <= tol", "passed": bool(res.residual_norm <= task["tol"]),
                             "value": res.residual_norm})
    report["checks"].append({"name": "S(rho*) <= S(rho_ref) + 1e-8",
                             "passed": bool(s_star <= s_ref + 1e-8), "value": s_star - s_ref})
    if len(results) > 1:
        dist = max(
            0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(res.rho.matrix - other.rho.matrix))))
            for other in results[1:]
        )
        report["checks"].append({"name": "uniqueness across initializations",
                                 "passed": bool(dist <= 1e-6), "value": dist})


def _task_validate(cfg, outdir, report, seed):
    results, timings = run_suites(cfg["task"]["suites"], seed=seed)
    for r in results:
        print(r.line())
        report["checks"].append(
            {"suite": r.suite, "name": r.name, "passed": r.passed, "value": r.value}
        )
    report["timings"].update({f"suite:{k}": v for k, v in timings.items()})
    rows = [(r.suite, r.name, "PASS" if r.passed else "FAIL",
             None if r.value is None else r.value) for r in results]
    write_csv(outdir / "validate_checks.csv", ["suite", "check", "status", "value"], rows)
    report["outputs"].append("validate_checks.csv")


def run_scenario(config_path, out_override=None, seed_override=None, threads=None) -> int:
    cfg = validate_config(load_config(config_path))
    seed = cfg["task"]["seed"] if seed_override is None else seed_override
    if threads is not None and _kernels.NUMBA_ACTIVE:
        import numba

        numba.set_num_threads(max(1, threads))
    outdir = Path(out_override) if out_override else Path(cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    report = {
        "config": cfg,
        "seed": seed,
        "kernel_backend": _kernels.backend(),
        "timings": {},
        "checks": [],
        "outputs": [],
        "warnings": [],
    }
    kind = cfg["task"]["kind"]
    start = time.perf_counter()
    status = 0
    try:
        if kind == "thermo_scan":
            _task_thermo_scan(cfg, outdir, report)
        elif kind == "entropy_curve":
            _task_entropy_curve(cfg, outdir, report)
        elif kind == "free_energy_curve":
            _task_free_energy_curve(cfg, outdir, report)
        elif kind == "reconstruct":
            _task_reconstruct(cfg, outdir, report, seed)
        elif kind == "validate":
            _task_validate(cfg, outdir, report, seed)
    except ConvergenceError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc), "residual": exc.residual}
        status = 4
    report["timings"]["task"] = time.perf_counter() - start
    if status == 0 and any(not c["passed"] for c in report["checks"]):
        status = 1
    report["exit_status"] = status
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fockgibbs", description="Lattice Fock-space scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a JSON scenario config")
    run_p.add_argument("config", help="path to the scenario config (JSON)")
    run_p.add_argument("--out", default=None, help="output directory (overrides config)")
    run_p.add_argument("--seed", type=int, default=None, help="seed override for randomized checks")
    run_p.add_argument("--threads", type=int, default=None, help="numba thread count")

    val_p = sub.add_parser("validate", help="run named validation suites on the built-in instances")
    val_p.add_argument("--suite", action="append", default=None,
                       help=f"suite name (repeatable); available: {', '.join(sorted(SUITES))}")
    val_p.add_argument("--seed", type=int, default=0)
    val_p.add_argument("--out", default=None, help="optional directory for report.json")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_scenario(args.config, args.out, args.seed, args.threads)
        try:
            results, timings = run_suites(args.suite, seed=args.seed)
        except KeyError as exc:
            print(f"config error: {exc.args[0]}", file=sys.stderr)
            return 2
        for r in results:
            print(r.line())
        failed = [r for r in results if not r.passed]
        print(f"\n{len(results) - len(failed)}/{len(results)} checks passed "
              f"in {sum(timings.values()):.2f} s")
        if args.out:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            payload = {
                "seed": args.seed,
                "kernel_backend": _kernels.backend(),
                "checks": [
                    {"suite": r.suite, "name": r.name, "passed": r.passed, "value": r.value}
                    for r in results
                ],
                "timings": timings,
                "exit_status": 1 if failed else 0,
            }
            (outdir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return 1 if failed else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DimensionCapError as exc:
        print(f"dimension cap: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 4


def console_main():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
