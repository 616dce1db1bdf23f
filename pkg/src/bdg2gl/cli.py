"""Command-line driver: ``bdg2gl {tc,coef,solve-bdg,solve-gl,sweep,verify}``.

Exit codes: 0 success, 1 failed verification or unexpected error,
2 configuration error, 3 convergence failure, 4 assumption violation.
"""
import argparse
import configparser
import contextlib
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import AssumptionViolation, ConvergenceError, NoSolutionError, ParameterError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_ASSUMPTION = 0, 1, 2, 3, 4


class ConfigError(ParameterError):
    pass


@dataclass
class RunConfig:
    potential: str = "gaussian"
    v0: float = 20.0
    a: float = 0.25
    table: str = ""
    mu: float = 1.0
    dim: int = 1
    D: float = 1.0
    n: int = 256
    n_rel_ref: int = 256
    widths_ref: float = 40.0
    h: float = 0.2
    tol: float = 1e-11
    max_iter: int = 500
    damping: float = 0.5
    anderson: int = 6
    init: str = "constant"
    nmax: int = 64
    tc_tol: float = 1e-10
    h_list: tuple = (0.30, 0.24, 0.19, 0.15, 0.12)
    kappa_exp: float = 5.0 / 6.0
    kappa: float | None = None
    gl_mode: str = "constant"
    gl_m: int = 64
    gl_k: int = 1
    newton_tol: float = 1e-12
    out: str = "out"
    seed: int = 0
    threads: int = 1
    source: str = "<defaults>"
    errors: list = field(default_factory=list, repr=False)

    def validate(self):
        errs = []
        for name in ("tol", "tc_tol", "newton_tol"):
            if not getattr(self, name) > 0:
                errs.append(f"{name}: must be positive")
        if not 0 < self.damping <= 1:
            errs.append("damping: must lie in (0, 1]")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            errs.append("h_list: must be strictly decreasing")
        if any(not 0 < h <= 1 for h in self.h_list) or not 0 < self.h <= 1:
            errs.append("h, h_list: values must lie in (0, 1]")
        if self.potential not in ("gaussian", "table"):
            errs.append("potential: must be gaussian or table")
        if self.potential == "table" and not self.table:
            errs.append("table: required when potential = table")
        if self.dim not in (1, 2, 3):
            errs.append("dim: must be 1, 2 or 3")
        if self.init not in ("constant", "phase-plane"):
            errs.append("init: must be constant or phase-plane")
        if self.gl_mode not in ("constant", "newton", "phase-plane"):
            errs.append("gl.mode: must be constant, newton or phase-plane")
        for name in ("n", "n_rel_ref", "gl_m"):
            v = getattr(self, name)
            if v <= 0 or v & (v - 1):
                errs.append(f"{name}: must be a power of two")
        if self.n > 512:
            errs.append("n: dense kernels are limited to n <= 512")
        if self.nmax < 1:
            errs.append("nmax: must be at least 1")
        if errs:
            raise ConfigError("; ".join(errs))
        return self

    def params(self):
        from .model import ModelParams, Potential, read_potential_table
        if self.potential == "gaussian":
            V = Potential.gaussian(self.v0, self.a)
        else:
            V = read_potential_table(self.table)
        return ModelParams(V, self.mu, self.dim, self.D, self.h)

    def sweep_config(self):
        from .harness import SweepConfig
        return SweepConfig(n=self.n, kappa_exp=self.kappa_exp, kappa=self.kappa, tol=self.tol,
                           max_iter=self.max_iter, damping=self.damping, anderson=self.anderson,
                           init=self.init, n_rel_ref=self.n_rel_ref, widths_ref=self.widths_ref)

    def echo(self):
        d = asdict(self)
        d.pop("errors")
        d["h_list"] = list(self.h_list)
        return d


_KEYS = {
    ("model", "potential"): ("potential", str), ("model", "v0"): ("v0", float),
    ("model", "a"): ("a", float), ("model", "table"): ("table", str),
    ("model", "mu"): ("mu", float), ("model", "dim"): ("dim", int), ("model", "d"): ("D", float),
    ("grid", "n"): ("n", int), ("grid", "n_rel_ref"): ("n_rel_ref", int),
    ("grid", "widths_ref"): ("widths_ref", float),
    ("solver", "h"): ("h", float), ("solver", "tol"): ("tol", float),
    ("solver", "max_iter"): ("max_iter", int), ("solver", "damping"): ("damping", float),
    ("solver", "anderson"): ("anderson", int), ("solver", "init"): ("init", str),
    ("solver", "nmax"): ("nmax", int), ("solver", "tc_tol"): ("tc_tol", float),
    ("sweep", "h_list"): ("h_list", lambda s: tuple(float(x) for x in s.split(","))),
    ("sweep", "kappa_exp"): ("kappa_exp", float), ("sweep", "kappa"): ("kappa", float),
    ("gl", "mode"): ("gl_mode", str), ("gl", "m"): ("gl_m", int), ("gl", "k"): ("gl_k", int),
    ("gl", "newton_tol"): ("newton_tol", float),
    ("run", "out"): ("out", str), ("run", "seed"): ("seed", int), ("run", "threads"): ("threads", int),
}


def reference_config_text():
    return resources.files("bdg2gl").joinpath("data/reference.ini").read_text()


def load_config(path=None):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str.lower
    cp.read_string(reference_config_text())
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    cfg = RunConfig(source=str(path) if path else "<reference>")
    errs = []
    for section in cp.sections():
        for key, raw in cp.items(section):
            spec = _KEYS.get((section, key))
            if spec is None:
                errs.append(f"[{section}] {key}: unknown key")
                continue
            attr, conv = spec
            try:
                setattr(cfg, attr, conv(raw.strip()))
            except ValueError:
                errs.append(f"[{section}] {key}: cannot parse {raw!r}")
    if errs:
        raise ConfigError("; ".join(errs))
    return cfg


### outputs

def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def golden_tc():
    return json.loads(resources.files("bdg2gl").joinpath("data/golden.json").read_text())


def _reference(cfg, params):
    from .gapeq import find_Tc, reference_grid
    grid = reference_grid(params.potential, cfg.n_rel_ref, cfg.widths_ref)
    return find_Tc(params, grid, tol=cfg.tc_tol)


def cmd_tc(cfg, out):
    from .gapeq import alpha_star_residual
    params = cfg.params()
    gd = _reference(cfg, params)
    rec = gd.to_json()
    rec["alpha_star_residual"] = alpha_star_residual(gd, params)
    gold = golden_tc()
    m = gold["model"]
    if (cfg.potential, cfg.v0, cfg.a, cfg.mu) == (m["kind"], m["v0"], m["a"], m["mu"]):
        rec["golden_Tc"] = gold["Tc"]
        rec["golden_match"] = abs(gd.Tc - gold["Tc"]) <= 1e-7
    write_json(out / "tc.json", rec)
    gd.save(str(out / "gapdata"))
    return rec


def cmd_coef(cfg, out):
    from .glcoef import G_hessian, gl_coefficients, lambda0_at, lambda3_closed
    params = cfg.params()
    gd = _reference(cfg, params)
    p = params.with_beta_c(gd.beta_c)
    coef = gl_coefficients(gd, p)
    rec = coef.to_json()
    H = G_hessian(gd, p)
    L0b = lambda0_at(p.beta, gd, p)
    rec["checks"] = {
        "G_hessian": H, "two_Lambda0_at_beta": 2 * L0b,
        "hessian_rel_error": float(np.abs(H / (2 * L0b) - 1).max()),
        "lambda3_closed": lambda3_closed(gd, p),
    }
    rec["checks"]["lambda3_closed_rel_error"] = abs(rec["checks"]["lambda3_closed"] / coef.Lambda3 - 1)
    write_json(out / "coef.json", rec)
    return rec


def cmd_solve_bdg(cfg, out):
    from .bdgsolve import bdg_fixed_point
    from .harness import initial_kernel, reference_coefficients
    from .gapeq import find_Tc
    from .model import LatticeGrid
    from .opcalc import dump_kernel, norm
    params = cfg.params()
    _, coef = reference_coefficients(params, cfg.sweep_config())
    grid = LatticeGrid.torus(cfg.n, cfg.h)
    gd = find_Tc(params, grid, tol=cfg.tc_tol)
    p = params.with_beta_c(gd.beta_c)
    init = initial_kernel(grid, gd, coef, p, cfg.init)
    sol = bdg_fixed_point(p, grid, init, cfg.damping, cfg.tol, cfg.max_iter, cfg.anderson,
                          init_label=cfg.init)
    dump_kernel(sol.alpha, out / "alpha.bin")
    sol.write_trace(out / "trace.csv")
    rec = {"h": sol.h, "T": sol.T, "Tc_lattice": gd.Tc, "iterations": sol.iterations,
           "residual_direct": sol.residual_direct, "residual_bs": sol.residual_bs,
           "alpha_L2h": norm(sol.alpha), "alpha_H1h": norm(sol.alpha, "Hs", s=1),
           "init": sol.init_label}
    write_json(out / "solution.json", rec)
    return rec


def cmd_solve_gl(cfg, out):
    from .glsolve import constant_branch, gl_residual, newton_gl, phase_plane_1d, bifurcation_thresholds
    from .harness import reference_coefficients
    params = cfg.params()
    _, coef = reference_coefficients(params, cfg.sweep_config())
    D = cfg.D
    rec = {"mode": cfg.gl_mode, "D": D}
    if cfg.gl_mode == "constant":
        psi = constant_branch(coef, D, cfg.gl_m)
    elif cfg.gl_mode == "phase-plane":
        psi, rep = phase_plane_1d(coef, D, cfg.gl_k, cfg.gl_m, with_report=True)
        rec["phase_plane"] = rep
    else:
        x = np.arange(cfg.gl_m) / cfg.gl_m
        L0 = coef.Lambda0[0, 0]
        amp2 = 4 * (coef.Lambda2 * D - 4 * np.pi ** 2 * cfg.gl_k ** 2 * L0) / (3 * coef.Lambda3)
        if amp2 <= 0:
            raise NoSolutionError("D is below the first bifurcation for the requested mode")
        from .glsolve import OrderParameter
        psi, info = newton_gl(coef, D, OrderParameter(np.sqrt(amp2) * np.sin(2 * np.pi * cfg.gl_k * x)),
                              tol=cfg.newton_tol)
        rec["newton"] = {"iterations": info["iterations"], "residual": info["residual"]}
    rec["residual"] = gl_residual(psi, coef, D)[1]
    rec["bifurcation_D"] = bifurcation_thresholds(coef, 3)[1][:4]
    rec["psi_L2"] = psi.norm()
    psi.to_csv(out / "psi.csv")
    np.savetxt(out / "psi.dat", np.column_stack([psi.points(), np.real(psi.psi)]), fmt="%.12g")
    write_json(out / "gl.json", rec)
    return rec


def cmd_sweep(cfg, out):
    from .harness import h_sweep
    table = h_sweep(cfg.params(), cfg.h_list, cfg.sweep_config())
    table.write_csv(out / "sweep.csv")
    table.write_fits(out / "sweep_fits.json")
    table.write_plot_files(str(out / "sweep"))
    failed = [r for r in table.rows if r["status"] != "ok"]
    return {"fits": table.fits, "failed_points": len(failed)}


def cmd_verify(cfg, out):
    from .verify import run_battery
    gold = golden_tc()
    m = gold["model"]
    same = (cfg.potential, cfg.v0, cfg.a, cfg.mu) == (m["kind"], m["v0"], m["a"], m["mu"])
    results = run_battery(cfg.params(), cfg.seed, gold["Tc"] if same else None,
                          cfg.n_rel_ref, cfg.widths_ref)
    for r in results:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}: {r['detail']}")
    summary = {"passed": sum(r["passed"] for r in results), "total": len(results)}
    write_json(out / "verify.json", {"results": [{k: v for k, v in r.items() if k != "seconds"} for r in results],
                                     "summary": summary})
    return {"summary": summary, "timings": {r["check"]: r["seconds"] for r in results}}


COMMANDS = {"tc": cmd_tc, "coef": cmd_coef, "solve-bdg": cmd_solve_bdg,
            "solve-gl": cmd_solve_gl, "sweep": cmd_sweep, "verify": cmd_verify}


def build_parser():
    ap = argparse.ArgumentParser(prog="bdg2gl", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS) + ["print-config"])
    ap.add_argument("--config", help="INI file overriding the reference configuration")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--nmax", type=int)
    ap.add_argument("--kappa-exp", type=float)
    return ap


def _thread_limit(n):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "print-config":
        sys.stdout.write(reference_config_text())
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        for flag, attr in (("out", "out"), ("seed", "seed"), ("threads", "threads"),
                           ("nmax", "nmax"), ("kappa_exp", "kappa_exp")):
            val = getattr(args, flag)
            if val is not None:
                setattr(cfg, attr, val)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)
    t0 = time.perf_counter()
    status = EXIT_OK
    try:
        with _thread_limit(cfg.threads):
            result = COMMANDS[args.command](cfg, out)
        if args.command == "verify" and result["summary"]["passed"] != result["summary"]["total"]:
            status = EXIT_FAIL
    except ConvergenceError as exc:
        print(f"{args.command}: convergence failure: {exc}", file=sys.stderr)
        result, status = {"error": str(exc)}, EXIT_CONVERGENCE
    except (AssumptionViolation, NoSolutionError) as exc:
        print(f"{args.command}: assumption violated: {exc}", file=sys.stderr)
        result, status = {"error": str(exc)}, EXIT_ASSUMPTION
    except ParameterError as exc:
        print(f"{args.command}: invalid parameters: {exc}", file=sys.stderr)
        result, status = {"error": str(exc)}, EXIT_CONFIG
    manifest = {
        "command": args.command, "config": cfg.echo(), "exit_status": status,
        "versions": {"bdg2gl": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "timings": {"total_seconds": time.perf_counter() - t0},
    }
    if isinstance(result, dict) and "timings" in result:
        manifest["timings"].update(result.pop("timings"))
    write_json(out / f"manifest_{args.command}.json", manifest)
    if status == EXIT_OK:
        print(json.dumps(result, indent=2, sort_keys=True, default=_json_default))
    return status


if __name__ == "__main__":
    sys.exit(main())
