"""Batch front end: config parsing, the simulate/steady/verify/report verbs,
CSV/JSON/SVG emission, and the exit-code contract (0 ok, 1 check failure,
2 config error, 3 numerical failure)."""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import asymptotics, hypo, lyapunov, steady
from .grid import ABSORBING, Field, PhaseGrid, WeightedNorm, moments, norm
from .model import ModelParams, SignPsi, TanhPsi
from .solver import NumericalFailure, SolverConfig, run

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class RunConfig:
    model: dict = field(default_factory=lambda: {"gamma": 1.0, "chi": 0.8,
                                                 "psi": {"kind": "sign"}})
    grid: dict = field(default_factory=lambda: {"x_max": 50.0, "v_max": 10.0,
                                                "nx": 200, "nv": 60,
                                                "bc": ABSORBING})
    solver: dict = field(default_factory=lambda: {"dt": 0.05, "t_final": 20.0,
                                                  "cfl_max": 0.9,
                                                  "splitting": "lie"})
    weight: dict = field(default_factory=lambda: {"kind": "exponential",
                                                  "a": 0.5, "b": 0.25,
                                                  "nu": 1e-2, "k": 2.0,
                                                  "B": None, "level": None,
                                                  "box": None})
    entropy: dict = field(default_factory=lambda: {"eps": 1e-2, "ell": None})
    initial: dict = field(default_factory=lambda: {"kind": "bump",
                                                   "center": 10.0,
                                                   "halfwidth": 3.0})
    steady: dict = field(default_factory=lambda: {"method": "fixed-point",
                                                  "tol": 1e-8,
                                                  "agreement_tol": 0.5})
    checks: list = field(default_factory=list)
    output_dir: str = "out"
    seed: int = 0

    def to_dict(self):
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        cfg = RunConfig()
        known = set(cfg.to_dict())
        for k, v in d.items():
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}")
            if isinstance(getattr(cfg, k), dict):
                base = dict(getattr(cfg, k))
                unknown = set(v) - set(base)
                if unknown:
                    raise ConfigError(f"unknown keys {sorted(unknown)} in {k!r}")
                base.update(v)
                setattr(cfg, k, base)
            else:
                setattr(cfg, k, v)
        return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path: str):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)


def build_model(cfg: RunConfig) -> ModelParams:
    m = dict(cfg.model)
    psi_cfg = m.pop("psi", {"kind": "sign"})
    kind = psi_cfg.get("kind", "sign")
    if kind == "sign":
        psi = SignPsi()
    elif kind == "tanh":
        psi = TanhPsi(scale=float(psi_cfg.get("scale", 10.0)))
    else:
        raise ConfigError(f"unknown psi kind {kind!r}")
    try:
        return ModelParams(gamma=float(m.get("gamma", 1.0)),
                           chi=float(m.get("chi", 0.8)), psi=psi,
                           dim=int(m.get("dim", 1)))
    except AssertionError as e:
        raise ConfigError(f"bad model parameters: {e}") from e


def build_grid(cfg: RunConfig) -> PhaseGrid:
    g = cfg.grid
    try:
        return PhaseGrid(x_max=float(g["x_max"]), v_max=float(g["v_max"]),
                         nx=int(g["nx"]), nv=int(g["nv"]),
                         bc=g.get("bc", ABSORBING))
    except (KeyError, AssertionError) as e:
        raise ConfigError(f"bad grid: {e}") from e


def build_solver(cfg: RunConfig, grid: PhaseGrid) -> SolverConfig:
    s = cfg.solver
    try:
        return SolverConfig.make(grid, dt=float(s["dt"]),
                                 t_final=float(s["t_final"]),
                                 cfl_max=float(s.get("cfl_max", 0.9)),
                                 splitting=s.get("splitting", "lie"))
    except (KeyError, AssertionError) as e:
        raise ConfigError(f"bad solver config: {e}") from e


def build_weight(cfg: RunConfig, p: ModelParams):
    w = cfg.weight
    kind = w.get("kind", "exponential")
    if kind == "exponential":
        a = float(w.get("a", 0.5))
        nu = float(w.get("nu", 1e-2))
        B = w.get("B")
        B = lyapunov.exp_B_formula(p, a, nu) if B is None else float(B)
        return lyapunov.ExponentialWeight(a=a, b=float(w.get("b", 0.25)),
                                          nu=nu, B=B)
    if kind == "polynomial":
        k = float(w.get("k", 2.0))
        B = w.get("B")
        B = 1.5 * lyapunov.poly_B_min(p, k) if B is None else float(B)
        return lyapunov.PolynomialWeight(k=k, B=B)
    raise ConfigError(f"unknown weight kind {kind!r}")


def build_initial(cfg: RunConfig, grid: PhaseGrid, p: ModelParams) -> Field:
    ic = cfg.initial
    kind = ic.get("kind", "bump")
    if kind == "bump":
        vals = np.zeros((grid.nx, grid.nv))
        sel = np.abs(grid.x - float(ic.get("center", 0.0))) \
            <= float(ic.get("halfwidth", 1.0))
        if not np.any(sel):
            raise ConfigError("initial bump lies outside the grid")
        vals[sel, :] = grid.discrete_maxwellian(p)[None, :]
        vals /= vals.sum() * grid.cell
        return Field(grid, vals)
    if kind == "maxwellian":
        vals = np.tile(grid.discrete_maxwellian(p), (grid.nx, 1))
        vals /= vals.sum() * grid.cell
        return Field(grid, vals)
    raise ConfigError(f"unknown initial kind {kind!r}")


def _write_csv(path: str, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _steady_path(cfg: RunConfig) -> str:
    return os.path.join(cfg.output_dir, "steady")


# ---------------------------------------------------------------- verbs


def cmd_simulate(cfg: RunConfig) -> int:
    p = build_model(cfg)
    grid = build_grid(cfg)
    scfg = build_solver(cfg, grid)
    f0 = build_initial(cfg, grid, p)
    os.makedirs(cfg.output_dir, exist_ok=True)
    G = None
    if os.path.exists(_steady_path(cfg) + ".npy"):
        res = steady.load_steady(_steady_path(cfg))
        if res.G.grid != grid:
            raise ConfigError("stored steady field is on a different grid")
        G = res.G
    want_dist = any(c.get("name") == "distance" for c in cfg.checks)
    if want_dist and G is None:
        raise ConfigError(f"distance columns requested but no steady field at "
                          f"{_steady_path(cfg)}.npy; run 'steady' first")
    probes = {"mass": lambda t, f: f.mass()}
    if G is not None:
        probes["l1_dist_to_G"] = lambda t, f: norm(f - G, WeightedNorm("L1"))
        probes["linf_over_G"] = lambda t, f: norm(f, WeightedNorm("Linf/G", G=G))
    ecfg = None
    eps = float(cfg.entropy.get("eps", 0.0) or 0.0)
    if G is not None and eps > 0:
        ell = cfg.entropy.get("ell")
        ecfg = hypo.EllipticConfig(ell=float(ell) if ell is not None
                                   else 1.0 / (1.0 + p.gamma))
        probes["entropy"] = (lambda t, f:
                             hypo.entropy(f, G, eps, p, ecfg, t=t).H)
    traj = run(f0, scfg, p, probes=probes)
    header = ["t"] + list(probes)
    rows = [[t] + [d[k] for k in probes]
            for t, d in zip(traj.times, traj.diagnostics)]
    _write_csv(os.path.join(cfg.output_dir, "trajectory.csv"), header, rows)
    summary = {"final_time": traj.times[-1], "final_mass": traj.final.mass(),
               "steps": len(traj.times) - 1, "dt": scfg.dt}
    with open(os.path.join(cfg.output_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return EXIT_OK


def cmd_steady(cfg: RunConfig) -> int:
    p = build_model(cfg)
    grid = build_grid(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    method = cfg.steady.get("method", "fixed-point")
    tol = float(cfg.steady.get("tol", 1e-8))
    results = {}
    if method in ("fixed-point", "both"):
        results["fixed-point"] = steady.steady_by_fixed_point(p, grid, tol=tol)
    if method in ("evolution", "both"):
        scfg = build_solver(cfg, grid)
        results["evolution"] = steady.steady_by_evolution(p, grid, scfg)
    if not results:
        raise ConfigError(f"unknown steady method {method!r}")
    primary = results.get("fixed-point") or results["evolution"]
    G = primary.G
    steady.save_steady(primary, _steady_path(cfg))
    mom = moments(G, p)
    ratio = mom.rho * mom.p4 / np.where(mom.p2 > 0, mom.p2, 1.0) ** 2
    _write_csv(os.path.join(cfg.output_dir, "density.csv"),
               ["x", "rho", "p2", "p4", "theta", "ratio"],
               zip(grid.x, mom.rho, mom.p2, mom.p4, mom.theta, ratio))
    fit = {}
    try:
        rep = steady.tail_bounds_check(G, p)
        fit = rep.to_dict()
    except (ValueError, AssertionError, np.linalg.LinAlgError) as e:
        fit = {"error": str(e)}
    with open(os.path.join(cfg.output_dir, "fit.json"), "w") as fh:
        json.dump(fit, fh, indent=2, sort_keys=True)
    if len(results) == 2:
        dist = norm(results["fixed-point"].G - results["evolution"].G,
                    WeightedNorm("L1"))
        fit["method_l1_distance"] = dist
        with open(os.path.join(cfg.output_dir, "fit.json"), "w") as fh:
            json.dump(fit, fh, indent=2, sort_keys=True)
        if dist > float(cfg.steady.get("agreement_tol", 0.5)):
            print(f"steady: method disagreement {dist:.3g} exceeds tolerance",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


VERIFY_WHICH = ("lyapunov", "poly-lyapunov", "coercivity", "poincare",
                "minorisation", "sandwich", "tails", "moments",
                "dissipation", "contraction", "asymptotics")


def _check_tol(cfg: RunConfig, name: str, default: float) -> float:
    for c in cfg.checks:
        if c.get("name") == name and "tol" in c:
            t = float(c["tol"])
            if t <= 0:
                raise ConfigError(f"tolerance for {name!r} must be positive")
            return t
    return default


def _need_steady(cfg: RunConfig, p, grid) -> Field:
    path = _steady_path(cfg)
    if os.path.exists(path + ".npy"):
        res = steady.load_steady(path)
        if res.G.grid == grid:
            return res.G
    return steady.steady_by_fixed_point(p, grid).G


def run_verify(cfg: RunConfig, which: str):
    """Returns a list of CheckReport-like dicts for the requested check."""
    p = build_model(cfg)
    grid = build_grid(cfg)
    if which == "lyapunov":
        spec = build_weight(cfg, p)
        rep = lyapunov.drift_check(spec, p, grid,
                                   tol=_check_tol(cfg, which, 0.0))
        return [{"name": "lyapunov-drift", "passed": rep.passed,
                 "max_violation": rep.max_violation,
                 "constants": {"C": rep.fitted_C, "eps": rep.fitted_eps,
                               "argmax_x": rep.argmax_cell[0],
                               "argmax_v": rep.argmax_cell[1]},
                 "notes": rep.notes}]
    if which == "poly-lyapunov":
        k = float(cfg.weight.get("k", 2.0))
        spec = lyapunov.PolynomialWeight(k=k, B=1.5 * lyapunov.poly_B_min(p, k))
        rep = lyapunov.drift_check(spec, p, grid,
                                   tol=_check_tol(cfg, which, 0.0))
        return [{"name": "poly-lyapunov-drift", "passed": rep.passed,
                 "max_violation": rep.max_violation,
                 "constants": {"C": rep.fitted_C, "eps": rep.fitted_eps,
                               "R": rep.fitted_R},
                 "notes": rep.notes}]
    if which == "coercivity":
        G = _need_steady(cfg, p, grid)
        rng = np.random.default_rng(cfg.seed)
        reports = []
        worst = None
        for i in range(100):
            f = Field(grid, rng.random((grid.nx, grid.nv)) * G.values)
            rep = hypo.micro_coercivity_check(f, G, p,
                                              tol=_check_tol(cfg, which, 1e-6))
            if worst is None or rep.max_violation > worst.max_violation:
                worst = rep
            reports.append(rep.passed)
        out = worst.to_dict()
        out["passed"] = bool(all(reports))
        out["constants"]["n_pass"] = float(sum(reports))
        return [out]
    if which == "poincare":
        G = _need_steady(cfg, p, grid)
        fam = hypo.default_test_family(grid.x_max)
        return [hypo.poincare_estimate(G, fam, p).to_dict()]
    if which == "minorisation":
        level = cfg.weight.get("level")
        box = cfg.weight.get("box")
        if level is None and box is None:
            box = (10.0, 5.0)
        spec = build_weight(cfg, p) if level is not None else None
        rep = lyapunov.minorisation_estimate(
            p, grid, spec=spec, level=level, box=box, seed=cfg.seed)
        return [{"name": "minorisation", "passed": rep.passed,
                 "max_violation": max(0.0, 0.5 * rep.alpha - rep.min_over_box),
                 "constants": {"T": rep.T, "alpha": rep.alpha,
                               "alpha_statement": rep.alpha_statement,
                               "X0": rep.X0, "V0": rep.V0, "C0": rep.C0,
                               "min_over_box": rep.min_over_box},
                 "notes": rep.notes}]
    if which == "sandwich":
        G = _need_steady(cfg, p, grid)
        return [steady.convolution_sandwich_check(G, p).to_dict()]
    if which == "tails":
        G = _need_steady(cfg, p, grid)
        return [steady.tail_bounds_check(G, p).to_dict()]
    if which == "moments":
        G = _need_steady(cfg, p, grid)
        window = (0.1 * grid.x_max, 0.75 * grid.x_max)
        return [hypo.moment_asymptotics_check(G, p, window).to_dict(),
                hypo.vg_equivalence_check(G, p).to_dict()]
    if which == "dissipation":
        G = _need_steady(cfg, p, grid)
        scfg = build_solver(cfg, grid)
        ell = cfg.entropy.get("ell")
        ecfg = hypo.EllipticConfig(ell=float(ell) if ell is not None
                                   else 1.0 / (1.0 + p.gamma))
        eps = float(cfg.entropy.get("eps", 1e-2))
        f0 = build_initial(cfg, grid, p)
        recs = hypo.entropy_trajectory(f0, G, eps, p, ecfg, scfg,
                                       stride=max(1, int(round(0.5 / scfg.dt))))
        return [hypo.dissipation_check(recs).to_dict(),
                hypo.entropy_equivalence_check(G, eps, p, ecfg,
                                               n_random=30,
                                               seed=cfg.seed).to_dict()]
    if which == "contraction":
        G = _need_steady(cfg, p, grid)
        scfg = build_solver(cfg, grid)
        f0 = build_initial(cfg, grid, p)
        X, V = np.meshgrid(grid.x, grid.v, indexing="ij")
        pexp = lyapunov.ExponentialWeight(
            a=0.5, b=0.25, nu=1e-2, B=lyapunov.exp_B_formula(p, 0.5, 1e-2))
        ppol = lyapunov.PolynomialWeight(k=2.0,
                                         B=1.5 * lyapunov.poly_B_min(p, 2.0))
        weights = {"exp": lyapunov.weight_eval(X, V, pexp, p),
                   "poly": lyapunov.weight_eval(X, V, ppol, p)}
        return [hypo.contraction_checks(f0, G, scfg, p, weights).to_dict()]
    if which == "asymptotics":
        rows = []
        ok = True
        worst = 0.0
        for n in (1, 0, 2):
            for y in (10.0, 30.0, 50.0, 100.0, 300.0):
                spec = asymptotics.LaplaceSpec(n, 1.0, y)
                q = asymptotics.laplace_integral(spec)
                a = asymptotics.laplace_integral(spec, mode="asymptotic")
                rel = abs(a / q - 1.0)
                rows.append((n, y, q, a, rel))
                if y >= 50.0:
                    lim = 0.05 if y < 300.0 else 0.02
                    if rel > lim:
                        ok = False
                        worst = max(worst, rel - lim)
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_csv(os.path.join(cfg.output_dir, "asymptotics.csv"),
                   ["n", "y", "quadrature", "asymptotic", "rel_error"], rows)
        conv = asymptotics.subexp_convolution_check(
            1.0, 2.0, 0.5, np.linspace(0.5, 200.0, 80))
        return [{"name": "laplace-asymptotics", "passed": ok,
                 "max_violation": worst,
                 "constants": {"n_rows": float(len(rows))}, "notes": []},
                conv.to_dict()]
    raise ConfigError(f"unknown verify target {which!r}; "
                      f"choose from {', '.join(VERIFY_WHICH)}")


def cmd_verify(cfg: RunConfig, which: str) -> int:
    reports = run_verify(cfg, which)
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, f"verify_{which}.json"), "w") as fh:
        json.dump(reports, fh, indent=2, sort_keys=True)
    for r in reports:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status} {r['name']} max_violation={r['max_violation']:.3g}")
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_CHECK


def _read_csv(path: str):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def cmd_report(cfg: RunConfig) -> int:
    out = cfg.output_dir
    if not os.path.isdir(out):
        raise ConfigError(f"output directory {out!r} does not exist")
    names = sorted(os.listdir(out))
    verify_files = [n for n in names if n.startswith("verify_")
                    and n.endswith(".json")]
    have_density = "density.csv" in names
    have_traj = "trajectory.csv" in names
    if not verify_files and not have_density and not have_traj:
        raise ConfigError(f"no prior command outputs in {out!r}")
    report = {"checks": [], "artifacts": []}
    for n in verify_files:
        with open(os.path.join(out, n)) as fh:
            report["checks"].extend(json.load(fh))
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    p = build_model(cfg)
    alpha = p.gamma / (1.0 + p.gamma)
    if have_density:
        header, data = _read_csv(os.path.join(out, "density.csv"))
        col = {h: data[:, i] for i, h in enumerate(header)}
        x, rho = col["x"], col["rho"]
        pos = (x > 0) & (rho > 0)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(x[pos], rho[pos], label="rho")
        nu_ref = (p.gamma + 1) / p.gamma * (1 + p.chi) ** alpha
        xx = x[pos]
        overlay = xx ** (alpha / 2) * np.exp(-nu_ref * xx ** alpha)
        ref = np.searchsorted(xx, 0.3 * xx[-1])
        overlay *= rho[pos][ref] / overlay[ref]
        ax.semilogy(xx, overlay, "--",
                    label=f"C x^{alpha/2:g} exp(-{nu_ref:.3f} x^{alpha:g})")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        ax.legend()
        fig.savefig(os.path.join(out, "density.svg"))
        plt.close(fig)
        report["artifacts"].append("density.svg")
        good = pos & (col["p2"] > 0)
        R = rho[good] * col["p4"][good] / col["p2"][good] ** 2
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.loglog(x[good], R, label="rho p4 / p2^2")
        ax.loglog(x[good], R[len(R) // 2]
                  * (x[good] / x[good][len(R) // 2]) ** 0.5, "--",
                  label="x^{1/2}")
        ax.set_xlabel("x")
        ax.set_ylabel("ratio")
        ax.legend()
        fig.savefig(os.path.join(out, "ratio.svg"))
        plt.close(fig)
        report["artifacts"].append("ratio.svg")
    if have_traj:
        header, data = _read_csv(os.path.join(out, "trajectory.csv"))
        col = {h: data[:, i] for i, h in enumerate(header)}
        key = "entropy" if "entropy" in col else (
            "l1_dist_to_G" if "l1_dist_to_G" in col else None)
        if key is not None:
            sel = col[key] > 0
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.semilogy(col["t"][sel], col[key][sel], label=key)
            ax.set_xlabel("t")
            ax.set_ylabel(key)
            ax.legend()
            fig.savefig(os.path.join(out, "entropy.svg"))
            plt.close(fig)
            report["artifacts"].append("entropy.svg")
    report["all_passed"] = all(c["passed"] for c in report["checks"]) \
        if report["checks"] else None
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="runtumble",
        description="run-and-tumble kinetic laboratory (batch front end)")
    ap.add_argument("verb", choices=["simulate", "steady", "verify", "report"])
    ap.add_argument("which", nargs="?", default=None,
                    help="verification target (verify only)")
    ap.add_argument("--config", default=None, help="JSON config path")
    ap.add_argument("--out", default=None, help="output directory override")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    if args.threads is not None:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.out is not None:
            cfg.output_dir = args.out
        if args.seed is not None:
            cfg.seed = int(args.seed)
        if args.verb == "verify":
            if args.which is None:
                raise ConfigError("verify requires a target, e.g. "
                                  "'runtumble verify coercivity'")
            return cmd_verify(cfg, args.which)
        if args.which is not None:
            raise ConfigError(f"verb {args.verb!r} takes no target")
        if args.verb == "simulate":
            return cmd_simulate(cfg)
        if args.verb == "steady":
            return cmd_steady(cfg)
        return cmd_report(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
