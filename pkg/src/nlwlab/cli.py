"""Command-line experiment driver.

Subcommands:
    make-data  synthesize a deterministic initial-data pair (NLWP file)
    run        execute one experiment described by a TOML config
    report     aggregate verdict files from experiment directories

Every experiment writes into its own directory: the resolved config, a
CSV sample table, a JSON verdict, a JSONL draw manifest, and two-column
plot data where a fit is involved.  Floats are written with shortest
round-trip repr, so outputs are byte-identical across worker counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fieldio
from .grid import (
    FieldPair,
    Grid,
    SpectralField,
    fft_forward,
    pair_sobolev_norm,
)
from .harness import (
    EnsembleSpec,
    NormRequest,
    continuity_probe,
    energy_bound_experiment,
    khintchine_verdict,
    run_ensemble,
    smalldata_experiment,
    strichartz_tail_experiment,
    write_manifest_jsonl,
    write_plot_data,
    write_table_csv,
    write_verdict_json,
)
from .propagator import linear_evolve
from .randomization import (
    CoefficientDistribution,
    CutoffFamily,
    make_draw,
    project_to_coverage,
    randomize_pair,
)
from .solver import (
    SolverConfig,
    picard_local_solve,
    solve_v_equation,
    strang_evolve,
    tau_star,
)

PROFILES = ("gaussian-bump", "multi-bump", "spectral-power")


# ----------------------------------------------------------------------
# deterministic data profiles


def band_limit_mask(grid: Grid) -> np.ndarray:
    keep = np.abs(grid.k_axis) < grid.n / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.d):
        sh = [1] * grid.d
        sh[ax] = grid.n
        mask &= keep.reshape(sh)
    return mask


def make_profile_pair(
    grid: Grid,
    profile: str,
    s: float,
    target_norm: float,
    width: float = 1.0,
    power: float = 2.0,
    bumps: int = 3,
    band_limit: bool = True,
) -> FieldPair:
    """Deterministic (u0, u1) with prescribed H^s x H^{s-1} norm."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    if not target_norm > 0:
        raise ValueError(f"target norm must be positive, got {target_norm}")
    xs = grid.meshgrid()
    if profile == "gaussian-bump":
        r2 = sum(x**2 for x in xs)
        u0 = np.exp(-r2 / (2 * width**2))
        u1 = -0.5 * np.exp(-r2 / width**2)
        pos, vel = fft_forward(u0, grid), fft_forward(u1, grid)
    elif profile == "multi-bump":
        u0 = np.zeros(grid.shape)
        u1 = np.zeros(grid.shape)
        for j in range(bumps):
            shift = (j + 1) * grid.L / (2.0 * (bumps + 1)) - grid.L / 4.0
            sign = -1.0 if j % 2 else 1.0
            r2 = sum((x - shift) ** 2 for x in xs)
            u0 += sign * np.exp(-r2 / (2 * width**2))
            u1 += 0.3 * sign * np.exp(-r2 / width**2)
        pos, vel = fft_forward(u0, grid), fft_forward(u1, grid)
    else:  # spectral-power: even real spectrum <xi>^{-power}
        w = (1.0 + 4 * np.pi**2 * grid.xi_norm**2) ** (-power / 2.0)
        pos = SpectralField(grid, w.astype(np.complex128))
        vel = SpectralField(grid, 0.5 * w.astype(np.complex128))
    if band_limit:
        mask = band_limit_mask(grid)
        pos = SpectralField(grid, pos.coeffs * mask)
        vel = SpectralField(grid, vel.coeffs * mask)
    pair = FieldPair(pos, vel)
    norm = pair_sobolev_norm(pair, s)
    if norm <= 1e-300:
        raise ValueError("profile produced a zero field; cannot normalize")
    return pair.scaled(target_norm / norm)


# ----------------------------------------------------------------------
# experiment dispatch


def _out_dir(args, name: str) -> Path:
    out = Path(args.out) / name
    if out.exists():
        if not args.force:
            raise SystemExit(
                f"output directory {out} exists; pass --force to overwrite"
            )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid_from(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid(g["d"], g["n"], float(g["L"]))


def _base_pair(cfg: dict, grid: Grid, s: float) -> FieldPair:
    data = cfg.get("data", {})
    if "path" in data:
        pair, _ = fieldio.load_pair(data["path"])
        if pair.grid != grid:
            raise SystemExit(
                f"data file grid {pair.grid} does not match config grid {grid}"
            )
        return pair
    return make_profile_pair(
        grid,
        data.get("profile", "gaussian-bump"),
        s,
        float(data.get("target_norm", 1.0)),
        width=float(data.get("width", 1.0)),
        power=float(data.get("power", 2.0)),
        bumps=int(data.get("bumps", 3)),
        band_limit=bool(data.get("band_limit", True)),
    )


def _ensemble_spec(cfg: dict, grid: Grid, pipeline: str, norms=(), solver=None) -> EnsembleSpec:
    rnd = cfg.get("randomization", {})
    ens = cfg.get("ensemble", {})
    s = float(rnd.get("s", 0.5))
    cutoff = CutoffFamily(rnd.get("cutoff", "smooth"), grid)
    base = project_to_coverage(_base_pair(cfg, grid, s), cutoff)
    norm = pair_sobolev_norm(base, s)
    if norm <= 1e-300:
        raise SystemExit("base data carries no mass inside the cutoff coverage")
    target = float(cfg.get("data", {}).get("target_norm", 1.0))
    base = base.scaled(target / norm)
    return EnsembleSpec(
        n_samples=int(ens.get("n_samples", 64)),
        master_seed=int(ens.get("master_seed", 0)),
        dist_kind=rnd.get("distribution", "gaussian"),
        cutoff_kind=cutoff.kind,
        base_pair=base,
        grid=grid,
        pipeline=pipeline,
        s=s,
        norms=tuple(norms),
        time_samples=int(ens.get("time_samples", 17)),
        solver=solver,
    )


def _solver_config(cfg: dict) -> SolverConfig:
    sv = cfg.get("solver", {})
    if "dt" not in sv or "t_end" not in sv:
        raise SystemExit("experiment needs [solver] dt and t_end")
    return SolverConfig(
        dt=float(sv["dt"]),
        t_end=float(sv["t_end"]),
        dealias=sv.get("dealias", "two-thirds"),
        sample_stride=int(sv.get("sample_stride", 1)),
        nonlinear=bool(sv.get("nonlinear", True)),
    )


def _run_randomize(cfg, args, out):
    grid = _grid_from(cfg)
    rnd = cfg.get("randomization", {})
    s = float(rnd.get("s", 0.5))
    cutoff = CutoffFamily(rnd.get("cutoff", "smooth"), grid)
    base = project_to_coverage(_base_pair(cfg, grid, s), cutoff)
    dist = CoefficientDistribution(rnd.get("distribution", "gaussian"))
    seed = int(cfg.get("ensemble", {}).get("master_seed", 0))
    draw = make_draw(seed, 0, cutoff, dist)
    pair = randomize_pair(base, cutoff, dist, draw)
    fieldio.save_pair(
        out / "randomized.nlwp",
        pair,
        {
            "master_seed": seed,
            "index": 0,
            "distribution": dist.kind,
            "cutoff": cutoff.kind,
            "s": s,
        },
    )
    return {
        "experiment": "randomize",
        "hs_norm": pair_sobolev_norm(pair, s),
        "pass": True,
    }


def _run_linear_evolve(cfg, args, out):
    grid = _grid_from(cfg)
    s = float(cfg.get("randomization", {}).get("s", 0.5))
    pair = _base_pair(cfg, grid, s)
    times = [float(t) for t in cfg.get("times", {}).get("values", [0.25, 0.5, 1.0])]
    rows = []
    for i, t in enumerate(times):
        ev = linear_evolve(pair, t)
        rows.append(
            {
                "index": i,
                "t": t,
                "pair_hs_norm": pair_sobolev_norm(ev, s),
            }
        )
    write_table_csv(rows, out / "table.csv")
    return {"experiment": "linear-evolve", "times": times, "pass": True}


def _run_solve(cfg, args, out):
    grid = _grid_from(cfg)
    s = float(cfg.get("randomization", {}).get("s", 0.5))
    pair = _base_pair(cfg, grid, s)
    sv = _solver_config(cfg)
    traj = strang_evolve(pair, sv)
    with open(out / "trajectory.jsonl", "w") as f:
        for i, t in enumerate(traj.times):
            f.write(
                json.dumps(
                    {"t": float(t), "energy": float(traj.energy_series[i])},
                    sort_keys=True,
                )
                + "\n"
            )
    e0, e1 = float(traj.energy_series[0]), float(traj.energy_series[-1])
    drift = abs(e1 - e0) / max(e0, 1e-300)
    return {
        "experiment": "solve",
        "energy_initial": e0,
        "energy_final": e1,
        "relative_energy_drift": drift,
        "pass": True,
    }


def _run_strichartz(cfg, args, out):
    grid = _grid_from(cfg)
    tail = cfg.get("tail", {})
    q = float(tail.get("q", 3.0))
    r = float(tail.get("r", 6.0))
    interval = (float(tail.get("t0", 0.0)), float(tail.get("t1", 1.0)))
    spec = _ensemble_spec(
        cfg, grid, "linear-only", norms=[NormRequest(q, r, interval)]
    )
    report = strichartz_tail_experiment(
        spec,
        q,
        r,
        interval,
        exceedance_gamma=float(tail.get("exceedance_gamma", 1.0)),
        r2_min=float(tail.get("r2_min", 0.95)),
        workers=args.workers,
    )
    write_table_csv(report["rows"], out / "table.csv")
    write_manifest_jsonl(spec, out / "manifest.jsonl")
    fit = report["fit"]
    write_plot_data(out / "tail_fit.dat", fit.lambdas**2, np.log(fit.survival))
    return report


def _run_khintchine(cfg, args, out):
    kh = cfg.get("khintchine", {})
    dim = int(kh.get("dim", 2))
    half = int(kh.get("half_width", 4))
    sigma = float(kh.get("sigma", 1.0))
    p_list = [float(p) for p in kh.get("p_list", [2, 4, 6, 8])]
    n_samples = int(kh.get("n_samples", 100000))
    rnd = cfg.get("randomization", {})
    dist = CoefficientDistribution(rnd.get("distribution", "gaussian"))
    seed = int(cfg.get("ensemble", {}).get("master_seed", 0))
    axes = [range(-half, half + 1)] * dim
    centers = [tuple(c) for c in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)]
    values = np.array(
        [(1.0 + sum(x**2 for x in c)) ** (-sigma / 2.0) for c in centers]
    )
    report = khintchine_verdict(centers, values, dist, p_list, n_samples, seed)
    report["experiment"] = "khintchine"
    ps = sorted(report["moments"])
    write_plot_data(
        out / "moments.dat", np.log(ps), np.log([report["moments"][p] for p in ps])
    )
    return report


def _run_energy_bound(cfg, args, out):
    grid = _grid_from(cfg)
    sv = _solver_config(cfg)
    spec = _ensemble_spec(cfg, grid, "full-solve", solver=sv)
    report = energy_bound_experiment(spec, sv.t_end, workers=args.workers)
    write_table_csv(report["rows"], out / "table.csv")
    write_manifest_jsonl(spec, out / "manifest.jsonl")
    return report


def _run_smalldata(cfg, args, out):
    grid = _grid_from(cfg)
    sv = _solver_config(cfg)
    sd = cfg.get("smalldata", {})
    eps_list = [float(e) for e in sd.get("eps_list", [0.1, 0.05, 0.025])]
    spec = _ensemble_spec(cfg, grid, "full-solve", solver=sv)
    report = smalldata_experiment(
        spec, eps_list, float(sd.get("T", sv.t_end)), float(sd.get("eta", 0.5)),
        workers=args.workers,
    )
    for lev in report["levels"]:
        write_table_csv(lev["rows"], out / f"table_eps{lev['eps']!r}.csv")
        del lev["rows"]
    return report


def _run_continuity(cfg, args, out):
    grid = _grid_from(cfg)
    cn = cfg.get("continuity", {})
    pipeline = cn.get("pipeline", "full-solve")
    sv = _solver_config(cfg) if pipeline == "full-solve" else None
    rnd = dict(cfg.get("randomization", {}))
    rnd["cutoff"] = "sharp"
    cfg = dict(cfg, randomization=rnd)
    spec = _ensemble_spec(cfg, grid, pipeline, solver=sv)
    s = spec.s
    rho = project_to_coverage(
        make_profile_pair(grid, "multi-bump", s, 1.0, band_limit=True), spec.cutoff()
    )
    rho = rho.scaled(1.0 / pair_sobolev_norm(rho, s))
    eta_list = [float(e) for e in cn.get("eta_list", [0.1, 0.05, 0.025, 0.0125])]
    T = float(cn.get("T", sv.t_end if sv else 1.0))
    report = continuity_probe(spec.base_pair, rho, eta_list, spec, T, workers=args.workers)
    write_plot_data(out / "medians.dat", eta_list, report["medians"])
    return report


def _run_calibrate_tau(cfg, args, out):
    tau = cfg.get("tau", {})
    A_list = [float(a) for a in tau.get("A_list", [1.0, 2.0])]
    K_list = [float(k) for k in tau.get("K_list", [1.0, 2.0])]
    gamma = float(tau.get("gamma", 0.0))
    T = float(tau.get("T", 1.0))
    eps = float(tau.get("eps", 0.1))
    grid = _grid_from(cfg)
    d = grid.d
    rows = []
    i = 0
    for A in A_list:
        for K in K_list:
            # empirical branch: largest dyadic step with Picard contraction
            # ratio <= 1/2 on amplitude-A data
            base = make_profile_pair(grid, "gaussian-bump", 1.0, A)
            step = 0.25
            chosen = None
            while step > 1e-4:
                try:
                    _, log = picard_local_solve(
                        base, (0.0, step), 9, tol=1e-10, d=d
                    )
                    ratios = [e["ratio"] for e in log if e["ratio"] is not None]
                    if not ratios or max(ratios) <= 0.5:
                        chosen = step
                        break
                except Exception:
                    pass
                step /= 2
            empirical = chosen if chosen is not None else step
            rows.append(
                {
                    "index": i,
                    "A": A,
                    "K": K,
                    "tau_empirical": empirical,
                    "tau_formula": tau_star(A, K, gamma, T, eps, d),
                }
            )
            i += 1
    write_table_csv(rows, out / "table.csv")
    return {
        "experiment": "calibrate-tau",
        "gamma": gamma,
        "T": T,
        "eps": eps,
        "table": [[row["A"], row["K"], row["tau_empirical"]] for row in rows],
        "pass": True,
    }


_RUNNERS = {
    "randomize": _run_randomize,
    "linear-evolve": _run_linear_evolve,
    "solve": _run_solve,
    "strichartz-mc": _run_strichartz,
    "khintchine": _run_khintchine,
    "energy-bound": _run_energy_bound,
    "smalldata": _run_smalldata,
    "continuity": _run_continuity,
    "calibrate-tau": _run_calibrate_tau,
}


# ----------------------------------------------------------------------
# subcommand entry points


def cmd_make_data(args) -> int:
    grid = Grid(args.d, args.n, args.L)
    pair = make_profile_pair(
        grid,
        args.profile,
        args.s,
        args.target_norm,
        width=args.width,
        power=args.power,
        bumps=args.bumps,
        band_limit=args.band_limit,
    )
    path = Path(args.path)
    if path.exists() and not args.force:
        raise SystemExit(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldio.save_pair(
        path,
        pair,
        {
            "profile": args.profile,
            "s": args.s,
            "target_norm": args.target_norm,
            "band_limit": args.band_limit,
        },
    )
    print(f"wrote {path} (d={grid.d}, n={grid.n}, L={grid.L})")
    return 0


def cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfg = cfgmod.resolve(cfg, {"seed": args.seed})
    name = cfg["experiment"]["name"]
    out = _out_dir(args, name)
    cfgmod.write_resolved(cfg, out / "config.json")
    runner = _RUNNERS[cfg["experiment"]["kind"]]
    report = runner(cfg, args, out)
    write_verdict_json(report, out / "verdict.json")
    status = "PASS" if report.get("pass") else "FAIL"
    print(f"{name}: {status} ({report['experiment']}) -> {out}")
    return 0 if report.get("pass") else 1


def cmd_report(args) -> int:
    rows = []
    for dname in args.dirs:
        vp = Path(dname) / "verdict.json"
        if not vp.exists():
            print(f"{dname}: no verdict.json", file=sys.stderr)
            continue
        with open(vp) as f:
            verdict = json.load(f)
        rows.append(
            {
                "dir": str(dname),
                "experiment": verdict.get("experiment", "?"),
                "pass": bool(verdict.get("pass")),
            }
        )
    for row in rows:
        print(f"{'PASS' if row['pass'] else 'FAIL'}  {row['experiment']:<16} {row['dir']}")
    summary = {
        "total": len(rows),
        "passed": sum(row["pass"] for row in rows),
        "entries": rows,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0 if summary["passed"] == summary["total"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlwlab",
        description="Pseudospectral experiments for randomized nonlinear waves",
    )
    ap.add_argument("--seed", type=int, default=None, help="override master seed")
    ap.add_argument("--workers", type=int, default=1, help="parallel sample workers")
    ap.add_argument("--force", action="store_true", help="overwrite existing outputs")
    ap.add_argument("--out", default="runs", help="output root directory")
    sub = ap.add_subparsers(dest="command", required=True)

    mk = sub.add_parser("make-data", help="synthesize an initial-data file")
    mk.add_argument("path")
    mk.add_argument("--profile", choices=PROFILES, default="gaussian-bump")
    mk.add_argument("--d", type=int, default=4)
    mk.add_argument("--n", type=int, default=32)
    mk.add_argument("--L", type=float, default=8.0)
    mk.add_argument("--s", type=float, default=0.5)
    mk.add_argument("--target-norm", type=float, default=1.0)
    mk.add_argument("--width", type=float, default=1.0)
    mk.add_argument("--power", type=float, default=2.0)
    mk.add_argument("--bumps", type=int, default=3)
    mk.add_argument("--band-limit", action=argparse.BooleanOptionalAction, default=True)
    mk.set_defaults(func=cmd_make_data)

    rn = sub.add_parser("run", help="run one experiment config")
    rn.add_argument("config")
    rn.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="aggregate verdicts from run directories")
    rp.add_argument("dirs", nargs="+")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
