"""Acceptance suite: eleven verdicts at pinned tolerances.

Each test prints exactly one PASS/FAIL line (run with `pytest -s` to see
them as they complete).  Expected values come from closed-form oracles or
internal two-batch consistency, never from fitted constants.
"""

import itertools
import math

import numpy as np
import pytest

from nlwlab.grid import (
    FieldPair,
    Grid,
    SpectralField,
    pair_sobolev_norm,
    sobolev_norm,
)
from nlwlab.harness import (
    EnsembleSpec,
    NormRequest,
    continuity_probe,
    energy_bound_experiment,
    khintchine_verdict,
    run_ensemble,
    smalldata_experiment,
    strichartz_tail_experiment,
    write_table_csv,
)
from nlwlab.propagator import linear_energy, linear_evolve
from nlwlab.randomization import (
    CoefficientDistribution,
    CutoffFamily,
    make_draw,
    project_to_coverage,
    randomize_pair,
)
from nlwlab.solver import (
    SolverConfig,
    admissible_pair_check,
    dealias_mask,
    gronwall_bound,
    picard_local_solve,
    solve_v_equation,
    strang_evolve,
    tau_star,
)

from conftest import random_real_pair


def _verdict(name: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def _unit_base(grid, cutoff, s, seed=0):
    base = project_to_coverage(random_real_pair(grid, seed), cutoff)
    return base.scaled(1.0 / pair_sobolev_norm(base, s))


def test_01_linear_exactness():
    g = Grid(4, 32, 8.0)
    worst = 0.0
    for seed in (0, 1, 2):
        pair = random_real_pair(g, seed)
        scale = max(
            np.max(np.abs(pair.pos.coeffs)), np.max(np.abs(pair.vel.coeffs))
        )
        for t1, t2 in ((0.3, 0.7), (2.5, 4.0), (1.0, 9.0)):
            a = linear_evolve(linear_evolve(pair, t1), t2)
            b = linear_evolve(pair, t1 + t2)
            worst = max(
                worst,
                np.max(np.abs(a.pos.coeffs - b.pos.coeffs)) / scale,
                np.max(np.abs(a.vel.coeffs - b.vel.coeffs)) / scale,
            )
        for t in (0.5, 5.0, 10.0):
            back = linear_evolve(linear_evolve(pair, t), -t)
            worst = max(
                worst, np.max(np.abs(back.pos.coeffs - pair.pos.coeffs)) / scale
            )
            e0, et = linear_energy(pair), linear_energy(linear_evolve(pair, t))
            worst = max(worst, abs(et - e0) / e0)
    _verdict(
        "criterion 1 linear exactness (group, reversal, energy) <= 1e-9",
        worst <= 1e-9,
        f"worst residual {worst:.2e}",
    )


def test_02_randomization_identities():
    g = Grid(2, 32, 4.0)
    worst_real = 0.0
    worst_recon = 0.0
    for kind in ("smooth", "sharp"):
        fam = CutoffFamily(kind, g)
        base = _unit_base(g, fam, 0.5, seed=3)
        # partition-of-unity reconstruction: symbols sum to 1 on coverage
        total = np.zeros(g.shape)
        for c in fam.centers:
            total += fam.cube_symbol(c)
        mask = fam.coverage_mask()
        worst_recon = max(worst_recon, float(np.max(np.abs(total[mask] - 1.0))))
        for dk in ("gaussian", "rademacher", "uniform", "unimodular"):
            dist = CoefficientDistribution(dk)
            for i in range(5):
                out = randomize_pair(base, fam, dist, make_draw(7, i, fam, dist))
                worst_real = max(
                    worst_real, out.pos.imag_residue(), out.vel.imag_residue()
                )
    # unimodular + sharp preserves every H^s norm exactly, 100 draws
    fam = CutoffFamily("sharp", g)
    dist = CoefficientDistribution("unimodular")
    base = _unit_base(g, fam, 0.5, seed=4)
    ref = sobolev_norm(base.pos, 0.5)
    worst_iso = 0.0
    for i in range(100):
        out = randomize_pair(base, fam, dist, make_draw(11, i, fam, dist))
        worst_iso = max(worst_iso, abs(sobolev_norm(out.pos, 0.5) - ref) / ref)
    ok = worst_real <= 1e-11 and worst_recon <= 1e-12 and worst_iso <= 1e-12
    _verdict(
        "criterion 2 randomization identities (realness 1e-11, partition 1e-12, "
        "unimodular isometry 1e-12)",
        ok,
        f"real {worst_real:.1e}, recon {worst_recon:.1e}, iso {worst_iso:.1e}",
    )


def test_03_khintchine_moments():
    fam = CutoffFamily("smooth", Grid(2, 48, 4.0))
    assert len(fam.centers) >= 64
    values = np.array(
        [1.0 / math.sqrt(1.0 + sum(x * x for x in c)) for c in fam.centers]
    )
    ok = True
    details = []
    for dk in ("gaussian", "rademacher", "uniform"):
        rep = khintchine_verdict(
            fam.centers,
            values,
            CoefficientDistribution(dk),
            [2, 4, 8, 16],
            100000,
            master_seed=17,
        )
        ok = ok and rep["pass"]
        details.append(f"{dk} slope {rep['loglog_slope']:.3f}")
    _verdict(
        "criterion 3 Khintchine moment growth (slope <= 0.55, R_p <= 1.5 R_2, "
        f"{len(fam.centers)} cubes, 1e5 samples)",
        ok,
        "; ".join(details),
    )


@pytest.fixture(scope="module")
def strichartz_setup():
    g = Grid(4, 16, 8.0)
    fam = CutoffFamily("sharp", g)
    base = _unit_base(g, fam, 0.5, seed=5)
    return g, base


def _strichartz_fit(g, base, n_samples=10000):
    spec = EnsembleSpec(
        n_samples=n_samples,
        master_seed=23,
        dist_kind="gaussian",
        cutoff_kind="sharp",
        base_pair=base,
        grid=g,
        pipeline="linear-only",
        s=0.5,
        norms=(NormRequest(3.0, 6.0, (0.0, 1.0)),),
        time_samples=17,
    )
    return strichartz_tail_experiment(spec, 3.0, 6.0, (0.0, 1.0))


def test_04_strichartz_tails(strichartz_setup):
    g, base = strichartz_setup
    rep = _strichartz_fit(g, base)
    fit = rep["fit"]
    rep_half = _strichartz_fit(g, base.scaled(0.5))
    slope_ratio = rep_half["fit"].slope / fit.slope
    ok = rep["pass"] and 3.0 <= slope_ratio <= 5.0
    _verdict(
        "criterion 4 Strichartz tail fit (slope < 0, R^2 >= 0.95, halved norm "
        "rescales slope x4 +-25%)",
        ok,
        f"slope {fit.slope:.3f}, R2 {fit.r_squared:.4f}, ratio {slope_ratio:.3f}",
    )


def test_05_solver_convergence():
    g = Grid(4, 12, 6.0)
    data = random_real_pair(g, 6, band_mask=dealias_mask(g)).scaled(0.2)

    def final(dt):
        cfg = SolverConfig(dt=dt, t_end=0.2, store_states=True)
        return strang_evolve(data, cfg).states[-1]

    ref = final(0.00125)
    errs = [
        float(np.sqrt(np.sum(np.abs(final(dt).pos.coeffs - ref.pos.coeffs) ** 2)))
        for dt in (0.01, 0.005)
    ]
    order_ratio = errs[0] / errs[1]

    cfg = SolverConfig(dt=0.001, t_end=0.1, store_states=True)
    direct = strang_evolve(data, cfg)
    vtraj = solve_v_equation(data, FieldPair.zero(g), cfg)
    two_route = 0.0
    for t, su, sv in zip(direct.times, direct.states, vtraj.states):
        z = linear_evolve(data, t)
        two_route = max(
            two_route,
            float(
                np.sqrt(
                    np.sum(np.abs(su.pos.coeffs - sv.pos.coeffs - z.pos.coeffs) ** 2)
                )
            ),
        )

    samples, _ = picard_local_solve(data, (0.0, 0.05), 9, tol=1e-12)
    cfg2 = SolverConfig(dt=0.05 / 256, t_end=0.05, store_states=True)
    vfin = solve_v_equation(data, FieldPair.zero(g), cfg2).states[-1]
    cross = float(
        np.sqrt(np.sum(np.abs(vfin.pos.coeffs - samples[-1].pos.coeffs) ** 2))
    )

    ok = 3.2 <= order_ratio <= 4.8 and two_route <= 1e-6 and cross <= 1e-6
    _verdict(
        "criterion 5 solver convergence (order-2 ratio in [3.2, 4.8], two-route "
        "<= 1e-6, Picard cross-oracle <= 1e-6)",
        ok,
        f"ratio {order_ratio:.2f}, two-route {two_route:.1e}, picard {cross:.1e}",
    )


def test_06_energy_conservation():
    g = Grid(4, 32, 8.0)
    pair = random_real_pair(g, 7, band_mask=dealias_mask(g)).scaled(0.25)
    cfg = SolverConfig(dt=2.5e-3, t_end=1.0, sample_stride=20)
    traj = strang_evolve(pair, cfg)
    drift = float(
        np.max(np.abs(traj.energy_series - traj.energy_series[0]))
        / traj.energy_series[0]
    )
    _verdict(
        "criterion 6 energy conservation (relative drift <= 1e-4, T = 1, "
        "dt = 2.5e-3, n = 32)",
        drift <= 1e-4,
        f"drift {drift:.2e}",
    )


def _energy_bound_run(d, s, dt, t_end, stride, seed):
    g = Grid(d, 12, 6.0)
    fam = CutoffFamily("sharp", g)
    base = _unit_base(g, fam, s, seed=seed)
    sv = SolverConfig(dt=dt, t_end=t_end, sample_stride=stride,
                      dealias="two-thirds" if d == 4 else "padded-3/2")
    spec = EnsembleSpec(
        n_samples=100,
        master_seed=29,
        dist_kind="gaussian",
        cutoff_kind="sharp",
        base_pair=base,
        grid=g,
        pipeline="full-solve",
        s=s,
        solver=sv,
    )
    return energy_bound_experiment(spec, t_end)


def test_07_energy_bound_two_batch():
    rep4 = _energy_bound_run(4, 0.75, 0.01, 1.0, 4, seed=8)
    rep5 = _energy_bound_run(5, 0.25, 0.025, 1.0, 2, seed=9)
    ok = rep4["pass"] and rep5["pass"]
    _verdict(
        "criterion 7 energy bound two-batch (d = 4 s = 0.75 and d = 5 s = 0.25, "
        "batch-2 max <= 2 x batch-1 fit)",
        ok,
        f"d4 fit {rep4['sup_ratio_verdict']['fitted_constant']:.3f} "
        f"verify {rep4['sup_ratio_verdict']['verify_max']:.3f}; "
        f"d5 fit {rep5['sup_ratio_verdict']['fitted_constant']:.3f} "
        f"verify {rep5['sup_ratio_verdict']['verify_max']:.3f}",
    )


def _smalldata_run(d, n, L, dt, t_end, seed):
    g = Grid(d, n, L)
    fam = CutoffFamily("sharp", g)
    base = _unit_base(g, fam, 1.0, seed=seed)
    sv = SolverConfig(dt=dt, t_end=t_end, sample_stride=1,
                      dealias="two-thirds" if d == 4 else "padded-3/2")
    spec = EnsembleSpec(
        n_samples=32,
        master_seed=31,
        dist_kind="gaussian",
        cutoff_kind="sharp",
        base_pair=base,
        grid=g,
        pipeline="full-solve",
        s=1.0,
        solver=sv,
    )
    return smalldata_experiment(spec, [0.2, 0.1, 0.05], t_end, smallness_eta=1.0)


def test_08_smalldata_scaling():
    rep4 = _smalldata_run(4, 12, 6.0, 0.01, 0.5, seed=10)
    rep5 = _smalldata_run(5, 8, 4.0, 0.02, 0.4, seed=11)
    ok = rep4["pass"] and rep5["pass"]
    _verdict(
        "criterion 8 small-data scaling (per-halving reduction in x[0.7, 1.4] "
        "of 8 for d = 4 and 5.04 for d = 5)",
        ok,
        f"d4 ratios {[round(r, 2) for r in rep4['per_halving_ratios']]}, "
        f"d5 ratios {[round(r, 2) for r in rep5['per_halving_ratios']]}",
    )


def test_09_continuity_probe():
    g = Grid(4, 12, 6.0)
    fam = CutoffFamily("sharp", g)
    base = _unit_base(g, fam, 1.0, seed=12)
    rho = _unit_base(g, fam, 1.0, seed=13)
    sv = SolverConfig(dt=0.01, t_end=0.5, sample_stride=5)
    spec = EnsembleSpec(
        n_samples=32,
        master_seed=37,
        dist_kind="rademacher",
        cutoff_kind="sharp",
        base_pair=base,
        grid=g,
        pipeline="full-solve",
        s=1.0,
        solver=sv,
    )
    rep = continuity_probe(base, rho, [0.1, 0.05, 0.025, 0.0125], spec, 0.5)
    _verdict(
        "criterion 9 continuity probe (medians nonincreasing, smallest <= 1/4 "
        "of largest)",
        rep["pass"],
        "medians " + ", ".join(f"{m:.4f}" for m in rep["medians"]),
    )


def test_10_utility_exactness():
    times = np.linspace(0.0, 2.0, 401)
    gval = gronwall_bound(1.0, 0.5, np.ones_like(times), times, 2.0)
    gron_ok = abs(gval - 4.0) <= 1e-10
    pairs_ok = (
        admissible_pair_check(4, 1.0, 3.0, 6.0)
        and admissible_pair_check(4, 1.0, 2.0, 8.0)
        and admissible_pair_check(4, 0.0, np.inf, 2.0)
        and admissible_pair_check(5, 1.0, 7.0 / 3.0, 14.0 / 3.0)
        and not admissible_pair_check(4, 1.0, 3.0, 7.0)
        and not admissible_pair_check(4, 0.5, 3.0, 6.0)
    )
    tau_ok = abs(tau_star(1.0, 1.0, 0.0, 1.0, 0.1, 4) - 0.034094) <= 5e-6
    ok = gron_ok and pairs_ok and tau_ok
    _verdict(
        "criterion 10 utility exactness (Gronwall equality to 1e-10, admissible "
        "pair table, step-size spot value)",
        ok,
        f"gronwall {gval:.12f}",
    )


def test_11_reproducibility(tmp_path):
    g = Grid(4, 16, 8.0)
    fam = CutoffFamily("sharp", g)
    base = _unit_base(g, fam, 0.5, seed=14)
    spec = EnsembleSpec(
        n_samples=64,
        master_seed=41,
        dist_kind="gaussian",
        cutoff_kind="sharp",
        base_pair=base,
        grid=g,
        pipeline="linear-only",
        s=0.5,
        norms=(NormRequest(3.0, 6.0, (0.0, 1.0)),),
        time_samples=17,
    )
    payloads = []
    for workers in (1, 2, 3):
        rows = run_ensemble(spec, workers=workers)
        p = tmp_path / f"w{workers}.csv"
        write_table_csv(rows, p)
        payloads.append(p.read_bytes())
    ok = payloads[0] == payloads[1] == payloads[2]
    _verdict(
        "criterion 11 reproducibility (byte-identical tables for workers 1, 2, 3)",
        ok,
    )
