import itertools
import json
import math

import numpy as np
import pytest

from nlwlab.grid import Grid, pair_sobolev_norm
from nlwlab.harness import (
    DegenerateSampleError,
    EnsembleSpec,
    NormRequest,
    continuity_probe,
    fit_survival_curve,
    khintchine_verdict,
    moment_estimate,
    run_ensemble,
    strichartz_tail_experiment,
    table_columns,
    tail_fit,
    two_batch_ratio_verdict,
    write_manifest_jsonl,
    write_plot_data,
    write_table_csv,
    write_verdict_json,
)
from nlwlab.randomization import (
    CoefficientDistribution,
    CutoffFamily,
    project_to_coverage,
)
from nlwlab.solver import SolverConfig

from conftest import random_real_pair


def linear_spec(n_samples=8, seed=0, cutoff="sharp", dist="gaussian"):
    g = Grid(4, 16, 8.0)
    fam = CutoffFamily(cutoff, g)
    base = project_to_coverage(random_real_pair(g, 0), fam)
    base = base.scaled(1.0 / pair_sobolev_norm(base, 0.5))
    return EnsembleSpec(
        n_samples=n_samples,
        master_seed=seed,
        dist_kind=dist,
        cutoff_kind=cutoff,
        base_pair=base,
        grid=g,
        pipeline="linear-only",
        s=0.5,
        norms=(NormRequest(3.0, 6.0, (0.0, 1.0)),),
        time_samples=9,
    )


class TestEnsembleSpec:
    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            linear_spec(n_samples=1)

    def test_unknown_pipeline(self):
        spec = linear_spec()
        with pytest.raises(ValueError):
            EnsembleSpec(
                n_samples=4,
                master_seed=0,
                dist_kind="gaussian",
                cutoff_kind="sharp",
                base_pair=spec.base_pair,
                grid=spec.grid,
                pipeline="warp",
                s=0.5,
            )

    def test_full_solve_needs_solver(self):
        spec = linear_spec()
        with pytest.raises(ValueError, match="SolverConfig"):
            EnsembleSpec(
                n_samples=4,
                master_seed=0,
                dist_kind="gaussian",
                cutoff_kind="sharp",
                base_pair=spec.base_pair,
                grid=spec.grid,
                pipeline="full-solve",
                s=0.5,
            )

    def test_admissible_tag_enforced(self):
        spec = linear_spec()
        with pytest.raises(ValueError, match="admissib"):
            EnsembleSpec(
                n_samples=4,
                master_seed=0,
                dist_kind="gaussian",
                cutoff_kind="sharp",
                base_pair=spec.base_pair,
                grid=spec.grid,
                pipeline="linear-only",
                s=0.5,
                norms=(NormRequest(3.0, 7.0, (0.0, 1.0), admissible_gamma=1.0),),
            )

    def test_solver_norms_augmented(self):
        spec = linear_spec()
        full = EnsembleSpec(
            n_samples=4,
            master_seed=0,
            dist_kind="gaussian",
            cutoff_kind="sharp",
            base_pair=spec.base_pair,
            grid=spec.grid,
            pipeline="full-solve",
            s=0.5,
            solver=SolverConfig(dt=0.1, t_end=0.5),
        )
        keys = {(float(q), float(r)) for q, r in full.solver.record_norms}
        assert (3.0, 6.0) in keys
        assert (1.0, np.inf) in keys


class TestRunEnsemble:
    def test_rows_ordered_and_deterministic(self):
        spec = linear_spec(n_samples=6)
        r1 = run_ensemble(spec, workers=1)
        r2 = run_ensemble(spec, workers=3)
        assert [row["index"] for row in r1] == list(range(6))
        assert r1 == r2

    def test_norm_column_present(self):
        rows = run_ensemble(linear_spec(n_samples=4))
        assert all("norm_q3_r6" in row for row in rows)
        assert all(row["norm_q3_r6"] > 0 for row in rows)


class TestMomentEstimate:
    def test_gaussian_second_moment(self):
        x = np.random.default_rng(0).standard_normal(20000)
        est, (lo, hi) = moment_estimate(x, 2.0)
        assert est == pytest.approx(1.0, abs=0.03)
        assert lo <= est <= hi

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            moment_estimate([], 2.0)

    def test_p_below_one(self):
        with pytest.raises(ValueError):
            moment_estimate([1.0, 2.0], 0.5)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            moment_estimate([1.0, np.inf], 2.0)


class TestKhintchine:
    def _centers_values(self, half=3, sigma=1.0):
        centers = list(itertools.product(range(-half, half + 1), repeat=2))
        values = np.array(
            [(1.0 + c[0] ** 2 + c[1] ** 2) ** (-sigma / 2) for c in centers]
        )
        return centers, values

    def test_gaussian_passes(self):
        centers, values = self._centers_values()
        rep = khintchine_verdict(
            centers, values, CoefficientDistribution("gaussian"), [2, 4, 8], 20000
        )
        assert rep["pass"]
        assert rep["loglog_slope"] <= 0.55

    def test_non_hermitian_rejected(self):
        centers = [(0, 1), (0, -1)]
        values = np.array([1.0 + 1j, 1.0 + 1j])  # conj mismatch
        with pytest.raises(ValueError, match="Hermitian"):
            khintchine_verdict(
                centers, values, CoefficientDistribution("gaussian"), [2, 4], 100
            )

    def test_p2_required(self):
        centers, values = self._centers_values()
        with pytest.raises(ValueError, match="p = 2"):
            khintchine_verdict(
                centers, values, CoefficientDistribution("gaussian"), [4, 8], 100
            )

    def test_zero_sequence_rejected(self):
        centers = [(0, 0)]
        with pytest.raises(ValueError, match="zero"):
            khintchine_verdict(
                centers, np.array([0.0]), CoefficientDistribution("gaussian"), [2], 100
            )


class TestTailFit:
    def test_exact_gaussian_curve(self):
        # survival exp(-2 lambda^2): regression recovers slope -2, R^2 = 1
        lam = np.linspace(0.5, 2.0, 20)
        slope, intercept, r2 = fit_survival_curve(lam, np.exp(-2 * lam**2))
        assert slope == pytest.approx(-2.0, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_samples_negative_slope(self):
        x = np.abs(np.random.default_rng(1).standard_normal(20000))
        fit = tail_fit(x)
        assert fit.slope < 0
        assert fit.r_squared >= 0.9

    def test_self_calibration_against_exact_survival(self):
        # oracle: the same fit applied to the exact |N(0,1)| survival curve
        from scipy.stats import norm

        x = np.abs(np.random.default_rng(2).standard_normal(200000))
        fit = tail_fit(x)
        exact_survival = 2 * norm.sf(fit.lambdas)
        slope_exact, _, _ = fit_survival_curve(fit.lambdas, exact_survival)
        assert fit.slope == pytest.approx(slope_exact, rel=0.05)

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateSampleError):
            tail_fit(np.full(2000, 3.0))

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="at least"):
            tail_fit(np.arange(10.0))

    def test_bad_quantile_range(self):
        with pytest.raises(ValueError):
            tail_fit(np.random.default_rng(3).random(2000), quantile_range=(0.9, 0.2))


class TestExperiments:
    def test_strichartz_wrong_pipeline(self):
        spec = linear_spec()
        full = EnsembleSpec(
            n_samples=4,
            master_seed=0,
            dist_kind="gaussian",
            cutoff_kind="sharp",
            base_pair=spec.base_pair,
            grid=spec.grid,
            pipeline="full-solve",
            s=0.5,
            solver=SolverConfig(dt=0.1, t_end=0.5),
        )
        with pytest.raises(ValueError, match="linear-only"):
            strichartz_tail_experiment(full, 3.0, 6.0, (0.0, 1.0))

    def test_strichartz_unrecorded_norm(self):
        spec = linear_spec()
        with pytest.raises(ValueError, match="does not record"):
            strichartz_tail_experiment(spec, 2.0, 8.0, (0.0, 1.0))

    def test_two_batch_verdict(self):
        ratios = np.array([1.0, 1.2, 0.9, 1.1])
        v = two_batch_ratio_verdict(ratios)
        assert v["fitted_constant"] == 1.2
        assert v["pass"]
        bad = two_batch_ratio_verdict(np.array([1.0, 1.0, 5.0, 1.0]))
        assert not bad["pass"]

    def test_continuity_requires_sharp(self):
        spec = linear_spec(cutoff="smooth")
        rho = spec.base_pair
        with pytest.raises(ValueError, match="sharp"):
            continuity_probe(spec.base_pair, rho, [0.1], spec, 1.0)

    def test_continuity_requires_unit_rho(self):
        spec = linear_spec()
        with pytest.raises(ValueError, match="unit"):
            continuity_probe(spec.base_pair, spec.base_pair.scaled(3.0), [0.1], spec, 1.0)

    def test_continuity_linear_pipeline_scales(self):
        spec = linear_spec(n_samples=4, dist="rademacher")
        rho = spec.base_pair.scaled(1.0 / pair_sobolev_norm(spec.base_pair, 0.5))
        rep = continuity_probe(spec.base_pair, rho, [0.2, 0.1, 0.05], spec, 1.0)
        assert rep["pass"]
        # linear pipeline with shared coefficients is exactly homogeneous
        assert rep["medians"][1] == pytest.approx(rep["medians"][0] / 2, rel=1e-10)


class TestPersistence:
    def test_table_columns_order(self):
        rows = [{"index": 0, "b": 1.0, "a": 2.0}, {"index": 1, "a": 3.0, "c": 4}]
        assert table_columns(rows) == ["index", "a", "b", "c"]

    def test_csv_round_trip_floats(self, tmp_path):
        rows = [{"index": 0, "x": 0.1 + 0.2}, {"index": 1, "x": 1.0 / 3.0}]
        p = tmp_path / "t.csv"
        write_table_csv(rows, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "index,x"
        assert float(lines[1].split(",")[1]) == rows[0]["x"]

    def test_verdict_json_drops_rows(self, tmp_path):
        p = tmp_path / "v.json"
        write_verdict_json({"experiment": "x", "pass": True, "rows": [1, 2]}, p)
        data = json.loads(p.read_text())
        assert "rows" not in data
        assert data["pass"] is True

    def test_manifest_and_plot_data(self, tmp_path):
        spec = linear_spec(n_samples=3)
        mp = tmp_path / "m.jsonl"
        write_manifest_jsonl(spec, mp)
        lines = mp.read_text().splitlines()
        assert len(lines) == 3
        assert json.loads(lines[0])["index"] == 0
        pp = tmp_path / "p.dat"
        write_plot_data(pp, [1.0, 2.0], [3.0, 4.0])
        assert pp.read_text().splitlines()[0] == "1.0 3.0"
