"""Data generators, ground truth, replicate runner, and aggregation."""

import csv
import json

import numpy as np
import pytest

from bifreg import (
    DesignSpec,
    Direction,
    DirectionSet,
    Grid,
    GroundTruth,
    IassmrConfig,
    SupportSet,
    ValidationError,
    default_basis,
    default_configs,
    default_direction_set,
    gen_brownian,
    gen_design,
    gen_lines,
    gen_xcurves,
    impact_metrics,
    monte_carlo,
    replicate_rng,
    run_replicate,
    true_direction,
)
from bifreg.simlab import TRUE_SEED


def small_spec(kind="A", n=40, p=21, seed=7):
    return DesignSpec(kind=kind, n=n, p=p, n_test=12, seed=seed, p_x=30)


def tiny_directions(x_grid: Grid) -> DirectionSet:
    basis = default_basis()
    raw = [
        np.array(TRUE_SEED, dtype=float),
        np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
    ]
    dirs = []
    for c in raw:
        d = Direction(basis, c)
        w = x_grid.quad_weights
        v = d.values_on(x_grid)
        dirs.append(Direction(basis, c / np.sqrt(float(v @ (w * v)))))
    return DirectionSet(tuple(dirs))


class TestStreams:
    def test_same_key_same_draws(self):
        a = replicate_rng(11, 3).standard_normal(8)
        b = replicate_rng(11, 3).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_distinct_replicates_distinct_draws(self):
        a = replicate_rng(11, 3).standard_normal(8)
        b = replicate_rng(11, 4).standard_normal(8)
        assert not np.array_equal(a, b)

    def test_distinct_master_seeds_distinct_draws(self):
        a = replicate_rng(11, 3).standard_normal(8)
        b = replicate_rng(12, 3).standard_normal(8)
        assert not np.array_equal(a, b)


class TestBrownian:
    def test_starts_at_zero_on_unit_grid(self):
        curve = gen_brownian(Grid.uniform(15), replicate_rng(0, 0))
        assert curve.values[0] == 0.0

    def test_increment_moments(self):
        # oracle: increments over step dt are independent N(0, dt)
        grid = Grid.uniform(11)
        rng = replicate_rng(5, 0)
        paths = np.vstack(
            [gen_brownian(grid, rng).values for _ in range(4000)]
        )
        inc = np.diff(paths, axis=1)
        assert np.var(inc, ddof=1) == pytest.approx(0.1, rel=0.08)
        assert abs(np.mean(inc)) < 0.01
        # disjoint increments are uncorrelated
        corr = np.corrcoef(inc[:, 0], inc[:, 7])[0, 1]
        assert abs(corr) < 0.06

    def test_nonzero_origin_gets_diffused_start(self):
        grid = Grid(np.linspace(0.25, 1.0, 7))
        rng = replicate_rng(5, 1)
        first = np.array(
            [gen_brownian(grid, rng).values[0] for _ in range(4000)]
        )
        assert np.var(first, ddof=1) == pytest.approx(0.25, rel=0.1)


class TestSmoothCurves:
    def test_formula(self):
        grid = Grid.uniform(40)
        curve, (a, b, c) = gen_xcurves(grid, replicate_rng(2, 0), hi=6.0)
        t = grid.points
        expect = (
            a * np.cos(2 * np.pi * t)
            + b * np.sin(4 * np.pi * t)
            + 2 * c * (t - 0.25) * (t - 0.5)
        )
        np.testing.assert_allclose(curve.values, expect, atol=1e-12)

    def test_coefficient_range(self):
        rng = replicate_rng(2, 1)
        for _ in range(50):
            _, abc = gen_xcurves(Grid.uniform(5), rng, hi=5.0)
            assert all(0.0 <= v <= 5.0 for v in abc)

    def test_lines_affine(self):
        grid = Grid.uniform(30)
        curve = gen_lines(grid, 2.5, replicate_rng(3, 0))
        slopes = np.diff(curve.values) / np.diff(grid.points)
        np.testing.assert_allclose(slopes, 2.5, atol=1e-10)

    def test_line_intercepts_standard_normal(self):
        rng = replicate_rng(3, 1)
        grid = Grid.uniform(4)
        d = np.array([gen_lines(grid, 1.0, rng).values[0] for _ in range(4000)])
        assert abs(np.mean(d)) < 0.06
        assert np.std(d, ddof=1) == pytest.approx(1.0, rel=0.06)


class TestDesignSpec:
    def test_kind_normalized(self):
        assert DesignSpec(kind="b", n=50, p=21).kind == "B"

    def test_invalid_kind(self):
        with pytest.raises(ValidationError):
            DesignSpec(kind="Q", n=50, p=21)

    def test_tiny_n(self):
        with pytest.raises(ValidationError):
            DesignSpec(kind="A", n=3, p=21)

    def test_negative_seed(self):
        with pytest.raises(ValidationError):
            DesignSpec(kind="A", n=50, p=21, seed=-1)

    def test_to_dict(self):
        d = small_spec().to_dict()
        assert d == {
            "kind": "A",
            "n": 40,
            "p": 21,
            "n_test": 12,
            "seed": 7,
            "p_x": 30,
        }


class TestDesignA:
    def test_truth_layout(self):
        spec = DesignSpec(kind="A", n=20, p=101, n_test=5, p_x=30)
        _, _, truth = gen_design(spec)
        assert truth.support.indices == (18, 73)
        assert truth.beta_true[18] == 2.0
        assert truth.beta_true[73] == -3.0
        assert truth.impact_abscissae == pytest.approx((0.18, 0.73))
        assert truth.good_region == ((0.15, 0.21), (0.70, 0.76))

    def test_regions_partition_unit_interval(self):
        _, _, truth = gen_design(small_spec())
        pieces = sorted(truth.good_region + truth.bad_region)
        assert pieces[0][0] == 0.0
        assert pieces[-1][1] == 1.0
        for (a, b), (c, _) in zip(pieces, pieces[1:]):
            assert b == c

    def test_noise_sd_is_tenth_of_signal_sd(self):
        spec = small_spec()
        train, test, truth = gen_design(
            spec, rng=replicate_rng(spec.seed, 0), noiseless=True
        )
        g = np.concatenate([train.y, test.y])
        assert truth.noise_sd == 0.1 * float(np.std(g))

    def test_realized_noise_matches_declared_sd(self):
        spec = DesignSpec(kind="A", n=400, p=51, n_test=100, seed=3, p_x=30)
        clean_train, clean_test, truth = gen_design(
            spec, rng=replicate_rng(spec.seed, 0), noiseless=True
        )
        train, test, _ = gen_design(spec, rng=replicate_rng(spec.seed, 0))
        eps = np.concatenate(
            [train.y - clean_train.y, test.y - clean_test.y]
        )
        assert np.std(eps) == pytest.approx(truth.noise_sd, rel=0.12)

    def test_link_is_cubic_in_projection(self):
        spec = small_spec()
        train, _, truth = gen_design(
            spec, rng=replicate_rng(spec.seed, 0), noiseless=True
        )
        w = train.x_grid.quad_weights * truth.theta_true.values_on(train.x_grid)
        proj = train.x @ w
        linear = train.zeta @ truth.beta_true
        np.testing.assert_allclose(train.y, linear + proj**3, atol=1e-10)

    def test_coarse_grid_snaps_within_region(self):
        # 21 points: 0.18 -> 0.20 and 0.73 -> 0.75, both still inside
        spec = DesignSpec(kind="A", n=20, p=21, n_test=5, p_x=30)
        _, _, truth = gen_design(spec)
        assert truth.support.indices == (4, 15)
        assert truth.impact_abscissae == pytest.approx((0.20, 0.75))

    def test_very_coarse_grid_rejected(self):
        # 5 points: 0.18 snaps to 0.25, outside the tolerance region
        spec = DesignSpec(kind="A", n=20, p=5, n_test=5, p_x=30)
        with pytest.raises(ValidationError, match="tolerance region"):
            gen_design(spec)


class TestDesignB:
    def test_layout(self):
        spec = DesignSpec(kind="B", n=20, p=101, n_test=5, p_x=30)
        _, _, truth = gen_design(spec)
        assert truth.support.indices == (2, 50, 70)
        assert truth.beta_true[2] == 4.0
        assert truth.beta_true[50] == 3.0
        assert truth.beta_true[70] == -3.2
        assert truth.good_region == ((0.0, 0.05), (0.47, 0.53), (0.67, 0.73))

    def test_shared_slope_between_curves(self):
        # zeta_i(t) = c_i t + d_i where c_i is the third x coefficient
        spec = DesignSpec(kind="B", n=50, p=21, n_test=5, seed=9, p_x=40)
        train, _, _ = gen_design(spec)
        t = train.zeta_grid.points
        slopes = (train.zeta[:, -1] - train.zeta[:, 0]) / (t[-1] - t[0])
        tx = train.x_grid.points
        basis = np.stack(
            [
                np.cos(2 * np.pi * tx),
                np.sin(4 * np.pi * tx),
                2 * (tx - 0.25) * (tx - 0.5),
            ]
        )
        abc_hat, *_ = np.linalg.lstsq(basis.T, train.x.T, rcond=None)
        np.testing.assert_allclose(slopes, abc_hat[2], atol=1e-8)
        assert np.all((abc_hat >= -1e-8) & (abc_hat <= 5 + 1e-8))


class TestDesignC:
    def test_layout(self):
        spec = DesignSpec(kind="C", n=20, p=101, n_test=5, p_x=30)
        _, _, truth = gen_design(spec)
        assert truth.support.indices == tuple(range(15, 20)) + tuple(range(70, 75))
        expect = {
            15: 1.0, 16: 1.2, 17: 1.0, 18: 1.2, 19: 1.0,
            70: 1.0, 71: 1.2, 72: -1.2, 73: -1.2, 74: -1.2,
        }
        for j, v in expect.items():
            assert truth.beta_true[j] == v
        assert truth.good_region == ((0.14, 0.20), (0.69, 0.75))

    def test_too_coarse_grid_rejected(self):
        spec = DesignSpec(kind="C", n=20, p=11, n_test=5, p_x=30)
        with pytest.raises(ValidationError, match="too coarse"):
            gen_design(spec)


class TestDirection:
    def test_basis_shape(self):
        basis = default_basis()
        assert basis.dimension == 6
        assert basis.domain == (0.0, 1.0)

    def test_true_direction_calibration(self):
        grid = Grid.uniform(101)
        theta = true_direction(grid)
        v = theta.values_on(grid)
        assert float(v @ (grid.quad_weights * v)) == pytest.approx(1.0, abs=1e-12)
        assert theta(0.5) > 0
        seed = np.array(TRUE_SEED, dtype=float)
        nz = seed != 0
        ratios = theta.coeffs[nz] / seed[nz]
        np.testing.assert_allclose(ratios, ratios[0], atol=1e-12)
        np.testing.assert_array_equal(theta.coeffs[~nz], 0.0)

    def test_default_direction_set_size(self):
        ds = default_direction_set(Grid.uniform(51))
        assert len(ds.directions) == 243


class TestGroundTruthInvariant:
    def test_impact_outside_tolerance_region_rejected(self):
        grid = Grid.uniform(101)
        beta = np.zeros(101)
        beta[50] = 1.0
        with pytest.raises(ValidationError):
            GroundTruth(
                kind="A",
                beta_true=beta,
                support=SupportSet((50,)),
                impact_abscissae=(0.5,),
                theta_true=true_direction(grid),
                good_region=((0.15, 0.21),),
                bad_region=((0.0, 0.15), (0.21, 1.0)),
                noise_sd=0.1,
            )


class TestImpactMetrics:
    def test_counts(self):
        _, _, truth = gen_design(DesignSpec(kind="A", n=20, p=101, n_test=5, p_x=30))
        grid = Grid.uniform(101)
        right, wrong = impact_metrics(SupportSet((18, 50, 73)), truth, grid)
        assert (right, wrong) == (2, 1)

    def test_boundary_point_counts_as_right(self):
        _, _, truth = gen_design(DesignSpec(kind="A", n=20, p=101, n_test=5, p_x=30))
        grid = Grid.uniform(101)
        right, wrong = impact_metrics(SupportSet((21,)), truth, grid)
        assert (right, wrong) == (1, 0)

    def test_empty_support(self):
        _, _, truth = gen_design(DesignSpec(kind="A", n=20, p=101, n_test=5, p_x=30))
        assert impact_metrics(SupportSet(()), truth, Grid.uniform(101)) == (0, 0)


class TestRunReplicate:
    def test_rows_and_bookkeeping(self):
        spec = small_spec()
        ds = tiny_directions(Grid.uniform(spec.p_x))
        configs = default_configs(spec, ("fassmr",), direction_set=ds, w_candidates=(7,))
        rows = run_replicate(spec, 0, ("fassmr",), configs)
        assert len(rows) == 1
        row = rows[0]
        assert row.method == "fassmr"
        assert not row.failed
        assert np.isfinite(row.msep)
        assert row.right + row.wrong == len(row.support)
        assert row.chosen_w == 7
        assert row.seconds > 0

    def test_failure_recorded_not_raised(self):
        spec = small_spec()
        ds = tiny_directions(Grid.uniform(spec.p_x))
        configs = default_configs(
            spec, ("iassmr",), direction_set=ds, w_candidates=(7,), split=(30, 30)
        )
        rows = run_replicate(spec, 0, ("iassmr",), configs)
        assert rows[0].failed
        assert "ValidationError" in rows[0].error
        assert np.isnan(rows[0].msep)

    def test_train_rows_cap_validated(self):
        spec = small_spec()
        ds = tiny_directions(Grid.uniform(spec.p_x))
        configs = default_configs(spec, ("fassmr",), direction_set=ds, w_candidates=(7,))
        with pytest.raises(ValidationError):
            run_replicate(spec, 0, ("fassmr",), configs, train_rows={"fassmr": 1})

    def test_train_rows_cap_changes_fit_sample(self):
        spec = small_spec()
        ds = tiny_directions(Grid.uniform(spec.p_x))
        configs = default_configs(spec, ("fassmr",), direction_set=ds, w_candidates=(7,))
        full = run_replicate(spec, 0, ("fassmr",), configs)[0]
        capped = run_replicate(spec, 0, ("fassmr",), configs, {"fassmr": 20})[0]
        assert not capped.failed
        assert capped.msep != full.msep


class TestMonteCarlo:
    def test_extending_replicates_keeps_prefix(self):
        spec = small_spec(seed=21)
        ds = tiny_directions(Grid.uniform(spec.p_x))
        short = monte_carlo(
            spec, ("fassmr",), 2, direction_set=ds, w_candidates=(7,)
        )
        longer = monte_carlo(
            spec, ("fassmr",), 3, direction_set=ds, w_candidates=(7,)
        )

        def strip(rr):
            return (rr.r, rr.method, rr.msep, rr.right, rr.wrong,
                    rr.support, rr.chosen_w, rr.failed, rr.error)

        assert [strip(r) for r in short.replicates] == [
            strip(r) for r in longer.replicates[:2]
        ]

    def test_stats_match_replicate_rows(self):
        spec = small_spec(seed=22)
        ds = tiny_directions(Grid.uniform(spec.p_x))
        summary = monte_carlo(
            spec, ("fassmr", "pls"), 3, direction_set=ds, w_candidates=(7,)
        )
        for method in ("fassmr", "pls"):
            rows = [r for r in summary.replicates if r.method == method]
            st = summary.stats[method]
            assert st["n_used"] == 3
            assert st["n_failed"] == 0
            assert st["mean_msep"] == pytest.approx(
                np.mean([r.msep for r in rows])
            )
            assert st["sd_msep"] == pytest.approx(
                np.std([r.msep for r in rows], ddof=1)
            )
            assert sum(st["chosen_w_counts"].values()) == 3

    def test_failed_rows_excluded_from_stats(self):
        spec = small_spec(seed=23)
        ds = tiny_directions(Grid.uniform(spec.p_x))
        configs = default_configs(
            spec,
            ("fassmr", "iassmr"),
            direction_set=ds,
            w_candidates=(7,),
            split=(30, 30),
        )
        summary = monte_carlo(spec, ("fassmr", "iassmr"), 2, configs=configs)
        assert summary.stats["iassmr"]["n_failed"] == 2
        assert summary.stats["iassmr"]["n_used"] == 0
        assert np.isnan(summary.stats["iassmr"]["mean_msep"])
        assert summary.stats["fassmr"]["n_used"] == 2

    def test_validation(self):
        spec = small_spec()
        with pytest.raises(ValidationError):
            monte_carlo(spec, (), 2)
        with pytest.raises(ValidationError):
            monte_carlo(spec, ("nope",), 2)
        with pytest.raises(ValidationError):
            monte_carlo(spec, ("fassmr",), 0)
        with pytest.raises(ValidationError):
            monte_carlo(spec, ("fassmr",), 2, workers=0)

    def test_outputs_parse(self, tmp_path):
        spec = small_spec(seed=24)
        ds = tiny_directions(Grid.uniform(spec.p_x))
        summary = monte_carlo(
            spec, ("fassmr",), 2, direction_set=ds, w_candidates=(7,)
        )
        jpath = tmp_path / "summary.json"
        cpath = tmp_path / "summary.csv"
        rpath = tmp_path / "replicates.csv"
        summary.to_json(str(jpath))
        summary.to_csv(str(cpath))
        summary.replicates_csv(str(rpath))

        doc = json.loads(jpath.read_text())
        assert doc["spec"]["kind"] == "A"
        assert doc["n_replicates"] == 2
        assert "fassmr" in doc["stats"]

        with open(cpath, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["method"] == "fassmr"
        assert float(rows[0]["mean_msep"]) == pytest.approx(
            summary.stats["fassmr"]["mean_msep"]
        )

        with open(rpath, newline="") as fh:
            rrows = list(csv.DictReader(fh))
        assert len(rrows) == 2
        assert rrows[0]["method"] == "fassmr"
        got = tuple(
            int(s) for s in rrows[0]["support"].split(";") if s
        )
        assert got == summary.replicates[0].support
