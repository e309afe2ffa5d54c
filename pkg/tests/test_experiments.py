import numpy as np
import numpy.testing as npt
import pytest

from sphconv import experiments as ex
from sphconv import tolerances
from sphconv.harmonics import sobolev_norm_2
from sphconv.sphere import build_grid, default_grid, make_rng, sample_uniform


class TestSlopeFit:
    def test_power_law(self):
        x = np.array([2.0, 4.0, 8.0, 16.0])
        assert ex.fit_loglog_slope(x, 3.0 * x**-1.5) == pytest.approx(-1.5)

    def test_zero_errors_give_nan(self):
        assert np.isnan(ex.fit_loglog_slope([1, 2], [0.0, 0.0]))

    def test_single_point_gives_nan(self):
        assert np.isnan(ex.fit_loglog_slope([1], [1.0]))


class TestReport:
    def make(self):
        rows = [ex.RateRow(c, 1.0 / c, 10 * c, 0, 50, {"extra": c * 0.5}) for c in (8, 2, 4)]
        return ex.RateStudyReport("demo", rows, {"d": 3, "note": "x"})

    def test_rows_sorted(self):
        npt.assert_array_equal(self.make().controls, [2, 4, 8])

    def test_slope(self):
        assert self.make().fitted_slope == pytest.approx(-1.0)

    def test_csv_layout(self):
        text = self.make().to_csv()
        lines = text.split("\n")
        assert lines[0] == "# study=demo"
        assert "# d=3" in lines and "# note=x" in lines
        header = next(l for l in lines if not l.startswith("#"))
        assert header == "control,sup_error,param_count,seed,grid_size,extra"
        assert "2,0.5,20,0,50,1" in lines
        assert "4,0.25,40,0,50,2" in lines
        assert text.endswith("\n") and "\r" not in text

    def test_seventeen_digits(self):
        rep = ex.RateStudyReport("demo", [ex.RateRow(3, 1.0 / 3.0, None, 0, 1)], {})
        last = rep.to_csv().strip().split("\n")[-1]
        assert last.split(",")[1] == "0.33333333333333331"
        assert float(last.split(",")[1]) == 1.0 / 3.0


class TestCatalogs:
    def test_zonal_catalog(self):
        assert ex.zonal_test_function("constant", 3).degree == 0
        f = ex.zonal_test_function("decay", 3, r=1.0, K=10)
        assert f.coeffs[1] == pytest.approx(3.0**-2)
        g = ex.zonal_test_function("geometric", 4, K=6)
        assert g.profile(1.0) == pytest.approx(sum(2.0**-k for k in range(7)))
        with pytest.raises(ValueError):
            ex.zonal_test_function("bumpy", 3)

    def test_decay_is_in_sobolev_space(self):
        f = ex.zonal_test_function("decay", 3, r=1.0, K=200)
        assert np.isfinite(sobolev_norm_2(f, 1.0))

    def test_ridge_catalog(self):
        fam = ex.ridge_family("abs", 2)
        assert fam.kinks == (-1 / 6, 1 / 3)
        assert fam.seminorms == (1.0, 1.0) and fam.alpha == 1.0
        assert ex.ridge_family("abspower", 3, 0.25).alpha == 0.25
        assert ex.ridge_family("cos", 2).seminorms == (np.pi, 2 * np.pi)
        with pytest.raises(ValueError):
            ex.ridge_family("wavy", 2)
        with pytest.raises(ValueError):
            ex.ridge_family("abspower", 2, 1.5)

    def test_kink_points(self):
        ys = sample_uniform(3, 2, 0)
        kinks = (-1 / 6, 1 / 3)
        P = ex.kink_points(ys, kinks, 20, make_rng(0))
        npt.assert_allclose(np.linalg.norm(P, axis=1), 1.0, atol=1e-12)
        U = P @ ys.T
        on0, on1 = np.isclose(U[:, 0], kinks[0]), np.isclose(U[:, 1], kinks[1])
        assert on0.sum() >= 20 and on1.sum() >= 20
        assert np.sum(on0 & on1) == 20


class TestRidgeRate:
    grid = build_grid(3, 500)

    def test_abs_rows_respect_bound(self):
        rep = ex.run_theorem2_rate(2, 3, 2, "abs", [8, 16, 32], self.grid, 0)
        for row in rep.rows:
            assert row.sup_error <= 2.0 / row.control
        assert rep.fitted_slope == pytest.approx(-1.0, abs=0.2)

    def test_zero(self):
        rep = ex.run_theorem2_rate(2, 3, 2, "zero", [4, 8], self.grid, 0)
        assert all(r.sup_error == 0.0 for r in rep.rows)

    def test_linear(self):
        rep = ex.run_theorem2_rate(1, 3, 2, "linear", [2, 5], self.grid, 1)
        assert max(r.sup_error for r in rep.rows) <= 1e-8

    def test_holder_and_cos(self):
        ex.run_theorem2_rate(2, 4, 3, "abspower", [4, 16], build_grid(4, 300, "random"), 2, alpha=0.5)
        ex.run_theorem2_rate(2, 3, 2, "cos", [4, 16], self.grid, 2)

    def test_unknown_ridge(self):
        with pytest.raises(ValueError):
            ex.run_theorem2_rate(2, 3, 2, "wavy", [4], self.grid, 0)

    def test_deterministic(self):
        a = ex.run_theorem2_rate(2, 3, 2, "abs", [8, 16], self.grid, 5).to_csv()
        b = ex.run_theorem2_rate(2, 3, 2, "abs", [16, 8], self.grid, 5).to_csv()
        assert a == b

    def test_metadata(self):
        rep = ex.run_theorem2_rate(2, 3, 2, "abs", [8], self.grid, 0)
        assert rep.metadata["grid_kind"] == "fibonacci+"
        assert rep.rows[0].grid_size > self.grid.size


class TestDepthCoupling:
    def test_low_smoothness(self):
        assert ex.theorem1_coupling(64, 3, 2, 1.0, 0.5) == (21, 1, 1)
        assert ex.theorem1_coupling(64, 3, 2, 1.0, 0.1) == (21, 2, 16)

    def test_high_smoothness(self):
        m, n, N = ex.theorem1_coupling(200, 3, 3, 3.0, 0.5)
        assert m == 133 and n == 2 and N == 32

    def test_rejections(self):
        with pytest.raises(ValueError):
            ex.theorem1_coupling(64, 3, 2, 2.0, 0.5)
        with pytest.raises(ValueError):
            ex.theorem1_coupling(1, 3, 2, 1.0, 0.5)
        with pytest.raises(ValueError):
            ex.theorem1_coupling(64, 3, 2, 2.5, 0.6)
        with pytest.raises(ValueError):
            ex.theorem1_coupling(64, 3, 4, 1.0, 0.5)


class TestDepthRate:
    grid = build_grid(3, 300)

    def test_constant_function_closed_form(self):
        # n = 1 makes the kernel linear, so the network equals 1 + 3^{1-r/2} <x, mean(y)> exactly
        r, J, seed = 1.0, 8, 4
        rep = ex.run_theorem1_rate("constant", r, 3, 2, [J], 0.5, [seed], self.grid)
        m = rep.rows[0].extra["m"]
        ys = sample_uniform(3, m, make_rng(seed, 0, J))
        expected = np.max(np.abs(3.0 ** (1 - r / 2) * self.grid.points @ ys.mean(axis=0)))
        assert rep.rows[0].sup_error == pytest.approx(expected, rel=1e-8)

    def test_parameter_bound_and_columns(self):
        rep = ex.run_theorem1_rate("geometric", 1.0, 3, 2, [8, 16], 0.5, [0, 1], self.grid)
        for row in rep.rows:
            assert row.param_count <= 11 * row.control + 4
            assert {"m", "n", "N", "seed_std"} <= set(row.extra)
        assert "W_2^r" in rep.metadata["norm"]

    def test_infeasible_depth(self):
        with pytest.raises(ValueError):
            ex.run_theorem1_rate("decay", 1.0, 3, 2, [1], 0.5, [0], self.grid)

    def test_trend_violation_is_fatal(self, monkeypatch):
        monkeypatch.setattr(tolerances, "TREND_FACTOR", 0.0)
        with pytest.raises(ex.BoundViolation):
            ex.run_theorem1_rate("decay", 1.0, 3, 2, [8, 16], 0.5, [0], self.grid)


class TestDiscretization:
    grid = build_grid(3, 300)

    def test_error_shrinks(self):
        rep = ex.run_discretization_study("decay", 1.0, 3, 3, [16, 4096], range(5), self.grid, check_slope=False)
        assert rep.errors[1] < rep.errors[0]

    def test_slope_violation_is_fatal(self, monkeypatch):
        monkeypatch.setattr(tolerances, "DISCRETIZATION_SLOPE_WINDOW", (0.0, 1.0))
        with pytest.raises(ex.BoundViolation):
            ex.run_discretization_study("decay", 1.0, 3, 3, [16, 256], range(3), self.grid)

    def test_constant_function(self):
        # F_r is constant, so the estimator is the sample mean of the kernel
        ys = sample_uniform(3, 64, make_rng(0, 0, 64))
        errs = ex.discretization_errors(ex.zonal_test_function("constant", 3), 0.0, 1, 64, [0], self.grid)
        expected = np.max(np.abs(3.0 * self.grid.points @ ys.mean(axis=0)))
        assert errs[0] == pytest.approx(expected, rel=1e-10)


class TestFactorBench:
    def test_cells(self):
        rows = ex.run_factorization_bench([1, 8, 63], [2, 8], 20, 0)
        by = {(r.M, r.S): r for r in rows}
        assert by[1, 2].max_rel_err == 0.0 and by[1, 2].max_factor_count == 1
        assert by[8, 2].max_rel_err <= 1e-6
        assert by[63, 8].max_factor_count <= 9 == by[63, 8].bound

    def test_csv(self):
        text = ex.factor_bench_csv(ex.run_factorization_bench([4], [2], 3, 1))
        assert text.splitlines()[0] == "M,S,max_rel_err,max_factor_count,count_bound"
        assert len(text.splitlines()) == 2

    def test_random_filter_leading_tap(self):
        rng = make_rng(0)
        assert all(abs(ex.random_filter(5, rng)[-1]) >= 1e-3 for _ in range(200))

    def test_violation_is_fatal(self, monkeypatch):
        monkeypatch.setattr(tolerances, "FACTOR_REL_TOL", 0.0)
        with pytest.raises(Exception):
            ex.run_factorization_bench([30], [2], 2, 0)
