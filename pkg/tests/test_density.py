"""Tests for the model family and the MCP certificate"""

import math

import numpy as np
import pytest

from isoprofile.density import (
    ModelDensityParams, bishop_gromov_ratio, check_bishop_gromov, check_mcp_density,
    constant_density, density_from_dict, density_sup_bound, f_boundary, load_tabulated_csv,
    model_density, tabulated_density, user_density,
)
from isoprofile.exceptions import DomainError, InputError
from isoprofile.kernels import CurvatureParams


class TestBoundaryFunction:

    def test_midpoint_flat(self, flat):
        assert f_boundary(flat, 0.5) == pytest.approx(2 / 3, rel=1e-12)

    def test_quarter_flat(self, flat):
        assert f_boundary(flat, 0.25) == pytest.approx(6 / 13, rel=1e-12)

    def test_endpoints_vanish(self, flat):
        assert f_boundary(flat, 0.0) == 0.0
        assert f_boundary(flat, 1.0) == 0.0

    def test_outside_segment(self, flat):
        with pytest.raises(DomainError):
            f_boundary(flat, 1.2)


class TestModelDensity:

    def test_value_at_origin(self, flat):
        h = model_density(ModelDensityParams(flat, 0.5))
        assert h(0.0) == pytest.approx(4 / 3, rel=1e-12)

    def test_branches_meet_at_split(self, curvature):
        a = 0.4 * curvature.D
        h = model_density(ModelDensityParams(curvature, a))
        assert h(a) == pytest.approx(f_boundary(curvature, a), rel=1e-12)
        assert h(a - 1e-9) == pytest.approx(h(a + 1e-9), rel=1e-6)

    @pytest.mark.parametrize("fraction", [0.1, 0.5, 0.9])
    def test_normalized(self, curvature, fraction):
        h = model_density(ModelDensityParams(curvature, fraction * curvature.D))
        assert h.integral() == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("fraction", [0.1, 0.5, 0.9])
    def test_within_sup_bound(self, curvature, fraction):
        h = model_density(ModelDensityParams(curvature, fraction * curvature.D))
        assert h.grid_max() <= density_sup_bound(curvature, curvature.D) + 1e-9

    def test_split_point_range(self, flat):
        with pytest.raises(DomainError):
            ModelDensityParams(flat, 1.0)

    def test_vectorized_call(self, flat):
        h = model_density(ModelDensityParams(flat, 0.5))
        values = h(np.array([0.0, 0.5, 1.0]))
        assert values.shape == (3,)
        assert values[1] == pytest.approx(2 / 3)

    def test_grid_cache_is_read_only(self, flat):
        xs, values = model_density(ModelDensityParams(flat, 0.5)).grid
        with pytest.raises(ValueError):
            values[0] = 0.0

    def test_dict_round_trip_evaluates_alike(self, curvature):
        h = model_density(ModelDensityParams(curvature, 0.3 * curvature.D))
        rebuilt = density_from_dict(h.to_dict())
        assert rebuilt(0.2 * curvature.D) == pytest.approx(h(0.2 * curvature.D), rel=1e-14)

    def test_scaled_total_mass(self, flat):
        h = model_density(ModelDensityParams(flat, 0.5)).scaled(math.pi)
        assert h.integral() == pytest.approx(math.pi, rel=1e-9)
        assert density_from_dict(h.to_dict()).integral() == pytest.approx(math.pi, rel=1e-9)


class TestOtherDensities:

    def test_constant_default_is_normalized(self):
        h = constant_density(3.0)
        assert h(1.0) == pytest.approx(1 / 3)
        assert h.integral() == pytest.approx(1.0)

    def test_tabulated_hat(self):
        h = tabulated_density([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        assert h.integral() == pytest.approx(1.0)
        assert h.integral(0.0, 1.0) == pytest.approx(0.5)
        assert h.integral(0.5, 1.5) == pytest.approx(0.75)

    @pytest.mark.parametrize("xs, hs", [
        ([0.1, 1.0], [1.0, 1.0]),
        ([0.0, 1.0, 0.5], [1.0, 1.0, 1.0]),
        ([0.0, 1.0], [1.0, -0.5]),
        ([0.0, 1.0], [1.0]),
    ], ids=["offset-start", "not-increasing", "negative", "ragged"])
    def test_tabulated_rejects(self, xs, hs):
        with pytest.raises(InputError):
            tabulated_density(xs, hs)

    def test_load_csv(self, tmp_path):
        path = tmp_path / "density.csv"
        path.write_text("x,h\n0,0.5\n2,0.5\n", encoding="utf-8")
        h = load_tabulated_csv(path)
        assert h.domain_length == 2.0
        assert h.integral() == pytest.approx(1.0)

    def test_load_csv_missing(self, tmp_path):
        with pytest.raises(InputError):
            load_tabulated_csv(tmp_path / "missing.csv")

    def test_user_density_cannot_serialize(self):
        h = user_density(1.0, lambda x: 2 * x)
        assert h.integral() == pytest.approx(1.0)
        with pytest.raises(InputError):
            h.to_dict()


class TestMCPCertificate:

    @pytest.mark.parametrize("fraction", [0.2, 0.5, 0.8])
    def test_model_densities_pass(self, curvature, fraction):
        h = model_density(ModelDensityParams(curvature, fraction * curvature.D))
        report = check_mcp_density(h, curvature, 40)
        assert report.passed
        assert report.violations == []

    def test_constant_density_fails_on_long_segment(self):
        params = CurvatureParams(K=1, N=2, D=3)
        report = check_mcp_density(constant_density(3.0), params, 40)
        assert not report.passed
        assert len(report.violations) >= 1
        assert report.worst_margin <= -6.0
        assert report.worst_margin == pytest.approx(1 - 1 / math.sin(3.0), rel=1e-3)

    def test_constant_density_passes_when_flat(self, flat):
        assert check_mcp_density(constant_density(1.0), flat, 20).passed

    def test_report_serializes(self):
        params = CurvatureParams(K=1, N=2, D=3)
        data = check_mcp_density(constant_density(3.0), params, 10).to_dict()
        assert data["passed"] is False
        assert set(data["worst"]) == {"x0", "x1", "t", "lhs", "rhs", "margin"}


class TestBounds:

    def test_flat_sup_bound(self, flat):
        assert density_sup_bound(flat, 0.5) == pytest.approx(4.0)

    @pytest.mark.parametrize("N, L", [(2, 1.0), (2, 2.5), (3, 2.0), (4.5, 1.0)])
    def test_positive_curvature_bound_below_N_over_L(self, N, L):
        params = CurvatureParams(K=N - 1, N=N, D=3.0)
        assert density_sup_bound(params, L) <= N / L

    def test_positive_curvature_closed_form(self):
        # K=1, N=2: the contraction weight is tan(x/2), minimized at the midpoint
        params = CurvatureParams(K=1, N=2, D=2.5)
        assert density_sup_bound(params, 2.5) == pytest.approx(1 / (2 * math.tan(0.625)), rel=1e-8)

    def test_negative_curvature_endpoint_minimum(self):
        # K=-1, N=2: tanh(x/2) + tanh((L-x)/2) is smallest at x = 0
        params = CurvatureParams(K=-1, N=2, D=1)
        assert density_sup_bound(params, 1.0) == pytest.approx(1 / math.tanh(0.5), rel=1e-8)

    @pytest.mark.parametrize("a", [0.125, 0.5, 1.25, 2.0])
    def test_model_density_within_bound_past_quarter_period(self, a):
        params = CurvatureParams(K=1, N=2, D=2.5)
        h = model_density(ModelDensityParams(params, a))
        assert h.grid_max() <= density_sup_bound(params, 2.5) + 1e-9

    def test_bound_rejects_long_needle(self, flat):
        with pytest.raises(DomainError):
            density_sup_bound(flat, 2.0)

    def test_bishop_gromov_ratio_flat_constant(self):
        params = CurvatureParams(K=0, N=2, D=1)
        ratio = bishop_gromov_ratio(constant_density(1.0), 0.5, 0.25, params)
        assert ratio == pytest.approx(0.5 / (math.pi * 0.0625))

    @pytest.mark.parametrize("center_fraction", [0.0, 0.5, 1.0])
    def test_bishop_gromov_nonincreasing(self, curvature, center_fraction):
        h = model_density(ModelDensityParams(curvature, 0.3 * curvature.D))
        radii = np.linspace(0.05, 1.0, 12) * curvature.D
        report = check_bishop_gromov(h, center_fraction * curvature.D, radii, curvature)
        assert report.passed


def _grid_cases(signs=(-1, 0, 1)):
    cases = []
    for N in (1.5, 2.0, 3.7):
        for K in (sign * (N - 1) for sign in signs):
            for D in (1.0, 2.5):
                cases.append(pytest.param(CurvatureParams(K=K, N=N, D=D), id=f"K{K:g}-N{N:g}-D{D:g}"))
    return cases


class TestParameterGrid:

    @pytest.mark.parametrize("params", _grid_cases())
    @pytest.mark.parametrize("fraction", [0.05, 0.3, 0.5, 0.8])
    def test_normalized_continuous_and_bounded(self, params, fraction):
        a = fraction * params.D
        h = model_density(ModelDensityParams(params, a))
        assert h.integral() == pytest.approx(1.0, abs=1e-8)
        assert h(a - 1e-9) == pytest.approx(h(a + 1e-9), rel=1e-6)
        assert h.grid_max() <= density_sup_bound(params, params.D) + 1e-9

    @pytest.mark.parametrize("params", _grid_cases(signs=(0, 1)))
    def test_bound_never_exceeds_N_over_L(self, params):
        assert density_sup_bound(params, params.D) <= params.N / params.D + 1e-12
