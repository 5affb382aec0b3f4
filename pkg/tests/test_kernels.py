"""Tests for comparison kernels and model volumes"""

import logging
import math

import mpmath
import pytest

from isoprofile.config import DEFAULT_CONFIG, NumericsConfig
from isoprofile.exceptions import DomainError, InputError
from isoprofile.kernels import (
    CurvatureParams, ball_volume, cd_constant, k_const, k_ratio, model_volume, omega,
    quadrature, reference_radius, s_kappa, sharp_constant, sigma, tau, vol_ratio_lower_bound,
)


class TestCurvatureParams:

    def test_rejects_small_N(self):
        with pytest.raises(DomainError):
            CurvatureParams(K=0, N=1, D=1)

    def test_rejects_non_positive_D(self):
        with pytest.raises(DomainError):
            CurvatureParams(K=0, N=2, D=0)

    def test_rejects_D_at_conjugate_radius(self):
        with pytest.raises(DomainError):
            CurvatureParams(K=1, N=2, D=math.pi)

    def test_sphere_boundary_admits_pi(self):
        params = CurvatureParams.sphere_boundary(2)
        assert params.boundary
        assert params.D == pytest.approx(math.pi)

    def test_boundary_needs_conjugate_radius(self):
        with pytest.raises(DomainError):
            CurvatureParams(K=1, N=2, D=2.0, boundary=True)

    def test_kappa_and_exponent(self):
        params = CurvatureParams(K=-4, N=3, D=1)
        assert params.kappa == -2
        assert params.exponent == 2
        assert params.conjugate_radius == math.inf


class TestSpecialFunctions:

    @pytest.mark.parametrize("N, expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
    def test_omega(self, N, expected):
        assert omega(N) == pytest.approx(expected, rel=1e-14)

    def test_omega_fractional_dimension(self):
        assert omega(2.5) == pytest.approx(math.pi ** 1.25 / math.gamma(2.25), rel=1e-14)

    def test_s_kappa_three_regimes(self):
        assert s_kappa(0, 0.5) == 0.5
        assert s_kappa(-1, 1.0) == pytest.approx(1.1752011936, rel=1e-10)
        assert s_kappa(1, math.pi / 2) == pytest.approx(1.0)

    def test_s_kappa_domain(self):
        with pytest.raises(DomainError):
            s_kappa(0, -0.1)
        with pytest.raises(DomainError):
            s_kappa(1, math.pi)

    def test_sigma_flat_is_t(self, flat):
        assert sigma(0.3, 0.7, flat) == pytest.approx(0.3)

    def test_sigma_zero_theta(self):
        params = CurvatureParams(K=1, N=2, D=1)
        assert sigma(0.5, 0.0, params) == 0.5

    def test_sigma_past_conjugate_point(self):
        params = CurvatureParams(K=1, N=2, D=1)
        assert sigma(0.5, 3.2, params) == math.inf
        assert tau(0.5, 3.2, params) == math.inf

    def test_sigma_positive_curvature(self):
        params = CurvatureParams(K=1, N=2, D=1)
        assert sigma(0.5, 2.0, params) == pytest.approx(math.sin(1.0) / math.sin(2.0))

    def test_sigma_rejects_bad_t(self, flat):
        with pytest.raises(DomainError):
            sigma(1.5, 1.0, flat)

    @pytest.mark.parametrize("t", [0.0, 0.25, 1.0])
    def test_tau_flat_is_t(self, flat, t):
        assert tau(t, 0.8, flat) == pytest.approx(t)


class TestModelVolumes:

    def test_k_const_flat(self, flat):
        assert k_const(flat, 1.0) == pytest.approx(0.5)

    def test_k_const_negative(self):
        params = CurvatureParams(K=-1, N=2, D=1)
        assert k_const(params, 1.0) == pytest.approx(math.cosh(1.0) - 1, rel=1e-10)

    def test_flat_disc_area(self):
        assert model_volume(CurvatureParams(K=0, N=2, D=2), 2.0) == pytest.approx(4 * math.pi)

    def test_round_sphere_area(self):
        params = CurvatureParams.sphere_boundary(2)
        assert model_volume(params, math.pi) == pytest.approx(4 * math.pi, rel=1e-10)

    def test_model_volume_range(self, flat):
        with pytest.raises(DomainError):
            model_volume(flat, 1.5)
        assert ball_volume(flat, 1.5) == pytest.approx(math.pi * 2.25)

    def test_extended_precision_agrees(self):
        params = CurvatureParams(K=-2, N=3, D=1)
        extended = DEFAULT_CONFIG.with_overrides(extended=True)
        assert k_const(params, 1.0, extended) == pytest.approx(k_const(params, 1.0), rel=1e-10)


class TestConstants:

    def test_sharp_constant_below_cd_constant(self):
        for N in (1.5, 2, 3, 7.5):
            assert sharp_constant(N) < cd_constant(N)

    def test_sharp_constant_plane(self):
        assert sharp_constant(2) == pytest.approx(math.sqrt(2 * math.pi))

    def test_vol_ratio_flat(self, flat):
        assert vol_ratio_lower_bound(flat, 0.05) == pytest.approx((1 / 1.1) ** 2)

    def test_k_ratio_flat(self, flat):
        assert k_ratio(flat, 0.1) == pytest.approx(1.1 ** 2)

    def test_reference_radius_flat(self):
        assert reference_radius(0, 2) == pytest.approx(1 / math.sqrt(math.pi))

    def test_reference_radius_negative(self):
        expected = math.acosh(1 + 1 / (2 * math.pi))
        assert reference_radius(-1, 2) == pytest.approx(expected, rel=1e-10)

    def test_reference_radius_positive(self):
        r = reference_radius(1, 2)
        assert 2 * math.pi * (1 - math.cos(r)) == pytest.approx(1.0, rel=1e-10)


class TestNumericsConfig:

    def test_overrides_skip_none(self):
        config = DEFAULT_CONFIG.with_overrides(quad_rel=None, inv_tol=1e-9)
        assert config.quad_rel == DEFAULT_CONFIG.quad_rel
        assert config.inv_tol == 1e-9

    def test_unknown_key(self):
        with pytest.raises(InputError):
            DEFAULT_CONFIG.with_overrides(tolerance=1e-3)

    def test_non_positive_tolerance(self):
        with pytest.raises(InputError):
            NumericsConfig(quad_abs=0.0)


class TestKernelInvariants:

    @pytest.mark.parametrize("kappa", [-1.0, 0.0, 0.5, 1.0])
    def test_s_kappa_solves_jacobi_equation(self, kappa):
        step = 1e-3
        upper = 2.0 if kappa <= 0 else 0.95 * math.pi / math.sqrt(kappa)
        for i in range(20):
            theta = step + (upper - 2 * step) * i / 19
            second = (s_kappa(kappa, theta + step) - 2 * s_kappa(kappa, theta) + s_kappa(kappa, theta - step)) / step ** 2
            assert second + kappa * s_kappa(kappa, theta) == pytest.approx(0.0, abs=1e-6)
        assert s_kappa(kappa, 0.0) == 0.0
        assert (s_kappa(kappa, step) - s_kappa(kappa, 0.0)) / step == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("K, N, L, expected", [
        (1.0, 2.0, 2.5, 2 * math.pi * (1 - math.cos(2.5))),
        (-1.0, 2.0, 1.5, 2 * math.pi * (math.cosh(1.5) - 1)),
        (2.0, 3.0, 2.0, 4 * math.pi * (1.0 - math.sin(4.0) / 4)),
        (-2.0, 3.0, 1.0, 4 * math.pi * (math.sinh(2.0) / 4 - 0.5)),
    ])
    def test_volume_closed_forms(self, K, N, L, expected):
        params = CurvatureParams(K=K, N=N, D=L)
        assert N * omega(N) * k_const(params, L) == pytest.approx(expected, rel=1e-9)
        assert model_volume(params, L) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("N", [1.5, 3.7])
    @pytest.mark.parametrize("sign", [-1, 1])
    @pytest.mark.parametrize("L", [0.5, 1.0, 2.5])
    def test_volume_fractional_dimension(self, N, sign, L):
        params = CurvatureParams(K=sign * (N - 1), N=N, D=L)
        root = math.sqrt(abs(params.kappa))
        kernel = (lambda t: mpmath.sin(root * t) / root) if sign > 0 else (lambda t: mpmath.sinh(root * t) / root)
        with mpmath.workdps(30):
            reference = float(N * omega(N) * mpmath.quad(lambda t: kernel(t) ** (N - 1), [0, L]))
        assert model_volume(params, L) == pytest.approx(reference, rel=1e-9)

    @pytest.mark.parametrize("K, N", [(-1.0, 2.0), (0.0, 2.0), (1.0, 2.0), (0.5, 1.5), (2.7, 3.7)])
    def test_sigma_increasing_in_t_up_to_quarter_period(self, K, N):
        params = CurvatureParams(K=K, N=N, D=1.0)
        theta = 1.5 if K <= 0 else 0.5 * math.pi / math.sqrt(params.kappa)
        values = [sigma(i / 49, theta, params) for i in range(50)]
        assert all(later > earlier for earlier, later in zip(values, values[1:]))
        assert values[0] == 0.0
        assert values[-1] == pytest.approx(1.0)

    def test_sigma_overshoots_past_quarter_period(self):
        # s_kappa turns over at pi/(2 sqrt(kappa)), so sigma exceeds 1 before t = 1
        params = CurvatureParams(K=1, N=2, D=2.5)
        assert sigma(1.0, 2.5, params) == pytest.approx(1.0)
        assert sigma(0.7, 2.5, params) > 1.0

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_quadrature_warns_on_large_error_estimate(self, caplog):
        config = DEFAULT_CONFIG.with_overrides(quad_limit=1)
        with caplog.at_level(logging.WARNING, logger="isoprofile.kernels"):
            quadrature(lambda t, lib: lib.sin(200 * t), 0.0, 1.0, config)
        assert any("reported error" in record.getMessage() for record in caplog.records)
