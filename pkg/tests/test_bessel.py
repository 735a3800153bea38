import math

import mpmath
import numpy as np
import pytest

from models.directional.bessel import (
    log_bessel_iv, log_norm_const, log_surface_area, mean_resultant_length,
)
from models.errors import DimensionTooSmall, InputError

mpmath.mp.dps = 40


def oracle_log_iv(nu, kappa):
    return float(mpmath.log(mpmath.besseli(nu, kappa)))


def oracle_log_c(dim, kappa):
    nu = mpmath.mpf(dim) / 2 - 1
    value = nu * mpmath.log(kappa) - mpmath.mpf(dim) / 2 * mpmath.log(2 * mpmath.pi) \
        - mpmath.log(mpmath.besseli(nu, kappa))
    return float(value)


class TestSurfaceArea:
    @pytest.mark.parametrize("dim, expected", [
        (2, math.log(2 * math.pi)),
        (3, math.log(4 * math.pi)),
        (4, math.log(2 * math.pi ** 2)),
    ])
    def test_closed_forms(self, dim, expected):
        assert log_surface_area(dim) == pytest.approx(expected, rel=1e-14)

    def test_dimension_one(self):
        with pytest.raises(DimensionTooSmall):
            log_surface_area(1)


class TestLogBessel:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 10.0, 49.5, 50.0, 200.0, 1281.5])
    @pytest.mark.parametrize("kappa", [1e-3, 0.5, 5.0, 50.0, 500.0, 5000.0])
    def test_matches_oracle_across_regimes(self, nu, kappa):
        assert log_bessel_iv(nu, kappa) == pytest.approx(oracle_log_iv(nu, kappa), rel=1e-8, abs=1e-8)

    @pytest.mark.parametrize("nu", [60.0, 400.0, 1281.5])
    def test_regimes_agree_at_crossover(self, nu):
        edge = math.sqrt(nu + 1.0)
        below, above = log_bessel_iv(nu, edge), log_bessel_iv(nu, edge * (1 + 1e-12))
        assert above == pytest.approx(below, rel=1e-8)
        assert below == pytest.approx(oracle_log_iv(nu, edge), rel=1e-8)

    def test_zero_argument(self):
        assert log_bessel_iv(0.0, 0.0) == 0.0
        assert log_bessel_iv(3.0, 0.0) == -math.inf

    def test_negative_input(self):
        with pytest.raises(InputError):
            log_bessel_iv(1.0, -1.0)


class TestNormConst:
    @pytest.mark.parametrize("kappa", [1e-3, 0.1, 1.0, 2.0, 10.0, 50.0])
    def test_sphere_closed_form(self, kappa):
        expected = math.log(kappa / (4 * math.pi * math.sinh(kappa)))
        assert log_norm_const(3, kappa) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("dim", [2, 3, 10, 256, 2565])
    def test_zero_concentration_limit(self, dim):
        assert log_norm_const(dim, 0.0) == -log_surface_area(dim)
        assert log_norm_const(dim, 1e-10) == pytest.approx(-log_surface_area(dim), abs=1e-8)

    def test_large_dimension_oracle(self):
        assert log_norm_const(2565, 500.0) == pytest.approx(oracle_log_c(2565, 500), rel=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("dim", [256, 1024, 2565])
    @pytest.mark.parametrize("kappa", [1.0, 10.0, 100.0, 1000.0, 1e4])
    def test_oracle_table(self, dim, kappa):
        assert log_norm_const(dim, kappa) == pytest.approx(oracle_log_c(dim, kappa), rel=1e-6)

    def test_decreasing_in_kappa(self):
        kappas = [0.0, 1.0, 10.0, 35.0, 36.0, 100.0, 1000.0, 1e4, 1e5]
        values = [log_norm_const(2565, k) for k in kappas]
        assert all(np.diff(values) < 0)
        assert all(np.isfinite(values))

    def test_negative_kappa(self):
        with pytest.raises(InputError):
            log_norm_const(3, -1.0)


class TestMeanResultantLength:
    @pytest.mark.parametrize("kappa", [0.5, 3.0, 40.0])
    def test_sphere_langevin(self, kappa):
        expected = 1.0 / math.tanh(kappa) - 1.0 / kappa
        assert mean_resultant_length(3, kappa) == pytest.approx(expected, rel=1e-10)

    def test_zero(self):
        assert mean_resultant_length(10, 0.0) == 0.0
