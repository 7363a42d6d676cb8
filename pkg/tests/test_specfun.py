import math

import numpy as np
import pytest

from harvest.errors import DomainError
from harvest.services.specfun import erf_real, erfc_real, erfcx_real, scaled_cerfc


def test_erf_and_erfc_reference_values():
    assert erf_real(0.0) == 0.0
    assert erfc_real(0.0) == 1.0
    assert erf_real(1.0) == pytest.approx(0.8427007929497149, rel=1e-13)
    assert erfc_real(1.0) == pytest.approx(0.1572992070502851, rel=1e-13)


def test_erfc_far_left_tends_to_two():
    assert erfc_real(-10.0) == pytest.approx(2.0, abs=1e-13)


def test_erf_plus_erfc_is_one():
    for x in np.linspace(-6.0, 6.0, 121):
        assert erf_real(float(x)) + erfc_real(float(x)) == pytest.approx(1.0, abs=1e-13)


def test_erfc_strictly_decreasing():
    values = [erfc_real(float(x)) for x in np.linspace(-5.0, 5.0, 1001)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_erfcx_matches_scaled_erfc_and_rejects_negative():
    assert erfcx_real(0.0) == 1.0
    assert erfcx_real(2.0) == pytest.approx(math.exp(4.0) * math.erfc(2.0), rel=1e-13)
    with pytest.raises(DomainError):
        erfcx_real(-1.0)


def test_erfcx_follows_its_asymptotic_series_at_large_argument():
    # exp(x^2) erfc(x) = (1 - 1/(2x^2) + 3/(4x^4) - ...) / (x sqrt(pi))
    for x in (100.0, 1e3, 1e8):
        series = (1.0 - 0.5 / x**2 + 0.75 / x**4) / (x * math.sqrt(math.pi))
        assert erfcx_real(x) == pytest.approx(series, rel=1e-9)


def test_scaled_cerfc_reference_values():
    assert scaled_cerfc(0j) == 1.0
    assert scaled_cerfc(1j) == pytest.approx(0.4275835761558070, rel=1e-12)


def test_scaled_cerfc_real_axis_real_part_is_gaussian():
    for x in np.linspace(0.0, 10.0, 51):
        assert scaled_cerfc(complex(x, 0.0)).real == pytest.approx(math.exp(-x * x), rel=1e-12)


def test_scaled_cerfc_real_axis_is_conjugate_symmetric():
    for x in np.linspace(0.1, 10.0, 50):
        left = scaled_cerfc(complex(-x, 0.0))
        right = scaled_cerfc(complex(x, 0.0))
        assert left.real == pytest.approx(right.real, rel=1e-12)
        assert left.imag == pytest.approx(-right.imag, rel=1e-12)


def test_scaled_cerfc_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        scaled_cerfc(-1j)
    with pytest.raises(DomainError):
        scaled_cerfc(complex(float("nan"), 0.0))
