import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from greenwave.errors import DomainError
from greenwave.flow import GreenbergModel, flow_at_density, flow_curve, peak_flow, speed_at_density

M = GreenbergModel()
densities = st.floats(8.0, 115.0)


def test_speed_examples():
    assert speed_at_density(M, 8) == pytest.approx(73.03, abs=0.01)
    assert speed_at_density(M, 52) == pytest.approx(25.59, abs=0.01)


@pytest.mark.parametrize("rho", [0, 7.99, 115.01, -1])
def test_outside_domain(rho):
    with pytest.raises(DomainError):
        speed_at_density(M, rho)
    with pytest.raises(DomainError):
        flow_at_density(M, rho)


def test_flow_examples():
    assert flow_at_density(M, 52) == pytest.approx(1330, abs=2)
    assert flow_at_density(M, 8) == pytest.approx(584.3, abs=0.1)
    assert flow_at_density(M, 115) == pytest.approx(115 * (125.75 - 25.35 * math.log(115)), rel=1e-12)


def test_peak_flow():
    rho, q = peak_flow(M)
    assert rho == pytest.approx(52.5, abs=1)
    assert q == pytest.approx(1330, abs=5)
    assert flow_at_density(M, rho - 1) < q > flow_at_density(M, rho + 1)


def test_peak_at_one_when_coefficients_match():
    m = GreenbergModel(c0=30.0, c1=30.0, rho_min=0.5, rho_max=10.0)
    assert peak_flow(m)[0] == 1.0


def test_peak_outside_domain_is_error():
    with pytest.raises(DomainError):
        peak_flow(GreenbergModel(c0=30.0, c1=30.0))


def test_grid_argmax_oracle():
    grid = np.round(np.arange(8.0, 115.0 + 1e-9, 0.1), 10)
    q = grid * (M.c0 - M.c1 * np.log(grid))
    best = grid[int(np.argmax(q))]
    assert abs(best - peak_flow(M)[0]) <= 0.5
    # unimodal: increasing before the argmax, decreasing after
    k = int(np.argmax(q))
    assert np.all(np.diff(q[: k + 1]) > 0) and np.all(np.diff(q[k:]) < 0)


def test_flow_curve_columns():
    rows = flow_curve(M, step=1.0)
    assert rows.shape == (108, 3)
    assert rows[0, 0] == 8.0 and rows[-1, 0] == 115.0
    np.testing.assert_array_equal(rows[:, 2], rows[:, 0] * rows[:, 1])


@given(densities)
def test_flow_is_density_times_speed(rho):
    assert flow_at_density(M, rho) == rho * speed_at_density(M, rho)


@given(densities, densities)
def test_speed_strictly_decreasing(a, b):
    if a < b:
        assert speed_at_density(M, a) > speed_at_density(M, b)
