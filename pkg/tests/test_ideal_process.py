import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dronecover.geometry import AnnularSector
from dronecover.ideal_process import (
    DomainError,
    IdealParams,
    efficiency_bound,
    inverse_cdf_radii,
    is_leg_boundary,
    lower_bound_time,
    outbound_speed_extremes,
    radial_cdf,
    radial_pdf,
    radius_at,
    sample_takeoffs,
    speed_at,
    time_at_radius,
    upper_bound_time,
)

SECTOR = AnnularSector(100.0, 5000.0, 2 * math.pi * 5 / 8)
P = IdealParams(SECTOR, v_avg=10.0, drones=10, houses=100)
TAU = 490.0


def test_tau():
    assert P.tau == TAU


class TestTakeoffs:
    def test_open_interval(self):
        t = sample_takeoffs(P, 3)
        assert t.shape == (10,)
        assert np.all((t > 0) & (t < TAU))

    def test_mean_over_many(self):
        big = IdealParams(SECTOR, drones=100_000)
        assert sample_takeoffs(big, 5).mean() == pytest.approx(TAU / 2, rel=0.01)

    def test_deterministic(self):
        assert np.array_equal(sample_takeoffs(P, 9), sample_takeoffs(P, 9))


class TestRadius:
    T = 37.5

    def test_cycle_points(self):
        assert radius_at(self.T, self.T, P) == pytest.approx(100.0, abs=1e-9)
        assert radius_at(self.T + TAU, self.T, P) == pytest.approx(5000.0, abs=1e-9)
        assert radius_at(self.T + 2 * TAU, self.T, P) == pytest.approx(100.0, abs=1e-9)

    def test_half_leg(self):
        want = math.sqrt((5000.0**2 + 100.0**2) / 2)
        assert radius_at(self.T + TAU / 2, self.T, P) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(3536.24, abs=0.01)

    def test_half_leg_by_integrating_speed(self):
        # forward Euler-free: trapezoid on a 1 ms grid of the speed law
        t = np.arange(0.0, TAU / 2 + 1e-9, 1e-3) + self.T
        v = speed_at(t, self.T, P)
        r = 100.0 + integrate.trapezoid(v, t)
        assert r == pytest.approx(radius_at(self.T + TAU / 2, self.T, P), rel=1e-5)

    def test_before_takeoff(self):
        with pytest.raises(DomainError):
            radius_at(0.0, 1.0, P)

    @settings(max_examples=300)
    @given(st.floats(0, 1e6), st.floats(0, 1000))
    def test_range_and_period(self, dt, T):
        r = radius_at(T + dt, T, P)
        assert 100.0 <= r <= 5000.0
        assert radius_at(T + dt + 2 * TAU, T, P) == pytest.approx(r, rel=1e-9)


class TestSpeed:
    def test_start_of_outbound(self):
        v0, v1 = outbound_speed_extremes(P)
        assert speed_at(0.0, 0.0, P) == pytest.approx(v0)
        assert v0 == pytest.approx(255.0, rel=1e-12)

    def test_end_of_outbound(self):
        v_end = speed_at(TAU - 1e-9, 0.0, P)
        assert v_end == pytest.approx(5.1, rel=1e-6)

    def test_inbound_negative(self):
        assert speed_at(TAU + 10, 0.0, P) < 0

    def test_mean_progress_equals_v_avg(self):
        val, _ = integrate.quad(lambda t: speed_at(t, 0.0, P), 0.0, TAU, limit=200)
        assert val / TAU == pytest.approx(10.0, rel=1e-9)

    def test_finite_difference(self):
        rng = np.random.default_rng(2)
        T = rng.uniform(0, TAU, 2000)
        t = T + rng.uniform(0, 20 * TAU, 2000)
        ok = ~is_leg_boundary(t, T, P, 1.0)
        h = 1e-3
        fd = (radius_at(t[ok] + h, T[ok], P) - radius_at(t[ok] - h, T[ok], P)) / (2 * h)
        assert np.allclose(fd, speed_at(t[ok], T[ok], P), rtol=1e-6, atol=0)


class TestInverse:
    def test_round_trip(self):
        r = np.linspace(100, 5000, 101)
        t_out = time_at_radius(r, 1000.0, True, P)
        t_in = time_at_radius(r, 1000.0 + TAU, False, P)
        assert np.allclose(radius_at(t_out, 1000.0, P), r, rtol=1e-12)
        assert np.allclose(radius_at(t_in[1:-1], 1000.0, P), r[1:-1], rtol=1e-12)

    def test_outbound_formula(self):
        r = 2500.0
        want = 7.0 + 2 * TAU + TAU * (r * r - 100.0**2) / (5000.0**2 - 100.0**2)
        assert time_at_radius(r, 7.0 + 2 * TAU, True, P) == pytest.approx(want, rel=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            time_at_radius(50.0, 0.0, True, P)


class TestRadialLaw:
    def test_cdf_ends(self):
        assert radial_cdf(100.0, P) == 0.0
        assert radial_cdf(5000.0, P) == 1.0

    def test_pdf_at_rho(self):
        assert radial_pdf(5000.0, P) == pytest.approx(10000 / 24_990_000, rel=1e-12)

    def test_pdf_normalized(self):
        val, _ = integrate.quad(lambda r: radial_pdf(r, P), 100.0, 5000.0)
        assert val == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("r", [99.999, 5000.001, -1.0])
    def test_domain(self, r):
        with pytest.raises(DomainError):
            radial_pdf(r, P)
        with pytest.raises(DomainError):
            radial_cdf(r, P)

    def test_inverse_cdf(self):
        u = np.linspace(0, 1, 11)
        assert np.allclose(radial_cdf(inverse_cdf_radii(u, P), P), u, atol=1e-12)


class TestBounds:
    def test_lower(self):
        assert lower_bound_time(1000, P) == pytest.approx(98_000.0)
        p1 = IdealParams(SECTOR, drones=7)
        assert lower_bound_time(7, p1) == pytest.approx(2 * TAU)
        p2 = IdealParams(SECTOR, drones=20)
        assert lower_bound_time(1000, p2) == pytest.approx(lower_bound_time(1000, P) / 2)

    def test_upper(self):
        assert upper_bound_time(1000, P) == pytest.approx(98_490.0)
        assert upper_bound_time(1, IdealParams(SECTOR, drones=1)) == pytest.approx(3 * TAU)
        for m in (1, 17, 1000):
            assert upper_bound_time(m, P) - lower_bound_time(m, P) == pytest.approx(TAU)

    def test_efficiency(self):
        assert efficiency_bound(1000, 10) == pytest.approx(1 / 1.005)
        assert efficiency_bound(5, 10) == pytest.approx(0.5)
        assert efficiency_bound(10**9, 10) == pytest.approx(1.0, abs=1e-8)

    @given(st.integers(1, 10**6), st.integers(1, 1000))
    def test_efficiency_increasing(self, m, d):
        assert efficiency_bound(m, d) < efficiency_bound(m + 1, d) <= 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            lower_bound_time(0, P)
        with pytest.raises(ValueError):
            efficiency_bound(0, 1)
