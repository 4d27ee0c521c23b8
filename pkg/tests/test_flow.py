"""Constant-feedback flow: rates, regime-spanning trig, closed-form solution."""

import math

import numpy as np
import pytest

from relaydde.flow import Headpoint, apply_flow, derivative, flow_matrix, flow_offset, gcos, gsinc
from relaydde.params import Parameters, Regime, derive_rates


def rk4_frozen(v, s, r, t_end, n_steps=20000):
    """Reference integration of the frozen-feedback system."""
    h = t_end / n_steps
    x, y = v.x, v.y

    def f(x, y):
        return 2.0 * r.mu * (-x - y + s), r.omega_sq_plus_mu_sq / (2.0 * r.mu) * x

    for _ in range(n_steps):
        k1 = f(x, y)
        k2 = f(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
        k3 = f(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
        k4 = f(x + h * k3[0], y + h * k3[1])
        x += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return Headpoint(x, y)


class TestDeriveRates:
    def test_critical_point(self):
        r = derive_rates(Parameters(Q=0.5, Omega=1.0))
        assert r.mu == 1.0
        assert r.omega2 == 0.0
        assert r.regime is Regime.CRITICAL

    def test_underdamped_values(self):
        r = derive_rates(Parameters(Q=1.5, Omega=14.0))
        assert r.mu == pytest.approx(14.0 / 3.0, rel=1e-15)
        assert r.omega2 == pytest.approx(196.0 * 8.0 / 9.0, rel=1e-14)
        assert r.regime is Regime.UNDERDAMPED

    def test_overdamped_sign(self):
        r = derive_rates(Parameters(Q=0.4, Omega=7.0))
        assert r.mu == pytest.approx(8.75)
        assert r.omega2 < 0.0
        assert r.regime is Regime.OVERDAMPED

    def test_mu2_plus_omega2_is_omega_squared(self):
        for Q, Om in [(0.3, 5.0), (0.5, 2.0), (1.7, 11.0)]:
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            assert r.omega_sq_plus_mu_sq == pytest.approx(Om * Om, rel=1e-14)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Parameters(Q=-1.0, Omega=1.0)
        with pytest.raises(ValueError):
            Parameters(Q=1.0, Omega=0.0)
        with pytest.raises(ValueError):
            Parameters(Q=1.0, Omega=1.0, sigma=0)


class TestGcosGsinc:
    def test_at_zero(self):
        for Q in (0.3, 0.5, 1.5):
            r = derive_rates(Parameters(Q=Q, Omega=3.0))
            assert gcos(0.0, r) == 1.0
            assert gsinc(0.0, r) == 0.0

    def test_critical_gsinc_is_t(self):
        r = derive_rates(Parameters(Q=0.5, Omega=2.0))
        for t in (0.1, 0.7, 2.3):
            assert gsinc(t, r) == t
            assert gcos(t, r) == 1.0

    def test_against_direct_trig(self):
        r = derive_rates(Parameters(Q=1.5, Omega=14.0))
        w = math.sqrt(r.omega2)
        t = 0.1
        assert gcos(t, r) == pytest.approx(math.cos(w * t), abs=1e-12)
        assert gsinc(t, r) == pytest.approx(math.sin(w * t) / w, abs=1e-12)

    def test_against_hyperbolic(self):
        r = derive_rates(Parameters(Q=0.4, Omega=7.0))
        w = math.sqrt(-r.omega2)
        t = 0.3
        assert gcos(t, r) == pytest.approx(math.cosh(w * t), rel=1e-14)
        assert gsinc(t, r) == pytest.approx(math.sinh(w * t) / w, rel=1e-14)

    def test_series_region_continuity(self):
        # Pythagorean identity survives the series fallback.
        r = derive_rates(Parameters(Q=0.5 + 1e-9, Omega=1.0))
        for t in (0.05, 0.5, 1.0):
            ident = gcos(t, r) ** 2 + r.omega2 * gsinc(t, r) ** 2
            assert ident == pytest.approx(1.0, abs=1e-12)


class TestFlowMatrix:
    def test_identity_at_zero(self):
        for Q in (0.3, 1.5):
            r = derive_rates(Parameters(Q=Q, Omega=5.0))
            np.testing.assert_allclose(flow_matrix(0.0, r), np.eye(2), atol=1e-15)
            np.testing.assert_allclose(flow_offset(0.0, r), np.zeros(2), atol=1e-15)

    def test_determinant_is_wronskian(self):
        for Q, Om in [(1.5, 14.0), (0.4, 7.0)]:
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            for t in (0.1, 0.5, 1.0):
                expected = math.exp(-2.0 * r.mu * t)
                assert np.linalg.det(flow_matrix(t, r)) == pytest.approx(expected, abs=1e-12 * max(1, expected))

    def test_semigroup(self):
        for Q, Om in [(1.5, 14.0), (0.4, 7.0), (0.5, 3.0)]:
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            for t1, t2 in [(0.1, 0.2), (0.05, 0.6)]:
                lhs = flow_matrix(t1 + t2, r)
                rhs = flow_matrix(t1, r) @ flow_matrix(t2, r)
                np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestApplyFlow:
    def test_fixed_point_invariance(self):
        for Q, Om in [(1.5, 14.0), (0.4, 7.0)]:
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            for s in (-1, 1):
                for t in (0.1, 1.0, 5.0):
                    out = apply_flow(t, Headpoint(0.0, float(s)), s, r)
                    assert out.x == pytest.approx(0.0, abs=1e-13)
                    assert out.y == pytest.approx(float(s), abs=1e-13)

    def test_time_zero_is_identity(self):
        r = derive_rates(Parameters(Q=1.1, Omega=6.0))
        v = Headpoint(0.3, -0.7)
        out = apply_flow(0.0, v, 1, r)
        assert (out.x, out.y) == (v.x, v.y)

    def test_against_rk4(self):
        r = derive_rates(Parameters(Q=1.5, Omega=14.0))
        v = Headpoint(0.3, -0.2)
        got = apply_flow(0.05, v, 1, r)
        ref = rk4_frozen(v, 1, r, 0.05)
        assert got.x == pytest.approx(ref.x, abs=1e-8)
        assert got.y == pytest.approx(ref.y, abs=1e-8)

    def test_finite_difference_matches_ode(self):
        rng = np.random.default_rng(42)
        h = 1e-5
        for _ in range(50):
            Q = float(rng.uniform(0.2, 2.5))
            Om = float(rng.uniform(1.0, 20.0))
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            v = Headpoint(float(rng.normal()), float(rng.normal()))
            s = int(rng.choice([-1, 1]))
            t = float(rng.uniform(0.01, 0.8))
            fwd = apply_flow(t + h, v, s, r)
            bwd = apply_flow(t - h, v, s, r)
            mid = apply_flow(t, v, s, r)
            dx_fd = (fwd.x - bwd.x) / (2 * h)
            dy_fd = (fwd.y - bwd.y) / (2 * h)
            dx, dy = derivative(mid, s, r)
            scale = max(1.0, abs(dx), abs(dy)) * r.mu
            assert abs(dx_fd - dx) < 1e-7 * scale
            assert abs(dy_fd - dy) < 1e-7 * scale

    def test_continuity_across_critical_damping(self):
        v = Headpoint(0.4, -0.3)
        t = 0.6
        ref = apply_flow(t, v, 1, derive_rates(Parameters(Q=0.5, Omega=2.0)))
        for dq in (1e-6, -1e-6):
            out = apply_flow(t, v, 1, derive_rates(Parameters(Q=0.5 + dq, Omega=2.0)))
            assert abs(out.x - ref.x) <= 1e-5
            assert abs(out.y - ref.y) <= 1e-5

    def test_contraction_to_node(self):
        for Q, Om in [(1.5, 14.0), (0.4, 7.0)]:
            r = derive_rates(Parameters(Q=Q, Omega=Om))
            # spectral radius of A(t) decays once mu t is a few units
            for t in (2.0, 5.0):
                rad = max(abs(np.linalg.eigvals(flow_matrix(t, r))))
                assert rad < 1.0
            out = apply_flow(50.0 / r.mu, Headpoint(0.8, 0.9), -1, r)
            assert abs(out.x) < 1e-8 and abs(out.y + 1.0) < 1e-8

    def test_odd_symmetry_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            Q = float(rng.uniform(0.2, 2.5))
            r = derive_rates(Parameters(Q=Q, Omega=float(rng.uniform(1, 20))))
            v = Headpoint(float(rng.normal()), float(rng.normal()))
            s = int(rng.choice([-1, 1]))
            t = float(rng.uniform(0.0, 1.5))
            a = apply_flow(t, v, s, r)
            b = apply_flow(t, Headpoint(-v.x, -v.y), -s, r)
            assert b.x == -a.x and b.y == -a.y

    def test_flow_sign_validation(self):
        r = derive_rates(Parameters(Q=1.0, Omega=2.0))
        with pytest.raises(ValueError):
            apply_flow(0.1, Headpoint(0.1, 0.1), 0, r)
