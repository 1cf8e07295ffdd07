import cmath

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cplab.elliptic import (
    EllipticContext,
    cubic_residual,
    half_periods,
    lattice_distance,
    pvi_time,
    reduced_wp,
    reduced_wp_dtau,
    tau_from_time,
    wp,
    wp_inverse,
    wp_jet,
)
from cplab.errors import InvalidInput, LatticePoint

TAUS = [1j, 0.5 + 1j, 2j]


def theta_wp(tau, u):
    """wp for the lattice Z + tau Z from Jacobi theta functions (nome q = exp(i pi tau))."""
    with mp.workdps(30):
        q = mp.exp(1j * mp.pi * mp.mpc(tau))
        t2, t3, t4 = (mp.jtheta(k, 0, q) for k in (2, 3, 4))
        e1 = mp.pi**2 / 3 * (t3**4 + t4**4)
        z = mp.pi * mp.mpc(u)
        val = e1 + (mp.pi * t3 * t4 * mp.jtheta(2, z, q) / mp.jtheta(1, z, q)) ** 2
        return complex(val)


@pytest.mark.parametrize("tau", TAUS + [-0.3 + 0.7j])
def test_wp_matches_theta_oracle(tau):
    ctx = EllipticContext(tau)
    for u in (0.3 + 0.2j, 0.1 - 0.05j, 0.45 + 0.4 * tau, -0.2 + 0.6 * tau):
        ref = theta_wp(tau, u)
        assert wp(ctx, u) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("tau", TAUS)
def test_half_period_values_match_oracle(tau):
    ctx = EllipticContext(tau)
    omegas = (0.5, -(1 + tau) / 2, tau / 2)
    for e, w in zip(half_periods(ctx), omegas):
        assert e == pytest.approx(theta_wp(tau, w), rel=1e-12, abs=1e-12)


def test_square_lattice_values():
    # frozen from the theta-function oracle
    e1, e2, e3 = EllipticContext(1j).e
    assert e1 == pytest.approx(6.875185818020373, rel=1e-13)
    assert abs(e2) < 1e-13
    assert abs(e1 + e3) <= 1e-8
    assert abs(e1.imag) < 1e-14 and abs(e3.imag) < 1e-14
    assert pvi_time(1j) == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("tau", TAUS)
def test_e_sum_and_cubic(tau):
    ctx = EllipticContext(tau, N=60)
    assert ctx.e_sum_error <= 1e-8
    assert cubic_residual(ctx, 0.3 + 0.2j) <= 1e-8


@pytest.mark.parametrize("tau", TAUS)
def test_half_periods_are_critical(tau):
    ctx = EllipticContext(tau)
    for w in ctx.omegas[1:]:
        assert abs(wp_jet(ctx, w)[1]) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.45, 0.45), st.floats(-0.45, 0.45))
def test_parity_and_periodicity(a, b):
    ctx = EllipticContext(1j)
    u = complex(a, b)
    if lattice_distance(ctx, u) < 1e-2:
        return
    f, df = wp_jet(ctx, u)
    fm, dfm = wp_jet(ctx, -u)
    scale = max(1.0, abs(f))
    assert abs(f - fm) <= 1e-10 * scale
    assert abs(df + dfm) <= 1e-10 * max(1.0, abs(df))
    assert abs(wp(ctx, u + 1) - f) <= 1e-9 * scale
    assert abs(wp(ctx, u + ctx.tau) - f) <= 1e-9 * scale


def test_truncation_convergence():
    lo, hi = EllipticContext(1j, N=40), EllipticContext(1j, N=80)
    for u in (0.3 + 0.2j, 0.9 - 0.3j, 0.2 + 0.95j):
        assert abs(wp(lo, u) - wp(hi, u)) <= 1e-8
    assert hi.truncation_error() < lo.truncation_error()


def test_derivative_matches_difference():
    ctx = EllipticContext(0.3 + 1.1j)
    u, h = 0.27 + 0.31j, 1e-5
    fd = (wp(ctx, u + h) - wp(ctx, u - h)) / (2 * h)
    assert wp_jet(ctx, u)[1] == pytest.approx(fd, rel=1e-8)


def test_lattice_point_rejected():
    ctx = EllipticContext(1j)
    with pytest.raises(LatticePoint):
        wp(ctx, 1 + 1j)
    with pytest.raises(InvalidInput):
        EllipticContext(-1j)


@pytest.mark.parametrize("tau", TAUS)
def test_time_map_finite(tau):
    t = pvi_time(tau)
    assert cmath.isfinite(t)
    e1, e2, _ = EllipticContext(tau).e
    assert abs(e2 - e1) > 1e-3


def test_tau_inversion():
    for t in (0.35, 0.3 + 0.1j, 2.0, -0.5 + 0.4j):
        tau = tau_from_time(t)
        assert tau.imag > 0
        assert pvi_time(tau) == pytest.approx(t, abs=1e-12)


def test_wp_inverse_roundtrip():
    ctx = EllipticContext(-1 + 0.8689j)
    for u in (0.3 + 0.2j, 0.2 + 0.5 * ctx.tau):
        target = wp(ctx, u)
        v = wp_inverse(ctx, target)
        assert wp(ctx, v) == pytest.approx(target, rel=1e-12)


def test_reduced_wp_tau_derivative():
    tau, u = 0.2 + 1.1j, 0.3 + 0.25j
    d = reduced_wp_dtau(tau, u)
    h = 1e-4
    # fourth-order stencil on a coarser step as an independent estimate
    f = lambda s: reduced_wp(EllipticContext(tau + s), u)  # noqa: E731
    ref = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
    assert d == pytest.approx(ref, rel=1e-6)


def test_reduced_wp_normalisation():
    ctx = EllipticContext(0.5 + 1j)
    assert reduced_wp(ctx, 0.5) == pytest.approx(0, abs=1e-12)
    assert reduced_wp(ctx, ctx.omegas[2]) == pytest.approx(1, abs=1e-12)
    assert reduced_wp(ctx, ctx.omegas[3]) == pytest.approx(pvi_time(ctx.tau), abs=1e-12)


def test_vectorised_sum_agrees_with_scalar_loop():
    ctx = EllipticContext(0.3 + 0.9j, N=30)
    u = 0.21 + 0.17j
    total = ctx._offset
    for n in range(-ctx.N, ctx.N + 1):
        total += np.pi**2 / np.sin(np.pi * (u + n * ctx.tau)) ** 2
    assert wp(ctx, u) == pytest.approx(total, rel=1e-13)
