import numpy as np
import pytest

from cplab.errors import InvalidParams, InvalidState, SingularSpectralPoint
from cplab.systems import (
    MatrixState,
    ParamSet,
    SystemId,
    flow_fields,
    gradient_consistency_residual,
    lax_pair_eval,
    matrix_hamiltonian,
    spectral_poles,
    zero_curvature_residual,
)

ALL = list(SystemId)
TIMES = {
    SystemId.PVI: 0.35 + 0.05j,
    SystemId.PV: 1.4 + 0.1j,
    SystemId.PIII_D6: 1.4 + 0.1j,
    SystemId.PIII_D7: 1.4 + 0.1j,
    SystemId.PIII_D8: 1.4 + 0.1j,
    SystemId.PIV: 0.3 + 0.1j,
    SystemId.PII: 0.3 + 0.1j,
    SystemId.PI: 0.3 + 0.1j,
}
GENERIC = {
    SystemId.PVI: dict(theta0=0.3, theta1=-0.2, thetat=0.45, k=0.7),
    SystemId.PV: dict(theta0=0.3, theta1=-0.2, theta2=0.45),
    SystemId.PIV: dict(theta0=0.3, theta1=-0.2),
    SystemId.PIII_D6: dict(theta0=0.3, theta1=-0.2),
    SystemId.PIII_D7: dict(theta=0.35),
    SystemId.PIII_D8: {},
    SystemId.PII: dict(theta=0.35),
    SystemId.PI: {},
}


def scalar(q, p, t):
    return MatrixState(np.array([[q]], dtype=complex), np.array([[p]], dtype=complex), t)


def random_state(rng, n, t):
    noise = lambda: 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))  # noqa: E731
    return MatrixState(np.eye(n) + noise(), noise(), t)


def test_system_names_parse():
    assert SystemId.parse("pIII_d7") is SystemId.PIII_D7
    with pytest.raises(InvalidParams):
        SystemId.parse("PVII")


def test_pvi_theta_is_derived_and_checked():
    par = ParamSet.of("PVI", theta0=1, theta1=2, thetat=3)
    assert par["theta"] == 6
    ParamSet.of("PVI", theta0=1, theta1=2, thetat=3, theta=6)
    with pytest.raises(InvalidParams):
        ParamSet.of("PVI", theta0=1, theta=2)


def test_unknown_parameter_rejected():
    with pytest.raises(InvalidParams):
        ParamSet.of("PII", kappa=1)


def test_pii_lax_at_origin():
    lv = lax_pair_eval("PII", ParamSet.of("PII", theta=0), scalar(0, 0, 0), 1)
    np.testing.assert_allclose(lv.A, np.diag([0.5j, -0.5j]), atol=1e-15)
    np.testing.assert_allclose(lv.B, np.diag([0.5j, -0.5j]), atol=1e-15)


def test_pi_lax_at_origin():
    lv = lax_pair_eval("PI", ParamSet.of("PI"), scalar(0, 0, 0), 0)
    np.testing.assert_allclose(lv.A, 0, atol=1e-15)
    np.testing.assert_allclose(lv.B, [[0, 0.5], [0, 0]], atol=1e-15)


def test_pvi_lax_pole_at_t():
    st = scalar(0.1, 0.2, 0.35)
    with pytest.raises(SingularSpectralPoint):
        lax_pair_eval("PVI", ParamSet.of("PVI"), st, 0.35)


def test_spectral_poles():
    assert spectral_poles("PVI", 0.35) == (0.0, 1.0, 0.35)
    assert spectral_poles("PIII_D6", 1.5) == (0.0, 1.0)
    assert spectral_poles("PI", 1.0) == ()


def test_pii_fields_closed_form():
    rng = np.random.default_rng(1)
    st = random_state(rng, 3, 0.4 - 0.2j)
    theta = 0.7
    a, b = flow_fields("PII", ParamSet.of("PII", theta=theta), st)
    q = st.q
    np.testing.assert_allclose(a, st.p)
    np.testing.assert_allclose(b, 2 * q @ q @ q + st.t * q + theta * np.eye(3), atol=1e-14)


def test_pi_fields_at_origin():
    a, b = flow_fields("PI", ParamSet.of("PI"), MatrixState(np.zeros((2, 2)), np.zeros((2, 2)), 4))
    np.testing.assert_allclose(a, 0)
    np.testing.assert_allclose(b, np.eye(2))


def test_d7_scalar_fields():
    a, b = flow_fields("PIII_D7", ParamSet.of("PIII_D7", theta=0), scalar(1, 0, 2))
    assert a[0, 0] == pytest.approx(1)
    assert b[0, 0] == pytest.approx(-0.5)


def test_hamiltonian_values():
    assert matrix_hamiltonian("PII", ParamSet.of("PII", theta=0), scalar(1, 0, 0)) == pytest.approx(-0.5)
    assert matrix_hamiltonian("PI", ParamSet.of("PI"), scalar(0, 1, 3.3)) == pytest.approx(0.5)


@pytest.mark.parametrize("bad_t", [0, 1])
def test_pvi_forbidden_times(bad_t):
    with pytest.raises(InvalidState):
        flow_fields("PVI", ParamSet.of("PVI"), scalar(0.1, 0.2, bad_t))


def test_d8_needs_invertible_q():
    st = MatrixState(np.diag([1.0, 0.0]), np.eye(2), 1.5)
    with pytest.raises(InvalidState):
        flow_fields("PIII_D8", ParamSet.of("PIII_D8"), st)


@pytest.mark.parametrize("sys_id", [SystemId.PII, SystemId.PIV])
def test_scalar_gradient_consistency(sys_id):
    par = ParamSet(sys_id, GENERIC[sys_id])
    assert gradient_consistency_residual(sys_id, par, scalar(0.4 + 0.1j, -0.3 + 0.2j, 0.3)) <= 1e-8


@pytest.mark.parametrize("sys_id", ALL)
def test_gradient_consistency_n2(sys_id):
    rng = np.random.default_rng(5)
    par = ParamSet(sys_id, GENERIC[sys_id])
    st = random_state(rng, 2, TIMES[sys_id])
    r5 = gradient_consistency_residual(sys_id, par, st, h=1e-5)
    r6 = gradient_consistency_residual(sys_id, par, st, h=1e-6)
    assert r5 <= 1e-6
    assert r6 <= 1e-6


@pytest.mark.parametrize("sys_id", ALL)
def test_zero_curvature_n2(sys_id):
    rng = np.random.default_rng(11)
    par = ParamSet(sys_id, GENERIC[sys_id])
    st = random_state(rng, 2, TIMES[sys_id])
    assert zero_curvature_residual(sys_id, par, st, 0.7 + 1.1j) <= 1e-6


def test_zero_curvature_detects_wrong_parameter():
    # fields for theta, Lax pair for a different theta: the compatibility must fail
    rng = np.random.default_rng(2)
    st = random_state(rng, 2, 0.3)
    good = ParamSet.of("PII", theta=0.3)
    bad = ParamSet.of("PII", theta=0.9)
    res = zero_curvature_residual(
        "PII", good, st, 1 + 1j, flow=lambda par, q, p, t: flow_fields("PII", bad, MatrixState(q, p, t))
    )
    assert res > 1e-3


def test_zero_curvature_near_pole_rejected():
    st = scalar(0.1, 0.2, 0.3)
    with pytest.raises(SingularSpectralPoint):
        zero_curvature_residual("PII", ParamSet.of("PII"), st, 1e-5)
