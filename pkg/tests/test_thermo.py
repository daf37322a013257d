import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfcontact import thermo
from nsfcontact.exceptions import InvalidParameter, NonPhysicalState

P = thermo.ThermoParams()
temps = st.floats(min_value=1e-6, max_value=1e3, allow_nan=False)
dens = st.floats(min_value=1e-4, max_value=1e2, allow_nan=False)


def test_default_constants():
    assert P.c_star == pytest.approx(5.0, rel=1e-15)
    assert P.cv_warm == 0.5


@pytest.mark.parametrize("kwargs, word", [
    (dict(gamma=1.5), "gamma > 2"),
    (dict(gamma=2.0), "gamma > 2"),
    (dict(R=0.0), "R"),
    (dict(a=-1.0), "a must"),
    (dict(theta_star=0.0), "theta_star"),
    (dict(mu1=0.0), "mu1"),
    (dict(mu1=1.0, lambda1=-1.0), "2*mu1 + 3*lambda1"),
])
def test_invalid_params(kwargs, word):
    with pytest.raises(InvalidParameter, match=word.replace("*", r"\*").replace("+", r"\+")):
        thermo.ThermoParams(**kwargs)


def test_pressure_oracle():
    # R rho theta + a rho^gamma with the defaults
    assert thermo.pressure(P, 1.0, 2.0) == 3.0
    assert thermo.pressure(P, 0.5, 5.75) == pytest.approx(2.875 + 0.125)


def test_internal_energy_oracle():
    # a rho^2 / 2 + Q1 on each branch
    assert thermo.internal_energy(P, 2.0, 1.0) == pytest.approx(2.0 + 0.5)
    assert thermo.internal_energy(P, 1.0, 0.05) == pytest.approx(0.5 + 5.0 * 0.0025)


def test_q1_continuous_at_threshold():
    ts = P.theta_star
    below = float(thermo.q1(P, np.nextafter(ts, 0)))
    at = float(thermo.q1(P, ts))
    assert abs(below - at) < 1e-15
    assert P.c_star * ts ** 2 == pytest.approx(P.cv_warm * ts, rel=1e-15)


@given(temps)
def test_q1_inverse_roundtrip(theta):
    back = float(thermo.q1_inverse(P, thermo.q1(P, theta)))
    assert back == pytest.approx(theta, rel=1e-14)


@given(temps)
def test_q1_prime_positive(theta):
    assert thermo.q1_prime(P, theta) > 0


@pytest.mark.parametrize("q", [0.0, -1.0])
def test_q1_inverse_rejects_nonpositive(q):
    with pytest.raises(NonPhysicalState):
        thermo.q1_inverse(P, q)


def test_s1_continuous_and_bounded_at_zero():
    ts = P.theta_star
    assert float(thermo.s1(P, np.nextafter(ts, 0))) == pytest.approx(float(thermo.s1(P, ts)),
                                                                     abs=1e-14)
    # third law: the thermal entropy vanishes with the temperature
    assert float(thermo.s1(P, 1e-12)) < 1e-10


def test_entropy_oracle():
    # s = -R ln rho + 2 c* theta* + cv ln(theta / theta*) on the warm branch
    expected = -math.log(0.5) + 1.0 + 0.5 * math.log(5.75 / 0.1)
    assert float(thermo.entropy(P, 0.5, 5.75)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("rho, theta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_entropy_rejects_invalid(rho, theta):
    with pytest.raises(NonPhysicalState):
        thermo.entropy(P, rho, theta)


@given(temps)
def test_s_prime_is_inverse_temperature(theta):
    q = thermo.q1(P, theta)
    assert float(thermo.s_of_q_prime(P, q)) == pytest.approx(1.0 / theta, rel=1e-13)


@settings(max_examples=50)
@given(temps, st.floats(min_value=1e-4, max_value=1e-2))
def test_s_concave_in_q(theta, frac):
    q = float(thermo.q1(P, theta))
    h = frac * q
    a, b, c = (float(thermo.s_of_q(P, x)) for x in (q - h, q, q + h))
    assert a + c - 2 * b < 0


# cold thermal energy ~ theta^2 cancels against the kinetic part below ~1e-3
@given(dens, st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-3, 1e3))
def test_prim_cons_roundtrip(rho, u1, u2, theta):
    prim = thermo.PrimitiveState(np.array([rho]), np.array([[u1], [u2]]), np.array([theta]))
    cons = thermo.prim_to_cons(P, prim)
    back = thermo.cons_to_prim(P, cons)
    assert back.rho[0] == rho
    assert back.theta[0] == pytest.approx(theta, rel=1e-7)
    np.testing.assert_allclose(back.u[:, 0], [u1, u2], rtol=1e-12, atol=1e-12)


def test_cons_to_prim_names_bad_cell():
    U = np.tile(np.array([[1.0], [0.0], [2.0]]), (1, 6))
    U[2, 3] = 0.1  # thermal energy below the elastic part
    with pytest.raises(NonPhysicalState) as err:
        thermo.cons_to_prim(P, U)
    assert err.value.cell == (3,)
    assert "cell (3,)" in str(err.value)


def test_conserved_state_stack():
    cs = thermo.ConservedState(np.ones(4), np.zeros((2, 4)), np.full(4, 3.0))
    U = cs.stack()
    assert U.shape == (4, 4)
    back = thermo.ConservedState.from_array(U)
    assert back.dim == 2 and np.all(back.E == 3.0)


@given(dens, st.floats(min_value=0.1, max_value=1e3))
def test_warm_sound_speed_is_gamma_p_over_rho(rho, theta):
    c2 = float(thermo.sound_speed(P, rho, theta)) ** 2
    assert c2 == pytest.approx(P.gamma * float(thermo.pressure(P, rho, theta)) / rho, rel=1e-12)


def test_max_wave_speed():
    prim = thermo.PrimitiveState(np.array([1.0]), np.array([[0.5], [0.0]]), np.array([2.0]))
    assert float(thermo.max_wave_speed(P, prim)[0]) == pytest.approx(0.5 + 3.0)
