"""
Constitutive laws for a gas with ideal thermal pressure plus elastic (cold)
pressure.

    p(rho, theta) = R rho theta + a rho**gamma
    e(rho, theta) = a rho**(gamma-1) / (gamma-1) + Q1(theta)
    Q1(theta)     = R theta / (gamma-1)        theta >= theta_star
                  = c_star theta**2            theta <  theta_star
    s(rho, theta) = -R ln rho + s1(theta),  s1 = int_0^theta Q1'(z)/z dz

The quadratic cold branch makes s1 bounded as theta -> 0. ``S`` is the
entropy as a function of the thermal energy, S(Q1(theta)) = s1(theta); it is
strictly concave with S'(q) = 1 / theta(q).

All functions are vectorized over numpy arrays. Vector quantities carry the
spatial component on axis 0, so a conserved field of dimension d is an array
of shape ``(2 + d, ...)`` ordered ``(rho, m_1..m_d, E)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameter, NonPhysicalState

__all__ = [
    "ThermoParams",
    "PrimitiveState",
    "ConservedState",
    "pressure",
    "elastic_pressure",
    "q1",
    "q1_prime",
    "q1_inverse",
    "internal_energy",
    "s1",
    "entropy",
    "s_of_q",
    "s_of_q_prime",
    "prim_to_cons",
    "cons_to_prim",
    "thermal_energy",
    "sound_speed",
    "max_wave_speed",
]


@dataclass(frozen=True)
class ThermoParams:
    """Physical constants of the constitutive laws.

    ``c_star`` is not free: it is fixed by continuity of Q1 at
    ``theta_star``.
    """

    R: float = 1.0
    a: float = 1.0
    gamma: float = 3.0
    theta_star: float = 0.1
    mu1: float = 1.0
    lambda1: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidParameter(f"R must be positive, got {self.R}")
        if not self.a > 0:
            raise InvalidParameter(f"a must be positive, got {self.a}")
        if not self.gamma > 2:
            raise InvalidParameter(
                f"gamma must satisfy gamma > 2 (required for the uniform "
                f"L2 bound on rho*s), got {self.gamma}")
        if not self.theta_star > 0:
            raise InvalidParameter(
                f"theta_star must be positive, got {self.theta_star}")
        if not self.mu1 > 0:
            raise InvalidParameter(f"mu1 must be positive, got {self.mu1}")
        if not 2 * self.mu1 + 3 * self.lambda1 > 0:
            raise InvalidParameter(
                "viscosity slopes must satisfy 2*mu1 + 3*lambda1 > 0, got "
                f"mu1={self.mu1}, lambda1={self.lambda1}")

    @property
    def c_star(self):
        return self.R / ((self.gamma - 1.0) * self.theta_star)

    @property
    def cv_warm(self):
        return self.R / (self.gamma - 1.0)


@dataclass
class PrimitiveState:
    """(rho, u, theta); ``u`` has the velocity component on axis 0."""

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    @property
    def dim(self):
        return np.shape(self.u)[0]


@dataclass
class ConservedState:
    """(rho, m, E); ``m`` has the momentum component on axis 0."""

    rho: np.ndarray
    m: np.ndarray
    E: np.ndarray

    @property
    def dim(self):
        return np.shape(self.m)[0]

    def stack(self):
        """Pack into a single ``(2 + d, ...)`` array."""
        rho = np.asarray(self.rho, dtype=float)
        return np.concatenate([rho[None], np.asarray(self.m, dtype=float),
                               np.asarray(self.E, dtype=float)[None]])

    @classmethod
    def from_array(cls, U):
        U = np.asarray(U, dtype=float)
        return cls(U[0], U[1:-1], U[-1])


def elastic_pressure(params, rho):
    return params.a * np.power(rho, params.gamma)


def pressure(params, rho, theta):
    """Total pressure R rho theta + a rho^gamma."""
    rho = np.asarray(rho, dtype=float)
    return params.R * rho * theta + params.a * np.power(rho, params.gamma)


def q1(params, theta):
    theta = np.asarray(theta, dtype=float)
    warm = params.cv_warm * theta
    cold = params.c_star * theta * theta
    return np.where(theta >= params.theta_star, warm, cold)


def q1_prime(params, theta):
    theta = np.asarray(theta, dtype=float)
    return np.where(theta >= params.theta_star, params.cv_warm,
                    2.0 * params.c_star * theta)


def q1_inverse(params, q):
    """Temperature with Q1(theta) = q. Raises NonPhysicalState for q <= 0."""
    q = np.asarray(q, dtype=float)
    _check_positive(q, "thermal energy Q1")
    q_star = params.cv_warm * params.theta_star
    warm = q / params.cv_warm
    cold = np.sqrt(np.maximum(q, 0.0) / params.c_star)
    return np.where(q >= q_star, warm, cold)


def internal_energy(params, rho, theta):
    """Specific internal energy e = a rho^(gamma-1)/(gamma-1) + Q1(theta)."""
    rho = np.asarray(rho, dtype=float)
    g = params.gamma
    return params.a * np.power(rho, g - 1.0) / (g - 1.0) + q1(params, theta)


def s1(params, theta):
    """Thermal entropy from the integral of Q1'(z)/z; continuous, s1(0) = 0."""
    theta = np.asarray(theta, dtype=float)
    ts = params.theta_star
    cold = 2.0 * params.c_star * theta
    with np.errstate(divide="ignore", invalid="ignore"):
        warm = (2.0 * params.c_star * ts
                + params.cv_warm * np.log(np.maximum(theta, ts) / ts))
    return np.where(theta >= ts, warm, cold)


def entropy(params, rho, theta):
    """Specific entropy s = -R ln rho + s1(theta)."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    _check_positive(rho, "density")
    _check_positive(theta, "temperature")
    return -params.R * np.log(rho) + s1(params, theta)


def s_of_q(params, q):
    """S(q) = s1(Q1^{-1}(q))."""
    return s1(params, q1_inverse(params, q))


def s_of_q_prime(params, q):
    return 1.0 / q1_inverse(params, q)


def thermal_energy(params, U):
    """Q1(theta) recovered from a stacked conserved array (may be <= 0)."""
    U = np.asarray(U, dtype=float)
    rho, m, E = U[0], U[1:-1], U[-1]
    g = params.gamma
    kinetic = 0.5 * np.sum(m * m, axis=0) / rho
    return (E - kinetic) / rho - params.a * np.power(rho, g - 1.0) / (g - 1.0)


def prim_to_cons(params, prim):
    """Primitive (rho, u, theta) to conserved (rho, rho u, E)."""
    rho = np.asarray(prim.rho, dtype=float)
    u = np.asarray(prim.u, dtype=float)
    e = internal_energy(params, rho, prim.theta)
    E = rho * (0.5 * np.sum(u * u, axis=0) + e)
    return ConservedState(rho, rho * u, E)


def cons_to_prim(params, cons):
    """Conserved to primitive, inverting Q1 for the temperature.

    Accepts a ConservedState or a stacked ``(2 + d, ...)`` array.
    """
    if not isinstance(cons, ConservedState):
        cons = ConservedState.from_array(cons)
    rho = np.asarray(cons.rho, dtype=float)
    _check_positive(rho, "density")
    m = np.asarray(cons.m, dtype=float)
    U = cons.stack()
    q = thermal_energy(params, U)
    if np.any(~(q > 0)):
        cell = _first_bad(~(q > 0))
        raise NonPhysicalState(
            "thermal energy E/rho - |m|^2/(2 rho^2) - a rho^(gamma-1)/(gamma-1)"
            f" is not positive at cell {cell}", cell=cell)
    return PrimitiveState(rho, m / rho, q1_inverse(params, q))


def sound_speed(params, rho, theta):
    """Thermodynamic sound speed with cv = Q1'(theta).

    c^2 = dp/drho|_theta + theta (dp/dtheta)^2 / (rho^2 Q1'(theta)); on the
    warm branch this equals gamma p / rho.
    """
    rho = np.asarray(rho, dtype=float)
    g = params.gamma
    dp_drho = params.R * theta + params.a * g * np.power(rho, g - 1.0)
    c2 = dp_drho + theta * params.R ** 2 / q1_prime(params, theta)
    return np.sqrt(c2)


def max_wave_speed(params, prim):
    u = np.asarray(prim.u, dtype=float)
    speed = np.sqrt(np.sum(u * u, axis=0))
    return speed + sound_speed(params, prim.rho, prim.theta)


def _first_bad(mask):
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return tuple(int(i) for i in np.argwhere(mask)[0])


def _check_positive(x, name):
    bad = ~(np.asarray(x) > 0)
    if np.any(bad):
        cell = _first_bad(bad)
        where = "" if cell is None else f" at cell {cell}"
        raise NonPhysicalState(f"{name} must be positive{where}", cell=cell)
