"""
Relative entropy around the stationary contact discontinuity and the
degenerate gauges it controls.

For eta(U) = -rho s(U) and a reference state Ub with zero velocity the
gradient term is taken in closed form,

    thetab * d eta(Ub).(U - Ub) = (thetab (-s)(Ub) + (pb + Eb)/rhob)(rho - rhob)
                                  - (E - Eb),

so no symbolic or numerical differentiation enters ``rel_entropy``.
"""

from dataclasses import dataclass

import numpy as np

from . import thermo
from .exceptions import ContactOutOfRegime, InvalidParameter

__all__ = [
    "ContactState",
    "SampleSpec",
    "make_contact",
    "reference_state",
    "rel_entropy",
    "weighted_decomposition",
    "big_f",
    "big_g",
    "sample_states",
    "newf_ratio",
    "fit_newf_constant",
    "gene_lower_bound_check",
    "perturbation_functional",
]


@dataclass(frozen=True)
class ContactState:
    rho_minus: float
    theta_minus: float
    rho_plus: float
    theta_plus: float
    p_bar: float
    E_bar: float
    beta_minus: float
    beta_plus: float

    @property
    def C1(self):
        return self.beta_plus - self.beta_minus

    @property
    def C2(self):
        return self.theta_plus - self.theta_minus

    @property
    def rho_lo(self):
        return min(self.rho_minus, self.rho_plus)

    @property
    def rho_hi(self):
        return max(self.rho_minus, self.rho_plus)

    def side(self, which):
        """(rho, theta) of the ``"minus"`` or ``"plus"`` state."""
        if which == "minus":
            return self.rho_minus, self.theta_minus
        if which == "plus":
            return self.rho_plus, self.theta_plus
        raise ValueError(f"side must be 'minus' or 'plus', got {which!r}")


def make_contact(params, rho_minus, theta_minus, rho_plus):
    """Build the contact whose right temperature balances the pressure."""
    if not (rho_minus > 0 and theta_minus > 0 and rho_plus > 0):
        raise InvalidParameter("contact densities and temperature must be positive")
    if not theta_minus > params.theta_star:
        raise ContactOutOfRegime(
            f"theta_minus={theta_minus} must exceed theta_star={params.theta_star}")
    p_bar = float(thermo.pressure(params, rho_minus, theta_minus))
    theta_plus = (p_bar - params.a * rho_plus ** params.gamma) / (params.R * rho_plus)
    if not theta_plus > params.theta_star:
        raise ContactOutOfRegime(
            f"pressure balance gives theta_plus={theta_plus:.6g}, which is not "
            f"above theta_star={params.theta_star}")
    E_bar = p_bar / (params.gamma - 1.0)

    def beta(rho, theta):
        s = float(thermo.entropy(params, rho, theta))
        return -theta * s + (p_bar + E_bar) / rho

    return ContactState(
        rho_minus=float(rho_minus), theta_minus=float(theta_minus),
        rho_plus=float(rho_plus), theta_plus=float(theta_plus),
        p_bar=p_bar, E_bar=E_bar,
        beta_minus=beta(rho_minus, theta_minus),
        beta_plus=beta(rho_plus, theta_plus))


def reference_state(params, rho, theta, dim=1):
    """Stacked conserved array of a resting state."""
    e = float(thermo.internal_energy(params, rho, theta))
    return np.array([rho] + [0.0] * dim + [rho * e])


def _ref_scalars(params, rho_ref, theta_ref):
    rho_ref = np.asarray(rho_ref, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    s_ref = thermo.entropy(params, rho_ref, theta_ref)
    p_ref = thermo.pressure(params, rho_ref, theta_ref)
    E_ref = rho_ref * thermo.internal_energy(params, rho_ref, theta_ref)
    return rho_ref, theta_ref, s_ref, p_ref, E_ref


def rel_entropy(params, U, rho_ref, theta_ref):
    """(-rho s)(U | Uref) for a resting reference state (rho_ref, theta_ref).

    ``U`` is a stacked conserved array ``(2 + d, ...)``; the reference may be
    scalar or broadcast against the cell axes.
    """
    U = np.asarray(U, dtype=float)
    prim = thermo.cons_to_prim(params, U)
    rho, E = U[0], U[-1]
    rho_r, theta_r, s_r, p_r, E_r = _ref_scalars(params, rho_ref, theta_ref)
    eta = -rho * thermo.entropy(params, rho, prim.theta)
    eta_ref = -rho_r * s_r
    grad = (-s_r + (p_r + E_r) / (rho_r * theta_r)) * (rho - rho_r) - (E - E_r) / theta_r
    return eta - eta_ref - grad


def weighted_decomposition(params, U, rho_ref, theta_ref):
    """The four nonnegative pieces of thetab * (-rho s)(U | Ub).

    Returns ``(term_lnrho, term_S, term_elastic, term_kinetic)``. The identity
    requires the reference on the warm branch (theta_ref >= theta_star).
    """
    U = np.asarray(U, dtype=float)
    rho, m = U[0], U[1:-1]
    prim = thermo.cons_to_prim(params, U)
    rho_r = np.asarray(rho_ref, dtype=float)
    theta_r = np.asarray(theta_ref, dtype=float)
    g = params.gamma

    term_lnrho = theta_r * params.R * (
        rho * np.log(rho) - rho_r * np.log(rho_r) - (np.log(rho_r) + 1.0) * (rho - rho_r))

    q = thermo.q1(params, prim.theta)
    q_r = thermo.q1(params, theta_r)
    rel_S = thermo.s_of_q(params, q) - thermo.s_of_q(params, q_r) - (q - q_r) / theta_r
    term_S = -theta_r * rho * rel_S

    a = params.a
    pe_rel = a * (rho ** g - rho_r ** g - g * rho_r ** (g - 1.0) * (rho - rho_r))
    term_elastic = pe_rel / (g - 1.0)

    term_kinetic = 0.5 * np.sum(m * m, axis=0) / rho
    return term_lnrho, term_S, term_elastic, term_kinetic


def big_f(contact, rho):
    """Squared distance of rho from the plateau [rho_lo, rho_hi]."""
    rho = np.asarray(rho, dtype=float)
    below = np.minimum(rho - contact.rho_lo, 0.0)
    above = np.maximum(rho - contact.rho_hi, 0.0)
    return below * below + above * above


def big_g(y):
    """min(|y|, y^2)."""
    y = np.abs(np.asarray(y, dtype=float))
    return np.minimum(y, y * y)


@dataclass(frozen=True)
class SampleSpec:
    """Box in primitive variables for control-constant sampling.

    Velocities are drawn uniformly in the ball of radius ``u_max`` in
    ``dim`` dimensions.
    """

    rho_min: float = 0.05
    rho_max: float = 4.0
    u_max: float = 2.0
    theta_min: float = 0.2
    theta_max: float = 8.0
    dim: int = 3
    count: int = 100_000
    seed: int = 0


def sample_states(params, spec, rng=None):
    """Draw ``spec.count`` stacked conserved states from the box."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = spec.count
    rho = rng.uniform(spec.rho_min, spec.rho_max, n)
    theta = rng.uniform(spec.theta_min, spec.theta_max, n)
    direction = rng.normal(size=(spec.dim, n))
    direction /= np.linalg.norm(direction, axis=0)
    radius = spec.u_max * rng.uniform(0.0, 1.0, n) ** (1.0 / spec.dim)
    u = direction * radius
    return thermo.prim_to_cons(params, thermo.PrimitiveState(rho, u, theta)).stack()


def newf_ratio(params, contact, U):
    """LHS / RHS of the F + G + kinetic bound, 0/0 read as 0."""
    U = np.asarray(U, dtype=float)
    rho, m, E = U[0], U[1:-1], U[-1]
    lhs = (big_f(contact, rho) + big_g(E - contact.E_bar)
           + 0.5 * np.sum(m * m, axis=0) / rho)
    rhs = np.minimum(
        contact.theta_minus * rel_entropy(params, U, contact.rho_minus, contact.theta_minus),
        contact.theta_plus * rel_entropy(params, U, contact.rho_plus, contact.theta_plus))
    out = np.zeros_like(lhs)
    nz = rhs > 0
    out[nz] = lhs[nz] / rhs[nz]
    return out


def fit_newf_constant(params, contact, sample_spec):
    """Sampled sup of the ratio in the F + G + kinetic control estimate."""
    U = sample_states(params, sample_spec)
    return float(np.max(newf_ratio(params, contact, U)))


def gene_lower_bound_check(params, z0, sample_spec, shell=None):
    """Minimum of eta(z | z0) / min(|z - z0|, |z - z0|^2) over samples.

    ``z0`` is a resting state given as ``(rho, theta)``; distances are
    Euclidean in conserved coordinates. Without ``shell`` the samples come
    from the primitive box of ``sample_spec``. With ``shell=(r_lo, r_hi)``
    they are drawn as z0 + r v with v uniform on the sphere and r uniform in
    the band; draws outside the admissible set are discarded.
    Returns ``(min_ratio, ratios, samples)``.
    """
    rho0, theta0 = z0
    zc = reference_state(params, rho0, theta0, sample_spec.dim)
    rng = np.random.default_rng(sample_spec.seed)
    if shell is None:
        Z = sample_states(params, sample_spec, rng)
    else:
        n = sample_spec.count
        direction = rng.normal(size=(zc.size, n))
        direction /= np.linalg.norm(direction, axis=0)
        Z = zc[:, None] + direction * rng.uniform(shell[0], shell[1], n)
        valid = Z[0] > 0
        valid[valid] = thermo.thermal_energy(params, Z[:, valid]) > 0
        Z = Z[:, valid]
    dist = np.linalg.norm(Z - zc[:, None], axis=0)
    Z, dist = Z[:, dist > 0], dist[dist > 0]
    eta = rel_entropy(params, Z, rho0, theta0)
    ratios = eta / np.minimum(dist, dist * dist)
    return float(np.min(ratios)), ratios, Z


def perturbation_functional(params, contact, U, grid):
    """Cell integrals (F, kinetic, G(E - Eb), |E - Eb|) of a conserved field."""
    U = np.asarray(U, dtype=float)
    thermo.cons_to_prim(params, U)
    rho, m, E = U[0], U[1:-1], U[-1]
    f = E - contact.E_bar
    F_int = grid.integrate(big_f(contact, rho))
    kinetic = grid.integrate(0.5 * np.sum(m * m, axis=0) / rho)
    G_int = grid.integrate(big_g(f))
    L1 = grid.integrate(np.abs(f))
    return F_int, kinetic, G_int, L1
