"""
Seeded property suites for the constitutive laws and the entropy functionals.

Each check returns a :class:`Check` with a name, a pass flag and a one-line
detail. Output is deterministic for a given seed.
"""

from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from . import thermo

__all__ = [
    "Check",
    "decomposition_identity",
    "s_calculus",
    "newf_constant_stability",
    "gene_bound_positive",
    "q1_continuity",
    "q1_roundtrip",
    "state_roundtrip",
    "contact_balance",
    "warm_sound_speed",
    "run_suite",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _default_contact(params):
    return fn.make_contact(params, 1.0, 2.0, 0.5)


def decomposition_identity(params, contact, seed=0, count=10_000, tol=1e-10):
    """theta_ref * rel_entropy equals the four-term sum on both contact sides."""
    spec = fn.SampleSpec(count=count, seed=seed)
    U = fn.sample_states(params, spec)
    worst = 0.0
    for rho_r, theta_r in (contact.side("minus"), contact.side("plus")):
        value = theta_r * fn.rel_entropy(params, U, rho_r, theta_r)
        parts = sum(fn.weighted_decomposition(params, U, rho_r, theta_r))
        worst = max(worst, float(np.max(np.abs(value - parts) / (1.0 + np.abs(value)))))
    return Check("decomposition_identity", worst <= tol,
                 f"max scaled error {worst:.3e} (tol {tol:.0e})")


def s_calculus(params, points=1000, theta_range=(1e-4, 1e2), rel_step=1e-5, tol=1e-6):
    """Finite-difference S' matches 1/theta and S is strictly concave in q."""
    theta = np.geomspace(theta_range[0], theta_range[1], points)
    q = thermo.q1(params, theta)
    h = rel_step * q
    sp = thermo.s_of_q(params, q + h)
    sm = thermo.s_of_q(params, q - h)
    s0 = thermo.s_of_q(params, q)
    fd = (sp - sm) / (2 * h)
    rel = float(np.max(np.abs(fd * theta - 1.0)))
    second = sp - 2 * s0 + sm
    concave = bool(np.all(second < 0))
    ok = rel <= tol and concave
    return Check("s_calculus", ok,
                 f"max rel error of S' {rel:.3e} (tol {tol:.0e}); "
                 f"second differences negative: {concave}")


def newf_constant_stability(params, contact, seed=0, count=100_000, spread=0.2):
    """Control constant fitted on two disjoint sample streams agrees within spread."""
    seeds = np.random.SeedSequence(seed).generate_state(2)
    consts = [fn.fit_newf_constant(params, contact, fn.SampleSpec(count=count, seed=int(s)))
              for s in seeds]
    a, b = consts
    finite = bool(np.all(np.isfinite(consts)))
    rel = abs(a - b) / max(a, b)
    ok = finite and rel <= spread
    return Check("newf_constant_stability", ok,
                 f"C = {a:.6f}, {b:.6f}; relative spread {rel:.3e} (limit {spread})")


def gene_bound_positive(params, contact, seed=0, count=100_000):
    """eta(z | z0) / min(|z-z0|, |z-z0|^2) stays positive on the sample box."""
    worst = np.inf
    for side in ("minus", "plus"):
        spec = fn.SampleSpec(count=count, seed=seed)
        m, _, _ = fn.gene_lower_bound_check(params, contact.side(side), spec)
        worst = min(worst, m)
    return Check("gene_bound_positive", bool(worst > 0), f"min ratio {worst:.6e}")


def q1_continuity(params):
    ts = params.theta_star
    lo = float(params.c_star * ts * ts)
    hi = float(params.cv_warm * ts)
    err = abs(lo - hi) / hi
    return Check("q1_continuity", err <= 1e-15, f"branch mismatch at theta_star {err:.3e}")


def q1_roundtrip(params, seed=0, count=10_000):
    rng = np.random.default_rng(seed)
    theta = np.exp(rng.uniform(np.log(1e-4), np.log(1e2), count))
    back = thermo.q1_inverse(params, thermo.q1(params, theta))
    err = float(np.max(np.abs(back - theta) / theta))
    return Check("q1_roundtrip", err <= 1e-14, f"max rel error {err:.3e}")


def state_roundtrip(params, seed=0, count=10_000):
    U = fn.sample_states(params, fn.SampleSpec(count=count, seed=seed))
    prim = thermo.cons_to_prim(params, U)
    back = thermo.prim_to_cons(params, prim).stack()
    err = float(np.max(np.abs(back - U) / (1.0 + np.abs(U))))
    return Check("state_roundtrip", err <= 1e-12, f"max scaled error {err:.3e}")


def contact_balance(params, contact):
    pm = float(thermo.pressure(params, contact.rho_minus, contact.theta_minus))
    pp = float(thermo.pressure(params, contact.rho_plus, contact.theta_plus))
    Em = contact.rho_minus * float(thermo.internal_energy(params, contact.rho_minus,
                                                          contact.theta_minus))
    Ep = contact.rho_plus * float(thermo.internal_energy(params, contact.rho_plus,
                                                         contact.theta_plus))
    err = max(abs(pm - pp), abs(Em - Ep)) / pm
    return Check("contact_balance", err <= 1e-14,
                 f"pressure and energy mismatch {err:.3e}")


def warm_sound_speed(params, seed=0, count=10_000):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.05, 4.0, count)
    theta = rng.uniform(params.theta_star, 8.0, count)
    c2 = thermo.sound_speed(params, rho, theta) ** 2
    ref = params.gamma * thermo.pressure(params, rho, theta) / rho
    err = float(np.max(np.abs(c2 - ref) / ref))
    return Check("warm_sound_speed", err <= 1e-13, f"max rel error vs gamma p / rho {err:.3e}")


def run_suite(params=None, contact=None, seed=0):
    """All checks, in a fixed order."""
    if params is None:
        params = thermo.ThermoParams()
    if contact is None:
        contact = _default_contact(params)
    return [
        q1_continuity(params),
        q1_roundtrip(params, seed),
        state_roundtrip(params, seed),
        warm_sound_speed(params, seed),
        contact_balance(params, contact),
        s_calculus(params),
        decomposition_identity(params, contact, seed),
        newf_constant_stability(params, contact, seed),
        gene_bound_positive(params, contact, seed),
    ]
