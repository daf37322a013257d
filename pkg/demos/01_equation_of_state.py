"""Equation of state, entropy and the contact state.

Run: python3 demos/01_equation_of_state.py
"""

import numpy as np

from nsfcontact import functionals as fn
from nsfcontact import thermo

# %% constitutive laws at the default parameters
P = thermo.ThermoParams()
print("c* =", P.c_star, " theta* =", P.theta_star)

theta = np.geomspace(1e-3, 10.0, 7)
q = thermo.q1(P, theta)
for t, qq, s in zip(theta, q, thermo.s1(P, theta)):
    branch = "cold" if t < P.theta_star else "warm"
    print(f"theta {t:9.4g}  Q1 {qq:10.4e}  s1 {s:8.4f}  ({branch})")

# %% S'(Q1) = 1/theta by a centered difference
h = 1e-6 * q
fd = (thermo.s_of_q(P, q + h) - thermo.s_of_q(P, q - h)) / (2 * h)
print("max |theta S' - 1| =", np.max(np.abs(fd * theta - 1)))

# %% the contact: equal pressure and equal total energy on both sides
c = fn.make_contact(P, 1.0, 2.0, 0.5)
print(f"theta_plus {c.theta_plus}  p_bar {c.p_bar}  E_bar {c.E_bar}")
print(f"beta- {c.beta_minus:.6f}  beta+ {c.beta_plus:.6f}")

# %% relative entropy is nonnegative and splits into four nonnegative terms
U = fn.sample_states(P, fn.SampleSpec(count=5, seed=1))
eta = fn.rel_entropy(P, U, c.rho_minus, c.theta_minus)
parts = fn.weighted_decomposition(P, U, c.rho_minus, c.theta_minus)
print("theta- * eta   :", np.round(c.theta_minus * eta, 6))
print("sum of 4 terms :", np.round(sum(parts), 6))

# %% a contact that does not exist: rho_plus too large for theta_plus > 0
try:
    fn.make_contact(P, 1.0, 2.0, 2.0)
except Exception as exc:
    print(type(exc).__name__, "-", exc)
