"""
Explicit finite-volume integrator for the Navier-Stokes-Fourier system on
the periodic unit torus.

The scheme is Rusanov (local Lax-Friedrichs) for the convective part with an
optional minmod reconstruction of the conserved variables, compact
face-centered viscous and heat fluxes, and Heun (two-stage) time stepping.
Everything is in flux form, so mass, momentum and total energy are conserved
to round-off.

The series also records the entropy produced by the parabolic terms. For
one stage these rates are the exact semi-discrete values

    sum_i h^d (dE_i - u_i . dm_i) / theta_i,

split into a viscous and a heat part. Summed by parts the heat part equals
the face form sum kappa (dtheta/h)^2 / (theta_i theta_{i+1}) h^d, the discrete
kappa |grad theta|^2 / theta^2. Whatever entropy the run produces beyond
these rates comes from the convective numerical dissipation and the time
discretization.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import thermo
from .exceptions import InvalidParameter, NumericalBlowup, VacuumApproach
from .fields import PeriodicGrid, integrate

__all__ = [
    "SolverConfig",
    "RunRecord",
    "AdmissibilityReport",
    "grid_of",
    "init_contact_perturbed",
    "smooth_step",
    "stable_dt",
    "rhs",
    "step",
    "run",
    "admissibility",
    "entropy_residual",
    "write_series_csv",
    "series_columns",
]

RECONSTRUCTIONS = ("first-order", "minmod")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of a run.

    ``dissipation_sign`` multiplies the viscous and heat fluxes. It exists so
    tests can inject an anti-dissipative scheme; production runs keep 1.
    """

    nu: float = 1e-3
    kappa: float = 1e-3
    cfl: float = 0.4
    t_end: float = 0.2
    rho_floor: float = 1e-10
    reconstruction: str = "minmod"
    max_steps: Optional[int] = None
    dissipation_sign: float = 1.0

    def __post_init__(self):
        if not self.nu >= 0:
            raise InvalidParameter(f"nu must be nonnegative, got {self.nu}")
        if not self.kappa >= 0:
            raise InvalidParameter(f"kappa must be nonnegative, got {self.kappa}")
        if not 0 < self.cfl < 1:
            raise InvalidParameter(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.t_end > 0:
            raise InvalidParameter(f"t_end must be positive, got {self.t_end}")
        if not self.rho_floor > 0:
            raise InvalidParameter(f"rho_floor must be positive, got {self.rho_floor}")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise InvalidParameter(
                f"reconstruction must be one of {RECONSTRUCTIONS}, got {self.reconstruction!r}")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidParameter(f"max_steps must be positive, got {self.max_steps}")


def grid_of(U):
    """Grid implied by a stacked conserved array."""
    U = np.asarray(U)
    return PeriodicGrid(U.shape[0] - 2, U.shape[1])


def smooth_step(z):
    """C-infinity step rising from 0 at z <= 0 to 1 at z >= 1."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)
        f1 = np.where(z < 1, np.exp(-1.0 / np.where(z < 1, 1.0 - z, 1.0)), 0.0)
    return f0 / (f0 + f1)


def _plus_fraction(x1, width):
    """Periodic profile of the plus region [1/2, 1), smoothed over ``width``."""
    x1 = np.mod(x1, 1.0)
    if width == 0:
        return (x1 >= 0.5).astype(float)
    half = 0.5 * width
    up = smooth_step((x1 - (0.5 - half)) / width)
    # the jump back to the minus state sits at x1 = 0 = 1
    down = smooth_step((x1 - (1.0 - half)) / width) + smooth_step((x1 + half) / width) - 1.0
    return up - down


def init_contact_perturbed(grid, params, contact, width=0.0, alpha=0.0, mode=1):
    """Contact discontinuity at x1 = 1/2 and x1 = 0 with a velocity perturbation.

    Parameters
    ----------
    grid : PeriodicGrid
    params : ThermoParams
    contact : ContactState
    width : float
        Transition width of rho and theta across each plane; 0 gives the
        sharp contact, otherwise at least 4h.
    alpha : float
        Amplitude of u1 = alpha sin(2 pi k x1), times cos(2 pi x2) when d >= 2.
    mode : int
        Wave number k.

    Returns
    -------
    ndarray
        Stacked conserved field of shape ``(2 + d,) + grid.shape``.
    """
    if width != 0 and width < 4 * grid.h * (1 - 1e-12):
        raise InvalidParameter(f"width must be 0 or at least 4h = {4 * grid.h:.4g}, got {width}")
    if width > 0.5:
        raise InvalidParameter(f"width must not exceed 1/2, got {width}")
    if alpha < 0:
        raise InvalidParameter(f"alpha must be nonnegative, got {alpha}")
    x = grid.centers
    phi = _plus_fraction(x[0], width)
    rho = contact.rho_minus + (contact.rho_plus - contact.rho_minus) * phi
    theta = contact.theta_minus + (contact.theta_plus - contact.theta_minus) * phi
    u = np.zeros((grid.d,) + grid.shape)
    u[0] = alpha * np.sin(2 * np.pi * mode * x[0])
    if grid.d >= 2:
        u[0] *= np.cos(2 * np.pi * x[1])
    U = thermo.prim_to_cons(params, thermo.PrimitiveState(rho, u, theta)).stack()
    thermo.cons_to_prim(params, U)
    return U


def _state_parts(params, U):
    """rho, u, thermal energy q and (where q > 0) theta, without raising."""
    rho = U[0]
    m = U[1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = m / rho
        q = thermo.thermal_energy(params, U)
    ok = (rho > 0) & (q > 0)
    qsafe = np.where(ok, q, 1.0)
    theta = thermo.q1_inverse(params, qsafe)
    return rho, u, q, theta, ok


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _face_states(params, U, ax, reconstruction):
    nb = np.roll(U, -1, ax)
    if reconstruction == "first-order":
        return U, nb
    slope = _minmod(U - np.roll(U, 1, ax), nb - U)
    UL = U + 0.5 * slope
    UR = nb - 0.5 * np.roll(slope, -1, ax)
    _, _, _, _, okL = _state_parts(params, UL)
    _, _, _, _, okR = _state_parts(params, UR)
    bad = ~(okL & okR)
    if np.any(bad):
        UL = np.where(bad, U, UL)
        UR = np.where(bad, nb, UR)
    return UL, UR


def _euler_flux(params, U, a):
    rho, u, q, theta, _ = _state_parts(params, U)
    p = thermo.pressure(params, rho, theta)
    F = np.empty_like(U)
    ua = u[a]
    F[0] = U[1 + a]
    F[1:-1] = U[1:-1] * ua
    F[1 + a] += p
    F[-1] = (U[-1] + p) * ua
    c = thermo.sound_speed(params, rho, theta)
    return F, np.abs(ua) + c


def _rusanov(params, UL, UR, a):
    FL, sL = _euler_flux(params, UL, a)
    FR, sR = _euler_flux(params, UR, a)
    lam = np.maximum(sL, sR)
    return 0.5 * (FL + FR) - 0.5 * lam * (UR - UL)


def _parabolic_flux(params, config, u, theta, grid, a):
    """Viscous and heat flux through the faces normal to x_a.

    Returns ``(momentum_flux (d, ...), energy_visc, energy_heat)`` with the
    sign convention of ``div F`` on the left-hand side.
    """
    d = grid.d
    h = grid.h
    ax = 1 + a  # spatial axis of (d, ...) arrays
    sax = a     # spatial axis of scalar arrays
    u_nb = np.roll(u, -1, ax)
    th_nb = np.roll(theta, -1, sax)
    th_f = 0.5 * (theta + th_nb)
    u_f = 0.5 * (u + u_nb)
    # grad[b][c] = d u_c / d x_b at the face
    grad = [[None] * d for _ in range(d)]
    for c in range(d):
        grad[a][c] = (u_nb[c] - u[c]) / h
        for b in range(d):
            if b == a:
                continue
            cen = (np.roll(u[c], -1, b) - np.roll(u[c], 1, b)) / (2 * h)
            grad[b][c] = 0.5 * (cen + np.roll(cen, -1, sax))
    div = sum(grad[b][b] for b in range(d))
    scale = config.dissipation_sign * config.nu * th_f
    S_a = np.empty((d,) + theta.shape)
    for c in range(d):
        S_a[c] = params.mu1 * (grad[a][c] + grad[c][a])
    S_a[a] += params.lambda1 * div
    S_a *= scale
    mom = -S_a
    e_visc = -np.sum(S_a * u_f, axis=0)
    e_heat = -config.dissipation_sign * config.kappa * (th_nb - theta) / h
    return mom, e_visc, e_heat


def rhs(params, config, U, grid=None):
    """Semi-discrete right-hand side.

    Returns
    -------
    dU : ndarray
        Time derivative of the conserved field.
    diss_visc, diss_heat : float
        Entropy production rates of the viscous and heat terms.
    """
    if grid is None:
        grid = grid_of(U)
    d, h = grid.d, grid.h
    dU = np.zeros_like(U)
    rho, u, q, theta, ok = _state_parts(params, U)
    par_m = np.zeros((d,) + grid.shape)
    par_ev = np.zeros(grid.shape)
    par_eh = np.zeros(grid.shape)
    viscous = config.nu > 0
    heat = config.kappa > 0
    for a in range(d):
        ax = 1 + a
        UL, UR = _face_states(params, U, ax, config.reconstruction)
        F = _rusanov(params, UL, UR, a)
        dU -= (F - np.roll(F, 1, ax)) / h
        if viscous or heat:
            mom, ev, eh = _parabolic_flux(params, config, u, theta, grid, a)
            if viscous:
                par_m -= (mom - np.roll(mom, 1, ax)) / h
                par_ev -= (ev - np.roll(ev, 1, a)) / h
            if heat:
                par_eh -= (eh - np.roll(eh, 1, a)) / h
    dU[1:-1] += par_m
    dU[-1] += par_ev + par_eh
    diss_visc = integrate(grid, (par_ev - np.sum(u * par_m, axis=0)) / theta) if viscous else 0.0
    diss_heat = integrate(grid, par_eh / theta) if heat else 0.0
    return dU, diss_visc, diss_heat


def stable_dt(params, config, U, grid=None):
    """Time step from the acoustic, viscous and heat constraints.

    The acoustic bound carries a 1.1 safety factor on the wave speed because
    Heun with minmod can step outside the convex hull of neighbor states.
    """
    if grid is None:
        grid = grid_of(U)
    prim = thermo.cons_to_prim(params, U)
    h, d = grid.h, grid.d
    wave = float(np.max(thermo.max_wave_speed(params, prim)))
    bounds = [h / (1.1 * wave)]
    min_rho = float(np.min(prim.rho))
    if config.nu > 0:
        visc = config.nu * (2 * params.mu1 + abs(params.lambda1)) * float(np.max(prim.theta))
        bounds.append(h * h * min_rho / (2 * d * visc))
    if config.kappa > 0:
        min_cv = float(np.min(thermo.q1_prime(params, prim.theta)))
        bounds.append(h * h * min_rho * min_cv / (2 * d * config.kappa))
    return config.cfl * min(bounds)


def _check_state(params, config, U, step_index):
    if not np.all(np.isfinite(U)):
        raise NumericalBlowup(f"non-finite value at step {step_index}", step=step_index)
    if np.min(U[0]) < config.rho_floor:
        cell = tuple(int(i) for i in np.unravel_index(np.argmin(U[0]), U[0].shape))
        raise VacuumApproach(
            f"density {np.min(U[0]):.3e} below floor {config.rho_floor:.1e} at cell "
            f"{cell}, step {step_index}", step=step_index)
    q = thermo.thermal_energy(params, U)
    if not np.all(q > 0):
        cell = tuple(int(i) for i in np.argwhere(~(q > 0))[0])
        raise NumericalBlowup(
            f"temperature lost positivity at cell {cell}, step {step_index}", step=step_index)


def step(U, params, config, dt=None, grid=None, step_index=0, with_rates=False):
    """One Heun step. Returns the new field (and ``(dt, diss_visc, diss_heat)``
    when ``with_rates`` is set)."""
    U = np.asarray(U, dtype=float)
    if grid is None:
        grid = grid_of(U)
    if dt is None:
        dt = stable_dt(params, config, U, grid)
    k1, v1, h1 = rhs(params, config, U, grid)
    U1 = U + dt * k1
    _check_state(params, config, U1, step_index)
    k2, v2, h2 = rhs(params, config, U1, grid)
    Un = 0.5 * U + 0.5 * (U1 + dt * k2)
    _check_state(params, config, Un, step_index)
    if with_rates:
        return Un, (dt, 0.5 * (v1 + v2), 0.5 * (h1 + h2))
    return Un


def series_columns(d):
    """CSV column names for dimension ``d``."""
    cols = ["t", "dt", "mass"] + [f"mom{i + 1}" for i in range(d)]
    return cols + ["energy", "entropy_total", "min_rho", "min_theta", "diss_visc", "diss_heat"]


@dataclass
class RunRecord:
    """Output of :func:`run`.

    ``series`` maps names to per-step arrays (row 0 is the initial state;
    ``dt`` and the dissipation rates of row k refer to the step ending at
    row k). ``frames`` holds full conserved fields at ``frame_times``.
    """

    grid: PeriodicGrid
    params: thermo.ThermoParams
    config: SolverConfig
    frame_stride: int
    series: dict
    frame_times: np.ndarray
    frames: np.ndarray
    frame_steps: np.ndarray
    complete: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return len(self.series["t"]) - 1

    @property
    def initial(self):
        return self.frames[0]

    @property
    def final(self):
        return self.frames[-1]

    def velocity_frames(self):
        return self.frames[:, 1:-1] / self.frames[:, :1]


def _diagnostics(params, grid, U):
    rho, m, E = U[0], U[1:-1], U[-1]
    prim = thermo.cons_to_prim(params, U)
    rho_s = rho * thermo.entropy(params, rho, prim.theta)
    h = grid.h
    gu = 0.0
    gl = np.zeros(grid.shape)
    lt = np.log(prim.theta)
    for a in range(grid.d):
        du = (np.roll(prim.u, -1, 1 + a) - prim.u) / h
        gu += integrate(grid, np.sum(du * du, axis=0))
        dl = (np.roll(lt, -1, a) - lt) / h
        gl += dl * dl
    row = {
        "mass": integrate(grid, rho),
        "mom": [integrate(grid, m[c]) for c in range(grid.d)],
        "energy": integrate(grid, E),
        "entropy_total": integrate(grid, rho_s),
        "min_rho": float(np.min(rho)),
        "min_theta": float(np.min(prim.theta)),
        "rho_l2": np.sqrt(integrate(grid, rho * rho)),
        "rhos_l2": np.sqrt(integrate(grid, rho_s * rho_s)),
        "grad_u_sq": gu,
        "grad_logtheta_sq": integrate(grid, gl),
    }
    return row


def _build_record(grid, params, config, stride, rows, frames, ftimes, fsteps, complete):
    series = {}
    keys = ["t", "dt", "mass", "energy", "entropy_total", "min_rho", "min_theta",
            "diss_visc", "diss_heat", "rho_l2", "rhos_l2", "grad_u_sq", "grad_logtheta_sq"]
    for k in keys:
        series[k] = np.array([r[k] for r in rows], dtype=float)
    series["mom"] = np.array([r["mom"] for r in rows], dtype=float).reshape(len(rows), grid.d)
    return RunRecord(grid=grid, params=params, config=config, frame_stride=stride,
                     series=series, frame_times=np.array(ftimes), frames=np.array(frames),
                     frame_steps=np.array(fsteps, dtype=int), complete=complete)


def run(U0, params, config, frame_stride=4, grid=None):
    """Advance ``U0`` to ``config.t_end`` (or ``config.max_steps`` steps).

    Frames are stored at step 0, every ``frame_stride`` steps and at the
    final step. On NumericalBlowup or VacuumApproach the exception carries the
    partial record in its ``record`` attribute.
    """
    if frame_stride < 1:
        raise InvalidParameter(f"frame_stride must be positive, got {frame_stride}")
    start = time.perf_counter()
    U = np.array(U0, dtype=float)
    if grid is None:
        grid = grid_of(U)
    thermo.cons_to_prim(params, U)
    t = 0.0
    row = _diagnostics(params, grid, U)
    row.update(t=0.0, dt=0.0, diss_visc=0.0, diss_heat=0.0)
    rows = [row]
    frames, ftimes, fsteps = [U.copy()], [0.0], [0]
    n = 0
    try:
        while t < config.t_end * (1 - 1e-14):
            if config.max_steps is not None and n >= config.max_steps:
                break
            dt = stable_dt(params, config, U, grid)
            if t + dt > config.t_end:
                dt = config.t_end - t
            U, (dt, dv, dh) = step(U, params, config, dt, grid, n + 1, with_rates=True)
            n += 1
            t = config.t_end if abs(config.t_end - (t + dt)) < 1e-14 else t + dt
            row = _diagnostics(params, grid, U)
            row.update(t=t, dt=dt, diss_visc=dv, diss_heat=dh)
            rows.append(row)
            if n % frame_stride == 0:
                frames.append(U.copy())
                ftimes.append(t)
                fsteps.append(n)
    except (NumericalBlowup, VacuumApproach) as exc:
        if fsteps[-1] != n:
            frames.append(U.copy())
            ftimes.append(t)
            fsteps.append(n)
        exc.record = _build_record(grid, params, config, frame_stride, rows,
                                   frames, ftimes, fsteps, complete=False)
        exc.record.meta["wall_time_s"] = time.perf_counter() - start
        raise
    if fsteps[-1] != n:
        frames.append(U.copy())
        ftimes.append(t)
        fsteps.append(n)
    rec = _build_record(grid, params, config, frame_stride, rows, frames, ftimes, fsteps, True)
    rec.meta["wall_time_s"] = time.perf_counter() - start
    return rec


@dataclass(frozen=True)
class AdmissibilityReport:
    """Discrete monitors of the admissibility conditions.

    ``entropy_balance_min`` is the minimum over recorded times of
    int rho s(t) - int rho s(0) - int_0^t D; an admissible run keeps it above
    ``-tol``.
    """

    mass_drift: float
    momentum_drift: tuple
    energy_drift: float
    entropy_balance_min: float
    min_rho: float
    min_theta: float
    bound_pri_mass: float
    bound_pri_ent: float
    bound_pri_v: float
    tolerance: float

    @property
    def conservation_ok(self):
        return (self.mass_drift <= 1e-12 and max(self.momentum_drift, default=0.0) <= 1e-12
                and abs(self.energy_drift) <= 1e-12)

    @property
    def entropy_ok(self):
        return self.entropy_balance_min >= -self.tolerance


def entropy_residual(record):
    """int rho s(t) - int rho s(0) - int_0^t D at every recorded step."""
    s = record.series
    produced = np.cumsum(s["dt"] * (s["diss_visc"] + s["diss_heat"]))
    return s["entropy_total"] - s["entropy_total"][0] - produced


def admissibility(record, params=None):
    """Evaluate the discrete admissibility monitors of a run record."""
    s = record.series
    cfg = record.config
    mass0 = s["mass"][0]
    mass_drift = float(np.max(np.abs(s["mass"] - mass0)) / abs(mass0))
    mom = s["mom"]
    drifts = []
    for c in range(mom.shape[1]):
        l1 = max(integrate(record.grid, np.abs(f[1 + c])) for f in record.frames)
        scale = max(abs(mom[0, c]), l1, abs(mass0))
        drifts.append(float(np.max(np.abs(mom[:, c] - mom[0, c])) / scale))
    dE = s["energy"] - s["energy"][0]
    worst = int(np.argmax(np.abs(dE)))
    energy_drift = float(dE[worst] / abs(s["energy"][0]))
    res = entropy_residual(record)
    dt_max = float(np.max(s["dt"])) if len(s["dt"]) > 1 else 0.0
    tol = 5.0 * max(record.grid.h, dt_max)
    pri_v = float(np.sum(s["dt"][1:] * (cfg.nu * s["grad_u_sq"][1:]
                                        + cfg.kappa * s["grad_logtheta_sq"][1:])))
    return AdmissibilityReport(
        mass_drift=mass_drift,
        momentum_drift=tuple(drifts),
        energy_drift=energy_drift,
        entropy_balance_min=float(np.min(res)),
        min_rho=float(np.min(s["min_rho"])),
        min_theta=float(np.min(s["min_theta"])),
        bound_pri_mass=float(np.max(s["rho_l2"])),
        bound_pri_ent=float(np.max(s["rhos_l2"])),
        bound_pri_v=pri_v,
        tolerance=tol,
    )


def write_series_csv(record, path):
    """Write the scalar series with the documented columns."""
    s = record.series
    d = record.grid.d
    cols = series_columns(d)
    data = [s["t"], s["dt"], s["mass"]] + [s["mom"][:, c] for c in range(d)]
    data += [s["energy"], s["entropy_total"], s["min_rho"], s["min_theta"],
             s["diss_visc"], s["diss_heat"]]
    table = np.column_stack(data)
    try:
        np.savetxt(path, table, delimiter=",", header=",".join(cols), comments="",
                   fmt="%.17g")
    except OSError as exc:
        raise OSError(f"cannot write series {path}: {exc}") from exc
