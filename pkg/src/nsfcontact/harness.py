"""
Experiments built on the solver and shift modules.

* :func:`monitor_inequality` evaluates the weighted relative entropy, the
  controlled functional F + G + kinetic and the remainder terms on every
  stored frame of a run, and returns a PASS/FAIL verdict.
* :func:`dissipation_sweep` and :func:`convergence_study` measure
  Phi_sup = sup_t int (F + |m|^2 / 2 rho) + sup_t int |E - Eb| against the
  initial relative entropy E0 over grids of (alpha, nu, kappa).
* :func:`static_limit_check` tests the moment bound
  |int Phi rho(t) - int Phi rho0| <= ||grad Phi||_4 sup_s ||m(s)||_{4/3} t.
* :func:`persist` and :func:`report` write and re-read run directories.

The reference state Ub of a run is the sharp contact on cell centers: the
minus state on 0 < x1 < 1/2 and the plus state on 1/2 < x1 < 1.
"""

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from . import functionals as fn
from . import thermo
from .exceptions import FrameMismatch, NumericalBlowup, VacuumApproach
from .fields import (
    MollifierKernel, PeriodicGrid, default_threads, gradient, integrate, lp_norm,
    read_snapshot, write_snapshot,
)
from .shift import ShiftConfig, VelocityHistory, build_psi, commutator_residual, psi0
from .solver import (
    SolverConfig, admissibility, init_contact_perturbed, run, write_series_csv,
)

__all__ = [
    "DiagnosticsSeries",
    "MonitorResult",
    "SweepRun",
    "SweepResult",
    "ConvergenceReport",
    "StaticCheck",
    "Experiment",
    "reference_fields",
    "initial_relative_entropy",
    "weighted_entropy_two_ways",
    "fitted_constant",
    "monitor_inequality",
    "run_experiment",
    "phi_sup",
    "dissipation_sweep",
    "convergence_study",
    "static_limit_check",
    "commutator_decay",
    "commutator_bound",
    "random_commutator_pair",
    "persist",
    "read_manifest",
    "report",
]


def reference_fields(grid, contact):
    """(rho_ref, theta_ref) of the sharp contact on cell centers."""
    plus = psi0(grid.centers) > 0
    rho = np.where(plus, contact.rho_plus, contact.rho_minus)
    theta = np.where(plus, contact.theta_plus, contact.theta_minus)
    return rho, theta


def initial_relative_entropy(params, contact, U, grid):
    """E0 = int (-rho s)(U | Ub), by direct quadrature and by the four-term sum.

    Returns ``(direct, decomposition)``.
    """
    rho_r, theta_r = reference_fields(grid, contact)
    direct = integrate(grid, fn.rel_entropy(params, U, rho_r, theta_r))
    terms = fn.weighted_decomposition(params, U, rho_r, theta_r)
    decomp = integrate(grid, sum(terms) / theta_r)
    return direct, decomp


def weighted_entropy_two_ways(params, contact, U, psi_bar, grid):
    """L = int (1 - psi_bar) theta- eta(U|U-) + psi_bar theta+ eta(U|U+).

    Second value: the same quantity written through beta,
    int Psi (-rho s) - int [((1 - psi_bar) beta- + psi_bar beta+) rho - pb - E].
    """
    c = contact
    em = fn.rel_entropy(params, U, c.rho_minus, c.theta_minus)
    ep = fn.rel_entropy(params, U, c.rho_plus, c.theta_plus)
    L = integrate(grid, (1 - psi_bar) * c.theta_minus * em + psi_bar * c.theta_plus * ep)
    rho, E = U[0], U[-1]
    theta = thermo.cons_to_prim(params, U).theta
    Psi = c.theta_minus * (1 - psi_bar) + c.theta_plus * psi_bar
    beta = (1 - psi_bar) * c.beta_minus + psi_bar * c.beta_plus
    neg_rho_s = -rho * thermo.entropy(params, rho, theta)
    M = integrate(grid, Psi * neg_rho_s) - integrate(grid, beta * rho - c.p_bar - E)
    return L, M


@lru_cache(maxsize=32)
def fitted_constant(params, contact, spec=fn.SampleSpec()):
    """Sampled constant of the F + G + kinetic control estimate (cached)."""
    return fn.fit_newf_constant(params, contact, spec)


@dataclass
class DiagnosticsSeries:
    """Per-frame values of the monitored functionals.

    ``kappa_term`` and ``transport_term`` are the instantaneous integrands;
    the ``*_int`` arrays are their time integrals from 0 (trapezoid over
    frames). ``D_int`` integrates the dissipation over every solver step.
    """

    t: np.ndarray
    L: np.ndarray
    L_beta: np.ndarray
    F_int: np.ndarray
    kinetic_int: np.ndarray
    G_int: np.ndarray
    L1_proxy: np.ndarray
    D: np.ndarray
    D_int: np.ndarray
    kappa_term: np.ndarray
    transport_term: np.ndarray
    kappa_int: np.ndarray
    transport_int: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    COLUMNS = ("t", "L", "L_beta", "F_int", "kinetic_int", "G_int", "L1_proxy", "D", "D_int",
               "kappa_term", "transport_term", "kappa_int", "transport_int", "lhs", "rhs")

    def table(self):
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])

    def write_csv(self, path):
        np.savetxt(path, self.table(), delimiter=",", header=",".join(self.COLUMNS),
                   comments="", fmt="%.17g")


@dataclass
class MonitorResult:
    series: DiagnosticsSeries
    passed: bool
    margin: float
    C_fit: float
    E0: float
    epsilon: float
    tol: float

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"


def _trapezoid_cumulative(t, y):
    out = np.zeros_like(y)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def monitor_inequality(record, shift_field, params, contact, C_fit=None, E0=None):
    """Evaluate the weighted inequality on every stored frame.

    PASS when, at every frame time t,

        [F + G + kinetic](t) + int_0^t D
            <= C_fit (eps + E0) + |kappa_int(t)| + |transport_int(t)| + tol,

    with tol = 5 max(h, dt) (1 + E0) and D = nu |grad u|^2 + kappa |grad theta|^2 / theta^2.
    """
    grid = record.grid
    if shift_field.grid != grid:
        raise FrameMismatch("shift field and run record live on different grids")
    if len(shift_field.times) != len(record.frame_times) or not np.allclose(
            shift_field.times, record.frame_times, rtol=0, atol=1e-14):
        raise FrameMismatch(
            f"shift field has {len(shift_field.times)} frames, run has "
            f"{len(record.frame_times)}; build the shift from the same record")
    cfg = record.config
    eps = shift_field.config.epsilon if shift_field.config else ShiftConfig().epsilon
    delta = shift_field.config.delta if shift_field.config else ShiftConfig().delta
    kernels = (MollifierKernel(grid, delta), MollifierKernel(grid, eps))
    if C_fit is None:
        C_fit = fitted_constant(params, contact)
    if E0 is None:
        E0 = initial_relative_entropy(params, contact, record.frames[0], grid)[0]

    s = record.series
    D_step = cfg.nu * s["grad_u_sq"] + cfg.kappa * s["grad_logtheta_sq"]
    D_cum = np.concatenate([[0.0], np.cumsum(s["dt"][1:] * D_step[1:])])

    keys = ("L", "L_beta", "F", "K", "G", "L1", "kap", "tr")
    vals = {k: [] for k in keys}
    jump = abs(contact.theta_plus - contact.theta_minus)
    for k, U in enumerate(record.frames):
        pb = shift_field.psi_bar[k]
        L, M = weighted_entropy_two_ways(params, contact, U, pb, grid)
        F, K, G, L1 = fn.perturbation_functional(params, contact, U, grid)
        prim = thermo.cons_to_prim(params, U)
        gth = np.sqrt(np.sum(gradient(grid, prim.theta) ** 2, axis=0))
        gpsi = np.sqrt(np.sum(gradient(grid, pb) ** 2, axis=0))
        kap = cfg.kappa * jump * integrate(grid, gth / prim.theta * gpsi)
        R = commutator_residual(grid, prim.u, shift_field.psi[k], delta, eps, kernels)
        neg_rho_s = -U[0] * thermo.entropy(params, U[0], prim.theta)
        tr = integrate(grid, (contact.C1 * U[0] + contact.C2 * neg_rho_s) * R)
        for key, v in zip(keys, (L, M, F, K, G, L1, kap, tr)):
            vals[key].append(v)
    arr = {k: np.array(v) for k, v in vals.items()}
    t = np.asarray(record.frame_times, dtype=float)
    idx = np.asarray(record.frame_steps)
    D = D_step[idx]
    D_int = D_cum[idx]
    kap_int = _trapezoid_cumulative(t, arr["kap"])
    tr_int = _trapezoid_cumulative(t, arr["tr"])
    dt_max = float(np.max(s["dt"])) if len(s["dt"]) > 1 else 0.0
    tol = 5.0 * max(grid.h, dt_max) * (1.0 + E0)
    lhs = arr["F"] + arr["G"] + arr["K"] + D_int
    rhs = C_fit * (eps + E0) + np.abs(kap_int) + np.abs(tr_int) + tol
    series = DiagnosticsSeries(
        t=t, L=arr["L"], L_beta=arr["L_beta"], F_int=arr["F"], kinetic_int=arr["K"],
        G_int=arr["G"], L1_proxy=arr["L1"], D=D, D_int=D_int, kappa_term=arr["kap"],
        transport_term=arr["tr"], kappa_int=kap_int, transport_int=tr_int, lhs=lhs, rhs=rhs)
    finite = all(np.all(np.isfinite(getattr(series, c))) for c in series.COLUMNS)
    margin = float(np.min(rhs - lhs)) if finite else -np.inf
    passed = bool(finite and margin >= 0 and record.complete)
    return MonitorResult(series=series, passed=passed, margin=margin, C_fit=float(C_fit),
                         E0=float(E0), epsilon=eps, tol=tol)


@dataclass
class Experiment:
    """Everything produced by one monitored run."""

    record: object
    admissibility: object
    shift: object
    monitor: MonitorResult
    static: Optional["StaticCheck"] = None
    error: Optional[str] = None
    E0: float = 0.0
    E0_decomp: float = 0.0

    @property
    def passed(self):
        ok = self.monitor.passed and self.error is None
        if self.static is not None:
            ok = ok and self.static.passed
        return ok


def run_experiment(params, contact, grid, solver_config, alpha, width=0.0, mode=1,
                   shift_config=ShiftConfig(), frame_stride=4, static_modes=3):
    """Initialize, run, trace the shift and evaluate every monitor.

    A run that stops with NumericalBlowup or VacuumApproach is still
    monitored on its partial record; its verdict is FAIL and ``error`` holds
    the message.
    """
    U0 = init_contact_perturbed(grid, params, contact, width, alpha, mode)
    E0, E0_dec = initial_relative_entropy(params, contact, U0, grid)
    error = None
    try:
        record = run(U0, params, solver_config, frame_stride, grid)
    except (NumericalBlowup, VacuumApproach) as exc:
        record = exc.record
        error = str(exc)
    adm = admissibility(record, params)
    history = VelocityHistory.from_record(record, shift_config.delta)
    shift_field = build_psi(history, shift_config, contact)
    mon = monitor_inequality(record, shift_field, params, contact, E0=E0)
    static = static_limit_check(record, static_modes)
    return Experiment(record=record, admissibility=adm, shift=shift_field, monitor=mon,
                      static=static, error=error, E0=E0, E0_decomp=E0_dec)


def phi_sup(params, contact, record):
    """sup_t int (F + |m|^2/2rho) + sup_t int |E - Eb| over stored frames."""
    fk, l1 = [], []
    for U in record.frames:
        F, K, _, L1 = fn.perturbation_functional(params, contact, U, record.grid)
        fk.append(F + K)
        l1.append(L1)
    return max(fk) + max(l1)


@dataclass
class SweepRun:
    nu: float
    kappa: float
    alpha: float
    width: float
    d: int
    n: int
    E0: float = float("nan")
    E0_decomp: float = float("nan")
    phi_sup: float = float("nan")
    bound_pri_mass: float = float("nan")
    bound_pri_ent: float = float("nan")
    bound_pri_v: float = float("nan")
    steps: int = 0
    error: Optional[str] = None

    @property
    def ratio(self):
        """phi_sup / (sqrt(E0) + E0); nan when E0 = 0."""
        scale = np.sqrt(self.E0) + self.E0
        return self.phi_sup / scale if scale > 0 else float("nan")


@dataclass
class SweepResult:
    runs: list
    C: float

    def within_factor(self, factor=2.0):
        """Every finite run ratio lies in [C / factor, C]."""
        r = np.array([x.ratio for x in self.runs if x.error is None and np.isfinite(x.ratio)])
        return bool(r.size and np.all(r <= self.C * (1 + 1e-12)) and np.all(r >= self.C / factor))

    def table(self):
        return [(r.nu, r.kappa, r.alpha, r.width, r.E0, r.phi_sup, r.ratio) for r in self.runs]


def _sweep_job(job):
    params, contact, d, n, cfg, alpha, width, mode, stride, out = job
    grid = PeriodicGrid(d, n)
    res = SweepRun(nu=cfg.nu, kappa=cfg.kappa, alpha=alpha, width=width, d=d, n=n)
    U0 = init_contact_perturbed(grid, params, contact, width, alpha, mode)
    res.E0, res.E0_decomp = initial_relative_entropy(params, contact, U0, grid)
    try:
        record = run(U0, params, cfg, stride, grid)
    except (NumericalBlowup, VacuumApproach) as exc:
        res.error = str(exc)
        return res
    res.phi_sup = phi_sup(params, contact, record)
    adm = admissibility(record, params)
    res.bound_pri_mass = adm.bound_pri_mass
    res.bound_pri_ent = adm.bound_pri_ent
    res.bound_pri_v = adm.bound_pri_v
    res.steps = record.steps
    if out is not None:
        persist(record, out, contact=contact,
                init={"alpha": alpha, "width": width, "mode": mode},
                extra={"E0": res.E0, "phi_sup": res.phi_sup})
    return res


def _map_jobs(jobs, workers):
    if workers is None or workers <= 0:
        workers = default_threads()
    workers = min(workers, len(jobs))
    if workers <= 1:
        return [_sweep_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_job, jobs))


def fit_sweep_constant(runs):
    """Smallest C with phi_sup <= C (sqrt(E0) + E0) over the runs."""
    r = [x.ratio for x in runs if x.error is None and np.isfinite(x.ratio)]
    return float(max(r)) if r else float("nan")


def dissipation_sweep(params, contact, grid, alphas, nu_values, base_config=SolverConfig(),
                      kappa_ratio=1.0, width=0.0, mode=1, frame_stride=4, workers=None,
                      out=None):
    """Runs over every (alpha, nu) pair with kappa = kappa_ratio nu.

    Solver failures are recorded in the run's ``error`` and the sweep moves
    on. With ``out`` each run is persisted under ``out/run_XX``.
    """
    if not alphas or not nu_values:
        raise ValueError("alpha and nu lists must be nonempty")
    jobs = []
    for i, (nu, alpha) in enumerate((nu, a) for nu in nu_values for a in alphas):
        cfg = replace(base_config, nu=nu, kappa=kappa_ratio * nu)
        sub = None if out is None else os.path.join(out, f"run_{i:02d}")
        jobs.append((params, contact, grid.d, grid.n, cfg, alpha, width, mode, frame_stride, sub))
    runs = _map_jobs(jobs, workers)
    result = SweepResult(runs=runs, C=fit_sweep_constant(runs))
    if out is not None:
        _write_sweep(out, result)
    return result


@dataclass
class ConvergenceReport:
    alphas: np.ndarray
    E0: np.ndarray
    phi_sup: np.ndarray
    slope: float
    monotone: bool
    baseline: Optional[SweepRun] = None
    slope_range: tuple = (0.45, 1.1)

    @property
    def slope_ok(self):
        return bool(self.slope_range[0] <= self.slope <= self.slope_range[1])

    @property
    def baseline_below(self):
        if self.baseline is None:
            return True
        return bool(self.baseline.phi_sup < np.min(self.phi_sup))

    @property
    def passed(self):
        return self.monotone and self.slope_ok and self.baseline_below


def convergence_study(params, contact, grid, alpha0=0.1, levels=5, nu=1e-3, kappa=None,
                      base_config=SolverConfig(), width=0.0, mode=1, frame_stride=4,
                      baseline=True, workers=None):
    """alpha_n = alpha0 2^-n at fixed dissipation; log-log slope of phi_sup vs E0.

    The baseline run has alpha = 0 and the narrowest admissible smoothing
    (w = 4h); its phi_sup should sit below every alpha > 0 run.
    """
    if levels < 4:
        raise ValueError("convergence study needs at least 4 levels")
    kappa = nu if kappa is None else kappa
    cfg = replace(base_config, nu=nu, kappa=kappa)
    alphas = alpha0 * 2.0 ** -np.arange(levels)
    jobs = [(params, contact, grid.d, grid.n, cfg, float(a), width, mode, frame_stride, None)
            for a in alphas]
    if baseline:
        jobs.append((params, contact, grid.d, grid.n, cfg, 0.0, 4 * grid.h, mode,
                     frame_stride, None))
    runs = _map_jobs(jobs, workers)
    base = runs.pop() if baseline else None
    E0 = np.array([r.E0 for r in runs])
    phi = np.array([r.phi_sup for r in runs])
    ok = np.all(np.isfinite(phi)) and all(r.error is None for r in runs)
    monotone = bool(ok and np.all(np.diff(phi) < 0))
    slope = float(np.polyfit(np.log(E0), np.log(phi), 1)[0]) if ok else float("nan")
    return ConvergenceReport(alphas=alphas, E0=E0, phi_sup=phi, slope=slope,
                             monotone=monotone, baseline=base)


@dataclass
class StaticCheck:
    worst_ratio: float
    tolerance: float
    ratios: np.ndarray
    modes: list

    @property
    def passed(self):
        return bool(self.worst_ratio <= 1.0 + self.tolerance)


def static_limit_check(record, K=3):
    """Worst ratio |int Phi rho(t) - int Phi rho0| / (||grad Phi||_4 sup ||m||_{4/3} t).

    Test functions are sin and cos of 2 pi k x_a for k = 1..K along each
    axis; 0/0 counts as 0.
    """
    grid = record.grid
    x = grid.centers
    frames = record.frames
    t = np.asarray(record.frame_times)
    m_norm = np.array([lp_norm(grid, U[1:-1], 4.0 / 3.0) for U in frames])
    m_sup = np.maximum.accumulate(m_norm)
    ratios, modes = [], []
    for a in range(grid.d):
        for k in range(1, K + 1):
            w = 2 * np.pi * k
            for kind, phi, dphi in (("sin", np.sin(w * x[a]), w * np.cos(w * x[a])),
                                    ("cos", np.cos(w * x[a]), -w * np.sin(w * x[a]))):
                grad = np.zeros((grid.d,) + grid.shape)
                grad[a] = dphi
                g4 = lp_norm(grid, grad, 4.0)
                base = integrate(grid, phi * frames[0][0])
                lhs = np.array([abs(integrate(grid, phi * U[0]) - base) for U in frames])
                rhs = g4 * m_sup * t
                r = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0),
                             np.where(lhs > 0, np.inf, 0.0))
                ratios.append(r)
                modes.append((a + 1, k, kind))
    ratios = np.array(ratios)
    dt_max = float(np.max(record.series["dt"])) if record.steps else 0.0
    return StaticCheck(worst_ratio=float(np.max(ratios)) if ratios.size else 0.0,
                       tolerance=5.0 * max(grid.h, dt_max), ratios=ratios, modes=modes)


def _h1_norm(grid, u):
    g = np.array([gradient(grid, c) for c in u])
    return np.sqrt(lp_norm(grid, u, 2) ** 2 + lp_norm(grid, g.reshape((-1,) + grid.shape), 2) ** 2)


def commutator_decay(n=1024, delta=0.05, epsilons=(0.1, 0.05, 0.025)):
    """||R||_2 for u = sin(2 pi x1), psi = psi0 on a 1D grid over the epsilons."""
    grid = PeriodicGrid(1, n)
    x = grid.centers
    u = np.sin(2 * np.pi * x)
    psi = psi0(x)
    return np.array([lp_norm(grid, commutator_residual(grid, u, psi, delta, e), 2)
                     for e in epsilons])


def random_commutator_pair(grid, rng, modes=4):
    """Smooth random velocity and a scaled interval indicator."""
    x = grid.centers[0]
    amp = rng.normal(size=modes) / np.arange(1, modes + 1)
    phase = rng.uniform(0, 2 * np.pi, modes)
    u = sum(amp[k] * np.sin(2 * np.pi * (k + 1) * x + phase[k]) for k in range(modes))
    lo, hi = np.sort(rng.uniform(0, 1, 2))
    psi = rng.uniform(0.2, 1.0) * ((x > lo) & (x < hi))
    return u[None], psi.astype(float)


def commutator_bound(n=1024, delta=0.05, epsilons=(0.1, 0.05, 0.025), train=200,
                     heldout=20, seed=0):
    """Fit C in ||R||_2 <= C ||u||_{H^1} ||psi||_inf, then test held-out pairs.

    Training and held-out pairs come from independent streams of the same
    seed; each pair uses an epsilon drawn from ``epsilons``. Returns
    ``(C_fit, heldout_ratios)``.
    """
    grid = PeriodicGrid(1, n)
    kernels = {e: (MollifierKernel(grid, delta), MollifierKernel(grid, e)) for e in epsilons}
    train_rng, test_rng = (np.random.default_rng(s)
                           for s in np.random.SeedSequence(seed).spawn(2))

    def ratios(rng, count):
        out = []
        for _ in range(count):
            u, psi = random_commutator_pair(grid, rng)
            e = epsilons[rng.integers(len(epsilons))]
            R = commutator_residual(grid, u, psi, delta, e, kernels[e])
            scale = _h1_norm(grid, u) * np.max(np.abs(psi))
            out.append(lp_norm(grid, R, 2) / scale if scale > 0 else 0.0)
        return np.array(out)

    C = float(np.max(ratios(train_rng, train)))
    return C, ratios(test_rng, heldout)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(directory, entries):
    path = os.path.join(directory, "manifest.txt")
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in entries.items():
            v = repr(float(v)) if isinstance(v, float) else v
            fh.write(f"{k} = {v}\n")
    return path


def read_manifest(directory):
    """Manifest of a run directory as a dict of strings."""
    path = os.path.join(directory, "manifest.txt")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def _config_text(record, contact, alpha=0.0, width=0.0, mode=1):
    from .config import (Config, ContactConfig, GridConfig, InitConfig, dump_config)
    c = ContactConfig(contact.rho_minus, contact.theta_minus, contact.rho_plus)
    g = GridConfig(record.grid.d, record.grid.n)
    init = InitConfig(alpha=alpha, width_cells=width * record.grid.n, mode=mode)
    solver = replace(record.config, dissipation_sign=1.0)
    return dump_config(Config(thermo=record.params, contact=c, grid=g, solver=solver,
                              init=init))


def persist(record, directory, contact=None, config_text=None, shift_field=None,
            monitor=None, extra=None, init=None):
    """Write a run directory.

    Layout: config.txt, series.csv, frames/*.bin, shift/*.bin (when a shift
    field is given), diagnostics.csv (when a monitor result is given) and
    manifest.txt with content hashes of every other file.
    """
    start = time.perf_counter()
    try:
        os.makedirs(os.path.join(directory, "frames"), exist_ok=True)
        files = []
        if config_text is None:
            if contact is None:
                raise ValueError("persist needs either config_text or the contact")
            config_text = _config_text(record, contact, **(init or {}))
        cfg_path = os.path.join(directory, "config.txt")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(config_text)
        files.append(cfg_path)
        series_path = os.path.join(directory, "series.csv")
        write_series_csv(record, series_path)
        files.append(series_path)
        times_path = os.path.join(directory, "frames", "times.csv")
        np.savetxt(times_path, np.column_stack([record.frame_steps, record.frame_times]),
                   delimiter=",", header="step,t", comments="", fmt=["%d", "%.17g"])
        files.append(times_path)
        for k, U in enumerate(record.frames):
            p = os.path.join(directory, "frames", f"frame_{k:05d}.bin")
            write_snapshot(p, record.grid, U)
            files.append(p)
        if shift_field is not None:
            files += shift_field.write(os.path.join(directory, "shift"))
        if monitor is not None:
            p = os.path.join(directory, "diagnostics.csv")
            monitor.series.write_csv(p)
            files.append(p)
        entries = {}
        digest = hashlib.sha256()
        for p in files:
            h = _sha256(p)
            digest.update(h.encode())
            entries[f"sha256 {os.path.relpath(p, directory)}"] = h
        head = {"run_id": digest.hexdigest()[:16], "d": record.grid.d, "n": record.grid.n,
                "steps": record.steps, "frames": len(record.frames),
                "complete": record.complete}
        if monitor is not None:
            head.update(verdict=monitor.verdict, margin=monitor.margin, E0=monitor.E0)
        if extra:
            head.update(extra)
        head["wall_time_s"] = round(time.perf_counter() - start, 3)
        head.update(entries)
        return _write_manifest(directory, head)
    except OSError as exc:
        raise OSError(f"cannot persist run to {directory}: {exc}") from exc


def _write_sweep(directory, result):
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "sweep.csv")
    rows = np.array(result.table(), dtype=float).reshape(-1, 7)
    np.savetxt(path, rows, delimiter=",", header="nu,kappa,alpha,width,E0,phi_sup,ratio",
               comments="", fmt="%.17g")
    _write_manifest(directory, {"kind": "sweep", "runs": len(result.runs),
                                "C": result.C, "sha256 sweep.csv": _sha256(path)})


def _load_frames(directory):
    frame_dir = os.path.join(directory, "frames")
    names = sorted(f for f in os.listdir(frame_dir) if f.endswith(".bin"))
    frames = []
    grid = None
    for name in names:
        grid, U = read_snapshot(os.path.join(frame_dir, name))
        frames.append(U)
    return grid, np.array(frames)


def report(directory, out_csv=None):
    """Recompute plot-ready numbers from a persisted run or sweep directory.

    For a single run returns ``{"E0", "phi_sup"}`` and writes one row per
    frame (t, F_int, kinetic_int, G_int, L1_proxy). For a sweep returns
    ``{"C", "runs"}`` recomputed from every ``run_XX`` subdirectory.
    """
    from .config import parse_config
    manifest = read_manifest(directory)
    if manifest.get("kind") == "sweep":
        runs = []
        subs = sorted(d for d in os.listdir(directory) if d.startswith("run_"))
        for sub in subs:
            runs.append(report(os.path.join(directory, sub)))
        ratios = [r["phi_sup"] / (np.sqrt(r["E0"]) + r["E0"]) for r in runs if r["E0"] > 0]
        C = float(max(ratios)) if ratios else float("nan")
        if out_csv is not None:
            np.savetxt(out_csv, np.array([[r["E0"], r["phi_sup"]] for r in runs]),
                       delimiter=",", header="E0,phi_sup", comments="", fmt="%.17g")
        return {"C": C, "runs": runs}
    cfg = parse_config(os.path.join(directory, "config.txt"))
    params = cfg.thermo
    contact = cfg.make_contact()
    grid, frames = _load_frames(directory)
    times = np.loadtxt(os.path.join(directory, "frames", "times.csv"), delimiter=",",
                       skiprows=1, ndmin=2)[:, 1]
    rows = []
    for t, U in zip(times, frames):
        F, K, G, L1 = fn.perturbation_functional(params, contact, U, grid)
        rows.append((t, F, K, G, L1))
    rows = np.array(rows)
    E0 = initial_relative_entropy(params, contact, frames[0], grid)[0]
    phi = float(np.max(rows[:, 1] + rows[:, 2]) + np.max(rows[:, 4]))
    if out_csv is not None:
        np.savetxt(out_csv, rows, delimiter=",", header="t,F_int,kinetic_int,G_int,L1_proxy",
                   comments="", fmt="%.17g")
    return {"E0": E0, "phi_sup": phi}
