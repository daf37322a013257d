"""
Acceptance criteria 1 to 11, each at its stated tolerance.

Every test appends one line to ``conftest.ACCEPTANCE_LINES``; the lines are
printed in the "acceptance criteria" section of the terminal summary. A
criterion the implementation does not meet is marked ``xfail(strict=True)``
with the measured numbers; the threshold itself is never relaxed.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nsfcontact import functionals as fn
from nsfcontact import harness, properties, shift, solver
from nsfcontact.fields import PeriodicGrid

pytestmark = pytest.mark.acceptance


def record(number, ok, detail, tag=""):
    key = (number, tag)
    label = f"{number}{tag}"
    ACCEPTANCE_LINES.append((key, f"criterion {label:<3} {'PASS' if ok else 'FAIL'}  {detail}"))


def test_c01_decomposition_identity(params, contact):
    t0 = time.perf_counter()
    chk = properties.decomposition_identity(params, contact, seed=0, count=10_000, tol=1e-10)
    dt = time.perf_counter() - t0
    ok = chk.passed and dt < 5
    record(1, ok, f"{chk.detail}; {dt:.2f} s (limit 5 s)")
    assert ok


def test_c02_s_calculus(params):
    t0 = time.perf_counter()
    chk = properties.s_calculus(params, points=1000, tol=1e-6)
    dt = time.perf_counter() - t0
    ok = chk.passed and dt < 1
    record(2, ok, f"{chk.detail}; {dt:.3f} s (limit 1 s)")
    assert ok


def test_c03_control_constants(params, contact):
    t0 = time.perf_counter()
    stab = properties.newf_constant_stability(params, contact, seed=0, count=100_000, spread=0.2)
    gene = properties.gene_bound_positive(params, contact, seed=0, count=100_000)
    dt = time.perf_counter() - t0
    ok = stab.passed and gene.passed and dt < 30
    record(3, ok, f"{stab.detail}; {gene.detail}; {dt:.1f} s (limit 30 s)")
    assert ok


def test_c04_admissibility(reference_experiment):
    ex = reference_experiment
    rec = ex.record
    adm = ex.admissibility
    wall = rec.meta.get("wall_time_s", float("nan"))
    drift = max(adm.mass_drift, max(adm.momentum_drift), abs(adm.energy_drift))
    ok = (rec.complete and ex.error is None and drift <= 1e-12 and adm.entropy_ok
          and wall < 60)
    record(4, ok, f"max drift {drift:.2e} (limit 1e-12); entropy residual min "
                  f"{adm.entropy_balance_min:.3e} >= -{adm.tolerance:.3e}; "
                  f"{rec.steps} steps, {wall:.1f} s (limit 60 s)")
    assert ok


def _rotation_history(n=32, T=0.5, frames=6):
    """u = (1 + t) (-(y - 1/2), x - 1/2): affine in space, linear in time."""
    g = PeriodicGrid(2, n)
    x, y = g.centers
    rot = np.stack([-(y - 0.5), x - 0.5])
    times = np.linspace(0.0, T, frames)
    return shift.VelocityHistory(g, times, np.array([(1 + t) * rot for t in times]))


def test_c05_shift(reference_experiment):
    # indicator values on the reference run
    sf = reference_experiment.shift
    in_range = bool(set(np.unique(sf.psi)) <= {0.0, 1.0}
                    and sf.psi_bar.min() >= 0.0 and sf.psi_bar.max() <= 1.0)

    # constant-velocity translation
    g = PeriodicGrid(2, 32)
    c = np.array([0.37, -0.21])
    times = np.linspace(0, 0.4, 9)
    frames = np.broadcast_to(c.reshape(1, 2, 1, 1), (9, 2) + g.shape).copy()
    hist = shift.VelocityHistory(g, times, frames)
    cfg = shift.ShiftConfig(delta=0.1, epsilon=0.1)
    foot = shift.trace_characteristic(hist, g.centers, 0.4, cfg, wrap=False)
    trans_err = float(np.max(np.abs(foot - (g.centers - 0.4 * c[:, None, None]))))
    psi_trans = shift.build_psi(hist, cfg).psi[-1]
    psi_exact = shift.psi0(g.centers - 0.4 * c[:, None, None])
    trans_ok = trans_err <= 1e-10 and np.array_equal(psi_trans, psi_exact)

    # order of the tracer under substep refinement
    rh = _rotation_history()
    ang = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    pts = 0.5 + 0.2 * np.stack([np.cos(ang), np.sin(ang)])
    feet = [shift.trace_characteristic(rh, pts, 0.5, shift.ShiftConfig(0.1, 0.1, s), wrap=False)
            for s in (1, 2, 4, 8)]
    diffs = [np.max(np.abs(feet[i] - feet[i + 1])) for i in range(3)]
    rates = np.log2([diffs[0] / diffs[1], diffs[1] / diffs[2]])
    order_ok = bool(np.all(rates >= 3.5))

    ok = in_range and trans_ok and order_ok
    record(5, ok, f"psi in {{0,1}}, psi_bar in [0,1]: {in_range}; translation error "
                  f"{trans_err:.1e} (limit 1e-10); tracer rates {rates[0]:.2f}, {rates[1]:.2f} "
                  f"(limit 3.5)")
    assert ok


@pytest.fixture(scope="module")
def commutator_numbers():
    t0 = time.perf_counter()
    eps = (0.1, 0.05, 0.025)
    norms = harness.commutator_decay(1024, 0.05, eps)
    C, held = harness.commutator_bound(1024, 0.05, eps, train=200, heldout=20, seed=0)
    return norms, C, held, time.perf_counter() - t0


def test_c06_commutator_decreasing_and_bounded(commutator_numbers):
    norms, C, held, wall = commutator_numbers
    decreasing = bool(np.all(np.diff(norms) < 0))
    covered = bool(held.size == 20 and np.all(held <= C))
    ok = decreasing and covered and wall < 60
    record(6, ok, f"||R||_2 = {', '.join(f'{v:.4f}' for v in norms)} strictly decreasing: "
                  f"{decreasing}; C_fit {C:.4f}, held-out max {np.max(held):.4f}; "
                  f"{wall:.1f} s (limit 60 s)", tag="a")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "final/initial ||R||_2 is 0.5085 > 0.5: with ub_delta vanishing on the interface "
    "R is u times a difference of two eps-bumps, so ||R||_2 scales like sqrt(eps) and "
    "a factor-4 drop in eps gives ratio 1/2 only in the limit; see decisions ledger"))
def test_c06_commutator_halving(commutator_numbers):
    norms = commutator_numbers[0]
    ratio = norms[-1] / norms[0]
    ok = ratio <= 0.5
    record(6, ok, f"final/initial {ratio:.5f} (limit 0.5); expected red, see ledger",
           tag="b")
    assert ok


def test_c07_monitor(params, contact, reference_experiment):
    mon = reference_experiment.monitor
    cfg = reference_experiment.record.config
    bad = harness.run_experiment(params, contact, reference_experiment.record.grid,
                                 replace(cfg, dissipation_sign=-1.0), alpha=0.05)
    ok = mon.verdict == "PASS" and bad.monitor.verdict == "FAIL"
    reason = bad.error or "inequality violated"
    record(7, ok, f"reference {mon.verdict} (margin {mon.margin:.4f}, C_fit {mon.C_fit:.3f}); "
                  f"sign sabotage {bad.monitor.verdict} ({reason})")
    assert ok


@pytest.mark.slow
def test_c08_sweep(params, contact):
    t0 = time.perf_counter()
    res = harness.dissipation_sweep(params, contact, PeriodicGrid(1, 512),
                                    [0.02, 0.04, 0.08], [4e-3, 2e-3, 1e-3],
                                    base_config=solver.SolverConfig(t_end=0.2))
    wall = time.perf_counter() - t0
    ratios = np.array([r.ratio for r in res.runs])
    errors = [r.error for r in res.runs if r.error]
    ok = len(res.runs) == 9 and not errors and res.within_factor(2.0) and wall <= 600
    record(8, ok, f"C = {res.C:.4f}; ratios in [{ratios.min():.4f}, {ratios.max():.4f}] "
                  f"within factor 2: {res.within_factor(2.0)}; {wall:.0f} s (limit 600 s)")
    assert ok


@pytest.mark.slow
def test_c09_uniqueness_trend(params, contact):
    rep = harness.convergence_study(params, contact, PeriodicGrid(1, 512), alpha0=0.1,
                                    levels=5, nu=1e-3, kappa=1e-3, baseline=False)
    ok = rep.monotone and rep.slope_ok
    record(9, ok, f"phi_sup = {', '.join(f'{p:.5f}' for p in rep.phi_sup)} strictly "
                  f"decreasing: {rep.monotone}; slope {rep.slope:.4f} (range [0.45, 1.1])")
    assert ok


def test_c10_static_limit(reference_experiment):
    st = reference_experiment.static
    ok = st.passed
    record(10, ok, f"worst ratio {st.worst_ratio:.4f} (limit {1 + st.tolerance:.4f})")
    assert ok


def test_c11_smoke_3d(params, contact):
    t0 = time.perf_counter()
    grid = PeriodicGrid(3, 32)
    U0 = solver.init_contact_perturbed(grid, params, contact, alpha=0.05)
    rec = solver.run(U0, params, solver.SolverConfig(max_steps=50), frame_stride=10, grid=grid)
    adm = solver.admissibility(rec, params)
    hist = shift.VelocityHistory.from_record(rec, 0.1)
    sf = shift.build_psi(hist, shift.ShiftConfig(delta=0.1, epsilon=0.1), contact)
    wall = time.perf_counter() - t0
    drift = max(adm.mass_drift, max(adm.momentum_drift), abs(adm.energy_drift))
    psi_ok = bool(set(np.unique(sf.psi)) <= {0.0, 1.0}
                  and sf.psi_bar.min() >= 0 and sf.psi_bar.max() <= 1)
    ok = (rec.complete and rec.steps == 50 and drift <= 1e-12 and adm.entropy_ok
          and adm.min_rho > 0 and adm.min_theta > 0 and psi_ok and wall < 300)
    record(11, ok, f"50 steps; max drift {drift:.2e}; entropy residual min "
                   f"{adm.entropy_balance_min:.2e} (tol {adm.tolerance:.2e}); min rho "
                   f"{adm.min_rho:.3f}, min theta {adm.min_theta:.3f}; {wall:.1f} s (limit 300 s)")
    assert ok
