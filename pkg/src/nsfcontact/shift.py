"""
Transported shift field, its mollification and the weight built from it.

psi(x, t) = psi0(X(0; x, t)) where X solves dX/dtau = ub(X, tau), X(t) = x,
with ub the delta-mollified velocity and psi0 the indicator of
{1/2 < x1 < 1}. Evaluating psi on traced foot points, rather than
transporting it with a finite-volume scheme, keeps psi in {0, 1} exactly.

Frames are traced one interval at a time. The foot-point map to time 0 is
carried on the grid as a periodic displacement field D_k(x) = X(0; x, t_k) - x,
composed as D_k(x) = Y(x) - x + D_{k-1}(Y(x)) with Y the one-interval
backward trace.
"""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import FrameMismatch, InvalidParameter
from .fields import (
    MollifierKernel, PeriodicGrid, divergence, gradient, mollify,
    sample_interpolate, write_snapshot,
)

__all__ = [
    "ShiftConfig",
    "VelocityHistory",
    "ShiftField",
    "psi0",
    "trace_characteristic",
    "build_psi",
    "commutator_residual",
]


@dataclass(frozen=True)
class ShiftConfig:
    delta: float = 0.05
    epsilon: float = 0.05
    substeps: int = 4

    def __post_init__(self):
        if not self.delta > 0 or not self.epsilon > 0:
            raise InvalidParameter("delta and epsilon must be positive")
        if self.substeps < 1:
            raise InvalidParameter(f"substeps must be at least 1, got {self.substeps}")

    def kernels(self, grid):
        """(delta kernel, epsilon kernel); raises UnresolvableKernel below 2h."""
        return MollifierKernel(grid, self.delta), MollifierKernel(grid, self.epsilon)


class VelocityHistory:
    """Velocity frames ub(., t_k) with linear interpolation in time.

    Parameters
    ----------
    grid : PeriodicGrid
    times : array_like
        Increasing frame times starting at 0.
    frames : ndarray
        Shape ``(K, d) + grid.shape``; already mollified.
    """

    def __init__(self, grid, times, frames):
        times = np.asarray(times, dtype=float)
        frames = np.asarray(frames, dtype=float)
        if frames.shape != (len(times), grid.d) + grid.shape:
            raise FrameMismatch(
                f"velocity frames of shape {frames.shape} do not match {len(times)} "
                f"times on a {grid.d}D grid with n={grid.n}")
        if len(times) == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise FrameMismatch("frame times must start at 0 and increase strictly")
        self.grid = grid
        self.times = times
        self.frames = frames

    @classmethod
    def from_record(cls, record, delta):
        """Mollify the velocity of every stored frame of a run with radius delta."""
        kernel = MollifierKernel(record.grid, delta)
        u = record.velocity_frames()
        return cls(record.grid, record.frame_times,
                   np.array([mollify(f, kernel) for f in u]))

    def __len__(self):
        return len(self.times)

    def velocity(self, k, points):
        return sample_interpolate(self.grid, self.frames[k], points)


def psi0(points):
    """Indicator of {1/2 < x1 < 1} on the torus."""
    x1 = np.mod(np.asarray(points, dtype=float)[0], 1.0)
    return (x1 > 0.5).astype(float)


def _rk4_interval(history, k, x, t_hi, t_lo, substeps):
    """Integrate backward from t_hi to t_lo inside frame interval [t_{k-1}, t_k]."""
    t0, t1 = history.times[k - 1], history.times[k]
    span = t1 - t0

    def vel(y, t):
        s = (t - t0) / span
        return (1.0 - s) * history.velocity(k - 1, y) + s * history.velocity(k, y)

    dt = (t_lo - t_hi) / substeps
    t = t_hi
    for _ in range(substeps):
        k1 = vel(x, t)
        k2 = vel(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = vel(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = vel(x + dt * k3, t + dt)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + dt
    return x


def trace_characteristic(history, x, t, config, wrap=True):
    """Foot point X(0; x, t) by classical RK4 backward in time.

    Each frame interval gets ``config.substeps`` steps (a partial interval at
    the start gets the same number). ``x`` has shape ``(d, ...)``.
    """
    x = np.array(x, dtype=float)
    times = history.times
    if t > times[-1] * (1 + 1e-12) or t < 0:
        raise FrameMismatch(f"time {t} outside the velocity history [0, {times[-1]}]")
    shape = x.shape
    y = x.reshape(shape[0], -1)
    k = int(np.searchsorted(times, t, side="left"))
    t_hi = t
    while k > 0:
        y = _rk4_interval(history, k, y, t_hi, times[k - 1], config.substeps)
        t_hi = times[k - 1]
        k -= 1
    y = y.reshape(shape)
    return np.mod(y, 1.0) if wrap else y


@dataclass
class ShiftField:
    """psi, its epsilon-mollification and (optionally) the weight Psi per frame."""

    grid: PeriodicGrid
    times: np.ndarray
    psi: np.ndarray
    psi_bar: np.ndarray
    Psi: Optional[np.ndarray] = None
    config: Optional[ShiftConfig] = None

    def weight(self, contact):
        return contact.theta_minus * (1.0 - self.psi_bar) + contact.theta_plus * self.psi_bar

    def write(self, directory, prefix="shift"):
        """Snapshot each frame as components (psi, psi_bar[, Psi])."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        for k in range(len(self.times)):
            comps = [self.psi[k], self.psi_bar[k]]
            if self.Psi is not None:
                comps.append(self.Psi[k])
            path = os.path.join(directory, f"{prefix}_{k:05d}.bin")
            write_snapshot(path, self.grid, np.stack(comps))
            paths.append(path)
        return paths


def build_psi(history, config, contact=None):
    """Shift field at every frame of ``history``.

    The weight ``Psi = theta_minus (1 - psi_bar) + theta_plus psi_bar`` is
    filled in when ``contact`` is given.
    """
    grid = history.grid
    _, k_eps = config.kernels(grid)
    x = grid.centers
    pts = x.reshape(grid.d, -1)
    disp = np.zeros_like(pts)
    psi = [psi0(pts).reshape(grid.shape)]
    for k in range(1, len(history)):
        y = _rk4_interval(history, k, pts, history.times[k], history.times[k - 1],
                          config.substeps)
        back = sample_interpolate(grid, disp.reshape((grid.d,) + grid.shape), y)
        disp = (y - pts) + back
        psi.append(psi0(pts + disp).reshape(grid.shape))
    psi = np.array(psi)
    psi_bar = np.array([mollify(p, k_eps) for p in psi])
    # round-off can leave the mollified indicator a few ulps outside [0, 1]
    np.clip(psi_bar, 0.0, 1.0, out=psi_bar)
    field = ShiftField(grid=grid, times=history.times.copy(), psi=psi, psi_bar=psi_bar,
                       config=config)
    if contact is not None:
        field.Psi = field.weight(contact)
    return field


def commutator_residual(grid, u, psi, delta, epsilon, kernels=None):
    """R = u . grad psi_bar - (div(ub psi))_eps + ((div ub) psi)_eps.

    ``ub`` is u mollified with radius delta and ``psi_bar`` psi mollified with
    radius epsilon; derivatives are the central differences of the fields
    module.
    """
    if kernels is None:
        kernels = (MollifierKernel(grid, delta), MollifierKernel(grid, epsilon))
    k_delta, k_eps = kernels
    u = np.asarray(u, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if u.shape != (grid.d,) + grid.shape or psi.shape != grid.shape:
        raise FrameMismatch("velocity and psi frames must live on the same grid")
    ub = mollify(u, k_delta)
    psi_bar = mollify(psi, k_eps)
    transport = np.sum(u * gradient(grid, psi_bar), axis=0)
    flux = mollify(divergence(grid, ub * psi), k_eps)
    source = mollify(divergence(grid, ub) * psi, k_eps)
    return transport - flux + source
