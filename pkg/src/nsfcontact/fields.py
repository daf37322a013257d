"""
Uniform periodic grids on the unit torus and the discrete calculus used on
them.

A field is a plain numpy array whose last ``d`` axes are the spatial axes
``(x1, ..., xd)``; any leading axes are components. Cell ``i`` along an axis
has its center at ``(i + 1/2) h`` with ``h = 1/n``.

Reductions go through :func:`pairwise_sum`, a fixed binary tree over the
cells in snapshot order (x1 index fastest), so integrals are bit-identical
whatever the number of worker threads.

Snapshot layout (little endian)::

    b"NSFC" | u32 version | u32 d | u32 n | u32 ncomp | f64 data

with data ordered cell by cell, x1 index fastest, and the ``ncomp`` values
of a cell contiguous.
"""

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import InvalidParameter, UnresolvableKernel

__all__ = [
    "PeriodicGrid",
    "MollifierKernel",
    "bump_profile",
    "pairwise_sum",
    "integrate",
    "lp_norm",
    "gradient",
    "divergence",
    "mollify",
    "sample_interpolate",
    "write_snapshot",
    "read_snapshot",
    "default_threads",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_MAGIC = b"NSFC"
SNAPSHOT_VERSION = 1
_SUPPORTED_P = (1.0, 4.0 / 3.0, 2.0, 4.0, np.inf)


def default_threads():
    """Worker count from ``NSFC_THREADS`` (0 or unset means 1 per CPU)."""
    value = os.environ.get("NSFC_THREADS", "0")
    try:
        n = int(value)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class PeriodicGrid:
    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise InvalidParameter(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 8:
            raise InvalidParameter(f"need at least 8 cells per axis, got {self.n}")

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n ** self.d

    @property
    def cell_volume(self):
        return self.h ** self.d

    @cached_property
    def centers(self):
        """Cell-center coordinates, shape ``(d, n, ..., n)``."""
        x = (np.arange(self.n) + 0.5) * self.h
        return np.stack(np.meshgrid(*([x] * self.d), indexing="ij"))

    def spatial_axes(self, field):
        nd = np.ndim(field)
        return tuple(range(nd - self.d, nd))

    def integrate(self, field, threads=None):
        return integrate(self, field, threads)


def pairwise_sum(values, threads=1):
    """Sum a 1D array with a fixed power-of-two binary tree.

    The array is zero-padded to length 2**p. With ``threads > 1`` aligned
    sub-trees are reduced concurrently; because chunk boundaries sit on tree
    nodes the result does not depend on ``threads``.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    length = 1 << (x.size - 1).bit_length()
    if length != x.size:
        x = np.concatenate([x, np.zeros(length - x.size)])
    chunks = 1
    while chunks * 2 <= min(max(int(threads), 1), length // 1024):
        chunks *= 2
    if chunks == 1:
        return _tree(x)
    parts = np.split(x, chunks)
    with ThreadPoolExecutor(max_workers=chunks) as pool:
        partial = np.array(list(pool.map(_tree, parts)))
    return _tree(partial)


def _tree(x):
    while x.size > 1:
        x = x[0::2] + x[1::2]
    return float(x[0])


def integrate(grid, field, threads=None):
    """Integral over the torus of a scalar field (sum of values times h^d)."""
    field = np.asarray(field, dtype=float)
    if field.shape != grid.shape:
        raise ValueError(f"expected scalar field of shape {grid.shape}, got {field.shape}")
    if threads is None:
        threads = 1
    return pairwise_sum(field.ravel(order="F"), threads) * grid.cell_volume


def _pointwise_magnitude(grid, field):
    field = np.asarray(field, dtype=float)
    if field.ndim == grid.d:
        return np.abs(field)
    comps = field.reshape((-1,) + grid.shape)
    return np.sqrt(np.sum(comps * comps, axis=0))


def lp_norm(grid, field, p):
    """L^p norm; vector fields use the pointwise Euclidean magnitude."""
    p = float(p)
    if not any(np.isclose(p, q) or p == q for q in _SUPPORTED_P):
        raise ValueError(f"unsupported exponent p={p}")
    mag = _pointwise_magnitude(grid, field)
    if np.isinf(p):
        return float(np.max(mag))
    return integrate(grid, mag ** p) ** (1.0 / p)


def gradient(grid, f):
    """Second-order central gradient, shape ``(d,) + f.shape``."""
    f = np.asarray(f, dtype=float)
    axes = grid.spatial_axes(f)
    inv = 0.5 / grid.h
    return np.stack([(np.roll(f, -1, ax) - np.roll(f, 1, ax)) * inv for ax in axes])


def divergence(grid, v):
    """Central divergence of a vector field with component axis 0."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != grid.d:
        raise ValueError(f"vector field must have {grid.d} components")
    inv = 0.5 / grid.h
    out = np.zeros(v.shape[1:])
    for a in range(grid.d):
        ax = a + v.ndim - 1 - grid.d
        out += (np.roll(v[a], -1, ax) - np.roll(v[a], 1, ax)) * inv
    return out


def bump_profile(r):
    """exp(-1/(1 - r^2)) on r < 1, zero elsewhere (unnormalized)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


class MollifierKernel:
    """Discrete radial bump of a given radius, normalized so sum(w) h^d = 1.

    Weights are midpoint samples of the bump at integer cell offsets inside
    the support ball.
    """

    def __init__(self, grid, radius):
        if radius < 2 * grid.h * (1 - 1e-12):
            raise UnresolvableKernel(
                f"mollifier radius {radius:.4g} is below 2h = {2 * grid.h:.4g}")
        if radius > 0.25:
            raise UnresolvableKernel(
                f"mollifier radius {radius:.4g} exceeds 1/4 of the torus")
        self.grid = grid
        self.radius = float(radius)
        reach = int(np.floor(radius / grid.h))
        rng = np.arange(-reach, reach + 1)
        offs = np.stack(np.meshgrid(*([rng] * grid.d), indexing="ij")).reshape(grid.d, -1)
        r = np.sqrt(np.sum((offs * grid.h) ** 2, axis=0)) / self.radius
        w = bump_profile(r)
        keep = w > 0
        self.offsets = offs[:, keep].T.copy()
        w = w[keep]
        self.weights = w / (np.sum(w) * grid.cell_volume)
        self.reach = reach

    def __len__(self):
        return len(self.weights)


def mollify(field, kernel):
    """Periodic convolution with ``kernel`` by direct summation over its support.

    Leading component axes are mollified independently.
    """
    grid = kernel.grid
    field = np.asarray(field, dtype=float)
    r = kernel.reach
    pad = [(0, 0)] * (field.ndim - grid.d) + [(r, r)] * grid.d
    padded = np.pad(field, pad, mode="wrap")
    out = np.zeros_like(field)
    n = grid.n
    lead = (slice(None),) * (field.ndim - grid.d)
    scale = grid.cell_volume
    for off, w in zip(kernel.offsets, kernel.weights):
        # out[i] += w f[i - off]
        idx = lead + tuple(slice(r - o, r - o + n) for o in off)
        out += (w * scale) * padded[idx]
    return out


def sample_interpolate(grid, field, points):
    """Multilinear periodic interpolation of cell-centered data.

    ``points`` has shape ``(d, ...)``; the result has shape
    ``field.shape[:-d] + points.shape[1:]``.
    """
    field = np.asarray(field, dtype=float)
    pts = np.asarray(points, dtype=float)
    n = grid.n
    s = pts * n - 0.5
    base = np.floor(s)
    frac = s - base
    base = base.astype(np.int64) % n
    lead = field.shape[: field.ndim - grid.d]
    out = np.zeros(lead + pts.shape[1:])
    for corner in range(1 << grid.d):
        weight = np.ones(pts.shape[1:])
        index = []
        for a in range(grid.d):
            bit = (corner >> a) & 1
            weight = weight * (frac[a] if bit else 1.0 - frac[a])
            index.append((base[a] + bit) % n)
        out += weight * field[(Ellipsis,) + tuple(index)]
    return out


def write_snapshot(path, grid, field):
    """Write a field in the binary snapshot layout."""
    field = np.asarray(field, dtype=float)
    ncomp = 1 if field.ndim == grid.d else int(np.prod(field.shape[: field.ndim - grid.d]))
    comps = field.reshape((ncomp,) + grid.shape)
    # cells with x1 fastest, components contiguous per cell
    data = np.transpose(comps, tuple(range(grid.d, 0, -1)) + (0,))
    header = SNAPSHOT_MAGIC + struct.pack("<IIII", SNAPSHOT_VERSION, grid.d, grid.n, ncomp)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path):
    """Read a snapshot; returns ``(grid, field)`` with shape ``(ncomp, n, ...)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an NSFC snapshot")
    version, d, n, ncomp = struct.unpack("<IIII", blob[4:20])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    grid = PeriodicGrid(d, n)
    data = np.frombuffer(blob[20:], dtype="<f8").astype(float)
    data = data.reshape(grid.shape[::-1] + (ncomp,))
    comps = np.transpose(data, (d,) + tuple(range(d - 1, -1, -1)))
    return grid, np.ascontiguousarray(comps)
