"""Exact-in-law simulation of d-dimensional fBm increments on dyadic grids.

The fine grid is the dyadic grid D_m refined by ``refine`` sub-steps per
cell.  Per component, the increment vector is N(0, Sigma) with the Toeplitz
covariance Sigma_{ij} = mesh^{2H} rho(|i-j|); sampling goes through a dense
Cholesky factor of the unit-mesh Toeplitz matrix, cached per (H, size) since
the mesh scales out as mesh^H.  Components use independent, reproducible
streams derived from (seed, replica, component) through SeedSequence spawn
keys feeding the counter-based Philox generator.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import toeplitz

from .errors import CapacityError, DomainError
from .gaussian import HurstModel, rho

MAX_GRID = 2 ** 14


@dataclass(frozen=True)
class SimSpec:
    """Simulation request: model, dyadic level m, sub-steps per cell, seeding."""

    model: HurstModel
    m: int
    refine: int = 1
    seed: int = 0
    replica: int = 0
    max_points: int = MAX_GRID

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("dyadic level m must be >= 1")
        if self.refine < 1:
            raise DomainError("refine must be >= 1")
        if self.replica < 0:
            raise DomainError("replica must be nonnegative")
        if self.size > self.max_points:
            raise CapacityError(
                f"grid size {self.size} exceeds cap {self.max_points}"
            )

    @property
    def size(self):
        """Number of fine-grid increments, refine * 2^m."""
        return self.refine * 2 ** self.m

    @property
    def mesh(self):
        """Fine-grid spacing."""
        return 2.0 ** (-self.m) / self.refine

    @property
    def times(self):
        """Fine grid points 0, mesh, ..., 1."""
        return np.arange(self.size + 1) * self.mesh


@dataclass(frozen=True)
class FbmPath:
    """Sampled increments (d x size) and cumulative values (d x (size+1))."""

    spec: SimSpec
    increments: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def times(self):
        return self.spec.times


_chol_cache = {}


def _unit_chol(H, size):
    """Cholesky factor of the unit-mesh increment correlation, cached."""
    key = (H, size)
    L = _chol_cache.get(key)
    if L is None:
        corr = toeplitz(rho(np.arange(size), H))
        L = np.linalg.cholesky(corr)
        _chol_cache[key] = L
    return L


def increment_cov_matrix(spec):
    """Toeplitz covariance mesh^{2H} rho(|i-j|) of the fine-grid increments."""
    H = spec.model.H
    return spec.mesh ** (2 * H) * toeplitz(rho(np.arange(spec.size), H))


def _stream(seed, replica, component):
    """Philox generator for one (seed, replica, component) triple.

    The derivation is a SeedSequence with entropy ``seed`` and spawn key
    (replica, component): splittable, collision-free across replicas and
    components, and independent of execution order.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica, component))
    return np.random.Generator(np.random.Philox(ss))


def simulate(spec):
    """Draw one FbmPath with the exact joint law of fBm increments.

    Bitwise deterministic in (spec); components are independent streams.
    """
    H = spec.model.H
    d = spec.model.d
    size = spec.size
    L = _unit_chol(H, size)
    scale = spec.mesh ** H
    inc = np.empty((d, size))
    for comp in range(d):
        z = _stream(spec.seed, spec.replica, comp).standard_normal(size)
        inc[comp] = scale * (L @ z)
    values = np.zeros((d, size + 1))
    np.cumsum(inc, axis=1, out=values[:, 1:])
    return FbmPath(spec=spec, increments=inc, values=values)


def simulate_batch(spec, n_replicas):
    """Increments for replicas replica, replica+1, ..., shape (N, d, size).

    Uses the same per-replica streams as ``simulate`` (replica index offsets
    spec.replica) so any single replica can be reproduced standalone; the
    heavy lifting is one batched matrix product against the cached factor.
    """
    H = spec.model.H
    d = spec.model.d
    size = spec.size
    L = _unit_chol(H, size)
    z = np.empty((n_replicas, d, size))
    for r in range(n_replicas):
        for comp in range(d):
            z[r, comp] = _stream(spec.seed, spec.replica + r, comp).standard_normal(size)
    out = np.einsum("st,rdt->rds", L, z, optimize=True)
    out *= spec.mesh ** H
    return out


def coarsen(path, to_level):
    """Aggregate increments down to dyadic level to_level <= m.

    Groups of 2^{m - to_level} consecutive fine increments are summed, so the
    sub-step count per dyadic cell is preserved and coarsening to the same
    level is the identity.  The marginal law on the coarse grid is unchanged
    (sums of exact-law fine increments).
    """
    spec = path.spec
    if to_level > spec.m:
        raise DomainError("cannot coarsen to a finer level")
    if to_level < 1:
        raise DomainError("to_level must be >= 1")
    if to_level == spec.m:
        return path
    factor = 2 ** (spec.m - to_level)
    d = path.increments.shape[0]
    inc = path.increments.reshape(d, -1, factor).sum(axis=2)
    new_spec = replace(spec, m=to_level)
    values = np.zeros((d, inc.shape[1] + 1))
    np.cumsum(inc, axis=1, out=values[:, 1:])
    return FbmPath(spec=new_spec, increments=inc, values=values)


def dump_csv(path, fileobj):
    """Write the path as CSV: header t,B1,...,Bd then one row per grid point."""
    d = path.values.shape[0]
    header = "t," + ",".join(f"B{k+1}" for k in range(d))
    fileobj.write(header + "\n")
    times = path.times
    for i in range(times.size):
        row = [f"{times[i]:.17g}"] + [f"{path.values[k, i]:.17g}" for k in range(d)]
        fileobj.write(",".join(row) + "\n")
