"""Multidimensional discrete Young integration and variation functionals.

Grid-like partitions of boxes in [0,1]^N, rectangular increments, the three
variation functionals (plain grid sum, sub-partition maximum, face-augmented
sum), the controlled p-variation over rectangle dissections, left-point
discrete Young integrals, and checkers for the inequalities that control
them:

  * the two-norm sandwich        V_p(f) <= ||f||_{p-var}
  * the Young-Towghi estimate    |int f dg| <= C Vbar_p(f) V_q(g), 1/p+1/q>1
  * product rule                 V_p(fg) <= V_p(f) V_p(g) (disjoint vars)
  * nested-integral bound        |A_{a_1..a_r}| <= 3^r prod ||a||_inf
                                                     prod (t_i - s_i)^{2H}
  * zeta-summation estimate      left sums of a controlled phi are bounded
                                 by C zeta(theta)^N prod w(s_r,t_r)^theta

Exact V_p enumerates every sub-partition and is therefore exponential; it
is capacity-gated and never silently approximated — the cheap alternative
is an explicitly flagged lower bound.  Constants in the inequalities above
are not explicit, so the corresponding checkers report ratios for
regression against golden values instead of asserting invented constants.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as riemann_zeta

from .errors import CapacityError, DomainError
from .gaussian import cov_rect

__all__ = [
    "GridPartition",
    "GridFunction",
    "ControlFunction",
    "VariationValue",
    "rect_increment",
    "tilde_Vp",
    "Vp",
    "controlled_pvar",
    "bar_Vp",
    "discrete_young_integral",
    "towghi_check",
    "young_compose_h",
    "psi_path",
    "iterated_A",
    "iterated_A_bound",
    "product_pvar_check",
    "zeta_sum_check",
]

VP_MAX_SUBPARTITIONS = 2 ** 20


@dataclass(frozen=True, eq=False)
class GridPartition:
    """Product of per-axis breakpoint sequences inside [0,1]."""

    axes: tuple

    def __eq__(self, other):
        if not isinstance(other, GridPartition):
            return NotImplemented
        return len(self.axes) == len(other.axes) and all(
            np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        for a in axes:
            if a.ndim != 1 or a.shape[0] < 2:
                raise DomainError("each axis needs at least 2 breakpoints")
            if np.any(np.diff(a) <= 0):
                raise DomainError("axis breakpoints must strictly increase")
            if a[0] < 0 or a[-1] > 1:
                raise DomainError("breakpoints must lie in [0,1]")

    @property
    def N(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.shape[0] for a in self.axes)

    @classmethod
    def uniform(cls, n_points, N=1, lo=0.0, hi=1.0):
        ax = np.linspace(lo, hi, n_points)
        return cls(axes=(ax,) * N)


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at every node of a grid-like partition."""

    partition: GridPartition
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.partition.shape:
            raise DomainError("value array shape must match the partition")

    @classmethod
    def sample(cls, partition, func):
        grids = np.meshgrid(*partition.axes, indexing="ij")
        return cls(partition=partition, values=np.asarray(func(*grids), dtype=float))


@dataclass(frozen=True)
class ControlFunction:
    """Superadditive w(s,t) with w(s,s) = 0, checked on random triples."""

    w: object
    check_points: int = 64
    seed: int = 0

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        for _ in range(self.check_points):
            s, u, t = np.sort(rng.uniform(0, 1, 3))
            if self(s, u) + self(u, t) > self(s, t) + 1e-12:
                raise DomainError("control function is not superadditive")
        if abs(self(0.3, 0.3)) > 1e-12:
            raise DomainError("control function must vanish on the diagonal")

    def __call__(self, s, t):
        return float(self.w(s, t))


class VariationValue(float):
    """A variation functional value carrying its exactness flag."""

    def __new__(cls, value, exact):
        obj = super().__new__(cls, value)
        obj.exact = bool(exact)
        return obj


def _cell_increments(values):
    out = values
    for ax in range(values.ndim):
        out = np.diff(out, axis=ax)
    return out


def rect_increment(f, box, fixed=None):
    """Alternating-corner sum of f over an index box, other axes pinned.

    ``box`` maps axis -> (i0, i1) breakpoint index interval; ``fixed`` maps
    axis -> breakpoint index.  The two maps must cover all axes exactly.
    """
    fixed = fixed or {}
    N = f.partition.N
    if sorted(list(box) + list(fixed)) != list(range(N)):
        raise DomainError("box and fixed axes must partition the axis set")
    vals = f.values
    shape = f.partition.shape
    idx = [None] * N
    for ax, i in fixed.items():
        if not 0 <= i < shape[ax]:
            raise DomainError("fixed index out of range")
        idx[ax] = np.array([i])
    for ax, (i0, i1) in box.items():
        if not 0 <= i0 < i1 < shape[ax]:
            raise DomainError("box indices out of range")
        idx[ax] = np.array([i0, i1])
    sub = vals[np.ix_(*idx)]
    for ax in sorted(box):
        sub = np.diff(sub, axis=ax)
    return float(sub.reshape(()))


def tilde_Vp(f, p):
    """(sum over grid cells of |rectangular increment|^p)^{1/p}."""
    if p < 1:
        raise DomainError("p must be >= 1")
    return float(
        np.sum(np.abs(_cell_increments(f.values)) ** p) ** (1.0 / p)
    )


def _subsets(interior):
    for r in range(len(interior) + 1):
        yield from itertools.combinations(interior, r)


def _restrict(values, keep):
    return values[np.ix_(*keep)]


def Vp(f, p, mode="exact"):
    """Maximum of tilde_Vp over sub-partitions (endpoints always kept).

    ``exact`` enumerates all sub-partitions (capacity-gated); ``lower_bound``
    takes the maximum along a greedy single-point-removal descent and returns
    a value flagged inexact.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    shape = f.partition.shape
    if mode == "exact":
        total = 1
        for npts in shape:
            total *= 2 ** (npts - 2)
        if total > VP_MAX_SUBPARTITIONS:
            raise CapacityError(
                f"{total} sub-partitions exceed the enumeration gate"
            )
        best = 0.0
        interior = [range(1, npts - 1) for npts in shape]
        for combo in itertools.product(*[list(_subsets(i)) for i in interior]):
            keep = [
                np.concatenate(([0], np.asarray(c, dtype=int), [npts - 1]))
                for c, npts in zip(combo, shape)
            ]
            sub = _restrict(f.values, keep)
            best = max(best, float(np.sum(np.abs(_cell_increments(sub)) ** p)))
        return VariationValue(best ** (1.0 / p), exact=True)
    if mode != "lower_bound":
        raise DomainError(f"unknown mode {mode!r}")
    keep = [list(range(npts)) for npts in shape]
    best = np.sum(np.abs(_cell_increments(f.values)) ** p)
    improved = True
    while improved and any(len(k) > 2 for k in keep):
        improved = False
        cand_best, cand = best, None
        for ax in range(len(shape)):
            for pos in range(1, len(keep[ax]) - 1):
                trial = [list(k) for k in keep]
                del trial[ax][pos]
                sub = _restrict(f.values, [np.asarray(k) for k in trial])
                v = np.sum(np.abs(_cell_increments(sub)) ** p)
                if v > cand_best:
                    cand_best, cand = v, trial
        if cand is not None:
            keep, best, improved = cand, cand_best, True
    return VariationValue(best ** (1.0 / p), exact=False)


def _face_values(values, alive):
    """Restrict to the face where dead axes are pinned at their start."""
    idx = tuple(
        slice(None) if ax in alive else 0 for ax in range(values.ndim)
    )
    return values[idx]


def bar_Vp(f, p, mode="exact"):
    """Sum of Vp over all coordinate faces through the base corner, plus
    the base corner value itself."""
    N = f.partition.N
    total = 0.0
    exact = True
    for r in range(1, N + 1):
        for alive in itertools.combinations(range(N), r):
            face = GridFunction(
                partition=GridPartition(
                    axes=tuple(f.partition.axes[a] for a in alive)
                ),
                values=_face_values(f.values, alive),
            )
            v = Vp(face, p, mode=mode)
            exact = exact and v.exact
            total += float(v)
    corner = f.values[(0,) * N]
    return VariationValue(total + abs(corner), exact=exact)


def _dissections_1d(n_cells):
    # all ways to cut [0, n_cells] at a subset of interior breakpoints
    for cuts in _subsets(range(1, n_cells)):
        bounds = [0, *cuts, n_cells]
        yield [(a, b) for a, b in zip(bounds, bounds[1:])]


def _tilings_2d(n1, n2):
    """All partitions of an n1 x n2 cell grid into axis-aligned rectangles."""
    full = [(i, j) for i in range(n1) for j in range(n2)]

    def rec(covered, acc):
        free = [c for c in full if c not in covered]
        if not free:
            yield list(acc)
            return
        i0, j0 = free[0]
        for i1 in range(i0 + 1, n1 + 1):
            for j1 in range(j0 + 1, n2 + 1):
                rect_cells = {
                    (i, j) for i in range(i0, i1) for j in range(j0, j1)
                }
                if rect_cells & covered:
                    continue
                acc.append(((i0, i1), (j0, j1)))
                yield from rec(covered | rect_cells, acc)
                acc.pop()

    yield from rec(set(), [])


def controlled_pvar(f, p, mode="exact_small"):
    """Supremum over rectangle dissections of (sum |f(I_k)|^p)^{1/p}.

    ``exact_small`` enumerates every grid-aligned rectangle dissection
    (1-D any small size, 2-D up to 4 breakpoints per axis); ``lower_bound``
    uses grid-product dissections only, i.e. falls back to Vp.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    shape = f.partition.shape
    N = f.partition.N
    if mode == "lower_bound":
        try:
            v = Vp(f, p, mode="exact")
        except CapacityError:
            v = Vp(f, p, mode="lower_bound")
        return VariationValue(float(v), exact=False)
    if mode != "exact_small":
        raise DomainError(f"unknown mode {mode!r}")
    if N == 1:
        n = shape[0] - 1
        best = 0.0
        for blocks in _dissections_1d(n):
            s = sum(
                abs(f.values[b] - f.values[a]) ** p for a, b in blocks
            )
            best = max(best, s)
        return VariationValue(best ** (1.0 / p), exact=True)
    if N != 2 or max(shape) > 4:
        raise CapacityError("exact dissection enumeration needs N<=2, <=4 points/axis")
    best = 0.0
    for tiling in _tilings_2d(shape[0] - 1, shape[1] - 1):
        s = 0.0
        for (i0, i1), (j0, j1) in tiling:
            s += abs(
                rect_increment(f, {0: (i0, i1), 1: (j0, j1)})
            ) ** p
        best = max(best, s)
    return VariationValue(best ** (1.0 / p), exact=True)


def discrete_young_integral(f, g):
    """Left-point sum of f against the rectangular increments of g."""
    if f.partition != g.partition:
        raise DomainError("integrand and integrator need the same partition")
    N = f.partition.N
    left = f.values[(slice(None, -1),) * N]
    return float(np.sum(left * _cell_increments(g.values)))


def _vanishes_on_base_faces(values, tol=0.0):
    return all(
        np.all(np.abs(np.take(values, 0, axis=ax)) <= tol)
        for ax in range(values.ndim)
    )


def towghi_check(f, g, p, q, vp_mode="exact"):
    """Ratio report for |int f dg| against the variation-norm bound.

    Uses the face-augmented norm of f in general, or the plain sub-partition
    norm when f vanishes on every base face.  The constant in the inequality
    is not explicit, so the report carries the raw ratio for regression.
    """
    if 1.0 / p + 1.0 / q <= 1.0:
        raise DomainError("need 1/p + 1/q > 1")
    integral = discrete_young_integral(f, g)
    sharp = _vanishes_on_base_faces(f.values)
    fnorm = Vp(f, p, mode=vp_mode) if sharp else bar_Vp(f, p, mode=vp_mode)
    gnorm = Vp(g, q, mode=vp_mode)
    denom = float(fnorm) * float(gnorm)
    if denom == 0.0:
        return {
            "integral": integral,
            "ratio": 0.0,
            "bound_kind": "degenerate",
            "note": "zero denominator; integral is necessarily zero",
            "finite": integral == 0.0,
        }
    return {
        "integral": integral,
        "f_norm": float(fnorm),
        "g_norm": float(gnorm),
        "ratio": abs(integral) / denom,
        "bound_kind": "V_p" if sharp else "barV_p",
        "finite": True,
    }


def towghi_fuzz_report(seed, cases=100, points=4, p=1.9, q=1.9):
    """Max Towghi ratio over a reproducible corpus of random grid pairs.

    The inequality's constant is implicit, so the regression target is the
    corpus maximum itself: reruns with the same seed must reproduce it.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        ax1 = np.sort(np.concatenate(([0.0, 1.0], rng.uniform(0, 1, points - 2))))
        ax2 = np.sort(np.concatenate(([0.0, 1.0], rng.uniform(0, 1, points - 2))))
        part = GridPartition(axes=(ax1, ax2))
        f = GridFunction(partition=part, values=rng.normal(size=(points, points)))
        g = GridFunction(partition=part, values=rng.normal(size=(points, points)))
        rep = towghi_check(f, g, p, q)
        assert rep["finite"]
        worst = max(worst, rep["ratio"])
    return {"seed": seed, "cases": cases, "points": points, "p": p, "q": q,
            "max_ratio": worst}


def young_compose_h(f, g):
    """Cumulative 2-D left-point sums h(u_i, v_j) with h zero on the axes."""
    if f.partition != g.partition or f.partition.N != 2:
        raise DomainError("compose needs two grid functions on one 2-D partition")
    inner = f.values[:-1, :-1] * _cell_increments(g.values)
    h = np.zeros(f.partition.shape)
    h[1:, 1:] = np.cumsum(np.cumsum(inner, axis=0), axis=1)
    return GridFunction(partition=f.partition, values=h)


def psi_path(s, t, H, grid):
    """u -> R([s,t] x [0,u]) sampled on a 1-D grid of [0,1]."""
    grid = np.asarray(grid, dtype=float)
    out = np.zeros_like(grid)
    pos = grid > 0
    out[pos] = cov_rect(((s, t), (0.0, grid[pos])), H)
    return out


def iterated_A(a_list, h_list, grid):
    """Nested left-point integrals A_{a_1..a_r}[h_1..h_r] on a shared grid.

    a_list holds the integrand factors sampled at the breakpoints, h_list
    the integrators; returns the running value at every breakpoint.
    """
    grid = np.asarray(grid, dtype=float)
    if len(a_list) != len(h_list) or not a_list:
        raise DomainError("need matching non-empty integrand/integrator lists")
    acc = np.ones_like(grid)
    for a, h in zip(a_list, h_list):
        a = np.asarray(a, dtype=float)
        h = np.asarray(h, dtype=float)
        if a.shape != grid.shape or h.shape != grid.shape:
            raise DomainError("all factors must live on the common grid")
        steps = acc[:-1] * a[:-1] * np.diff(h)
        acc = np.concatenate(([0.0], np.cumsum(steps)))
    return acc


def iterated_A_bound(a_list, boxes, H):
    """3^r prod ||a_i||_inf prod (t_i - s_i)^{2H} for increment integrators."""
    r = len(a_list)
    out = 3.0 ** r
    for a, (s, t) in zip(a_list, boxes):
        out *= float(np.max(np.abs(a))) * (t - s) ** (2 * H)
    return out


def product_pvar_check(f, g, p, q=None, vp_mode="exact"):
    """Check the product rules for the sub-partition variation norm.

    With disjoint variables (f and g on separate partitions) verifies
    V_p(fg) <= V_p(f) V_p(g) exactly and reports the ratio.  With a shared
    partition and q > p, reports the ratio V_q(fg) / (barV_p(f) barV_p(g)),
    whose boundedness is the constant-free form of the general rule.
    """
    if f.partition != g.partition:
        prod = GridFunction(
            partition=GridPartition(axes=f.partition.axes + g.partition.axes),
            values=np.multiply.outer(f.values, g.values),
        )
        lhs = Vp(prod, p, mode=vp_mode)
        rhs = float(Vp(f, p, mode=vp_mode)) * float(Vp(g, p, mode=vp_mode))
        return {
            "kind": "disjoint",
            "lhs": float(lhs),
            "rhs": rhs,
            "ratio": float(lhs) / rhs if rhs else 0.0,
            "pass": float(lhs) <= rhs * (1 + 1e-10),
        }
    if q is None or not q > p:
        raise DomainError("shared-variable form needs q > p")
    prod = GridFunction(partition=f.partition, values=f.values * g.values)
    lhs = Vp(prod, q, mode=vp_mode)
    denom = float(bar_Vp(f, p, mode=vp_mode)) * float(bar_Vp(g, p, mode=vp_mode))
    return {
        "kind": "shared",
        "lhs": float(lhs),
        "denominator": denom,
        "ratio": float(lhs) / denom if denom else 0.0,
        "pass": np.isfinite(float(lhs) / denom) if denom else float(lhs) == 0.0,
    }


def zeta_sum_check(phi, w, p, q, C, hypothesis_samples=50, seed=0):
    """Left-sum estimate for a (1/p, 1/q)-controlled phi on a doubled grid.

    ``phi`` is a GridFunction on P_1 x ... x P_N x P_1 x ... x P_N; the
    first N axes are the prefix variables, the last N the increment
    variables.  The hypothesis |phi(box)| <= C prod w^{1/p} w^{1/q} is
    spot-checked on random boxes (violation is a domain error); the left
    sum over the diagonal cells is then bounded by
    C zeta(theta)^N prod w(s_r, t_r)^theta.
    """
    theta = 1.0 / p + 1.0 / q
    if theta <= 1.0:
        raise DomainError("need 1/p + 1/q > 1")
    if phi.partition.N % 2:
        raise DomainError("phi needs an even number of axes")
    N = phi.partition.N // 2
    for r in range(N):
        if not np.array_equal(phi.partition.axes[r], phi.partition.axes[N + r]):
            raise DomainError("prefix and increment axes must agree")
    axes = phi.partition.axes[:N]
    rng = np.random.default_rng(seed)
    for _ in range(hypothesis_samples):
        box = {}
        bound = C
        for ax in range(2 * N):
            npts = len(phi.partition.axes[ax])
            i0 = int(rng.integers(0, npts - 1))
            i1 = int(rng.integers(i0 + 1, npts))
            box[ax] = (i0, i1)
            u0, u1 = phi.partition.axes[ax][i0], phi.partition.axes[ax][i1]
            bound *= w(u0, u1) ** (1.0 / p if ax < N else 1.0 / q)
        if abs(rect_increment(phi, box)) > bound * (1 + 1e-9):
            raise DomainError("phi violates the control hypothesis")
    # the left sum: prefix boxes [s_r, t^r_{i-1}] x cells [t^r_{i-1}, t^r_i];
    # terms whose prefix is degenerate contribute zero
    total = 0.0
    for cells in itertools.product(*[range(1, len(a)) for a in axes]):
        if any(i - 1 == 0 for i in cells):
            continue
        box = {}
        for r, i in enumerate(cells):
            box[r] = (0, i - 1)
            box[N + r] = (i - 1, i)
        total += rect_increment(phi, box)
    bound = C * float(riemann_zeta(theta)) ** N
    for a in axes:
        bound *= w(a[0], a[-1]) ** theta
    return {
        "lhs": abs(total),
        "bound": bound,
        "theta": theta,
        "pass": abs(total) <= bound * (1 + 1e-9),
    }
