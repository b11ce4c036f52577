"""B-spline basis machinery and the finite candidate set of directions.

A candidate direction theta is a spline in a clamped B-spline basis
(uniform interior knots, endpoint multiplicity equal to the order),
calibrated so that its trapezoid-quadrature norm is one and its value at
the anchor point is positive. The candidate set is enumerated from a
small set of seed coefficients applied to every basis function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EnumerationCapError, GridMismatchError, ValidationError
from .grids import Curve, Grid

__all__ = [
    "BSplineBasis",
    "Direction",
    "DirectionSet",
    "basis_eval",
    "render_matrix",
    "enumerate_directions",
    "project",
]


@dataclass(frozen=True)
class BSplineBasis:
    """Clamped B-spline basis of a given order with uniform interior knots.

    Parameters
    ----------
    order : int
        Spline order l (degree + 1); l >= 2.
    interior_knots : int
        Number m of uniformly spaced interior knots; m >= 0.
    domain : tuple of float
        Interval [a, b] the basis lives on.

    The dimension is d = l + m and the knot vector repeats each endpoint
    l times around the uniform interior knots.
    """

    order: int = 3
    interior_knots: int = 3
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.order < 2:
            raise ValidationError(f"spline order must be >= 2, got {self.order}")
        if self.interior_knots < 0:
            raise ValidationError("interior knot count must be >= 0")
        a, b = float(self.domain[0]), float(self.domain[1])
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise ValidationError(f"invalid basis domain [{a}, {b}]")
        object.__setattr__(self, "domain", (a, b))

    @property
    def dimension(self) -> int:
        return self.order + self.interior_knots

    @property
    def knot_vector(self) -> np.ndarray:
        a, b = self.domain
        interior = np.linspace(a, b, self.interior_knots + 2)[1:-1]
        return np.concatenate(
            [np.full(self.order, a), interior, np.full(self.order, b)]
        )


def basis_eval(basis: BSplineBasis, t) -> np.ndarray:
    """Evaluate all d basis functions at t.

    Parameters
    ----------
    basis : BSplineBasis
    t : float or ndarray
        Points inside the basis domain.

    Returns
    -------
    ndarray
        Shape (d,) for scalar t, else (len(t), d).

    Uses the Cox-de Boor triangular recursion; the right endpoint takes
    its limit from the last span so the final basis function reaches 1.
    """
    scalar = np.isscalar(t)
    tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
    a, b = basis.domain
    if tt.size and (tt.min() < a - 1e-12 or tt.max() > b + 1e-12):
        bad = tt[(tt < a - 1e-12) | (tt > b + 1e-12)][0]
        raise DomainError(f"evaluation point {bad} outside basis domain [{a}, {b}]")
    tt = np.clip(tt, a, b)
    out = _eval_matrix(basis, tt)
    return out[0] if scalar else out


def _eval_matrix(basis: BSplineBasis, tt: np.ndarray) -> np.ndarray:
    l = basis.order
    deg = l - 1
    d = basis.dimension
    knots = basis.knot_vector
    out = np.zeros((tt.size, d))
    # span s covers [knots[l-1+s], knots[l+s]); the last span includes b
    n_spans = basis.interior_knots + 1
    breaks = knots[deg : deg + n_spans + 1]
    span = np.searchsorted(breaks, tt, side="right") - 1
    span = np.clip(span, 0, n_spans - 1)
    for s in range(n_spans):
        mask = span == s
        if not np.any(mask):
            continue
        x = tt[mask]
        i = deg + s
        vals = np.zeros((x.size, l))
        vals[:, 0] = 1.0
        left = np.zeros((x.size, l))
        right = np.zeros((x.size, l))
        for j in range(1, l):
            left[:, j] = x - knots[i + 1 - j]
            right[:, j] = knots[i + j] - x
            saved = np.zeros(x.size)
            for r in range(j):
                tmp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
                vals[:, r] = saved + right[:, r + 1] * tmp
                saved = left[:, j - r] * tmp
            vals[:, j] = saved
        out[np.nonzero(mask)[0][:, None], np.arange(i - deg, i + 1)[None, :]] = vals
    return out


@lru_cache(maxsize=128)
def render_matrix(basis: BSplineBasis, grid: Grid) -> np.ndarray:
    """Basis functions evaluated on a grid, cached; shape (grid.p, d)."""
    m = _eval_matrix(basis, grid.points)
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class Direction:
    """A calibrated direction: basis reference plus coefficient vector."""

    basis: BSplineBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if c.size != self.basis.dimension:
            raise ValidationError(
                f"direction has {c.size} coefficients, basis dimension is "
                f"{self.basis.dimension}"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def values_on(self, grid: Grid) -> np.ndarray:
        return render_matrix(self.basis, grid) @ self.coeffs

    def __call__(self, t):
        return basis_eval(self.basis, t) @ self.coeffs

    def to_dict(self) -> dict:
        return {
            "order": self.basis.order,
            "interior_knots": self.basis.interior_knots,
            "domain": list(self.basis.domain),
            "coeffs": [float(v) for v in self.coeffs],
        }

    @staticmethod
    def from_dict(d: dict) -> "Direction":
        basis = BSplineBasis(
            order=int(d["order"]),
            interior_knots=int(d["interior_knots"]),
            domain=(float(d["domain"][0]), float(d["domain"][1])),
        )
        return Direction(basis, np.asarray(d["coeffs"], dtype=np.float64))


@dataclass(frozen=True)
class DirectionSet:
    """Deterministically ordered calibrated directions without duplicates."""

    directions: tuple[Direction, ...]
    seed_tuples: tuple[tuple[float, ...], ...] = ()

    def __len__(self) -> int:
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, i) -> Direction:
        return self.directions[i]


def default_quad_grid(basis: BSplineBasis, size: int = 1001) -> Grid:
    a, b = basis.domain
    return Grid.uniform(size, a, b)


def enumerate_directions(
    basis: BSplineBasis,
    seeds=(-1.0, 0.0, 1.0),
    *,
    quad_grid: Grid | None = None,
    anchor: float | None = None,
    cap: int = 100_000,
    dedup_tol: float = 1e-10,
) -> DirectionSet:
    """Build the candidate direction set from seed coefficients.

    Every tuple in seeds^d except the all-zero tuple is scaled to unit
    quadrature norm on quad_grid, sign-anchored so theta(anchor) > 0
    (tuples with theta(anchor) == 0 are dropped), and deduplicated.
    Enumeration order is lexicographic over the sorted seed values.
    """
    seed_vals = sorted(set(float(s) for s in seeds))
    if not seed_vals:
        raise ValidationError("seed set must be nonempty")
    d = basis.dimension
    count = len(seed_vals) ** d
    if count > cap:
        raise EnumerationCapError(required=count, cap=cap)
    if quad_grid is None:
        quad_grid = default_quad_grid(basis)
    if tuple(np.round(quad_grid.domain, 12)) != tuple(np.round(basis.domain, 12)):
        raise GridMismatchError("quadrature grid must span the basis domain")
    a, b = basis.domain
    if anchor is None:
        anchor = 0.5 * (a + b)

    E = render_matrix(basis, quad_grid)
    w = quad_grid.quad_weights
    e_anchor = basis_eval(basis, float(anchor))

    tuples = np.array(list(itertools.product(seed_vals, repeat=d)), dtype=np.float64)
    keep = ~np.all(tuples == 0.0, axis=1)
    tuples = tuples[keep]

    vals = tuples @ E.T
    norm2 = (vals * vals) @ w
    # all-zero tuples are gone, but a seed tuple could still render as the
    # zero function only if the basis were degenerate; guard anyway
    ok = norm2 > 0
    tuples = tuples[ok]
    scale = 1.0 / np.sqrt(norm2[ok])
    coeffs = tuples * scale[:, None]
    anchor_vals = coeffs @ e_anchor

    kept_dirs: list[Direction] = []
    kept_seeds: list[tuple[float, ...]] = []
    kept_coeffs: list[np.ndarray] = []
    for row, seed_row, av in zip(coeffs, tuples, anchor_vals):
        if av == 0.0:
            continue
        c = -row if av < 0.0 else row
        dup = False
        for prev in kept_coeffs:
            if np.max(np.abs(prev - c)) <= dedup_tol:
                dup = True
                break
        if dup:
            continue
        kept_coeffs.append(c)
        kept_dirs.append(Direction(basis, c))
        kept_seeds.append(tuple(float(v) for v in seed_row))
    return DirectionSet(tuple(kept_dirs), tuple(kept_seeds))


def project(theta: Direction, chi: Curve) -> float:
    """Inner product of theta (rendered on chi's grid) with chi."""
    dom = chi.grid.domain
    bdom = theta.basis.domain
    if abs(dom[0] - bdom[0]) > 1e-12 or abs(dom[1] - bdom[1]) > 1e-12:
        raise GridMismatchError(
            f"curve domain {dom} does not match basis domain {bdom}"
        )
    vals = theta.values_on(chi.grid)
    return float(np.dot(chi.grid.quad_weights, vals * chi.values))
