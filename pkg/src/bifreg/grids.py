"""Grids, discretized curves, datasets, quadrature, and CSV round-trips.

Curves are stored as plain float64 arrays over an explicit grid of
abscissae. The inner product between two curves on a shared grid is the
composite trapezoid rule, which is also the norm convention used when
directions are calibrated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, GridMismatchError, ValidationError

__all__ = [
    "Grid",
    "Curve",
    "BiFunctionalDataset",
    "SupportSet",
    "trapezoid_weights",
    "inner_product",
    "split_dataset",
    "load_csv",
    "save_csv",
    "describe",
]

# Number format guaranteeing bit round-trip of finite doubles through text.
FLOAT_FORMAT = "%.17g"


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid quadrature weights for sorted abscissae."""
    points = np.asarray(points, dtype=np.float64)
    if points.size == 1:
        return np.ones(1)
    w = np.empty_like(points)
    w[0] = 0.5 * (points[1] - points[0])
    w[-1] = 0.5 * (points[-1] - points[-2])
    w[1:-1] = 0.5 * (points[2:] - points[:-2])
    return w


@dataclass(frozen=True)
class Grid:
    """Ordered abscissae t_1 < ... < t_p with cached quadrature weights.

    Parameters
    ----------
    points : ndarray
        Strictly increasing abscissae in domain units.
    spacing_class : str
        'uniform' for exactly equispaced grids, 'regular' otherwise.
        Inferred when not supplied.
    """

    points: np.ndarray
    spacing_class: str = ""
    quad_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 1:
            raise ValidationError("grid needs a 1-d array of at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("grid points must be finite")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValidationError("grid points must be strictly increasing")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if not self.spacing_class:
            object.__setattr__(self, "spacing_class", _infer_spacing(pts))
        elif self.spacing_class not in ("uniform", "regular"):
            raise ValidationError(
                f"spacing_class must be 'uniform' or 'regular', got {self.spacing_class!r}"
            )
        w = trapezoid_weights(pts)
        w.flags.writeable = False
        object.__setattr__(self, "quad_weights", w)

    @property
    def p(self) -> int:
        return self.points.size

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])

    def index_of(self, t: float) -> int:
        """Index of the grid point nearest to t."""
        return int(np.argmin(np.abs(self.points - t)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.shape[0], self.points.tobytes()))

    @staticmethod
    def uniform(p: int, a: float = 0.0, b: float = 1.0) -> "Grid":
        return Grid(np.linspace(a, b, p), spacing_class="uniform")


def _infer_spacing(points: np.ndarray) -> str:
    if points.size < 2:
        return "uniform"
    d = np.diff(points)
    span = points[-1] - points[0]
    if np.max(np.abs(d - d[0])) <= 1e-9 * max(span, 1.0):
        return "uniform"
    return "regular"


@dataclass(frozen=True)
class Curve:
    """A discretized sample path: values over a shared Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.p,):
            raise ValidationError(
                f"curve has {v.size} values but its grid has {self.grid.p} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("curve values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class BiFunctionalDataset:
    """n samples of (zeta curve, x curve, scalar response).

    zeta rows live on zeta_grid (p points), x rows on x_grid (p_x points),
    y is the length-n response vector.
    """

    zeta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    zeta_grid: Grid
    x_grid: Grid

    def __post_init__(self):
        z = np.ascontiguousarray(self.zeta, dtype=np.float64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64).reshape(-1)
        if z.ndim != 2 or x.ndim != 2:
            raise ValidationError("zeta and x must be 2-d matrices")
        if not (z.shape[0] == x.shape[0] == y.shape[0]):
            raise ValidationError(
                f"inconsistent row counts: zeta {z.shape[0]}, x {x.shape[0]}, y {y.shape[0]}"
            )
        if z.shape[0] < 2:
            raise ValidationError("dataset needs at least 2 rows")
        if z.shape[1] != self.zeta_grid.p:
            raise ValidationError(
                f"zeta has {z.shape[1]} columns but zeta_grid has {self.zeta_grid.p} points"
            )
        if x.shape[1] != self.x_grid.p:
            raise ValidationError(
                f"x has {x.shape[1]} columns but x_grid has {self.x_grid.p} points"
            )
        for name, arr in (("zeta", z), ("x", x), ("y", y)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite values in {name}")
        for name, arr in (("zeta", z), ("x", x), ("y", y)):
            arr.flags.writeable = False
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def zeta_curve(self, i: int) -> Curve:
        return Curve(self.zeta_grid, self.zeta[i])

    def x_curve(self, i: int) -> Curve:
        return Curve(self.x_grid, self.x[i])


@dataclass(frozen=True)
class SupportSet:
    """Sorted 0-based grid indices j with beta_j != 0."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(j) for j in set(self.indices)))
        if idx and idx[0] < 0:
            raise ValidationError("support indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j) -> bool:
        return int(j) in set(self.indices)

    def abscissae(self, grid: Grid) -> tuple[float, ...]:
        if self.indices and self.indices[-1] >= grid.p:
            raise ValidationError(
                f"support index {self.indices[-1]} out of range for grid of size {grid.p}"
            )
        return tuple(float(grid.points[j]) for j in self.indices)


def inner_product(f: Curve, g: Curve) -> float:
    """Trapezoid quadrature of f*g over the shared grid."""
    if f.grid != g.grid:
        raise GridMismatchError("inner_product requires curves on the same grid")
    return float(np.dot(f.grid.quad_weights, f.values * g.values))


def split_dataset(
    d: BiFunctionalDataset, sizes: tuple[int, int]
) -> tuple[BiFunctionalDataset, BiFunctionalDataset]:
    """Split into the first n1 rows and the next n2 rows, order preserved."""
    n1, n2 = int(sizes[0]), int(sizes[1])
    if n1 < 1 or n2 < 1:
        raise ValidationError("both split sizes must be at least 1")
    if n1 + n2 > d.n:
        raise ValidationError(f"split sizes {n1}+{n2} exceed the {d.n} available rows")

    def take(lo, hi):
        return BiFunctionalDataset(
            zeta=d.zeta[lo:hi],
            x=d.x[lo:hi],
            y=d.y[lo:hi],
            zeta_grid=d.zeta_grid,
            x_grid=d.x_grid,
        )

    return take(0, n1), take(n1, n1 + n2)


def _parse_functional_csv(path: str, label: str) -> tuple[Grid, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip() != ""]
    if not lines:
        raise DataError(f"{label} file {path} is empty")
    header = lines[0].split(",")
    try:
        abscissae = np.array([float(c) for c in header], dtype=np.float64)
    except ValueError as exc:
        bad = next(i for i, c in enumerate(header) if not _is_float(c))
        raise DataError(
            f"{label} file {path}: non-numeric grid abscissa in header column {bad + 1}"
        ) from exc
    if abscissae.size > 1 and not np.all(np.diff(abscissae) > 0):
        j = int(np.argmin(np.diff(abscissae))) + 1
        raise DataError(
            f"{label} file {path}: header abscissae not strictly increasing at column {j + 1}"
        )
    p = abscissae.size
    rows = []
    for r, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != p:
            raise DataError(
                f"{label} file {path}: row {r} has {len(cells)} cells, expected {p}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            bad = next(i for i, c in enumerate(cells) if not _is_float(c))
            raise DataError(
                f"{label} file {path}: non-numeric cell at row {r}, column {bad + 1}"
            ) from exc
    if not rows:
        raise DataError(f"{label} file {path} has a header but no data rows")
    return Grid(abscissae), np.asarray(rows, dtype=np.float64)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(zeta_path: str, x_path: str, y_path: str) -> BiFunctionalDataset:
    """Load a dataset from three CSV files.

    zeta and x files carry a header row of grid abscissae and one sample
    per subsequent row; the y file carries one response value per row.
    """
    zeta_grid, zeta = _parse_functional_csv(zeta_path, "zeta")
    x_grid, x = _parse_functional_csv(x_path, "x")
    with open(y_path, "r", encoding="utf-8") as fh:
        ylines = [ln.strip() for ln in fh if ln.strip() != ""]
    yvals = []
    for r, ln in enumerate(ylines, start=1):
        if not _is_float(ln):
            raise DataError(f"y file {y_path}: non-numeric value at row {r}")
        yvals.append(float(ln))
    y = np.asarray(yvals, dtype=np.float64)
    if not (zeta.shape[0] == x.shape[0] == y.shape[0]):
        raise DataError(
            f"row counts differ: zeta {zeta.shape[0]}, x {x.shape[0]}, y {y.shape[0]}"
        )
    return BiFunctionalDataset(zeta=zeta, x=x, y=y, zeta_grid=zeta_grid, x_grid=x_grid)


def save_csv(
    d: BiFunctionalDataset, zeta_path: str, x_path: str, y_path: str
) -> None:
    """Write a dataset as three CSVs that round-trip bit-identically."""
    _write_functional_csv(zeta_path, d.zeta_grid, d.zeta)
    _write_functional_csv(x_path, d.x_grid, d.x)
    with open(y_path, "w", encoding="utf-8") as fh:
        for v in d.y:
            fh.write(FLOAT_FORMAT % v + "\n")


def _write_functional_csv(path: str, grid: Grid, rows: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(FLOAT_FORMAT % t for t in grid.points) + "\n")
        for row in rows:
            fh.write(",".join(FLOAT_FORMAT % v for v in row) + "\n")


def describe(d: BiFunctionalDataset) -> dict:
    """JSON-ready metadata echo of a dataset."""
    return {
        "n": d.n,
        "p_zeta": d.zeta_grid.p,
        "p_x": d.x_grid.p,
        "zeta_domain": list(d.zeta_grid.domain),
        "x_domain": list(d.x_grid.domain),
        "zeta_spacing": d.zeta_grid.spacing_class,
        "x_spacing": d.x_grid.spacing_class,
    }
