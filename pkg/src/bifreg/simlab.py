"""Simulation designs, ground truth, and the Monte Carlo driver.

Three data-generating designs share the same structure: a discretized
curve zeta with a sparse linear effect, a smooth curve x acting through
the cube of its projection on a fixed direction, and Gaussian noise
whose standard deviation is a tenth of the spread of the noiseless
regression values. Replicates are reproducible: replicate r of master
seed s always uses the Philox stream keyed (s, r), regardless of worker
count.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from .directions import (
    BSplineBasis,
    Direction,
    DirectionSet,
    enumerate_directions,
    render_matrix,
)
from .errors import ValidationError
from .fassmr import (
    FassmrConfig,
    FitResult,
    fassmr_fit,
    msep,
    predict_many,
    standard_pls_fit,
)
from .grids import FLOAT_FORMAT, BiFunctionalDataset, Curve, Grid, SupportSet
from .iassmr import IassmrConfig, iassmr_fit

__all__ = [
    "DesignSpec",
    "GroundTruth",
    "ReplicateResult",
    "MetricsSummary",
    "METHODS",
    "default_basis",
    "true_direction",
    "default_direction_set",
    "replicate_rng",
    "gen_brownian",
    "gen_xcurves",
    "gen_lines",
    "gen_design",
    "impact_metrics",
    "run_replicate",
    "monte_carlo",
]

TRUE_SEED = (0.0, 1.0, 0.0, 1.0, -1.0, -1.0)

# kind -> (impact (abscissa, value) pairs, x coefficient range, tolerance
# intervals around the impact points)
_DESIGNS = {
    "A": (
        ((0.18, 2.0), (0.73, -3.0)),
        (0.0, 6.0),
        ((0.15, 0.21), (0.70, 0.76)),
    ),
    "B": (
        ((0.02, 4.0), (0.50, 3.0), (0.70, -3.2)),
        (0.0, 5.0),
        ((0.0, 0.05), (0.47, 0.53), (0.67, 0.73)),
    ),
    "C": (
        (
            (0.15, 1.0),
            (0.16, 1.2),
            (0.17, 1.0),
            (0.18, 1.2),
            (0.19, 1.0),
            (0.70, 1.0),
            (0.71, 1.2),
            (0.72, -1.2),
            (0.73, -1.2),
            (0.74, -1.2),
        ),
        (0.0, 5.0),
        ((0.14, 0.20), (0.69, 0.75)),
    ),
}

METHODS = ("fassmr", "iassmr", "pls")

NOISE_RATIO = 0.1


@dataclass(frozen=True)
class DesignSpec:
    """One simulation scenario: design kind plus sample and grid sizes."""

    kind: str
    n: int
    p: int
    n_test: int = 100
    seed: int = 0
    p_x: int = 100

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in _DESIGNS:
            raise ValidationError(
                f"unknown design kind {self.kind!r}; choose one of A, B, C"
            )
        object.__setattr__(self, "kind", kind)
        if self.n < 4:
            raise ValidationError("need at least 4 training rows")
        if self.p < 2 or self.p_x < 2:
            raise ValidationError("grids need at least 2 points")
        if self.n_test < 1:
            raise ValidationError("need at least 1 test row")
        if self.seed < 0:
            raise ValidationError("master seed must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "p": self.p,
            "n_test": self.n_test,
            "seed": self.seed,
            "p_x": self.p_x,
        }


@dataclass(frozen=True)
class GroundTruth:
    """What the generator used: sparse coefficients, direction, regions."""

    kind: str
    beta_true: np.ndarray
    support: SupportSet
    impact_abscissae: tuple[float, ...]
    theta_true: Direction
    good_region: tuple[tuple[float, float], ...]
    bad_region: tuple[tuple[float, float], ...]
    noise_sd: float

    def __post_init__(self):
        b = np.asarray(self.beta_true, dtype=np.float64).reshape(-1).copy()
        b.flags.writeable = False
        object.__setattr__(self, "beta_true", b)
        for t in self.impact_abscissae:
            if not any(lo - 1e-12 <= t <= hi + 1e-12 for lo, hi in self.good_region):
                raise ValidationError(
                    f"impact abscissa {t} falls outside the tolerance region"
                )

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "impact_indices": list(self.support.indices),
            "impact_abscissae": [float(t) for t in self.impact_abscissae],
            "impact_values": [float(self.beta_true[j]) for j in self.support.indices],
            "theta": self.theta_true.to_dict(),
            "good_region": [list(iv) for iv in self.good_region],
            "bad_region": [list(iv) for iv in self.bad_region],
            "noise_sd": float(self.noise_sd),
        }


def default_basis() -> BSplineBasis:
    """Quadratic splines with three uniform interior knots (dimension 6)."""
    return BSplineBasis(order=3, interior_knots=3, domain=(0.0, 1.0))


def true_direction(x_grid: Grid) -> Direction:
    """The generating direction: unit-norm calibration of the fixed seed."""
    basis = default_basis()
    seed = np.asarray(TRUE_SEED, dtype=np.float64)
    vals = render_matrix(basis, x_grid) @ seed
    norm2 = float((vals * vals) @ x_grid.quad_weights)
    theta = Direction(basis, seed / np.sqrt(norm2))
    mid = 0.5 * (basis.domain[0] + basis.domain[1])
    if theta(mid) < 0:
        theta = Direction(basis, -np.asarray(theta.coeffs))
    return theta


def default_direction_set(x_grid: Grid, seeds=(-1.0, 0.0, 1.0)) -> DirectionSet:
    """Candidate directions calibrated on the x grid's quadrature."""
    return enumerate_directions(default_basis(), seeds, quad_grid=x_grid)


def replicate_rng(master_seed: int, r: int) -> np.random.Generator:
    """Counter-based stream for replicate r; independent of worker layout."""
    if master_seed < 0 or r < 0:
        raise ValidationError("master seed and replicate index must be nonnegative")
    key = np.array([master_seed, r], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _brownian_matrix(grid: Grid, rng: np.random.Generator, n: int) -> np.ndarray:
    t = grid.points
    steps = np.diff(t)
    z = rng.standard_normal((n, grid.p))
    out = np.empty((n, grid.p))
    out[:, 0] = 0.0 if t[0] == 0.0 else np.sqrt(t[0]) * z[:, 0]
    if grid.p > 1:
        out[:, 1:] = np.sqrt(steps) * z[:, 1:]
    return np.cumsum(out, axis=1)


def gen_brownian(grid: Grid, rng: np.random.Generator) -> Curve:
    """One Brownian path on the grid (zero at t=0, Gaussian increments)."""
    return Curve(grid, _brownian_matrix(grid, rng, 1)[0])


def _xcurve_matrix(
    grid: Grid, rng: np.random.Generator, n: int, hi: float
) -> tuple[np.ndarray, np.ndarray]:
    abc = rng.uniform(0.0, hi, size=(n, 3))
    t = grid.points
    basis = np.stack(
        [np.cos(2.0 * np.pi * t), np.sin(4.0 * np.pi * t), 2.0 * (t - 0.25) * (t - 0.5)]
    )
    return abc @ basis, abc


def gen_xcurves(
    grid: Grid, rng: np.random.Generator, hi: float = 6.0
) -> tuple[Curve, tuple[float, float, float]]:
    """One smooth x curve a cos(2 pi t) + b sin(4 pi t) + 2c(t-1/4)(t-1/2)."""
    x, abc = _xcurve_matrix(grid, rng, 1, hi)
    return Curve(grid, x[0]), (float(abc[0, 0]), float(abc[0, 1]), float(abc[0, 2]))


def _line_matrix(grid: Grid, rng: np.random.Generator, c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    d = rng.standard_normal(c.size)
    return np.outer(c, grid.points) + d[:, None]


def gen_lines(grid: Grid, c: float, rng: np.random.Generator) -> Curve:
    """One line c*t + d with a standard normal intercept d."""
    return Curve(grid, _line_matrix(grid, rng, np.array([c]))[0])


def _complement(intervals, lo=0.0, hi=1.0):
    out = []
    cursor = lo
    for a, b in sorted(intervals):
        if a > cursor:
            out.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < hi:
        out.append((cursor, hi))
    return tuple(out)


def _snap_impacts(grid: Grid, pairs):
    idx = []
    for t, _ in pairs:
        idx.append(grid.index_of(t))
    if len(set(idx)) != len(idx):
        raise ValidationError(
            "zeta grid too coarse: distinct impact points snap to the same index"
        )
    return idx


def gen_design(
    spec: DesignSpec,
    rng: np.random.Generator | None = None,
    noiseless: bool = False,
) -> tuple[BiFunctionalDataset, BiFunctionalDataset, GroundTruth]:
    """Generate (train, test, truth) for one replicate.

    Draw order is fixed per design so streams stay reproducible:
    design A and C draw zeta increments, then the x coefficients, then
    noise; design B draws the x coefficients first (zeta lines reuse the
    slope c), then the intercepts, then noise. noiseless=True skips the
    noise draw entirely.
    """
    if rng is None:
        rng = replicate_rng(spec.seed, 0)
    pairs, (clo, chi), good = _DESIGNS[spec.kind]
    zeta_grid = Grid.uniform(spec.p, 0.0, 1.0)
    x_grid = Grid.uniform(spec.p_x, 0.0, 1.0)
    n_all = spec.n + spec.n_test

    if spec.kind == "B":
        x, abc = _xcurve_matrix(x_grid, rng, n_all, chi)
        zeta = _line_matrix(zeta_grid, rng, abc[:, 2])
    else:
        zeta = _brownian_matrix(zeta_grid, rng, n_all)
        x, _ = _xcurve_matrix(x_grid, rng, n_all, chi)

    idx = _snap_impacts(zeta_grid, pairs)
    beta = np.zeros(spec.p)
    for j, (_, v) in zip(idx, pairs):
        beta[j] = v

    theta = true_direction(x_grid)
    proj = x @ (x_grid.quad_weights * theta.values_on(x_grid))
    g = zeta @ beta + proj**3
    noise_sd = NOISE_RATIO * float(np.std(g))
    if noiseless:
        y = g
    else:
        y = g + rng.normal(0.0, noise_sd, size=n_all)

    truth = GroundTruth(
        kind=spec.kind,
        beta_true=beta,
        support=SupportSet(tuple(sorted(idx))),
        impact_abscissae=tuple(float(zeta_grid.points[j]) for j in sorted(idx)),
        theta_true=theta,
        good_region=good,
        bad_region=_complement(good),
        noise_sd=noise_sd,
    )
    train = BiFunctionalDataset(
        zeta=zeta[: spec.n],
        x=x[: spec.n],
        y=y[: spec.n],
        zeta_grid=zeta_grid,
        x_grid=x_grid,
    )
    test = BiFunctionalDataset(
        zeta=zeta[spec.n :],
        x=x[spec.n :],
        y=y[spec.n :],
        zeta_grid=zeta_grid,
        x_grid=x_grid,
    )
    return train, test, truth


def impact_metrics(
    support: SupportSet, truth: GroundTruth, grid: Grid
) -> tuple[int, int]:
    """Counts of selected abscissae inside / outside the tolerance region."""
    right = 0
    for j in support.indices:
        t = float(grid.points[j])
        if any(lo - 1e-12 <= t <= hi + 1e-12 for lo, hi in truth.good_region):
            right += 1
    return right, len(support.indices) - right


@dataclass(frozen=True)
class ReplicateResult:
    """Per-replicate, per-method outcome row."""

    r: int
    method: str
    msep: float
    right: int
    wrong: int
    seconds: float
    support: tuple[int, ...]
    chosen_w: int | None
    failed: bool = False
    error: str = ""


def _fit_dispatch(method: str, train: BiFunctionalDataset, config) -> FitResult:
    if method == "fassmr":
        return fassmr_fit(train, config)
    if method == "pls":
        return standard_pls_fit(train, config)
    if method == "iassmr":
        return iassmr_fit(train, config)
    raise ValidationError(
        f"unknown method {method!r}; choose from {', '.join(METHODS)}"
    )


def run_replicate(
    spec: DesignSpec, r: int, methods, configs: dict, train_rows: dict | None = None
) -> list[ReplicateResult]:
    """One replicate: generate once, fit every method on the same data.

    train_rows may cap the training rows per method (leading rows), so a
    method that by construction uses only the first subsample can be
    compared fairly against one that uses both. BLAS threading is
    pinned to one thread so results do not depend on the worker layout.
    Timing covers fit plus prediction, not data generation. A failing
    method is recorded, not raised.
    """
    out: list[ReplicateResult] = []
    train_rows = train_rows or {}
    with threadpool_limits(limits=1):
        rng = replicate_rng(spec.seed, r)
        train, test, truth = gen_design(spec, rng=rng)
        for method in methods:
            cap = train_rows.get(method)
            if cap is not None:
                if not (2 <= int(cap) <= train.n):
                    raise ValidationError(
                        f"train_rows for {method} must lie in 2..{train.n}"
                    )
                fit_data = BiFunctionalDataset(
                    zeta=train.zeta[: int(cap)],
                    x=train.x[: int(cap)],
                    y=train.y[: int(cap)],
                    zeta_grid=train.zeta_grid,
                    x_grid=train.x_grid,
                )
            else:
                fit_data = train
            t0 = time.perf_counter()
            try:
                fit = _fit_dispatch(method, fit_data, configs[method])
                preds, _ = predict_many(fit, test.zeta, test.x)
                seconds = time.perf_counter() - t0
                right, wrong = impact_metrics(fit.support, truth, train.zeta_grid)
                out.append(
                    ReplicateResult(
                        r=r,
                        method=method,
                        msep=msep(preds, test.y),
                        right=right,
                        wrong=wrong,
                        seconds=seconds,
                        support=tuple(fit.support.indices),
                        chosen_w=fit.chosen.get("w"),
                    )
                )
            except Exception as exc:  # noqa: BLE001 - survey must continue
                out.append(
                    ReplicateResult(
                        r=r,
                        method=method,
                        msep=float("nan"),
                        right=0,
                        wrong=0,
                        seconds=time.perf_counter() - t0,
                        support=(),
                        chosen_w=None,
                        failed=True,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
        return out


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregated Monte Carlo results for one scenario."""

    spec: DesignSpec
    methods: tuple[str, ...]
    n_replicates: int
    replicates: tuple[ReplicateResult, ...]
    stats: dict

    _CSV_FIELDS = (
        "n_used",
        "n_failed",
        "mean_msep",
        "sd_msep",
        "mean_right",
        "mean_wrong",
        "mean_seconds",
    )

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "methods": list(self.methods),
            "n_replicates": self.n_replicates,
            "stats": self.stats,
        }

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("method," + ",".join(self._CSV_FIELDS) + "\n")
            for m in self.methods:
                s = self.stats[m]
                cells = [m]
                for f in self._CSV_FIELDS:
                    v = s[f]
                    cells.append(
                        "%d" % v if isinstance(v, int) else FLOAT_FORMAT % v
                    )
                fh.write(",".join(cells) + "\n")

    def replicates_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("r,method,failed,msep,right,wrong,seconds,chosen_w,support\n")
            for rr in self.replicates:
                fh.write(
                    "%d,%s,%d,%s,%d,%d,%s,%s,%s\n"
                    % (
                        rr.r,
                        rr.method,
                        int(rr.failed),
                        FLOAT_FORMAT % rr.msep,
                        rr.right,
                        rr.wrong,
                        FLOAT_FORMAT % rr.seconds,
                        "" if rr.chosen_w is None else str(rr.chosen_w),
                        ";".join(str(j) for j in rr.support),
                    )
                )


def _summarize(spec, methods, replicates) -> MetricsSummary:
    stats: dict = {}
    for m in methods:
        rows = [rr for rr in replicates if rr.method == m]
        ok = [rr for rr in rows if not rr.failed]
        ms = np.array([rr.msep for rr in ok])
        stats[m] = {
            "n_used": len(ok),
            "n_failed": len(rows) - len(ok),
            "mean_msep": float(np.mean(ms)) if ok else float("nan"),
            "sd_msep": float(np.std(ms, ddof=1)) if len(ok) > 1 else 0.0,
            "mean_right": float(np.mean([rr.right for rr in ok])) if ok else 0.0,
            "mean_wrong": float(np.mean([rr.wrong for rr in ok])) if ok else 0.0,
            "mean_seconds": float(np.mean([rr.seconds for rr in ok])) if ok else 0.0,
            "chosen_w_counts": {
                str(rr.chosen_w): sum(
                    1 for q in ok if q.chosen_w == rr.chosen_w
                )
                for rr in ok
            },
        }
    m_count = len({rr.r for rr in replicates}) if replicates else 0
    return MetricsSummary(
        spec=spec,
        methods=tuple(methods),
        n_replicates=m_count,
        replicates=tuple(replicates),
        stats=stats,
    )


def default_configs(
    spec: DesignSpec,
    methods,
    direction_set: DirectionSet | None = None,
    w_candidates: tuple[int, ...] = (10, 15, 20),
    split: tuple[int, int] | None = None,
) -> dict:
    """Per-method configs sharing one direction set (built once)."""
    if direction_set is None:
        direction_set = default_direction_set(Grid.uniform(spec.p_x, 0.0, 1.0))
    fcfg = FassmrConfig(direction_set=direction_set, w_candidates=w_candidates)
    configs: dict = {}
    for m in methods:
        if m == "iassmr":
            configs[m] = IassmrConfig(stage1=fcfg, split=split)
        else:
            configs[m] = fcfg
    return configs


def monte_carlo(
    spec: DesignSpec,
    methods,
    n_replicates: int,
    workers: int = 1,
    configs: dict | None = None,
    direction_set: DirectionSet | None = None,
    w_candidates: tuple[int, ...] = (10, 15, 20),
    split: tuple[int, int] | None = None,
    train_rows: dict | None = None,
) -> MetricsSummary:
    """Run the survey: n_replicates independent replicates per method.

    With a fixed master seed the replicate results are identical for any
    worker count, and extending n_replicates reuses the earlier streams
    unchanged.
    """
    methods = tuple(methods)
    if not methods:
        raise ValidationError("need at least one method")
    for m in methods:
        if m not in METHODS:
            raise ValidationError(
                f"unknown method {m!r}; choose from {', '.join(METHODS)}"
            )
    if n_replicates < 1:
        raise ValidationError("need at least one replicate")
    if workers < 1:
        raise ValidationError("worker count must be positive")
    if configs is None:
        configs = default_configs(
            spec, methods, direction_set=direction_set,
            w_candidates=w_candidates, split=split,
        )
    missing = [m for m in methods if m not in configs]
    if missing:
        raise ValidationError(f"no config for methods: {', '.join(missing)}")

    if workers == 1:
        batches = [
            run_replicate(spec, r, methods, configs, train_rows)
            for r in range(n_replicates)
        ]
    else:
        batches = Parallel(n_jobs=workers, backend="loky")(
            delayed(run_replicate)(spec, r, methods, configs, train_rows)
            for r in range(n_replicates)
        )
    replicates = [rr for batch in batches for rr in batch]
    return _summarize(spec, methods, replicates)
