"""Two-stage refinement: thinned-grid selection, then within-block refit.

Stage 1 runs the fast algorithm on the first subsample for each
candidate w. Stage 2 rebuilds the covariate set as the union of the
full blocks whose representatives were selected, and refits the
penalized criterion on the second, independent subsample. The w whose
second-stage model attains the lowest BIC supplies the final estimates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .directions import DirectionSet
from .errors import ValidationError
from .fassmr import (
    FassmrConfig,
    FitResult,
    ReductionScheme,
    _result_from_cell,
    _search,
    build_reduction,
    fassmr_fit,
)
from .grids import BiFunctionalDataset, SupportSet, split_dataset
from .kernels import (
    DEFAULT_QUANTILES,
    LinkSmoother,
    bandwidth_grid,
    projections,
    weights_from_projections,
)
from .scad import ScadConfig

__all__ = [
    "SecondStageSet",
    "IassmrConfig",
    "second_stage_set",
    "stage_two_fit",
    "iassmr_fit",
    "final_support",
    "write_stage_trace",
]


@dataclass(frozen=True)
class SecondStageSet:
    """Union of the full blocks selected in stage 1 (sorted indices)."""

    indices: tuple[int, ...]
    r: int = -1

    def __post_init__(self):
        idx = tuple(sorted(set(int(j) for j in self.indices)))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "r", len(idx))


@dataclass(frozen=True)
class IassmrConfig:
    """Two-stage settings.

    split defaults to halves of the available rows. Stage-2 tuning
    grids default to the stage-1 ones.
    """

    stage1: FassmrConfig
    split: tuple[int, int] | None = None
    stage2_scad: ScadConfig | None = None
    stage2_bandwidth_quantiles: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.split is not None:
            n1, n2 = int(self.split[0]), int(self.split[1])
            if n1 < 2 or n2 < 2:
                raise ValidationError("both split sizes must be at least 2")
            object.__setattr__(self, "split", (n1, n2))

    def resolved_split(self, n: int) -> tuple[int, int]:
        if self.split is not None:
            return self.split
        n1 = n // 2
        n2 = n - n1
        if n1 < 2 or n2 < 2:
            raise ValidationError("need at least 4 rows to split into halves")
        return n1, n2

    @property
    def scad2(self) -> ScadConfig:
        return self.stage2_scad if self.stage2_scad is not None else self.stage1.scad

    @property
    def quantiles2(self) -> tuple[float, ...]:
        if self.stage2_bandwidth_quantiles is not None:
            return self.stage2_bandwidth_quantiles
        return self.stage1.bandwidth_quantiles


def second_stage_set(
    scheme: ReductionScheme, selected_k
) -> SecondStageSet:
    """Full blocks for every selected block index (0-based ks)."""
    ks = sorted(set(int(k) for k in selected_k))
    if ks and not (0 <= ks[0] and ks[-1] < scheme.w):
        raise ValidationError(
            f"selected block indices must lie in 0..{scheme.w - 1}"
        )
    idx: list[int] = []
    for k in ks:
        idx.extend(scheme.block_range(k))
    return SecondStageSet(indices=tuple(idx), r=len(idx))


def stage_two_fit(
    data2: BiFunctionalDataset,
    columns,
    direction_set: DirectionSet,
    bandwidth_quantiles=None,
    scad: ScadConfig | None = None,
) -> FitResult:
    """Penalized refit on the second subsample over the given columns.

    Depends on stage 1 only through `columns`; exposed separately so the
    two stages stay decoupled.
    """
    cols = np.asarray(sorted(set(int(j) for j in columns)), dtype=np.intp)
    if cols.size == 0:
        raise ValidationError("stage-2 column set must be nonempty")
    if cols[0] < 0 or cols[-1] >= data2.zeta_grid.p:
        raise ValidationError("stage-2 columns outside the zeta grid")
    cfg = FassmrConfig(
        direction_set=direction_set,
        w_candidates=(1,),
        bandwidth_quantiles=(
            tuple(bandwidth_quantiles)
            if bandwidth_quantiles is not None
            else DEFAULT_QUANTILES
        ),
        scad=scad if scad is not None else ScadConfig(),
    )
    best = _search(data2, cfg, restrict_columns=cols)
    best["theta"] = direction_set[best["theta_index"]]
    return _result_from_cell(data2, best, method="iassmr")


def _fsim_only_fit(
    data2: BiFunctionalDataset,
    direction_set: DirectionSet,
    quantiles,
) -> FitResult:
    """Fallback when no linear covariates survive: pure single-index fit.

    Selects (theta, h) by the same BIC with zero linear degrees of
    freedom: n ln(||(I - W) y||^2 / n).
    """
    n = data2.n
    y = data2.y
    best = None
    for ti, theta in enumerate(direction_set):
        u = projections(data2.x, data2.x_grid, theta)
        hs = bandwidth_grid(u, quantiles)
        for h in hs:
            wmat = weights_from_projections(u, theta, float(h))
            resid = y - wmat.w @ y
            rss = float(resid @ resid)
            bic = float(n * np.log(rss / n)) if rss > 0 else -np.inf
            if best is None or bic < best["bic"]:
                best = {"bic": bic, "theta_index": ti, "h": float(h), "u": u}
    theta = direction_set[best["theta_index"]]
    link = LinkSmoother(
        theta=theta, h=best["h"], train_proj=best["u"], residuals=y.copy()
    )
    return FitResult(
        beta_full=np.zeros(data2.zeta_grid.p),
        support=SupportSet(()),
        theta_hat=theta,
        chosen={
            "w": None,
            "h": best["h"],
            "lambda": None,
            "bic": best["bic"],
            "theta_index": int(best["theta_index"]),
        },
        link_state=link,
        zeta_grid=data2.zeta_grid,
        x_grid=data2.x_grid,
        method="iassmr",
        converged=True,
        all_cells_converged=True,
        degenerate=True,
    )


def iassmr_fit(data: BiFunctionalDataset, config: IassmrConfig) -> FitResult:
    """Two-stage fit with the nested BIC over w.

    For each candidate w, stage 1 selects representatives on the first
    subsample (its own BIC over theta, h, lambda); the union of the
    selected blocks defines the stage-2 covariates, refit on the second
    subsample with a fresh BIC search. The final model is the stage-2
    winner across w; its stage trace is attached to the result.
    """
    n1, n2 = config.resolved_split(data.n)
    if n1 + n2 > data.n:
        raise ValidationError(
            f"split {n1}+{n2} exceeds the {data.n} available rows"
        )
    e1, e2 = split_dataset(data, (n1, n2))
    directions = config.stage1.direction_set
    trace: list[dict] = []
    best = None
    for w in config.stage1.w_candidates:
        cfg_w = replace(config.stage1, w_candidates=(w,))
        fit1 = fassmr_fit(e1, cfg_w)
        scheme = build_reduction(data.zeta_grid.p, w)
        rep_pos = {rep: k for k, rep in enumerate(scheme.reps)}
        selected_k = sorted(rep_pos[j] for j in fit1.support.indices)
        r2 = second_stage_set(scheme, selected_k)
        row = {
            "w": int(w),
            "stage1_support": list(fit1.support.indices),
            "stage1_chosen": dict(fit1.chosen),
            "r": r2.r,
            "second_stage_indices": list(r2.indices),
            "stage2_chosen": None,
            "stage2_bic": None,
        }
        if r2.r > 0:
            fit2 = stage_two_fit(
                e2, r2.indices, directions, config.quantiles2, config.scad2
            )
            chosen2 = dict(fit2.chosen)
            chosen2["w"] = int(w)
            fit2 = replace(fit2, chosen=chosen2)
            row["stage2_chosen"] = chosen2
            row["stage2_bic"] = chosen2["bic"]
            if best is None or chosen2["bic"] < best.chosen["bic"]:
                best = fit2
        trace.append(row)
    if best is None:
        best = _fsim_only_fit(e2, directions, config.quantiles2)
    return replace(best, stage_trace=tuple(trace))


def final_support(fit: FitResult) -> SupportSet:
    """Selected full-grid indices of a two-stage fit."""
    if fit.method != "iassmr":
        raise ValidationError("final_support expects a two-stage fit result")
    return fit.support


def write_stage_trace(fit: FitResult, path: str) -> None:
    """Per-w stage records as JSON (stage-1 support, set size, stage-2 BIC)."""
    if fit.method != "iassmr":
        raise ValidationError("stage trace exists only for two-stage fits")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"stages": list(fit.stage_trace)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
