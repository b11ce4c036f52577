"""Projection semimetric, Epanechnikov weights, and the link smoother.

The single-index structure reduces every curve to its projection on a
direction theta; distances between projections drive Nadaraya-Watson
weight matrices, the profiling transform (I - W), and the residual
smoother that estimates the link function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .directions import Direction, render_matrix
from .errors import BandwidthError, ValidationError
from .grids import Curve, Grid

__all__ = [
    "KernelSpec",
    "WeightMatrix",
    "TransformedDesign",
    "LinkEstimate",
    "LinkSmoother",
    "epanechnikov",
    "semimetric",
    "projections",
    "nw_weights",
    "weights_from_projections",
    "transform",
    "bandwidth_grid",
    "estimate_link",
]

DEFAULT_QUANTILES = tuple(np.round(np.arange(0.05, 0.501, 0.05), 2))


def epanechnikov(u: np.ndarray) -> np.ndarray:
    """K(u) = 0.75 (1 - u^2) on [0, 1], zero elsewhere (distance ratios)."""
    u = np.asarray(u, dtype=np.float64)
    return np.where((u >= 0.0) & (u <= 1.0), 0.75 * (1.0 - u * u), 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family acting on nonnegative distance ratios."""

    family: str = "epanechnikov"

    def __post_init__(self):
        if self.family != "epanechnikov":
            raise ValidationError(f"unsupported kernel family {self.family!r}")

    def __call__(self, u) -> np.ndarray:
        return epanechnikov(u)


@dataclass(frozen=True)
class WeightMatrix:
    """Row-stochastic Nadaraya-Watson weight matrix for one (theta, h)."""

    w: np.ndarray
    theta: Direction
    h: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError("weight matrix must be square")
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class TransformedDesign:
    """Profiled responses and covariates: (I - W) applied to y and Z."""

    y_tilde: np.ndarray
    z_tilde: np.ndarray


def semimetric(theta: Direction, chi1: Curve, chi2: Curve) -> float:
    """Projection distance |<theta, chi1 - chi2>|."""
    if chi1.grid != chi2.grid:
        raise ValidationError("semimetric requires curves on the same grid")
    vals = theta.values_on(chi1.grid)
    diff = chi1.values - chi2.values
    return float(abs(np.dot(chi1.grid.quad_weights, vals * diff)))


def projections(x: np.ndarray, grid: Grid, theta: Direction) -> np.ndarray:
    """Projections <theta, x_i> for every row of an (n, p) curve matrix."""
    vals = render_matrix(theta.basis, grid) @ theta.coeffs
    return x @ (grid.quad_weights * vals)


def _as_matrix(x_samples, grid: Grid | None) -> tuple[np.ndarray, Grid]:
    if isinstance(x_samples, np.ndarray):
        if grid is None:
            raise ValidationError("a grid is required with a raw curve matrix")
        return x_samples, grid
    curves = list(x_samples)
    if not curves:
        raise ValidationError("need at least one curve")
    g = curves[0].grid
    for c in curves[1:]:
        if c.grid != g:
            raise ValidationError("all curves must share a grid")
    return np.stack([c.values for c in curves]), g


def nw_weights(
    x_samples,
    theta: Direction,
    h: float,
    kernel: KernelSpec = KernelSpec(),
    grid: Grid | None = None,
) -> WeightMatrix:
    """Nadaraya-Watson weights among training curves.

    Row i holds the kernel weights of every sample relative to sample i.
    The diagonal distance is zero, so K(0) = 3/4 keeps every row sum
    positive and the matrix exactly row-stochastic after normalization.
    """
    if not (h > 0):
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    x, g = _as_matrix(x_samples, grid)
    u = projections(x, g, theta)
    return weights_from_projections(u, theta, h, kernel)


def weights_from_projections(
    u: np.ndarray, theta: Direction, h: float, kernel: KernelSpec = KernelSpec()
) -> WeightMatrix:
    if not (h > 0):
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    d = np.abs(u[:, None] - u[None, :])
    k = kernel(d / h)
    w = k / k.sum(axis=1, keepdims=True)
    return WeightMatrix(w=w, theta=theta, h=float(h))


def transform(w: WeightMatrix, y: np.ndarray, z: np.ndarray) -> TransformedDesign:
    """Apply (I - W) to the response vector and each covariate column."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64)
    n = w.w.shape[0]
    if y.shape[0] != n or z.shape[0] != n:
        raise ValidationError("transform dimensions do not agree")
    y_tilde = y - w.w @ y
    z_tilde = z - w.w @ z
    return TransformedDesign(y_tilde=y_tilde, z_tilde=z_tilde)


def bandwidth_grid(u: np.ndarray, quantiles=DEFAULT_QUANTILES) -> np.ndarray:
    """Bandwidth candidates: quantiles of pairwise projection distances.

    Zero quantiles (possible under ties) are dropped; if every pairwise
    distance is zero the single fallback bandwidth 1.0 is returned, which
    makes the kernel uniform.
    """
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.size < 2:
        return np.array([1.0])
    iu = np.triu_indices(u.size, k=1)
    d = np.abs(u[:, None] - u[None, :])[iu]
    hs = np.quantile(d, np.asarray(quantiles, dtype=np.float64))
    hs = np.unique(hs[hs > 0])
    if hs.size == 0:
        return np.array([1.0])
    return hs


@dataclass(frozen=True)
class LinkEstimate:
    """A link-function value plus an extrapolation flag."""

    value: float
    extrapolated: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class LinkSmoother:
    """Residual smoother state: everything estimate_link needs at predict time.

    Fields
    ------
    theta : Direction
        Fitted direction.
    h : float
        Bandwidth reused from the profiling transform.
    train_proj : ndarray
        Projections of the training x curves on theta.
    residuals : ndarray
        Training residuals Y_i - zeta_i^T beta_hat.
    """

    theta: Direction
    h: float
    train_proj: np.ndarray
    residuals: np.ndarray
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def predict_at(self, u0: float) -> LinkEstimate:
        d = np.abs(self.train_proj - u0)
        k = self.kernel(d / self.h)
        s = k.sum()
        if s <= 0.0:
            j = int(np.argmin(d))
            return LinkEstimate(value=float(self.residuals[j]), extrapolated=True)
        return LinkEstimate(value=float(np.dot(k, self.residuals) / s))

    def predict(self, chi: Curve) -> LinkEstimate:
        # same factor ordering as projections() so single-curve and batch
        # predictions agree bitwise
        u0 = float(
            chi.values @ (chi.grid.quad_weights * self.theta.values_on(chi.grid))
        )
        return self.predict_at(u0)

    def predict_many(self, x: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        # row-wise dots rather than one matrix product: each row then takes
        # exactly the same floating-point path as predict() on that curve
        wvals = grid.quad_weights * self.theta.values_on(grid)
        x = np.asarray(x, dtype=np.float64)
        vals = np.empty(x.shape[0])
        extra = np.zeros(x.shape[0], dtype=bool)
        for i in range(x.shape[0]):
            est = self.predict_at(float(x[i] @ wvals))
            vals[i] = est.value
            extra[i] = est.extrapolated
        return vals, extra


def estimate_link(
    train,
    beta_hat: np.ndarray,
    theta_hat: Direction,
    h: float,
    chi: Curve,
    kernel: KernelSpec = KernelSpec(),
) -> LinkEstimate:
    """Nadaraya-Watson smooth of linear-part residuals at a new curve.

    Parameters
    ----------
    train : BiFunctionalDataset
        Training data supplying zeta, x, and y.
    beta_hat : ndarray
        Full-grid linear coefficients indexed on the zeta grid.
    theta_hat : Direction
        Direction defining the projection semimetric.
    h : float
        Bandwidth (the one selected for the profiling transform).
    chi : Curve
        New x curve to evaluate the link at.

    When no training projection falls within h of the new projection the
    nearest training point supplies the value and the estimate is
    flagged extrapolated.
    """
    if not (h > 0):
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    beta_hat = np.asarray(beta_hat, dtype=np.float64).reshape(-1)
    if beta_hat.shape[0] != train.zeta_grid.p:
        raise ValidationError("beta_hat length must match the zeta grid")
    residuals = train.y - train.zeta @ beta_hat
    u_train = projections(train.x, train.x_grid, theta_hat)
    smoother = LinkSmoother(
        theta=theta_hat, h=float(h), train_proj=u_train, residuals=residuals,
        kernel=kernel,
    )
    return smoother.predict(chi)
