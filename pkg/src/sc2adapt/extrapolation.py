"""Thermodynamic- and continuum-limit fits with uncertainty estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit


class FitError(ValueError):
    """Too few points for the requested fit."""


@dataclass(frozen=True)
class SeriesPoint:
    x: float
    y: float
    y_err: float = 0.0

    def __post_init__(self):
        if self.y_err < 0:
            raise ValueError("y_err must be non-negative")


@dataclass
class FitResult:
    limit: float
    uncertainty: float
    model_tag: str
    coefficients: list[float]
    residuals: list[float] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "limit": self.limit,
            "uncertainty": self.uncertainty,
            "model_tag": self.model_tag,
            "coefficients": list(self.coefficients),
            "residuals": list(self.residuals),
            "details": dict(self.details),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        return cls(**data)


def _unpack(points):
    pts = [p if isinstance(p, SeriesPoint) else SeriesPoint(*p) for p in points]
    x = np.array([p.x for p in pts], dtype=float)
    if len(np.unique(x)) != len(x):
        raise ValueError("x values must be distinct within a series")
    y = np.array([p.y for p in pts], dtype=float)
    err = np.array([p.y_err for p in pts], dtype=float)
    return x, y, err


def weighted_lstsq(design: np.ndarray, y: np.ndarray, y_err: np.ndarray | None = None):
    """Linear least squares returning ``(coef, cov, residuals)``.

    Points are weighted by ``1/y_err**2`` when every error is positive;
    otherwise the fit is ordinary least squares.  The covariance is scaled by
    the reduced chi-square, so it vanishes for data that the model reproduces
    exactly, and is zero when there are no degrees of freedom left.
    """
    n, p = design.shape
    if n < p:
        raise FitError(f"{n} points cannot determine {p} parameters")
    if y_err is not None and len(y_err) and np.all(y_err > 0):
        w = 1.0 / y_err
    else:
        w = np.ones(n)
    A = design * w[:, None]
    b = y * w
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = y - design @ coef
    dof = n - p
    if dof > 0:
        chi2 = float(np.sum((w * resid) ** 2))
        cov = np.linalg.pinv(A.T @ A) * (chi2 / dof)
    else:
        cov = np.zeros((p, p))
    return coef, cov, resid


def _inverse_design(x, order):
    return np.vstack([x ** (-k) for k in range(order + 1)]).T


def fit_thermodynamic(points, family: str = "inverse") -> FitResult:
    """Infinite-volume limit of an observable measured at several volumes.

    ``family="inverse"`` fits ``c0 + c1/N`` and ``c0 + c1/N + c2/N^2``; the
    limit is the quadratic intercept and the uncertainty is the larger of the
    linear/quadratic spread and the quadratic intercept's standard error.
    ``family="exponential"`` fits ``c0 + c1 exp(-N / xi)`` instead.
    """
    x, y, err = _unpack(points)
    if family == "exponential":
        return _fit_exponential(x, y, err)
    if family != "inverse":
        raise ValueError(f"unknown thermodynamic fit family {family!r}")
    if len(x) < 3:
        raise FitError("thermodynamic fit needs at least 3 volumes")
    lin, _, _ = weighted_lstsq(_inverse_design(x, 1), y, err)
    quad, cov, resid = weighted_lstsq(_inverse_design(x, 2), y, err)
    spread = abs(lin[0] - quad[0])
    stderr = float(np.sqrt(max(cov[0, 0], 0.0)))
    return FitResult(
        limit=float(quad[0]),
        uncertainty=float(max(spread, stderr)),
        model_tag="c0 + c1/N + c2/N^2",
        coefficients=[float(c) for c in quad],
        residuals=[float(r) for r in resid],
        details={"linear_coefficients": [float(c) for c in lin], "spread": float(spread),
                 "stderr": stderr},
    )


def _fit_exponential(x, y, err):
    if len(x) < 4:
        raise FitError("exponential thermodynamic fit needs at least 4 volumes")
    sigma = err if np.all(err > 0) else None

    def model(n, c0, c1, xi):
        return c0 + c1 * np.exp(-n / xi)

    p0 = (y[np.argmax(x)], y[np.argmin(x)] - y[np.argmax(x)], max(np.ptp(x), 1.0) / 2)
    coef, cov = curve_fit(model, x, y, p0=p0, sigma=sigma, maxfev=20000)
    resid = y - model(x, *coef)
    return FitResult(
        limit=float(coef[0]),
        uncertainty=float(np.sqrt(max(cov[0, 0], 0.0))) if np.all(np.isfinite(cov)) else float("inf"),
        model_tag="c0 + c1*exp(-N/xi)",
        coefficients=[float(c) for c in coef],
        residuals=[float(r) for r in resid],
    )


def fit_continuum(points, degree: int = 2) -> FitResult:
    """Weighted polynomial fit in ``ag``; the limit is the intercept at ``ag = 0``."""
    x, y, err = _unpack(points)
    if len(x) < degree + 2:
        raise FitError(f"degree-{degree} continuum fit needs at least {degree + 2} points")
    design = np.vander(x, degree + 1, increasing=True)
    coef, cov, resid = weighted_lstsq(design, y, err)
    return FitResult(
        limit=float(coef[0]),
        uncertainty=float(np.sqrt(max(cov[0, 0], 0.0))),
        model_tag=f"poly{degree}(ag)",
        coefficients=[float(c) for c in coef],
        residuals=[float(r) for r in resid],
        details={"covariance": cov.tolist()},
    )


def evaluate_fit(fit: FitResult, x) -> np.ndarray:
    """Evaluate a fitted curve at ``x``."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(fit.coefficients)
    if fit.model_tag.startswith("poly"):
        return np.polynomial.polynomial.polyval(x, c)
    if fit.model_tag.startswith("c0 + c1/N"):
        return sum(ck * x ** (-k) for k, ck in enumerate(c))
    if fit.model_tag.startswith("c0 + c1*exp"):
        return c[0] + c[1] * np.exp(-x / c[2])
    raise ValueError(f"cannot evaluate model {fit.model_tag!r}")


def fit_band(fit: FitResult, x) -> np.ndarray:
    """One-sigma band of a polynomial fit from its parameter covariance."""
    x = np.asarray(x, dtype=float)
    cov = np.asarray(fit.details.get("covariance", []))
    if cov.size == 0:
        return np.zeros_like(x)
    V = np.vander(np.atleast_1d(x), len(fit.coefficients), increasing=True)
    return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", V, cov, V), 0.0))
