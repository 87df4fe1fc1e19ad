"""Fit-quality diagnostics.

The headline metric is the absolute relative quantile error in percent,

    eps_p = |x*_p - x_p| / |x_p| * 100,

swept over an even probability grid. Points where the target quantile is
(numerically) zero are excluded from the ratios and counted instead, so
aggregate numbers stay comparable across targets whose support crosses
zero. ``density_compare`` produces the binned empirical-vs-analytic
density table behind the usual overlay plots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import TargetDistribution
from .errors import DomainError
from .poly_model import PolynomialModel
from .numerics import normal_quantile
from .sampler import RngSpec, normal_stream

__all__ = ["FitReport", "epsilon_report", "density_compare", "DensityTable"]


@dataclass(frozen=True)
class FitReport:
    """Aggregated eps_p sweep over a probability grid."""

    probit_range: tuple[float, float]
    grid_size: int
    eps_avg: float
    eps_min: float
    eps_max: float
    skipped_points: int
    table: np.ndarray | None = field(default=None, repr=False, compare=False)
    # table columns: p, x_target, x_model, eps_percent (skipped rows hold NaN eps)

    def to_json_dict(self) -> dict:
        return {
            "probit_range": list(self.probit_range),
            "grid_size": self.grid_size,
            "eps_avg_percent": self.eps_avg,
            "eps_min_percent": self.eps_min,
            "eps_max_percent": self.eps_max,
            "skipped_points": self.skipped_points,
        }


def epsilon_report(model: PolynomialModel, d: TargetDistribution,
                   probit_range: tuple[float, float] | None = None,
                   grid: int = 10_000,
                   include_table: bool = False) -> FitReport:
    """Sweep eps_p on an even grid of ``grid`` probabilities.

    ``probit_range`` defaults to the model's fitted range. The grid is
    even in probability (not in z). Zero-quantile guard: points with
    |x_p| < 1e-12 * sigma are skipped and counted.
    """
    if probit_range is None:
        probit_range = model.probit_range
    if probit_range is None:
        raise DomainError("no probit_range on the model; pass one explicitly")
    lo, hi = probit_range
    if not (0.0 < lo < hi < 1.0):
        raise DomainError(f"probit range must satisfy 0 < lo < hi < 1, got {probit_range}")
    if grid < 2:
        raise DomainError(f"grid must be >= 2, got {grid}")

    p = np.linspace(lo, hi, grid)
    x_target = d.quantile_array(p)
    x_model = model.transform(normal_quantile(p))

    _, sigma = d.moments()
    usable = np.abs(x_target) >= 1e-12 * sigma
    skipped = int(np.count_nonzero(~usable))
    if not np.any(usable):
        raise DomainError("all grid points fall on a zero target quantile")

    eps = np.full(grid, np.nan)
    eps[usable] = np.abs((x_model[usable] - x_target[usable])
                         / x_target[usable]) * 100.0
    eps_used = eps[usable]

    table = None
    if include_table:
        table = np.column_stack([p, x_target, x_model, eps])
    return FitReport(
        probit_range=(float(lo), float(hi)),
        grid_size=grid,
        eps_avg=float(np.mean(eps_used)),
        eps_min=float(np.min(eps_used)),
        eps_max=float(np.max(eps_used)),
        skipped_points=skipped,
        table=table,
    )


@dataclass(frozen=True)
class DensityTable:
    """Histogram of generated values next to the analytic density."""

    edges: np.ndarray
    empirical: np.ndarray  # per-bin empirical density of the model sample
    analytic: np.ndarray   # target pdf at bin centers
    draws: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def density_compare(model: PolynomialModel, d: TargetDistribution,
                    bins: int = 50, draws: int = 1_000_000,
                    seed: int = 0) -> DensityTable:
    """Empirical density of the transformed normal sample vs the target pdf.

    Deterministic for a fixed seed. Bin edges span the central 99.9% of
    the target, so a few stray tail draws land outside and are dropped
    from the normalization denominator deliberately kept at ``draws``.
    """
    if draws < bins * 100:
        raise DomainError(f"need draws >= bins * 100, got {draws} for {bins} bins")
    z = normal_stream(RngSpec(seed=seed), draws)
    x = model.transform(z)
    lo = d.quantile(5e-4)
    hi = d.quantile(1.0 - 5e-4)
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    widths = np.diff(edges)
    empirical = counts / (draws * widths)
    analytic = d.pdf(0.5 * (edges[1:] + edges[:-1]))
    return DensityTable(edges=edges, empirical=empirical,
                        analytic=np.asarray(analytic, dtype=float), draws=draws)
