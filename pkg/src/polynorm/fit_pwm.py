"""Coefficient estimation by probability-weighted-moment matching.

The first n+1 PWMs beta_r = E[F(X)^r X] of the target are equated with
those of the polynomial model, which are linear in the coefficients:
beta_r = sum_k a_k * E[Phi(Z)^r Z^k]. Assembling the (n+1)x(n+1) matrix
of normal PWM integrals and solving the linear system yields the
coefficients in one shot.

The matrix becomes numerically singular fast as the order grows (its
determinant falls below 1e-36 by order 12), so fits above degree 12 for
analytic targets (degree 9 for sample-estimated PWMs, which carry
sampling noise on top) are refused unless explicitly overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .distributions import TargetDistribution
from .errors import (
    ConditioningError,
    DomainError,
    InsufficientSampleError,
    IntegrationError,
)
from .numerics import (
    QuadratureSpec,
    integrate,
    lu_diagnostics,
    normal_cdf,
    normal_pdf,
    solve_linear_diagnostics,
)
from .poly_model import MAX_DEGREE, PolynomialModel

__all__ = [
    "PwmVector",
    "NormalPwmMatrix",
    "pwm_from_distribution",
    "pwm_from_sample",
    "normal_pwm_matrix",
    "fit_pwm",
    "fit_pwm_distribution",
    "fit_pwm_sample",
    "model_pwms",
]

# The matrix entries span ~1e-2 .. 1e3, so a tight relative tolerance is
# what keeps the ill-conditioned solves reproducible.
MATRIX_QUADRATURE = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12,
                                   normal_truncation=8.5, max_subdivisions=300)

MAX_ANALYTIC_DEGREE = 12
MAX_SAMPLE_DEGREE = 9


@dataclass(frozen=True)
class PwmVector:
    """beta_0 .. beta_n of a marginal, with their provenance."""

    beta: tuple[float, ...]
    provenance: str = "analytic"  # "analytic" | "sample"
    sample_size: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.provenance not in ("analytic", "sample"):
            raise DomainError(f"provenance must be 'analytic' or 'sample', got {self.provenance!r}")
        if any(not math.isfinite(b) for b in self.beta):
            raise DomainError("PWM entries must be finite")

    @property
    def order(self) -> int:
        return len(self.beta) - 1


@dataclass(frozen=True, eq=False)
class NormalPwmMatrix:
    """Matrix of normal PWM integrals M[r][k] = E[Phi(Z)^r Z^k].

    ``det`` and ``pivot_ratio`` come from the pivoted LU factorization
    used for solving, and double as the conditioning diagnostic.
    """

    order: int
    entries: np.ndarray = field(repr=False)
    det: float
    pivot_ratio: float


def _check_degree(n: int) -> None:
    if n < 1 or int(n) != n:
        raise DomainError(f"order must be an integer >= 1, got {n}")
    if n > MAX_DEGREE:
        raise DomainError(f"order {n} exceeds the cap of {MAX_DEGREE}")


@lru_cache(maxsize=4096)
def _matrix_entry(r: int, k: int, abs_tol: float, rel_tol: float,
                  trunc: float, max_sub: int) -> float:
    spec = QuadratureSpec(abs_tol, rel_tol, trunc, max_sub)
    sign = -1.0 if k % 2 else 1.0

    def integrand(z: float) -> float:
        # folded onto [0, T]: the z -> -z half contributes
        # (-1)^k (1 - Phi(z))^r, which kills the cancellation between
        # antisymmetric halves (and is exactly zero pointwise when the
        # whole integral vanishes by parity)
        return ((normal_cdf(z) ** r + sign * normal_cdf(-z) ** r)
                * z ** k * normal_pdf(z))

    try:
        return integrate(integrand, 0.0, trunc, spec)
    except IntegrationError as exc:
        raise IntegrationError(
            f"normal PWM integral failed at (r={r}, k={k}): {exc}",
            estimate=exc.estimate, estimated_error=exc.estimated_error) from exc


def normal_pwm_matrix(n: int, spec: QuadratureSpec = MATRIX_QUADRATURE) -> NormalPwmMatrix:
    """Assemble the (n+1)x(n+1) matrix of E[Phi(Z)^r Z^k] integrals."""
    _check_degree(n)
    entries = np.empty((n + 1, n + 1))
    for r in range(n + 1):
        for k in range(n + 1):
            entries[r, k] = _matrix_entry(
                r, k, spec.abs_tol, spec.rel_tol,
                spec.normal_truncation, spec.max_subdivisions)
    det, pivot_ratio = lu_diagnostics(entries)
    return NormalPwmMatrix(order=n, entries=entries, det=det,
                           pivot_ratio=pivot_ratio)


def pwm_from_distribution(d: TargetDistribution, n: int,
                          spec: QuadratureSpec = MATRIX_QUADRATURE) -> PwmVector:
    """First n+1 PWMs of a marginal: beta_r = int_0^1 F^{-1}(p) p^r dp.

    Integrated in probit coordinates (p = Phi(t), t over the truncated
    normal window): the density weight tames quantile divergence at the
    endpoints, which direct p-integration handles poorly for heavy
    upper tails.
    """
    _check_degree(n)
    T = spec.normal_truncation
    p_hi = np.nextafter(1.0, 0.0)  # Phi(t) rounds to 1.0 beyond t ~ 8.2

    betas = []
    for r in range(n + 1):
        def integrand(t: float, _r: int = r) -> float:
            p = min(max(normal_cdf(t), 1e-300), p_hi)
            return d.quantile(p) * p ** _r * normal_pdf(t)

        try:
            betas.append(integrate(integrand, -T, T, spec, breakpoints=(0.0,)))
        except IntegrationError as exc:
            tail = "upper" if r else "either"
            raise IntegrationError(
                f"PWM integral beta_{r} of {d.label()} diverged (check the "
                f"{tail} tail): {exc}",
                estimate=exc.estimate, estimated_error=exc.estimated_error) from exc

    mu, _ = d.moments()
    if abs(betas[0] - mu) > 1e-8 * max(1.0, abs(mu)):
        raise IntegrationError(
            f"beta_0 = {betas[0]!r} disagrees with the mean {mu!r} of "
            f"{d.label()}; quadrature is suspect",
            estimate=betas[0], estimated_error=abs(betas[0] - mu))
    return PwmVector(beta=tuple(betas), provenance="analytic")


def pwm_from_sample(x, n: int) -> PwmVector:
    """Unbiased sample PWMs from an (unsorted) 1-D sample.

    With the order statistics x_(1) <= ... <= x_(m),
    beta_r = (1/m) sum_{i>r} [(i-1)...(i-r)] / [(m-1)...(m-r)] x_(i).
    The weights are built by incremental ratio products, never forming
    factorials, so any m fits in double precision.
    """
    _check_degree(n)
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    m = xs.size
    if m <= n:
        raise InsufficientSampleError(
            f"need at least {n + 1} observations for order {n}, got {m}")
    if not np.all(np.isfinite(xs)):
        raise DomainError("sample contains non-finite values")

    i = np.arange(1, m + 1, dtype=float)
    weights = np.ones(m)
    betas = [float(xs.mean())]
    for r in range(1, n + 1):
        weights = weights * (i - r) / (m - r)
        betas.append(float(np.mean(weights * xs)))
    return PwmVector(beta=tuple(betas), provenance="sample", sample_size=m)


def fit_pwm(target: PwmVector, matrix: NormalPwmMatrix,
            allow_high_degree: bool = False) -> PolynomialModel:
    """Solve M a = beta for the model coefficients.

    Refuses degrees beyond the recommended caps (12 analytic / 9
    sample-based) unless ``allow_high_degree``, and refuses outright when
    the pivot ratio signals singularity at working precision.
    """
    n = target.order
    if matrix.order != n:
        raise DomainError(
            f"PWM order {n} does not match matrix order {matrix.order}")
    cap = MAX_SAMPLE_DEGREE if target.provenance == "sample" else MAX_ANALYTIC_DEGREE
    if n > cap and not allow_high_degree:
        raise ConditioningError(
            f"degree {n} exceeds the recommended cap of {cap} for "
            f"{target.provenance} PWMs (determinant {matrix.det:.3e}); "
            "pass allow_high_degree=True to override",
            det=matrix.det, pivot_ratio=matrix.pivot_ratio)
    if matrix.pivot_ratio < 1e-14:
        raise ConditioningError(
            f"normal PWM matrix of order {n} is singular to working "
            f"precision (det {matrix.det:.3e}, pivot ratio "
            f"{matrix.pivot_ratio:.3e})",
            det=matrix.det, pivot_ratio=matrix.pivot_ratio)

    coeffs, det, pivot_ratio = solve_linear_diagnostics(
        matrix.entries, np.asarray(target.beta))
    residual = matrix.entries @ coeffs - np.asarray(target.beta)
    trunc = MATRIX_QUADRATURE.normal_truncation
    prange = (float(normal_cdf(-trunc)), float(min(normal_cdf(trunc), np.nextafter(1.0, 0.0))))
    return PolynomialModel(
        coeffs=tuple(coeffs),
        fit_method="pwm",
        probit_range=prange,
        conditioning={
            "det": det,
            "pivot_ratio": pivot_ratio,
            "residual_norm": float(np.linalg.norm(residual)),
            "provenance": target.provenance,
        },
    )


def fit_pwm_distribution(d: TargetDistribution, degree: int,
                         spec: QuadratureSpec = MATRIX_QUADRATURE,
                         allow_high_degree: bool = False) -> PolynomialModel:
    """Convenience: PWMs + matrix + solve for an analytic marginal."""
    target = pwm_from_distribution(d, degree, spec)
    matrix = normal_pwm_matrix(degree, spec)
    model = fit_pwm(target, matrix, allow_high_degree=allow_high_degree)
    return replace(model, source=d.label())


def fit_pwm_sample(x, degree: int,
                   allow_high_degree: bool = False) -> PolynomialModel:
    """Convenience: sample PWMs + matrix + solve."""
    target = pwm_from_sample(x, degree)
    matrix = normal_pwm_matrix(degree)
    model = fit_pwm(target, matrix, allow_high_degree=allow_high_degree)
    return replace(model, source=f"sample[m={target.sample_size}]")


def model_pwms(model: PolynomialModel, matrix: NormalPwmMatrix) -> np.ndarray:
    """PWMs implied by a model: beta = M a (for self-consistency checks)."""
    a = np.zeros(matrix.order + 1)
    take = min(len(model.coeffs), matrix.order + 1)
    a[:take] = model.coeffs[:take]
    return matrix.entries @ a
