"""Correlation mapping between the transformed variables and their
underlying standard normal drivers.

For X1 = P1(Z1), X2 = P2(Z2) with (Z1, Z2) bivariate standard normal at
correlation rho_z, the product moment E[X1 X2] is a degree-n polynomial
in rho_z whose coefficients are bilinear in the model coefficients: each
cross moment E[Z1^i Z2^j] is itself a polynomial in rho_z with integer
coefficients (zero for mixed parity). Matching

    rho_x sigma1 sigma2 + mu1 mu2 = sum_i b_i rho_z^i

therefore reduces the usual double-integral equation to a scalar
polynomial root problem on [-1, 1].

The normalized map g(rho_z) = (sum b_i rho_z^i - mu1 mu2) / (sigma1 sigma2)
satisfies g(0) = 0 and is nondecreasing for transformation pairs of
interest; both properties are validated on construction. mu/sigma are
the model-implied moments, not the target's: that keeps g(0) = 0 exact
for the polynomial actually sampled, so generated correlations converge
to the requested rho_x even when the marginal fit is imperfect.

The unique root in [-1, 1] is found by monotone bracketing; polynomial
companion-matrix root finding is deliberately avoided (degree-19 root
sets are ill-conditioned, and only the one bracketed root matters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateMarginalError,
    DomainError,
    InfeasibleCorrelationError,
    MonotonicityError,
    NotPositiveDefiniteError,
)
from .numerics import cholesky, find_root_monotone
from .poly_model import MAX_DEGREE, PolynomialModel

__all__ = [
    "bivariate_normal_moment",
    "build_rho_polynomial",
    "RhoPolynomial",
    "rho_x_bounds",
    "solve_rho_z",
    "build_Rz",
    "nearest_positive_definite",
]


@lru_cache(maxsize=1024)
def _cross_moment_int_coeffs(i: int, j: int) -> tuple[int, ...]:
    """Integer coefficients (ascending in rho_z) of E[Z1^i Z2^j].

    Even/even exponents produce even powers of rho_z, odd/odd produce
    odd powers, mixed parity vanishes. Computed in exact integer
    arithmetic; the largest factor (19!) still converts to double
    exactly.
    """
    if (i + j) % 2 == 1:
        return (0,)
    out = [0] * (min(i, j) + 1)
    if i % 2 == 0:
        s, t = i // 2, j // 2
        for m in range(min(s, t) + 1):
            num = (math.factorial(2 * s) * math.factorial(2 * t) * 4 ** m)
            den = (2 ** (s + t) * math.factorial(s - m)
                   * math.factorial(t - m) * math.factorial(2 * m))
            assert num % den == 0
            out[2 * m] = num // den
    else:
        s, t = (i - 1) // 2, (j - 1) // 2
        for m in range(min(s, t) + 1):
            num = (math.factorial(2 * s + 1) * math.factorial(2 * t + 1) * 4 ** m)
            den = (2 ** (s + t) * math.factorial(s - m)
                   * math.factorial(t - m) * math.factorial(2 * m + 1))
            assert num % den == 0
            out[2 * m + 1] = num // den
    return tuple(out)


def bivariate_normal_moment(i: int, j: int) -> np.ndarray:
    """E[Z1^i Z2^j] as ascending polynomial coefficients in rho_z."""
    if not (0 <= i <= MAX_DEGREE and 0 <= j <= MAX_DEGREE):
        raise DomainError(f"exponents must lie in [0, {MAX_DEGREE}], got ({i}, {j})")
    return np.array(_cross_moment_int_coeffs(i, j), dtype=float)


@dataclass(frozen=True)
class RhoPolynomial:
    """E[X1 X2] = sum_i b[i] rho_z^i plus the model-implied moments.

    With ``moments_overridden`` (target moments substituted for the
    model-implied ones, exposed for comparison only) g(0) = 0 no longer
    holds exactly and the constant-term identity is not enforced.
    """

    b: tuple[float, ...]
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    moments_overridden: bool = False

    def __post_init__(self) -> None:
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise DegenerateMarginalError(
                f"standard deviations must be > 0, got "
                f"{self.sigma1}, {self.sigma2}")
        scale = self.sigma1 * self.sigma2
        if (not self.moments_overridden
                and abs(self.b[0] - self.mu1 * self.mu2)
                > 1e-9 * max(abs(self.b[0]), scale, 1e-30)):
            raise DomainError(
                f"constant coefficient {self.b[0]!r} must equal mu1*mu2 = "
                f"{self.mu1 * self.mu2!r}")
        # nondecreasing on [-1, 1], checked on an even grid
        grid = np.linspace(-1.0, 1.0, 1001)
        vals = self.g(grid)
        drops = np.diff(vals)
        if np.any(drops < -1e-9):
            worst = float(grid[int(np.argmin(drops))])
            raise MonotonicityError(
                f"correlation map is decreasing near rho_z = {worst:.4f}; "
                "the transformation pair does not admit a unique inverse")

    @property
    def degree(self) -> int:
        return len(self.b) - 1

    def g(self, rho_z):
        """Normalized map: g(rho_z) = rho_x. g(0) = 0 by construction."""
        value = np.polynomial.polynomial.polyval(np.asarray(rho_z, dtype=float),
                                                 np.asarray(self.b))
        out = (value - self.mu1 * self.mu2) / (self.sigma1 * self.sigma2)
        return float(out) if np.ndim(rho_z) == 0 else out


def build_rho_polynomial(m1: PolynomialModel, m2: PolynomialModel,
                         moments_override: tuple[tuple[float, float],
                                                 tuple[float, float]] | None = None,
                         ) -> RhoPolynomial:
    """Assemble b_i = sum_{j,k} a1_j a2_k [rho_z^i] E[Z1^j Z2^k].

    Contributions to each b_i are accumulated with compensated summation:
    the integer cross-moment factors reach ~2e18, and mixed-sign
    coefficient products would otherwise lose the small b_i to
    cancellation.

    ``moments_override`` substitutes externally supplied ((mu1, sigma1),
    (mu2, sigma2)) — typically the target distribution's — for the
    model-implied moments on the left-hand side of the matching
    equation. Comparison use only; the default keeps g(0) = 0 exact for
    the polynomial actually sampled.
    """
    a1 = m1.coeffs
    a2 = m2.coeffs
    n = max(len(a1), len(a2)) - 1
    contributions: list[list[float]] = [[] for _ in range(n + 1)]
    for j, c1 in enumerate(a1):
        if c1 == 0.0:
            continue
        for k, c2 in enumerate(a2):
            if c2 == 0.0:
                continue
            factor = c1 * c2
            for power, coef in enumerate(_cross_moment_int_coeffs(j, k)):
                if coef:
                    contributions[power].append(factor * float(coef))
    b = tuple(math.fsum(terms) for terms in contributions)
    if moments_override is not None:
        (mu1, sigma1), (mu2, sigma2) = moments_override
        return RhoPolynomial(b=b, mu1=mu1, mu2=mu2, sigma1=sigma1,
                             sigma2=sigma2, moments_overridden=True)
    mu1, sigma1 = m1.model_moments()
    mu2, sigma2 = m2.model_moments()
    return RhoPolynomial(b=b, mu1=mu1, mu2=mu2, sigma1=sigma1, sigma2=sigma2)


def rho_x_bounds(rp: RhoPolynomial) -> tuple[float, float]:
    """Attainable product-moment correlations, reached at rho_z = -1 and +1."""
    lower = max(-1.0, min(1.0, rp.g(-1.0)))
    upper = max(-1.0, min(1.0, rp.g(1.0)))
    return (lower, upper)


def solve_rho_z(rp: RhoPolynomial, rho_x: float, tol: float = 1e-12) -> float:
    """The rho_z in [-1, 1] with g(rho_z) = rho_x.

    Monotonicity gives sign(rho_z) = sign(rho_x), so the search is
    restricted to the matching half-interval. rho_x outside the
    attainable bounds (with 1e-9 slack) raises
    InfeasibleCorrelationError carrying those bounds.
    """
    if not (-1.0 <= rho_x <= 1.0):
        raise DomainError(f"rho_x must lie in [-1, 1], got {rho_x}")
    bounds = rho_x_bounds(rp)
    slack = 1e-9
    if rho_x < bounds[0] - slack or rho_x > bounds[1] + slack:
        raise InfeasibleCorrelationError(
            f"rho_x = {rho_x} is outside the attainable range "
            f"[{bounds[0]:.6f}, {bounds[1]:.6f}] for this marginal pair",
            bounds=bounds)
    if abs(rho_x) <= 1e-14:  # below the float noise of g near its zero
        return 0.0
    if rho_x > 0.0:
        if rho_x >= bounds[1] - 1e-15:
            return 1.0
        lo, hi = 0.0, 1.0
    else:
        if rho_x <= bounds[0] + 1e-15:
            return -1.0
        lo, hi = -1.0, 0.0
    root = find_root_monotone(lambda r: rp.g(r) - rho_x, lo, hi, tol=tol)
    return float(root)


def build_Rz(models: list[PolynomialModel], Rx: np.ndarray,
             nearest_pd: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise-map a target correlation matrix into normal space.

    Returns (Rz, L) with L the Cholesky factor of Rz. A non-positive-
    definite Rz is an error by default: the entrywise map does not
    preserve definiteness in general, and silently repairing it would
    change the generated correlations. ``nearest_pd`` opts into an
    eigenvalue-clipping repair.
    """
    Rx = np.asarray(Rx, dtype=float)
    m = len(models)
    if Rx.shape != (m, m):
        raise DomainError(f"Rx shape {Rx.shape} does not match {m} marginals")
    if not np.allclose(Rx, Rx.T, rtol=0.0, atol=1e-12):
        raise DomainError("Rx must be symmetric")
    if not np.allclose(np.diag(Rx), 1.0, rtol=0.0, atol=1e-12):
        raise DomainError("Rx must have a unit diagonal")
    cholesky(Rx)  # raises NotPositiveDefiniteError when Rx itself is not PD

    Rz = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            rp = build_rho_polynomial(models[i], models[j])
            try:
                rz = solve_rho_z(rp, float(Rx[i, j]))
            except InfeasibleCorrelationError as exc:
                raise InfeasibleCorrelationError(
                    f"entry ({i}, {j}): {exc}", bounds=exc.bounds) from exc
            Rz[i, j] = Rz[j, i] = rz

    try:
        L = cholesky(Rz)
    except NotPositiveDefiniteError:
        if not nearest_pd:
            raise NotPositiveDefiniteError(
                "the mapped normal-space correlation matrix is not positive "
                "definite; rerun with nearest_pd=True to clip its spectrum")
        Rz = nearest_positive_definite(Rz)
        L = cholesky(Rz)
    return Rz, L


def nearest_positive_definite(R: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """Eigenvalue-clipping repair of an indefinite correlation matrix.

    Clips the spectrum at ``floor`` and rescales back to a unit
    diagonal. This changes the off-diagonal entries; callers opt in.
    """
    vals, vecs = np.linalg.eigh(np.asarray(R, dtype=float))
    clipped = (vecs * np.maximum(vals, floor)) @ vecs.T
    d = 1.0 / np.sqrt(np.diag(clipped))
    out = clipped * np.outer(d, d)
    return 0.5 * (out + out.T)
