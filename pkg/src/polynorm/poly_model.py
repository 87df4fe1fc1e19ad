"""Polynomial transformation of a standard normal variable.

A model maps Z ~ N(0,1) to X = sum_k a_k Z^k. Given the coefficients,
the implied mean and variance follow from the even moments of Z, and
monotonicity over a z-interval is a diagnostic (fits are not constrained
to be monotone; violations are reported, not repaired).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DomainError

__all__ = [
    "MAX_DEGREE",
    "PolynomialModel",
    "affine_model",
    "normal_even_moment",
    "double_factorial_odd",
]

# Library-wide degree cap: the moment-matching systems and the
# correlation-mapping coefficients degrade beyond working precision past
# degree 19 (the normal-moment determinant collapses and the integer
# cross-moment factors leave the exact double range).
MAX_DEGREE = 19

FIT_METHODS = ("pwm", "percentile", "exact")


def double_factorial_odd(m: int) -> int:
    """(m)!! for odd m >= -1, i.e. 1*3*5*...*m; defined as 1 for m <= 0."""
    return math.prod(range(1, m + 1, 2))


def normal_even_moment(s: int) -> float:
    """E[Z^(2s)] = (2s)! / (2^s s!) = (2s-1)!! for standard normal Z.

    Guarded at 2s <= 40: beyond that the double-factorial value exceeds
    what double precision products downstream can carry exactly.
    """
    if s < 0 or int(s) != s:
        raise DomainError(f"even-moment order must be a nonnegative integer, got {s}")
    if 2 * s > 40:
        raise DomainError(f"even moment E[Z^{2 * s}] exceeds the supported range (2s <= 40)")
    return float(double_factorial_odd(2 * s - 1))


@dataclass(frozen=True)
class PolynomialModel:
    """X = sum_k coeffs[k] * Z^k with Z standard normal.

    ``probit_range`` records the probability interval the fit was built
    over (nodes for percentile fits, the quadrature window for moment
    fits); diagnostics default to it. ``conditioning`` carries solver
    diagnostics (determinant, pivot ratio, residuals) and is excluded
    from equality and serialization.
    """

    coeffs: tuple[float, ...]
    fit_method: str = "exact"
    probit_range: tuple[float, float] | None = None
    source: str | None = None
    conditioning: Mapping[str, float] | None = field(
        default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise DomainError("a model needs degree >= 1 (constant + linear term)")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise DomainError(
                f"degree {len(coeffs) - 1} exceeds the cap of {MAX_DEGREE}: "
                "the normal-moment systems underlying fitting and "
                "correlation mapping are numerically singular beyond it")
        if any(not math.isfinite(c) for c in coeffs):
            raise DomainError(f"coefficients must be finite, got {coeffs}")
        if self.fit_method not in FIT_METHODS:
            raise DomainError(f"fit_method must be one of {FIT_METHODS}")
        if self.probit_range is not None:
            lo, hi = self.probit_range
            if not (0.0 <= lo < hi <= 1.0):
                raise DomainError(f"probit_range must satisfy 0 <= lo < hi <= 1, got {self.probit_range}")
            object.__setattr__(self, "probit_range", (float(lo), float(hi)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, z):
        """Horner evaluation; scalar in, scalar out (arrays pass through)."""
        za = np.asarray(z, dtype=float)
        acc = np.full(za.shape, self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            acc = acc * za + c
        return float(acc) if acc.ndim == 0 else acc

    def transform(self, z: np.ndarray) -> np.ndarray:
        """Elementwise evaluation of an array of normal deviates."""
        return self.evaluate(np.asarray(z, dtype=float))

    def derivative_coeffs(self) -> tuple[float, ...]:
        return tuple(k * c for k, c in enumerate(self.coeffs))[1:]

    # -- implied moments ----------------------------------------------------

    def model_moments(self) -> tuple[float, float]:
        """(mean, std) of X implied by the coefficients.

        mean = sum over even k of a_k (k-1)!!, and
        E[X^2] = sum over j+k even of a_j a_k (j+k-1)!!; both evaluated
        with compensated summation since the double-factorial factors
        span many orders of magnitude.
        """
        a = self.coeffs
        mean = math.fsum(a[k] * normal_even_moment(k // 2)
                         for k in range(0, len(a), 2))
        second = math.fsum(
            a[j] * a[k] * float(double_factorial_odd(j + k - 1))
            for j in range(len(a)) for k in range(len(a))
            if (j + k) % 2 == 0)
        var = second - mean * mean
        if var < -1e-12:
            raise DomainError(
                f"implied variance is negative ({var:.3e}); inconsistent coefficients")
        return (mean, math.sqrt(max(var, 0.0)))

    # -- monotonicity diagnostic ---------------------------------------------

    def monotonicity_check(self, z_lo: float = -8.5, z_hi: float = 8.5,
                           grid: int = 10_000) -> tuple[bool, list[float]]:
        """Check dX/dZ >= 0 on [z_lo, z_hi].

        Samples the derivative on an even grid and at the real roots of
        the derivative polynomial; returns (monotone, offending z list).
        """
        if not (math.isfinite(z_lo) and math.isfinite(z_hi) and z_lo < z_hi):
            raise DomainError(f"invalid z-interval [{z_lo}, {z_hi}]")
        deriv = np.asarray(self.derivative_coeffs())
        zs = np.linspace(z_lo, z_hi, grid)
        candidates = [zs]
        trimmed = np.trim_zeros(deriv, "b")
        if len(trimmed) > 1:
            roots = np.polynomial.polynomial.polyroots(trimmed)
            real = roots[np.abs(roots.imag) < 1e-9].real
            interior = real[(real > z_lo) & (real < z_hi)]
            if interior.size:
                # midpoints between roots expose sign dips the grid may miss
                pts = np.sort(np.concatenate([[z_lo], interior, [z_hi]]))
                mids = 0.5 * (pts[1:] + pts[:-1])
                candidates.extend([interior, mids])
        sample = np.concatenate(candidates)
        values = np.polynomial.polynomial.polyval(sample, deriv)
        bad = sample[values < 0.0]
        return (bad.size == 0, sorted(float(v) for v in bad))

    # -- serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        """JSON form with coefficients as round-trip-exact decimal strings."""
        out = {
            "degree": self.degree,
            "coeffs": [repr(c) for c in self.coeffs],
            "fit_method": self.fit_method,
            "probit_range": list(self.probit_range) if self.probit_range else None,
        }
        if self.source is not None:
            out["source"] = self.source
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "PolynomialModel":
        try:
            coeffs = tuple(float(c) for c in data["coeffs"])
            degree = int(data["degree"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed model JSON: {exc}") from exc
        if degree != len(coeffs) - 1:
            raise DomainError(
                f"model JSON degree {degree} does not match {len(coeffs)} coefficients")
        prange = data.get("probit_range")
        return cls(
            coeffs=coeffs,
            fit_method=data.get("fit_method", "exact"),
            probit_range=tuple(prange) if prange else None,
            source=data.get("source"),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PolynomialModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def with_conditioning(self, info: Mapping[str, float]) -> "PolynomialModel":
        return replace(self, conditioning=dict(info))


def affine_model(mu: float, sigma: float) -> PolynomialModel:
    """Exact model for a normal marginal: X = mu + sigma Z."""
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    return PolynomialModel(coeffs=(float(mu), float(sigma)), fit_method="exact",
                           source=f"normal({mu}, {sigma})")
