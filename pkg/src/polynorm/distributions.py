"""Catalog of target marginal distributions.

Each family exposes CDF, PDF, quantile, closed-form moments where they
exist, and support. Parameter conventions (all shape/scale style):

    normal       (mu, sigma)               sigma > 0
    lognormal    (a, b)     a = log-mean, b = log-std > 0
    gamma        (a, b)     a = shape > 0, b = scale > 0
    beta         (a, b)     shapes > 0, support [0, 1]
    weibull      (a, b)     a = scale > 0, b = shape > 0
    uniform      (a, b)     a < b
    gumbel       (a, b)     a = location, b = scale > 0
    logistic     (a, b)     a = location, b = scale > 0
    student_t    (nu,)      nu > 2 (finite variance required)
    chi_squared  (k,)       k > 0
    rayleigh     (sigma,)   sigma > 0
    exponential  (lam,)     rate lam > 0
    f            (d1, d2)   d1 > 0, d2 > 4 (finite variance required)
    custom       quantile_table of strictly increasing (p, x) pairs

Families without a closed-form quantile (gamma, beta, chi_squared,
student_t, f) are inverted numerically from their regularized
incomplete-gamma/-beta CDFs: scalars through the bracketed monotone
root solver, arrays through a vectorized safeguarded Newton iteration.
Both meet |cdf(quantile(p)) - p| <= 1e-10.

Distributions with infinite variance cannot be represented (the fitting
and correlation layers need finite first and second moments), so such
parameterizations are rejected at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special as _special
from scipy.interpolate import PchipInterpolator

from .errors import BracketError, DomainError, UnsupportedMomentError
from .numerics import (
    DEFAULT_QUADRATURE,
    find_root_monotone,
    integrate,
    normal_cdf,
    normal_pdf,
)

__all__ = ["TargetDistribution", "numeric_quantile", "FAMILIES"]

_EULER_GAMMA = 0.5772156649015329

FAMILIES = (
    "normal", "lognormal", "gamma", "beta", "weibull", "uniform", "gumbel",
    "logistic", "student_t", "chi_squared", "rayleigh", "exponential", "f",
    "custom",
)

_ALIASES = {
    "t": "student_t",
    "chi2": "chi_squared",
    "chisq": "chi_squared",
    "lognorm": "lognormal",
    "exp": "exponential",
}

# families whose quantile has no closed form and is root-solved
_NUMERIC_QUANTILE = {"gamma", "beta", "chi_squared", "student_t", "f"}

_PARAM_COUNT = {
    "normal": 2, "lognormal": 2, "gamma": 2, "beta": 2, "weibull": 2,
    "uniform": 2, "gumbel": 2, "logistic": 2, "student_t": 1,
    "chi_squared": 1, "rayleigh": 1, "exponential": 1, "f": 2, "custom": 0,
}


def _validate_params(family: str, params: tuple[float, ...]) -> None:
    if any(not math.isfinite(v) for v in params):
        raise DomainError(f"{family} parameters must be finite, got {params}")
    positive_all = {"lognormal": (1,), "gamma": (0, 1), "beta": (0, 1),
                    "weibull": (0, 1), "gumbel": (1,), "logistic": (1,),
                    "chi_squared": (0,), "rayleigh": (0,),
                    "exponential": (0,), "normal": (1,)}
    for idx in positive_all.get(family, ()):
        if params[idx] <= 0.0:
            raise DomainError(
                f"{family} parameter {idx + 1} must be > 0, got {params[idx]}")
    if family == "uniform" and not (params[0] < params[1]):
        raise DomainError(f"uniform requires a < b, got {params}")
    if family == "student_t" and not (params[0] > 2.0):
        raise UnsupportedMomentError(
            f"student_t has infinite variance for nu <= 2, got nu={params[0]}")
    if family == "f":
        if params[0] <= 0.0:
            raise DomainError(f"f requires d1 > 0, got {params[0]}")
        if not (params[1] > 4.0):
            raise UnsupportedMomentError(
                f"f has infinite variance for d2 <= 4, got d2={params[1]}")


@dataclass(frozen=True)
class TargetDistribution:
    """Immutable marginal distribution with CDF/quantile/moments/support."""

    family: str
    params: tuple[float, ...] = ()
    quantile_table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        family = _ALIASES.get(self.family, self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; "
                              f"known: {', '.join(FAMILIES)}")
        if family == "custom":
            if self.quantile_table is None or len(self.quantile_table) < 2:
                raise DomainError(
                    "custom family requires a quantile_table of at least "
                    "two (p, x) pairs")
            table = tuple((float(p), float(x)) for p, x in self.quantile_table)
            ps = [p for p, _ in table]
            xs = [x for _, x in table]
            if any(not (0.0 <= p <= 1.0) for p in ps):
                raise DomainError("quantile_table probabilities must lie in [0, 1]")
            if any(b <= a for a, b in zip(ps, ps[1:])):
                raise DomainError("quantile_table probabilities must be strictly increasing")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise DomainError("quantile_table values must be strictly increasing")
            object.__setattr__(self, "quantile_table", table)
        else:
            if self.quantile_table is not None:
                raise DomainError("quantile_table is only valid for the custom family")
            if len(self.params) != _PARAM_COUNT[family]:
                raise DomainError(
                    f"{family} takes {_PARAM_COUNT[family]} parameters, "
                    f"got {len(self.params)}")
            _validate_params(family, self.params)
        # computing the moments up front enforces the finite-variance
        # invariant at construction time
        mu, sigma = self.moments()
        if not (math.isfinite(mu) and math.isfinite(sigma) and sigma > 0.0):
            raise UnsupportedMomentError(
                f"{family}{self.params} lacks finite (mu, sigma > 0): "
                f"mu={mu}, sigma={sigma}")

    # -- support ----------------------------------------------------------

    @property
    def support(self) -> tuple[float, float]:
        f, p = self.family, self.params
        if f in ("normal", "gumbel", "logistic", "student_t"):
            return (-math.inf, math.inf)
        if f in ("lognormal", "gamma", "weibull", "chi_squared", "rayleigh",
                 "exponential", "f"):
            return (0.0, math.inf)
        if f == "beta":
            return (0.0, 1.0)
        if f == "uniform":
            return (p[0], p[1])
        table = self.quantile_table
        return (table[0][1], table[-1][1])

    # -- CDF / PDF ---------------------------------------------------------

    def cdf(self, x):
        """CDF; accepts scalars or arrays, clamps outside support to 0/1."""
        xa = np.asarray(x, dtype=float)
        out = self._cdf_raw(np.clip(xa, *self.support))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def _cdf_raw(self, x):
        f, p = self.family, self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if f == "normal":
                return normal_cdf((x - p[0]) / p[1])
            if f == "lognormal":
                return np.where(x > 0.0, normal_cdf((np.log(np.maximum(x, 1e-300)) - p[0]) / p[1]), 0.0)
            if f == "gamma":
                return _special.gammainc(p[0], np.maximum(x, 0.0) / p[1])
            if f == "beta":
                xc = np.clip(x, 0.0, 1.0)
                # complement form above the midpoint: 1 - x is exact there,
                # so the upper tail keeps full absolute precision
                return np.where(
                    xc <= 0.5,
                    _special.betainc(p[0], p[1], xc),
                    1.0 - _special.betainc(p[1], p[0], 1.0 - xc))
            if f == "weibull":
                return -np.expm1(-np.power(np.maximum(x, 0.0) / p[0], p[1]))
            if f == "uniform":
                return (x - p[0]) / (p[1] - p[0])
            if f == "gumbel":
                return np.exp(-np.exp(-(x - p[0]) / p[1]))
            if f == "logistic":
                return _special.expit((x - p[0]) / p[1])
            if f == "student_t":
                # argument t^2/(nu+t^2) resolves t near 0 exactly, unlike
                # nu/(nu+t^2) which plateaus within one ulp of 1.0 there
                nu = p[0]
                t2 = np.square(x)
                half_body = 0.5 * _special.betainc(0.5, 0.5 * nu, t2 / (nu + t2))
                return np.where(x >= 0.0, 0.5 + half_body, 0.5 - half_body)
            if f == "chi_squared":
                return _special.gammainc(0.5 * p[0], 0.5 * np.maximum(x, 0.0))
            if f == "rayleigh":
                return -np.expm1(-0.5 * np.square(np.maximum(x, 0.0) / p[0]))
            if f == "exponential":
                return -np.expm1(-p[0] * np.maximum(x, 0.0))
            if f == "f":
                d1, d2 = p
                x_pos = np.maximum(x, 0.0)
                num = d1 * x_pos
                # complement form for the upper half: d2/(num+d2) is
                # computed directly instead of as 1 - (near-one argument)
                return np.where(
                    num <= d2,
                    _special.betainc(0.5 * d1, 0.5 * d2, num / (num + d2)),
                    1.0 - _special.betainc(0.5 * d2, 0.5 * d1, d2 / (num + d2)))
        return self._custom_cdf_interp()(x)

    def pdf(self, x):
        """Density; accepts scalars or arrays, zero outside support."""
        xa = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (xa >= lo) & (xa <= hi)
        xc = np.clip(xa, lo if math.isfinite(lo) else None,
                     hi if math.isfinite(hi) else None)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.where(inside, self._pdf_raw(xc), 0.0)
        out = np.nan_to_num(out, nan=0.0, posinf=np.inf)
        return float(out) if out.ndim == 0 else out

    def _pdf_raw(self, x):
        f, p = self.family, self.params
        if f == "normal":
            return normal_pdf((x - p[0]) / p[1]) / p[1]
        if f == "lognormal":
            xs = np.maximum(x, 1e-300)
            return normal_pdf((np.log(xs) - p[0]) / p[1]) / (xs * p[1])
        if f == "gamma":
            a, b = p
            xs = np.maximum(x, 1e-300) / b
            return np.exp((a - 1.0) * np.log(xs) - xs - _special.gammaln(a)) / b
        if f == "beta":
            a, b = p
            xs = np.clip(x, 1e-300, 1.0 - 1e-16)
            logpdf = ((a - 1.0) * np.log(xs) + (b - 1.0) * np.log1p(-xs)
                      - _special.betaln(a, b))
            return np.exp(logpdf)
        if f == "weibull":
            scale, shape = p
            xs = np.maximum(x, 1e-300) / scale
            return (shape / scale) * np.power(xs, shape - 1.0) * np.exp(-np.power(xs, shape))
        if f == "uniform":
            return np.full_like(np.asarray(x, dtype=float), 1.0 / (p[1] - p[0]))
        if f == "gumbel":
            u = (x - p[0]) / p[1]
            return np.exp(-u - np.exp(-u)) / p[1]
        if f == "logistic":
            u = np.abs((x - p[0]) / p[1])
            e = np.exp(-u)
            return e / (p[1] * np.square(1.0 + e))
        if f == "student_t":
            nu = p[0]
            c = math.exp(_special.gammaln(0.5 * (nu + 1.0)) - _special.gammaln(0.5 * nu)) \
                / math.sqrt(nu * math.pi)
            return c * np.power(1.0 + np.square(x) / nu, -0.5 * (nu + 1.0))
        if f == "chi_squared":
            k = p[0]
            xs = np.maximum(x, 1e-300)
            return np.exp((0.5 * k - 1.0) * np.log(xs) - 0.5 * xs
                          - _special.gammaln(0.5 * k) - 0.5 * k * math.log(2.0))
        if f == "rayleigh":
            s2 = p[0] * p[0]
            return (x / s2) * np.exp(-0.5 * np.square(x) / s2)
        if f == "exponential":
            return p[0] * np.exp(-p[0] * x)
        if f == "f":
            d1, d2 = p
            xs = np.maximum(x, 1e-300)
            logpdf = (0.5 * d1 * math.log(d1 / d2) + (0.5 * d1 - 1.0) * np.log(xs)
                      - 0.5 * (d1 + d2) * np.log1p(d1 * xs / d2)
                      - _special.betaln(0.5 * d1, 0.5 * d2))
            return np.exp(logpdf)
        return self._custom_cdf_interp().derivative()(x)

    # -- quantile ----------------------------------------------------------

    def quantile(self, p: float) -> float:
        """Inverse CDF at a scalar probability, 0 < p < 1."""
        p = float(p)
        if not (0.0 < p < 1.0):
            raise DomainError(f"quantile probability must lie in (0, 1), got {p}")
        closed = self._quantile_closed(p)
        if closed is not None:
            return float(closed)
        return numeric_quantile(self.cdf, self.support, p,
                                bracket_hint=self._bracket_hint())

    def quantile_array(self, p) -> np.ndarray:
        """Vectorized inverse CDF over an array of probabilities."""
        pa = np.asarray(p, dtype=float)
        if np.any(pa <= 0.0) or np.any(pa >= 1.0):
            raise DomainError("quantile probabilities must lie in (0, 1)")
        closed = self._quantile_closed(pa)
        if closed is not None:
            return np.asarray(closed, dtype=float)
        lo, hi = _expand_bracket(self.cdf, self.support,
                                 float(pa.min()), float(pa.max()),
                                 self._bracket_hint())
        return _invert_cdf_newton(self.cdf, self.pdf, lo, hi, pa)

    def _quantile_closed(self, p):
        f, prm = self.family, self.params
        if f == "normal":
            return prm[0] + prm[1] * _special.ndtri(p)
        if f == "lognormal":
            return np.exp(prm[0] + prm[1] * _special.ndtri(p))
        if f == "weibull":
            return prm[0] * np.power(-np.log1p(-np.asarray(p, dtype=float)), 1.0 / prm[1])
        if f == "uniform":
            return prm[0] + (prm[1] - prm[0]) * np.asarray(p, dtype=float)
        if f == "gumbel":
            return prm[0] - prm[1] * np.log(-np.log(p))
        if f == "logistic":
            pa = np.asarray(p, dtype=float)
            return prm[0] + prm[1] * (np.log(pa) - np.log1p(-pa))
        if f == "rayleigh":
            return prm[0] * np.sqrt(-2.0 * np.log1p(-np.asarray(p, dtype=float)))
        if f == "exponential":
            return -np.log1p(-np.asarray(p, dtype=float)) / prm[0]
        if f == "custom":
            table = self.quantile_table
            interp = _quantile_table_interp(table)
            pa = np.clip(np.asarray(p, dtype=float), table[0][0], table[-1][0])
            return interp(pa)
        return None  # numeric families

    def _bracket_hint(self) -> tuple[float, float]:
        mu, sigma = self.moments()
        return (mu - 8.0 * sigma, mu + 8.0 * sigma)

    # -- moments -----------------------------------------------------------

    def moments(self) -> tuple[float, float]:
        """(mean, standard deviation), closed-form except for custom."""
        f, p = self.family, self.params
        if f == "normal":
            return (p[0], p[1])
        if f == "lognormal":
            a, b = p
            mean = math.exp(a + 0.5 * b * b)
            var = math.expm1(b * b) * math.exp(2.0 * a + b * b)
            return (mean, math.sqrt(var))
        if f == "gamma":
            a, b = p
            return (a * b, math.sqrt(a) * b)
        if f == "beta":
            a, b = p
            mean = a / (a + b)
            var = a * b / ((a + b) ** 2 * (a + b + 1.0))
            return (mean, math.sqrt(var))
        if f == "weibull":
            scale, shape = p
            g1 = math.gamma(1.0 + 1.0 / shape)
            g2 = math.gamma(1.0 + 2.0 / shape)
            return (scale * g1, scale * math.sqrt(g2 - g1 * g1))
        if f == "uniform":
            a, b = p
            return (0.5 * (a + b), (b - a) / math.sqrt(12.0))
        if f == "gumbel":
            a, b = p
            return (a + b * _EULER_GAMMA, b * math.pi / math.sqrt(6.0))
        if f == "logistic":
            a, b = p
            return (a, b * math.pi / math.sqrt(3.0))
        if f == "student_t":
            nu = p[0]
            return (0.0, math.sqrt(nu / (nu - 2.0)))
        if f == "chi_squared":
            k = p[0]
            return (k, math.sqrt(2.0 * k))
        if f == "rayleigh":
            s = p[0]
            return (s * math.sqrt(math.pi / 2.0), s * math.sqrt(2.0 - math.pi / 2.0))
        if f == "exponential":
            lam = p[0]
            return (1.0 / lam, 1.0 / lam)
        if f == "f":
            d1, d2 = p
            mean = d2 / (d2 - 2.0)
            var = (2.0 * d2 * d2 * (d1 + d2 - 2.0)
                   / (d1 * (d2 - 2.0) ** 2 * (d2 - 4.0)))
            return (mean, math.sqrt(var))
        return _custom_moments(self.quantile_table)

    def _custom_cdf_interp(self) -> PchipInterpolator:
        return _cdf_table_interp(self.quantile_table)

    def label(self) -> str:
        if self.family == "custom":
            return f"custom[{len(self.quantile_table)} nodes]"
        return f"{self.family}({', '.join(repr(v) for v in self.params)})"


# -- custom-family interpolants (cached on the table tuple) ----------------

@lru_cache(maxsize=64)
def _quantile_table_interp(table) -> PchipInterpolator:
    ps = np.array([p for p, _ in table])
    xs = np.array([x for _, x in table])
    return PchipInterpolator(ps, xs, extrapolate=False)


@lru_cache(maxsize=64)
def _cdf_table_interp(table) -> PchipInterpolator:
    ps = np.array([p for p, _ in table])
    xs = np.array([x for _, x in table])
    return PchipInterpolator(xs, ps, extrapolate=False)


@lru_cache(maxsize=64)
def _custom_moments(table) -> tuple[float, float]:
    interp = _quantile_table_interp(table)
    p0, x0 = table[0]
    p1, x1 = table[-1]
    # mean: exact integral of the monotone cubic, plus clamped tails
    mean = float(interp.integrate(p0, p1)) + x0 * p0 + x1 * (1.0 - p1)

    def q_sq(p):
        return float(interp(min(max(p, p0), p1))) ** 2

    second = integrate(q_sq, 0.0, 1.0, DEFAULT_QUADRATURE)
    var = max(second - mean * mean, 0.0)
    return (mean, math.sqrt(var))


# -- numeric inversion ------------------------------------------------------

def numeric_quantile(cdf: Callable[[float], float],
                     support: tuple[float, float], p: float,
                     bracket_hint: tuple[float, float] | None = None) -> float:
    """Invert a monotone CDF at probability ``p`` by bracketed root solving.

    ``support`` bounds the search; infinite endpoints are handled by
    geometric bracket expansion starting from ``bracket_hint`` (or from
    [-1, 1] when no hint is given). Raises DomainError for p outside
    (0, 1) and BracketError if expansion cannot bracket ``p``.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile probability must lie in (0, 1), got {p}")
    lo, hi = _expand_bracket(cdf, support, p, p, bracket_hint)
    return find_root_monotone(lambda x: cdf(x) - p, lo, hi, tol=1e-14)


def _expand_bracket(cdf, support, p_min, p_max, hint=None,
                    max_steps: int = 300) -> tuple[float, float]:
    s_lo, s_hi = support
    if hint is None:
        hint = (-1.0, 1.0)
    lo = s_lo if math.isfinite(s_lo) else min(hint[0], hint[1] - 1.0)
    hi = s_hi if math.isfinite(s_hi) else max(hint[1], hint[0] + 1.0)
    if math.isfinite(s_lo):
        lo = max(lo, s_lo)
    if math.isfinite(s_hi):
        hi = min(hi, s_hi)

    step = max(abs(hi - lo), 1.0)
    for _ in range(max_steps):
        if math.isfinite(s_lo) or cdf(lo) < p_min or cdf(lo) == 0.0:
            break
        lo -= step
        step *= 2.0
    else:
        raise BracketError(f"could not bracket probability {p_min} from below")
    step = max(abs(hi - lo), 1.0)
    for _ in range(max_steps):
        if math.isfinite(s_hi) or cdf(hi) > p_max or cdf(hi) == 1.0:
            break
        hi += step
        step *= 2.0
    else:
        raise BracketError(f"could not bracket probability {p_max} from above")
    if not (cdf(lo) <= p_min and cdf(hi) >= p_max):
        raise BracketError(
            f"support [{s_lo}, {s_hi}] does not bracket probabilities "
            f"[{p_min}, {p_max}]")
    return lo, hi


def _invert_cdf_newton(cdf, pdf, lo: float, hi: float, p: np.ndarray,
                       tol: float = 1e-13, max_iter: int = 160) -> np.ndarray:
    """Vectorized safeguarded Newton: per-point brackets guarantee progress,
    Newton steps give the final digits."""
    p = np.asarray(p, dtype=float)
    lo_a = np.full(p.shape, lo)
    hi_a = np.full(p.shape, hi)
    x = lo + (hi - lo) * p  # linear warm start inside the bracket
    for _ in range(max_iter):
        err = cdf(x) - p
        hi_a = np.where(err >= 0.0, np.minimum(hi_a, x), hi_a)
        lo_a = np.where(err < 0.0, np.maximum(lo_a, x), lo_a)
        if np.all(np.abs(err) <= tol):
            break
        dens = pdf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x - err / dens
        bad = (~np.isfinite(x_new)) | (x_new <= lo_a) | (x_new >= hi_a)
        x_new = np.where(bad, 0.5 * (lo_a + hi_a), x_new)
        if np.array_equal(x_new, x):
            break
        x = x_new
    return x
