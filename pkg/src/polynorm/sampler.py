"""Correlated random vector generation.

Pipeline: draw independent standard normals U, correlate them through
the Cholesky factor of the normal-space correlation matrix (Z = U L^T
rowwise), then push each column through its marginal transformation.

Normal variates come from the inverse CDF applied to a counter-based
(Philox) uniform stream, so reproducibility is a property of the
(seed, stream_id) key and the output index alone, never of scheduling:
the same RngSpec yields bit-identical output on every run. Uniforms are
built as (2k+1)/2^54 from 53-bit integers, staying strictly inside
(0, 1) so the inverse CDF never sees 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from .correlation import build_Rz
from .errors import DegenerateMarginalError, DomainError
from .poly_model import PolynomialModel

__all__ = [
    "RngSpec",
    "VectorModel",
    "normal_stream",
    "build_vector_model",
    "generate",
    "sample_correlation",
]

_U64 = 2 ** 64


@dataclass(frozen=True)
class RngSpec:
    """Reproducible stream identity: a 64-bit seed plus a substream id."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < _U64):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0 <= self.stream_id < _U64):
            raise DomainError(f"stream_id must be a 64-bit unsigned integer, got {self.stream_id}")

    def _bit_generator(self) -> np.random.Philox:
        # 128-bit Philox key = (stream_id, seed); distinct keys give
        # statistically independent streams
        return np.random.Philox(key=(self.stream_id << 64) | self.seed)


def normal_stream(rng: RngSpec, count: int) -> np.ndarray:
    """``count`` i.i.d. standard normals, bit-reproducible for the spec."""
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    gen = np.random.Generator(rng._bit_generator())
    k = gen.integers(0, 2 ** 53, size=count, dtype=np.uint64)
    u = (2.0 * k.astype(np.float64) + 1.0) * 0.5 ** 54
    return _special.ndtri(u)


@dataclass(frozen=True, eq=False)
class VectorModel:
    """m marginal transformations plus target and normal-space correlations."""

    models: tuple[PolynomialModel, ...]
    Rx: np.ndarray = field(repr=False)
    Rz: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        m = len(self.models)
        for name, mat in (("Rx", self.Rx), ("Rz", self.Rz), ("L", self.L)):
            if mat.shape != (m, m):
                raise DomainError(f"{name} shape {mat.shape} does not match {m} marginals")
        if not np.allclose(self.Rz, self.Rz.T, rtol=0.0, atol=1e-12):
            raise DomainError("Rz must be symmetric")
        if not np.allclose(np.diag(self.Rz), 1.0, rtol=0.0, atol=1e-12):
            raise DomainError("Rz must have a unit diagonal")
        if not np.allclose(self.L @ self.L.T, self.Rz, rtol=0.0, atol=1e-12):
            raise DomainError("L is not a Cholesky factor of Rz")
        if self.labels is not None and len(self.labels) != m:
            raise DomainError(f"{len(self.labels)} labels for {m} marginals")

    @property
    def dim(self) -> int:
        return len(self.models)


def build_vector_model(models, Rx, labels=None,
                       nearest_pd: bool = False) -> VectorModel:
    """Solve the normal-space correlation matrix and package the pipeline."""
    models = tuple(models)
    Rz, L = build_Rz(list(models), Rx, nearest_pd=nearest_pd)
    return VectorModel(models=models, Rx=np.asarray(Rx, dtype=float), Rz=Rz,
                       L=L, labels=tuple(labels) if labels else None)


def generate(vm: VectorModel, count: int, rng: RngSpec) -> np.ndarray:
    """``count`` rows of X = (P1(Z1), ..., Pm(Zm)) with Z = correlated normals.

    Row i consumes uniforms [i*m, (i+1)*m) of the keyed stream, so the
    output is a pure function of (RngSpec, row index) and bit-identical
    across runs regardless of how the work is scheduled.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    m = vm.dim
    u = normal_stream(rng, count * m).reshape(count, m)
    z = u @ vm.L.T
    out = np.empty_like(z)
    for i, model in enumerate(vm.models):
        out[:, i] = model.transform(z[:, i])
    return out


def sample_correlation(samples: np.ndarray) -> np.ndarray:
    """Pearson product-moment correlation matrix of the rows."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise DomainError(f"need a 2-D sample with >= 2 rows, got shape {samples.shape}")
    stds = samples.std(axis=0)
    if np.any(stds <= 0.0):
        dead = int(np.argmin(stds))
        raise DegenerateMarginalError(f"column {dead} has zero variance")
    if samples.shape[1] == 1:
        return np.array([[1.0]])
    corr = np.corrcoef(samples, rowvar=False)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr
