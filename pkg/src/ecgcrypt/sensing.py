"""Key-derived matrices: Gaussian measurement/embedding matrices, sign
patterns and the left annihilator of the embedding matrix.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``. Gaussian
matrices are drawn in row-major order with ``standard_normal``; sign
patterns with ``integers(0, 2)``. This stream order is what format
version 1 of the ciphertext refers to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

RNG_NAME = "numpy.PCG64"
_SEED_MASK = (1 << 64) - 1


class RankDeficiencyError(ValueError):
    """A matrix that must have full column rank does not."""


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _SEED_MASK))


def measurement_count(n: int, mr: float) -> int:
    """``floor(mr * n)``, guarded against representation error in ``mr``."""
    return int(math.floor(mr * n + 1e-9))


def sub_seed(seed: int, index: int) -> int:
    """Per-signal seed for batch work; independent of processing order."""
    return (int(seed) ^ int(index)) & _SEED_MASK


@dataclass(frozen=True)
class SenseKey:
    seed_a: int
    n: int
    mr: float

    def __post_init__(self):
        if not 0 < self.mr <= 1:
            raise ValueError(f"measurement rate must lie in (0, 1], got {self.mr}")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"measurement count {self.m} out of range for n={self.n}")

    @property
    def m(self) -> int:
        return measurement_count(self.n, self.mr)

    def matrix(self) -> np.ndarray:
        return gen_gaussian_matrix(self.seed_a, self.m, self.n)


@dataclass(frozen=True)
class EmbedKey:
    seed_b: int
    t: int
    a: float

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"watermark length must be >= 1, got {self.t}")
        if not self.a > 0:
            raise ValueError(f"embedding power must be positive, got {self.a}")

    def matrix(self, m: int) -> np.ndarray:
        if not self.t < m:
            raise ValueError(f"watermark length {self.t} must be smaller than m={m}")
        return gen_gaussian_matrix(self.seed_b, m, self.t)


def gen_gaussian_matrix(seed: int, rows: int, cols: int) -> np.ndarray:
    """I.i.d. N(0, 1/rows) entries, so that E||A s||^2 = ||s||^2."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return _rng(seed).standard_normal((rows, cols)) / math.sqrt(rows)


def gen_sign_pattern(seed: int, length: int) -> np.ndarray:
    """Fair +-1 Bernoulli draws as a float vector."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    return _rng(seed).integers(0, 2, size=length).astype(float) * 2.0 - 1.0


def annihilator(B: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Left annihilator ``F`` of ``B`` with orthonormal rows.

    Rows of ``F`` span the orthogonal complement of ``range(B)``, found with a
    column-pivoted QR, so ``F @ B == 0`` and ``F @ F.T == I``.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("B must be a matrix")
    m, t = B.shape
    if not t < m:
        raise ValueError(f"B must be tall (T < m), got shape {B.shape}")
    q, r, _ = scipy.linalg.qr(B, mode="full", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0 or diag[-1] <= rtol * diag[0]:
        raise RankDeficiencyError(f"B (shape {B.shape}) is rank deficient")
    return np.ascontiguousarray(q[:, t:].T)
