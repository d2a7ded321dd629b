"""Orthonormal sparsifying bases: DCT-II/III and periodized Daubechies wavelets.

Every basis is available in two forms: a fast operator pair
(``analysis``/``synthesis``) and an explicit synthesis matrix from
:func:`basis_matrix`. The two agree column by column.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import pywt
from scipy import fft

WAVELET = "db4"
DEFAULT_WAVELET_LEVELS = 6


class BasisKind(enum.IntEnum):
    IDENTITY = 0
    DCT = 1
    WAVELET = 2


@dataclass(frozen=True)
class BasisId:
    """Selects a sparsifying basis.

    ``wavelet_levels`` is only meaningful for ``BasisKind.WAVELET``.
    """

    kind: BasisKind
    wavelet_levels: int = DEFAULT_WAVELET_LEVELS

    def validate(self, n: int) -> None:
        if n < 1:
            raise ValueError(f"signal length must be >= 1, got {n}")
        if self.kind is BasisKind.WAVELET:
            _check_wavelet_length(n, self.wavelet_levels)

    def analysis(self, s: np.ndarray) -> np.ndarray:
        """Coefficients ``x`` such that ``s = synthesis(x)``."""
        if self.kind is BasisKind.IDENTITY:
            return np.array(s, dtype=float)
        if self.kind is BasisKind.DCT:
            return dct_forward(s)
        return dwt_forward(s, self.wavelet_levels)

    def synthesis(self, x: np.ndarray) -> np.ndarray:
        if self.kind is BasisKind.IDENTITY:
            return np.array(x, dtype=float)
        if self.kind is BasisKind.DCT:
            return dct_inverse(x)
        return dwt_inverse(x, self.wavelet_levels)

    @property
    def tag(self) -> int:
        """One-byte wire tag: low nibble is the kind, high nibble the level count."""
        if self.kind is BasisKind.WAVELET:
            return int(self.kind) | (self.wavelet_levels << 4)
        return int(self.kind)

    @classmethod
    def from_tag(cls, tag: int) -> "BasisId":
        kind = BasisKind(tag & 0x0F)
        if kind is BasisKind.WAVELET:
            return cls(kind, tag >> 4)
        return cls(kind)


IDENTITY = BasisId(BasisKind.IDENTITY)
DCT = BasisId(BasisKind.DCT)


def wavelet_basis(n: int, max_levels: int = DEFAULT_WAVELET_LEVELS) -> BasisId:
    """Deepest db4 basis (at most ``max_levels``) whose level count divides ``n``."""
    levels = 0
    while levels < max_levels and n % (2 ** (levels + 1)) == 0:
        levels += 1
    if levels == 0:
        raise ValueError(f"wavelet basis needs an even signal length, got {n}")
    return BasisId(BasisKind.WAVELET, levels)


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if x.size == 0:
        raise ValueError("empty input")
    return x


def _check_wavelet_length(n: int, levels: int) -> None:
    if levels < 1:
        raise ValueError(f"wavelet levels must be >= 1, got {levels}")
    if n % (2**levels) != 0:
        raise ValueError(f"length {n} is not divisible by 2**{levels}")


def dct_forward(x) -> np.ndarray:
    """Orthonormal DCT-II."""
    return fft.dct(_as_vector(x), type=2, norm="ortho")


def dct_inverse(coeffs) -> np.ndarray:
    """Orthonormal DCT-III, the transpose (and inverse) of :func:`dct_forward`."""
    return fft.idct(_as_vector(coeffs), type=2, norm="ortho")


def dwt_forward(x, levels: int = DEFAULT_WAVELET_LEVELS) -> np.ndarray:
    """Periodized db4 wavelet decomposition packed as ``[cA_L, cD_L, ..., cD_1]``.

    With periodization the filter bank is exactly orthogonal, so the packed
    coefficient vector has the same length and norm as ``x``.
    """
    x = _as_vector(x)
    _check_wavelet_length(x.size, levels)
    with warnings.catch_warnings():
        # deep levels on short inputs only trigger pywt's boundary-effect
        # notice; periodization keeps the transform orthogonal regardless
        warnings.simplefilter("ignore", UserWarning)
        parts = pywt.wavedec(x, WAVELET, mode="periodization", level=levels)
    return np.concatenate(parts)


def dwt_inverse(coeffs, levels: int = DEFAULT_WAVELET_LEVELS) -> np.ndarray:
    c = _as_vector(coeffs)
    n = c.size
    _check_wavelet_length(n, levels)
    sizes = [n >> levels] + [n >> k for k in range(levels, 0, -1)]
    parts = np.split(c, np.cumsum(sizes)[:-1])
    return pywt.waverec(parts, WAVELET, mode="periodization")


def basis_matrix(basis: BasisId, n: int) -> np.ndarray:
    """Synthesis matrix ``Phi`` (n x n) with ``s = Phi @ basis.analysis(s)``."""
    basis.validate(n)
    if basis.kind is BasisKind.IDENTITY:
        return np.eye(n)
    if basis.kind is BasisKind.DCT:
        return fft.idct(np.eye(n), type=2, norm="ortho", axis=0)
    eye = np.eye(n)
    return np.column_stack([dwt_inverse(eye[:, j], basis.wavelet_levels) for j in range(n)])
