"""Privacy masks and the ternary watermark that carries them.

A mask selects columns of the measurement matrix (time samples or DCT
bins). Each masked column gets one random sign; a ``+1`` sign flips the
column, which is the same as adding ``M = -2 A[:, j]`` there. The sign
pattern, and the mask location when the receiver cannot know it, are
written into a watermark over the alphabet ``{-a, 0, +a}``.

Watermark layouts (symbols in order, zero padding up to ``t``)::

    no mask       all zeros
    fixed band    [l signs]
    embedded band [lo: 7 digits][band length: 7 digits][l signs]
    time peaks    [peak count: 7 digits][7 digits per centre][l signs]

A sign ``+1`` is written ``+a`` and ``-1`` is ``-a``; a ternary digit
``0, 1, 2`` is written ``-a, 0, +a``. Numbers are most significant digit
first; seven digits reach 2186, enough for 2048-sample windows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

DIGITS = 7
MAX_NUMBER = 3**DIGITS - 1
DEFAULT_HALF_WIDTH = 15
DEFAULT_BAND = (20, 90)


class WatermarkCapacityError(ValueError):
    """The mask payload does not fit in the watermark length."""


class WatermarkDecodeError(ValueError):
    """A thresholded watermark is not a valid payload."""


class MaskType(enum.IntEnum):
    NONE = 0
    TIME = 1
    FREQ = 2
    FIXED_FREQ = 3


@dataclass(frozen=True)
class NoMask:
    pass


@dataclass(frozen=True)
class TimePeaks:
    centers: tuple[int, ...]
    half_width: int = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(int(c) for c in self.centers))
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")


@dataclass(frozen=True)
class FreqBand:
    lo: int = DEFAULT_BAND[0]
    hi: int = DEFAULT_BAND[1]
    band_embedded: bool = True

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"invalid band [{self.lo}, {self.hi}]")


MaskSpec = Union[NoMask, TimePeaks, FreqBand]


def mask_type_of(spec: MaskSpec) -> MaskType:
    if isinstance(spec, NoMask):
        return MaskType.NONE
    if isinstance(spec, TimePeaks):
        return MaskType.TIME
    if isinstance(spec, FreqBand):
        return MaskType.FREQ if spec.band_embedded else MaskType.FIXED_FREQ
    raise TypeError(f"not a mask spec: {spec!r}")


def to_mask_vector(spec: MaskSpec, n: int) -> np.ndarray:
    """Binary vector ``c`` of length ``n`` marking masked indices."""
    c = np.zeros(n, dtype=np.int8)
    if isinstance(spec, NoMask):
        return c
    if isinstance(spec, FreqBand):
        if spec.hi >= n:
            raise ValueError(f"band [{spec.lo}, {spec.hi}] exceeds length {n}")
        c[spec.lo : spec.hi + 1] = 1
        return c
    if isinstance(spec, TimePeaks):
        for centre in spec.centers:
            if not 0 <= centre < n:
                raise ValueError(f"peak centre {centre} outside [0, {n})")
            c[max(centre - spec.half_width, 0) : min(centre + spec.half_width + 1, n)] = 1
        return c
    raise TypeError(f"not a mask spec: {spec!r}")


def column_signs(c: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Diagonal ``d`` with ``A + M == A @ diag(d)``."""
    c = np.asarray(c)
    p = np.asarray(p, dtype=float)
    idx = np.flatnonzero(c)
    if idx.size != p.size:
        raise ValueError(f"{idx.size} masked indices but {p.size} signs")
    d = np.ones(c.size)
    d[idx[p > 0]] = -1.0
    return d


def build_perturbation(A: np.ndarray, c: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Additive perturbation ``M``: ``-2 A[:, j]`` on masked columns signed +1, else 0."""
    A = np.asarray(A, dtype=float)
    if A.shape[1] != np.asarray(c).size:
        raise ValueError("mask length must equal the number of columns of A")
    d = column_signs(c, p)
    return A * (d - 1.0)


def _digits(value: int) -> list[int]:
    if not 0 <= value <= MAX_NUMBER:
        raise WatermarkCapacityError(f"{value} does not fit in {DIGITS} ternary digits")
    out = []
    for _ in range(DIGITS):
        value, d = divmod(value, 3)
        out.append(d)
    return out[::-1]


def encode_watermark(spec: MaskSpec, p, a: float, t: int) -> np.ndarray:
    """Ternary watermark of length ``t`` for ``spec`` and its sign pattern."""
    p = np.asarray(p, dtype=float)
    if p.size and not np.all(np.abs(p) == 1):
        raise ValueError("sign pattern entries must be +-1")
    digits: list[int] = []
    if isinstance(spec, NoMask):
        if p.size:
            raise ValueError("no mask takes no signs")
    elif isinstance(spec, FreqBand):
        width = spec.hi - spec.lo + 1
        if p.size != width:
            raise ValueError(f"band of width {width} needs {width} signs, got {p.size}")
        if spec.band_embedded:
            digits = _digits(spec.lo) + _digits(width)
    elif isinstance(spec, TimePeaks):
        if any(b <= a_ for a_, b in zip(spec.centers, spec.centers[1:])):
            raise ValueError("peak centres must be strictly increasing")
        digits = _digits(len(spec.centers))
        for centre in spec.centers:
            digits += _digits(centre)
    else:
        raise TypeError(f"not a mask spec: {spec!r}")

    need = len(digits) + p.size
    if need > t:
        raise WatermarkCapacityError(f"payload of {need} symbols exceeds watermark length {t}")
    w = np.zeros(t)
    w[: len(digits)] = (np.asarray(digits, dtype=float) - 1.0) * a
    w[len(digits) : need] = p * a
    return w


def threshold_watermark(w_est, a: float) -> np.ndarray:
    """Snap each entry to the nearest of ``{-a, 0, +a}``; ``|v| == a/2`` goes to 0."""
    if not a > 0:
        raise ValueError("embedding power must be positive")
    w_est = np.asarray(w_est, dtype=float)
    return np.where(np.abs(w_est) > a / 2, np.sign(w_est) * a, 0.0)


def decode_watermark(
    w,
    a: float,
    mask_type: MaskType,
    known_band: Optional[tuple[int, int]] = None,
    n: Optional[int] = None,
    half_width: int = DEFAULT_HALF_WIDTH,
) -> tuple[MaskSpec, np.ndarray]:
    """Invert :func:`encode_watermark`.

    ``known_band`` is required for ``FIXED_FREQ``; ``n`` (signal length) for
    ``TIME`` and, when given, bounds-checks bands. Raises
    :class:`WatermarkDecodeError` on any layout violation.
    """
    w = np.asarray(w, dtype=float)
    sym = np.rint(w / a).astype(int)
    if not np.allclose(w, sym * a) or np.any(np.abs(sym) > 1):
        raise WatermarkDecodeError("watermark is not ternary over {-a, 0, +a}")
    mask_type = MaskType(mask_type)
    t = sym.size
    pos = 0

    def read_number() -> int:
        nonlocal pos
        if pos + DIGITS > t:
            raise WatermarkDecodeError("watermark truncated inside a number")
        value = 0
        for s in sym[pos : pos + DIGITS]:
            value = 3 * value + int(s) + 1
        pos += DIGITS
        return value

    if mask_type is MaskType.NONE:
        spec: MaskSpec = NoMask()
        l = 0
    elif mask_type is MaskType.FIXED_FREQ:
        if known_band is None:
            raise ValueError("fixed-band decoding needs the known band")
        spec = FreqBand(int(known_band[0]), int(known_band[1]), band_embedded=False)
        l = spec.hi - spec.lo + 1
    elif mask_type is MaskType.FREQ:
        lo, width = read_number(), read_number()
        if width < 1:
            raise WatermarkDecodeError("embedded band has zero width")
        spec = FreqBand(lo, lo + width - 1, band_embedded=True)
        l = width
    elif mask_type is MaskType.TIME:
        if n is None:
            raise ValueError("time-mask decoding needs the signal length")
        count = read_number()
        if DIGITS * (count + 1) > t:
            raise WatermarkDecodeError(f"peak count {count} does not fit the watermark")
        centres = [read_number() for _ in range(count)]
        if any(b <= a_ for a_, b in zip(centres, centres[1:])):
            raise WatermarkDecodeError("peak centres not strictly increasing")
        spec = TimePeaks(tuple(centres), half_width)
        l = 0
    else:  # pragma: no cover
        raise ValueError(mask_type)

    if n is not None and not isinstance(spec, NoMask):
        try:
            c = to_mask_vector(spec, n)
        except ValueError as exc:
            raise WatermarkDecodeError(str(exc)) from exc
        if isinstance(spec, TimePeaks):
            l = int(c.sum())

    if pos + l > t:
        raise WatermarkDecodeError(f"{l} signs do not fit after {pos} header symbols")
    signs = sym[pos : pos + l]
    if np.any(signs == 0):
        raise WatermarkDecodeError("zero symbol inside the sign payload")
    if np.any(sym[pos + l :] != 0):
        raise WatermarkDecodeError("non-zero symbol in the padding")
    return spec, signs.astype(float)
