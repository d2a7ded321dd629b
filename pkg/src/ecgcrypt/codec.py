"""Encryption and the two recovery levels.

Sensing domains
---------------
Time and unmasked modes measure the samples directly, ``y_w = A D s + B w``,
and recover sparse coefficients in the header basis (wavelet for time
masks, DCT otherwise). Frequency modes measure the orthonormal DCT of the
signal, ``y_w = A D (Omega s) + B w``, so the mask columns are DCT bins and
the recovery operator is ``A D`` itself; the signal is the inverse DCT of
the recovered coefficients. ``D`` is the diagonal of column signs produced
by the mask (``A + M == A D``).
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import masking
from .ecg import Signal, pan_tompkins
from .masking import (
    FreqBand,
    MaskSpec,
    MaskType,
    NoMask,
    TimePeaks,
    WatermarkDecodeError,
)
from .sensing import EmbedKey, SenseKey, annihilator, gen_sign_pattern
from .solver import FactoredOperator, RelativeToMeasurement, SolverConfig, bpdn_solve, least_squares
from .transforms import DCT, IDENTITY, BasisId, wavelet_basis

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_FS = 360.0


class HeaderMismatchError(ValueError):
    """Ciphertext header disagrees with the supplied key material."""


@dataclass(frozen=True)
class MaskConfig:
    mask_type: MaskType = MaskType.FIXED_FREQ
    band: tuple[int, int] = masking.DEFAULT_BAND
    half_width: int = masking.DEFAULT_HALF_WIDTH


@dataclass(frozen=True)
class CodecConfig:
    # User A treats mask and watermark as noise; the watermark pre-estimate
    # needs a much tighter fit or the least-squares symbol error exceeds a/2.
    solver_a: SolverConfig = SolverConfig(RelativeToMeasurement(0.05))
    solver_pre: SolverConfig = SolverConfig(RelativeToMeasurement(0.005))
    solver_b: SolverConfig = SolverConfig(RelativeToMeasurement(0.01))


@dataclass
class Ciphertext:
    y_w: np.ndarray
    n: int
    m: int
    t: int
    mask_type: MaskType
    mr: float
    basis: BasisId
    band: Optional[tuple[int, int]] = None
    version: int = FORMAT_VERSION

    def __post_init__(self):
        self.y_w = np.asarray(self.y_w, dtype=float)
        self.mask_type = MaskType(self.mask_type)
        if self.y_w.shape != (self.m,):
            raise ValueError(f"payload length {self.y_w.size} does not match m={self.m}")
        if (self.band is not None) != (self.mask_type is MaskType.FIXED_FREQ):
            raise ValueError("a band is carried exactly when the mask type is fixed_freq")


@dataclass
class MaskPlan:
    spec: MaskSpec
    signs: np.ndarray
    watermark: np.ndarray


@dataclass
class RecoveryReport:
    signal: Signal
    watermark_recovered_exactly: bool
    solver_converged: bool
    residual_norm: float
    watermark: Optional[np.ndarray] = None
    mask: Optional[MaskSpec] = None
    decode_error: Optional[str] = None
    pre_estimate: Optional[Signal] = field(default=None, repr=False)


class KeyMaterial:
    """Matrices derived from a key pair; the factorizations the solver reuses
    are computed on first access and cached per key."""

    def __init__(self, sk: SenseKey, ek: Optional[EmbedKey] = None):
        self.sk, self.ek = sk, ek

    @property
    def A(self) -> np.ndarray:
        return _sense_matrix(self.sk)

    @property
    def a_op(self) -> FactoredOperator:
        return _sense_op(self.sk)

    @property
    def B(self) -> np.ndarray:
        return _embed_matrix(self.sk.m, self._need_ek())

    @property
    def F(self) -> np.ndarray:
        return _annihilator(self.sk.m, self._need_ek())

    @property
    def fa_op(self) -> FactoredOperator:
        return _annihilated_op(self.sk, self._need_ek())

    def _need_ek(self) -> EmbedKey:
        if self.ek is None:
            raise ValueError("no embedding key")
        return self.ek


@functools.lru_cache(maxsize=4)
def _sense_matrix(sk: SenseKey) -> np.ndarray:
    return sk.matrix()


@functools.lru_cache(maxsize=4)
def _sense_op(sk: SenseKey) -> FactoredOperator:
    return FactoredOperator.from_matrix(_sense_matrix(sk))


@functools.lru_cache(maxsize=4)
def _embed_matrix(m: int, ek: EmbedKey) -> np.ndarray:
    return ek.matrix(m)


@functools.lru_cache(maxsize=4)
def _annihilator(m: int, ek: EmbedKey) -> np.ndarray:
    return annihilator(_embed_matrix(m, ek))


@functools.lru_cache(maxsize=4)
def _annihilated_op(sk: SenseKey, ek: EmbedKey) -> FactoredOperator:
    return FactoredOperator.from_matrix(_annihilator(sk.m, ek) @ _sense_matrix(sk))


def key_material(sk: SenseKey, ek: Optional[EmbedKey] = None) -> KeyMaterial:
    return KeyMaterial(sk, ek)


def _is_freq(mask_type: MaskType) -> bool:
    return mask_type in (MaskType.FREQ, MaskType.FIXED_FREQ)


def default_basis(mask_type: MaskType, n: int) -> BasisId:
    return wavelet_basis(n) if mask_type is MaskType.TIME else DCT


def _recovery_basis(ct: Ciphertext) -> BasisId:
    return IDENTITY if _is_freq(ct.mask_type) else ct.basis


def _to_signal_domain(ct: Ciphertext, coeffs: np.ndarray) -> np.ndarray:
    v = _recovery_basis(ct).synthesis(coeffs)
    return ct.basis.synthesis(v) if _is_freq(ct.mask_type) else v


def plan_mask(s: Signal, mask: MaskConfig, ek: Optional[EmbedKey], sign_seed: int) -> MaskPlan:
    """Mask spec, sign pattern and watermark for one signal.

    Time masks are centred on Pan-Tompkins detections in ``s``.
    """
    n = len(s)
    mt = MaskType(mask.mask_type)
    if mt is MaskType.NONE:
        spec: MaskSpec = NoMask()
    elif mt is MaskType.TIME:
        spec = TimePeaks(tuple(pan_tompkins(s)), mask.half_width)
    else:
        spec = FreqBand(mask.band[0], mask.band[1], band_embedded=mt is MaskType.FREQ)
    l = int(masking.to_mask_vector(spec, n).sum())
    p = gen_sign_pattern(sign_seed, l)
    if ek is None:
        if mt is not MaskType.NONE:
            raise ValueError("masked encryption needs an embedding key")
        return MaskPlan(spec, p, np.zeros(0))
    return MaskPlan(spec, p, masking.encode_watermark(spec, p, ek.a, ek.t))


def encrypt(
    s: Signal,
    sk: SenseKey,
    ek: Optional[EmbedKey],
    mask: MaskConfig = MaskConfig(),
    sign_seed: int = 0,
    plan: Optional[MaskPlan] = None,
) -> Ciphertext:
    """Measure, mask and watermark ``s``.

    ``sign_seed`` is the per-signal nonce for the sign pattern; it is not
    stored in the ciphertext.
    """
    if len(s) != sk.n:
        raise ValueError(f"signal length {len(s)} does not match key n={sk.n}")
    mt = MaskType(mask.mask_type)
    plan = plan or plan_mask(s, mask, ek, sign_seed)
    basis = default_basis(mt, sk.n)
    km = key_material(sk, ek)

    c = masking.to_mask_vector(plan.spec, sk.n)
    d = masking.column_signs(c, plan.signs)
    u = basis.analysis(s.samples) if _is_freq(mt) else s.samples
    y = km.A @ (d * u)
    t = 0
    if ek is not None:
        y = y + km.B @ plan.watermark
        t = ek.t
    band = tuple(mask.band) if mt is MaskType.FIXED_FREQ else None
    return Ciphertext(y, sk.n, sk.m, t, mt, sk.mr, basis, band)


def check_header(ct: Ciphertext, sk: SenseKey, ek: Optional[EmbedKey] = None) -> None:
    if ct.version != FORMAT_VERSION:
        raise HeaderMismatchError(f"unsupported format version {ct.version}")
    if ct.n != sk.n or ct.m != sk.m or abs(ct.mr - sk.mr) > 1e-12:
        raise HeaderMismatchError(
            f"ciphertext (n={ct.n}, m={ct.m}, mr={ct.mr}) does not match key (n={sk.n}, m={sk.m}, mr={sk.mr})"
        )
    if ek is not None and ct.t != ek.t:
        raise HeaderMismatchError(f"ciphertext t={ct.t} does not match key t={ek.t}")


def recover_user_a(ct: Ciphertext, sk: SenseKey, cfg: CodecConfig = CodecConfig(), fs: float = DEFAULT_FS) -> Signal:
    """Plain compressive-sensing recovery; mask and watermark stay in as noise."""
    return recover_user_a_detailed(ct, sk, cfg, fs)[0]


def recover_user_a_detailed(ct: Ciphertext, sk: SenseKey, cfg: CodecConfig = CodecConfig(), fs: float = DEFAULT_FS):
    check_header(ct, sk)
    km = key_material(sk, None)
    op = km.a_op.compose(basis=_recovery_basis(ct))
    res = bpdn_solve(op, ct.y_w, cfg.solver_a.epsilon(ct.y_w), cfg.solver_a)
    return Signal(_to_signal_domain(ct, res.x), fs), res


def recover_user_b(
    ct: Ciphertext,
    sk: SenseKey,
    ek: EmbedKey,
    cfg: CodecConfig = CodecConfig(),
    fs: float = DEFAULT_FS,
    half_width: int = masking.DEFAULT_HALF_WIDTH,
    true_watermark: Optional[np.ndarray] = None,
) -> RecoveryReport:
    """Full recovery: strip the watermark, read the mask from it, undo the mask.

    With ``true_watermark`` (evaluation mode) the exactness flag compares
    symbol by symbol; otherwise it reports whether the watermark decoded.
    """
    check_header(ct, sk, ek)
    km = key_material(sk, ek)
    basis = _recovery_basis(ct)

    y_ann = km.F @ ct.y_w
    pre = bpdn_solve(km.fa_op.compose(basis=basis), y_ann, cfg.solver_pre.epsilon(y_ann), cfg.solver_pre)
    pre_signal = Signal(_to_signal_domain(ct, pre.x), fs)

    resid = ct.y_w - km.A @ basis.synthesis(pre.x)
    w_hat = masking.threshold_watermark(least_squares(km.B, resid), ek.a)
    try:
        spec, p = masking.decode_watermark(w_hat, ek.a, ct.mask_type, ct.band, n=ct.n, half_width=half_width)
    except WatermarkDecodeError as exc:
        logger.info("mask recovery failed: %s", exc)
        return RecoveryReport(
            pre_signal, False, pre.converged, pre.residual_norm, w_hat, None, str(exc), pre_signal
        )

    d = masking.column_signs(masking.to_mask_vector(spec, ct.n), p)
    y_b = ct.y_w - km.B @ w_hat
    res = bpdn_solve(km.a_op.compose(col_signs=d, basis=basis), y_b, cfg.solver_b.epsilon(y_b), cfg.solver_b)
    exact = True if true_watermark is None else bool(np.array_equal(w_hat, true_watermark))
    return RecoveryReport(
        Signal(_to_signal_domain(ct, res.x), fs),
        exact,
        pre.converged and res.converged,
        res.residual_norm,
        w_hat,
        spec,
        None,
        pre_signal,
    )
