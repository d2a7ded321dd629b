"""On-disk formats.

Signal CSV
    First line ``fs=<Hz>``, then one sample per line. R-peak annotations go
    in a sidecar ``<stem>.peaks`` (one sorted integer per line) and an
    optional AAMI label in ``<stem>.label``.

Ciphertext (little-endian)
    ``b"CSEW"``, format version ``u16``, ``n``/``m``/``t`` as ``u32``, mask
    type ``u8``, measurement rate ``f64``, the band as two ``u32`` only for
    fixed-band masks, basis tag ``u8``, then ``m`` ``f64`` measurements.

Key file
    JSON object with ``seed_a``, ``n``, ``mr`` and, for full authorization,
    ``seed_b``, ``t``, ``a``. Optional ``fs`` and ``half_width``. Keys are
    stored in the clear; protecting them is out of scope.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .codec import FORMAT_VERSION, Ciphertext
from .ecg import AnnotatedRecord, Signal
from .masking import MaskType
from .sensing import EmbedKey, SenseKey
from .transforms import BasisId

MAGIC = b"CSEW"
_FIXED = struct.Struct("<4sHIIIBd")
_BAND = struct.Struct("<II")


class FormatError(ValueError):
    """A file does not follow its declared format."""


def write_signal_csv(path, record: AnnotatedRecord | Signal) -> None:
    path = Path(path)
    rec = record if isinstance(record, AnnotatedRecord) else AnnotatedRecord(record)
    lines = [f"fs={rec.signal.fs!r}"] + [repr(float(v)) for v in rec.signal.samples]
    path.write_text("\n".join(lines) + "\n")
    if isinstance(record, AnnotatedRecord):
        path.with_suffix(".peaks").write_text("".join(f"{int(p)}\n" for p in rec.peak_indices))
        if rec.label is not None:
            path.with_suffix(".label").write_text(rec.label + "\n")


def read_signal_csv(path) -> AnnotatedRecord:
    path = Path(path)
    lines = path.read_text().split()
    if not lines or not lines[0].startswith("fs="):
        raise FormatError(f"{path}: first line must be 'fs=<Hz>'")
    try:
        fs = float(lines[0][3:])
        samples = np.array([float(v) for v in lines[1:]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    peaks_path = path.with_suffix(".peaks")
    peaks = np.zeros(0, dtype=np.int64)
    if peaks_path.exists():
        peaks = np.array([int(v) for v in peaks_path.read_text().split()], dtype=np.int64)
    label_path = path.with_suffix(".label")
    label = label_path.read_text().strip() or None if label_path.exists() else None
    try:
        return AnnotatedRecord(Signal(samples, fs), peaks, label)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def serialize_ciphertext(ct: Ciphertext) -> bytes:
    parts = [_FIXED.pack(MAGIC, ct.version, ct.n, ct.m, ct.t, int(ct.mask_type), float(ct.mr))]
    if ct.mask_type is MaskType.FIXED_FREQ:
        parts.append(_BAND.pack(*ct.band))
    parts.append(struct.pack("<B", ct.basis.tag))
    parts.append(np.asarray(ct.y_w, dtype="<f8").tobytes())
    return b"".join(parts)


def parse_ciphertext(data: bytes) -> Ciphertext:
    if len(data) < _FIXED.size:
        raise FormatError("ciphertext shorter than its header")
    magic, version, n, m, t, mask, mr = _FIXED.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported ciphertext version {version}")
    try:
        mask_type = MaskType(mask)
    except ValueError as exc:
        raise FormatError(f"unknown mask type {mask}") from exc
    off = _FIXED.size
    band = None
    if mask_type is MaskType.FIXED_FREQ:
        band = _BAND.unpack_from(data, off)
        off += _BAND.size
    if len(data) != off + 1 + 8 * m:
        raise FormatError(f"payload size {len(data) - off - 1} does not hold {m} measurements")
    try:
        basis = BasisId.from_tag(data[off])
    except ValueError as exc:
        raise FormatError(f"unknown basis tag {data[off]}") from exc
    y = np.frombuffer(data, dtype="<f8", count=m, offset=off + 1).astype(float)
    return Ciphertext(y, n, m, t, mask_type, mr, basis, band, version)


def write_ciphertext(path, ct: Ciphertext) -> None:
    Path(path).write_bytes(serialize_ciphertext(ct))


def read_ciphertext(path) -> Ciphertext:
    return parse_ciphertext(Path(path).read_bytes())


def write_key_file(path, sk: SenseKey, ek: Optional[EmbedKey] = None, **extra) -> None:
    data = {"seed_a": sk.seed_a, "n": sk.n, "mr": sk.mr}
    if ek is not None:
        data.update(seed_b=ek.seed_b, t=ek.t, a=ek.a)
    data.update(extra)
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_key_file(path) -> tuple[SenseKey, Optional[EmbedKey], dict]:
    """Sense key, embed key (``None`` for a User A file) and the remaining fields."""
    try:
        data = json.loads(Path(path).read_text())
        sk = SenseKey(int(data.pop("seed_a")), int(data.pop("n")), float(data.pop("mr")))
        ek = None
        if "seed_b" in data:
            ek = EmbedKey(int(data.pop("seed_b")), int(data.pop("t")), float(data.pop("a")))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed key file ({exc})") from exc
    return sk, ek, data
