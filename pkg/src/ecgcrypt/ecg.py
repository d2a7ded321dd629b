"""ECG signal containers, a synthetic ECG generator with exact R-peak
annotations, Pan-Tompkins R-peak detection and fixed-window segmentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage, signal as sps

AAMI_LABELS = ("N", "S", "V", "F", "Q")


@dataclass
class Signal:
    samples: np.ndarray
    fs: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D vector")
        if not self.fs > 0:
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class AnnotatedRecord:
    signal: Signal
    peak_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    label: Optional[str] = None

    def __post_init__(self):
        p = np.asarray(self.peak_indices, dtype=np.int64)
        if p.ndim != 1:
            raise ValueError("peak indices must be a 1-D list")
        if p.size and (np.any(np.diff(p) <= 0) or p[0] < 0 or p[-1] >= len(self.signal)):
            raise ValueError("peak indices must be strictly increasing and within the signal")
        if self.label is not None and self.label not in AAMI_LABELS:
            raise ValueError(f"unknown AAMI label {self.label!r}")
        self.peak_indices = p


@dataclass(frozen=True)
class SynthParams:
    bpm: float = 72.0
    duration_s: float = 10.0
    fs: float = 360.0
    rr_jitter: float = 0.03
    amplitude_noise: float = 0.01

    def validate(self) -> None:
        if not 30 <= self.bpm <= 220:
            raise ValueError(f"bpm must lie in [30, 220], got {self.bpm}")
        if self.fs < 100:
            raise ValueError(f"fs must be >= 100 Hz, got {self.fs}")
        if not self.duration_s > 0:
            raise ValueError("duration must be positive")
        if self.rr_jitter < 0 or self.amplitude_noise < 0:
            raise ValueError("jitter and noise must be non-negative")


# (offset from R in s, amplitude in mV, width sigma in s); T offset scales with sqrt(RR)
_WAVES = {
    "P": (-0.20, 0.15, 0.025),
    "Q": (-0.030, -0.12, 0.009),
    "R": (0.0, 1.0, 0.011),
    "S": (0.030, -0.25, 0.009),
    "T": (0.28, 0.30, 0.045),
}


def synth_ecg(params: SynthParams = SynthParams(), seed: int = 0, n_samples: int | None = None) -> AnnotatedRecord:
    """Gaussian-bump ECG with jittered RR intervals.

    ``n_samples`` overrides ``params.duration_s`` when given. Annotated peaks
    are the rounded R-wave centres that fall inside the record.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    fs = params.fs
    n = int(n_samples) if n_samples is not None else int(round(params.duration_s * fs))
    if n < 1:
        raise ValueError("record must contain at least one sample")
    t = np.arange(n) / fs
    rr_mean = 60.0 / params.bpm
    duration = n / fs

    r_times = []
    tr = rr_mean * rng.uniform(0.2, 1.0)
    while tr < duration + 0.5:
        r_times.append(tr)
        rr = rr_mean * (1.0 + params.rr_jitter * rng.standard_normal())
        tr += max(rr, 0.5 * rr_mean)

    x = np.zeros(n)
    for tr in r_times:
        # beat-to-beat amplitude variability follows the rhythm jitter
        scale = 1.0 + params.rr_jitter * rng.standard_normal()
        for name, (off, amp, width) in _WAVES.items():
            if name == "T":
                off = off * np.sqrt(rr_mean)
            centre = tr + off
            lo = np.searchsorted(t, centre - 5 * width)
            hi = np.searchsorted(t, centre + 5 * width)
            if hi <= lo:
                continue
            seg = t[lo:hi]
            x[lo:hi] += scale * amp * np.exp(-0.5 * ((seg - centre) / width) ** 2)
    if params.amplitude_noise > 0:
        x += params.amplitude_noise * rng.standard_normal(n)

    peaks = np.array([int(round(tr * fs)) for tr in r_times], dtype=np.int64)
    peaks = peaks[(peaks >= 0) & (peaks < n)]
    return AnnotatedRecord(Signal(x, fs), np.unique(peaks), "N")


def segment(record: AnnotatedRecord, window: int) -> list[AnnotatedRecord]:
    """Split into consecutive non-overlapping windows; the remainder is dropped."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = record.signal.samples
    out = []
    for k in range(x.size // window):
        lo, hi = k * window, (k + 1) * window
        p = record.peak_indices
        local = p[(p >= lo) & (p < hi)] - lo
        out.append(AnnotatedRecord(Signal(x[lo:hi].copy(), record.signal.fs), local, record.label))
    return out


def _bandpass(x: np.ndarray, fs: float, lo: float = 5.0, hi: float = 15.0) -> np.ndarray:
    sos = sps.butter(2, [lo, hi], btype="bandpass", fs=fs, output="sos")
    return sps.sosfiltfilt(sos, x)


def pan_tompkins(sig: Signal) -> np.ndarray:
    """R-peak sample indices found with the Pan-Tompkins detector.

    Stages: 5-15 Hz band-pass (zero-phase recursive Butterworth), five-point
    derivative, squaring, 150 ms moving-window integration, then dual
    adaptive thresholds on the integrated and band-passed signals with a
    200 ms refractory period, T-wave rejection within 360 ms and search-back
    after 1.66 mean RR intervals without a beat. The reported index is the
    band-passed maximum of each accepted QRS.
    """
    fs = float(sig.fs)
    x = sig.samples
    if fs < 100:
        raise ValueError(f"Pan-Tompkins needs fs >= 100 Hz, got {fs}")
    if x.size < 2 * fs:
        raise ValueError("Pan-Tompkins needs at least 2 s of signal")

    x = x - np.median(x)
    bp = _bandpass(x, fs)
    deriv = np.convolve(bp, np.array([1.0, 2.0, 0.0, -2.0, -1.0]) * fs / 8.0, mode="same")
    mwi = ndimage.uniform_filter1d(deriv**2, size=max(int(round(0.150 * fs)), 1), mode="nearest")
    if not np.any(mwi > 0):
        return np.zeros(0, dtype=np.int64)

    refractory = int(round(0.200 * fs))
    t_window = int(round(0.360 * fs))
    qrs_half = int(round(0.075 * fs))
    cands, _ = sps.find_peaks(mwi, distance=refractory)
    if cands.size == 0:
        return np.zeros(0, dtype=np.int64)

    def bp_peak(i):
        lo, hi = max(i - qrs_half, 0), min(i + qrs_half + 1, x.size)
        j = lo + int(np.argmax(np.abs(bp[lo:hi])))
        return j, abs(bp[j])

    def max_slope(i):
        lo, hi = max(i - qrs_half, 0), min(i + qrs_half + 1, x.size)
        return np.max(np.abs(deriv[lo:hi]))

    learn = mwi[: int(2 * fs)]
    spki, npki = 0.25 * learn.max(), 0.5 * learn.mean()
    learn_f = np.abs(bp[: int(2 * fs)])
    spkf, npkf = 0.25 * learn_f.max(), 0.5 * learn_f.mean()

    qrs = []  # (mwi index, bp index)
    last_slope = 0.0
    rr_hist: list[int] = []
    noise_since = []  # candidates rejected since the last beat, for search-back

    def thresholds():
        thr_i = npki + 0.25 * (spki - npki)
        thr_f = npkf + 0.25 * (spkf - npkf)
        return thr_i, thr_f

    def accept(i, j, pk_i, pk_f, searchback):
        nonlocal spki, spkf, last_slope
        w = 0.25 if searchback else 0.125
        spki = w * pk_i + (1 - w) * spki
        spkf = w * pk_f + (1 - w) * spkf
        if qrs:
            rr_hist.append(i - qrs[-1][0])
            del rr_hist[:-8]
        qrs.append((i, j))
        last_slope = max_slope(i)
        noise_since.clear()

    for i in cands:
        pk_i = mwi[i]
        j, pk_f = bp_peak(i)

        if qrs and rr_hist:
            rr_avg = np.mean(rr_hist)
            if i - qrs[-1][0] > 1.66 * rr_avg and noise_since:
                thr_i, thr_f = thresholds()
                pool = [c for c in noise_since if c[2] > 0.5 * thr_i and c[3] > 0.5 * thr_f]
                if pool:
                    best = max(pool, key=lambda c: c[2])
                    accept(best[0], best[1], best[2], best[3], True)

        thr_i, thr_f = thresholds()
        if pk_i > thr_i and pk_f > thr_f and pk_i > 0:
            if qrs and i - qrs[-1][0] < refractory:
                continue
            if qrs and i - qrs[-1][0] < t_window and max_slope(i) < 0.5 * last_slope:
                npki = 0.125 * pk_i + 0.875 * npki
                npkf = 0.125 * pk_f + 0.875 * npkf
                continue
            accept(i, j, pk_i, pk_f, False)
        else:
            npki = 0.125 * pk_i + 0.875 * npki
            npkf = 0.125 * pk_f + 0.875 * npkf
            if not qrs or i - qrs[-1][0] >= refractory:
                noise_since.append((i, j, pk_i, pk_f))

    return np.unique(np.array([j for _, j in qrs], dtype=np.int64))
