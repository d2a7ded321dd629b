import numpy as np
import pytest

from ecgcrypt.ecg import AnnotatedRecord, Signal, SynthParams, pan_tompkins, segment, synth_ecg
from ecgcrypt.metrics import peak_match


def test_flat_signal_has_no_peaks():
    assert pan_tompkins(Signal(np.zeros(3600), 360.0)).size == 0


def test_ten_beats_at_72_bpm():
    rec = synth_ecg(SynthParams(bpm=72, duration_s=10 * 60 / 72, amplitude_noise=0.01), seed=3)
    det = pan_tompkins(rec.signal)
    ref = rec.peak_indices
    assert 9 <= ref.size <= 11
    prec, rec_ = peak_match(ref, det, 10)
    assert prec == 1.0
    assert rec_ * ref.size >= ref.size - 1


def test_rr_intervals_at_60_bpm():
    rec = synth_ecg(SynthParams(bpm=60, duration_s=20, rr_jitter=0.0, amplitude_noise=0.0), seed=1)
    det = pan_tompkins(rec.signal)
    rr = np.diff(det)
    assert rr.size >= 17
    assert np.all(np.abs(rr - 360) <= 3)


def test_pan_tompkins_rejects_bad_input():
    with pytest.raises(ValueError):
        pan_tompkins(Signal(np.zeros(500), 360.0))
    with pytest.raises(ValueError):
        pan_tompkins(Signal(np.zeros(5000), 50.0))


@pytest.mark.parametrize("bpm", [60, 90, 120])
def test_pan_tompkins_clean_rhythms(bpm):
    rec = synth_ecg(SynthParams(bpm=bpm, duration_s=30, amplitude_noise=0.05), seed=bpm)
    prec, rec_ = peak_match(rec.peak_indices, pan_tompkins(rec.signal), 10)
    assert prec >= 0.95 and rec_ >= 0.95


def test_beat_count_in_2048_window():
    counts = {synth_ecg(SynthParams(bpm=72), seed=s, n_samples=2048).peak_indices.size for s in range(20)}
    assert counts <= {6, 7}


def test_periodic_without_noise_or_jitter():
    rec = synth_ecg(SynthParams(bpm=75, duration_s=12, rr_jitter=0.0, amplitude_noise=0.0), seed=2)
    x = rec.signal.samples
    lag = 288  # 360 * 60 / 75
    mid = slice(720, x.size - 720)
    assert np.max(np.abs(x[mid] - np.roll(x, -lag)[mid])) < 1e-12
    xc = x - x.mean()
    ac = np.array([xc[: -k] @ xc[k:] for k in range(150, 450)])
    assert 150 + int(np.argmax(ac)) == lag


def test_synth_deterministic():
    a = synth_ecg(SynthParams(), seed=9)
    b = synth_ecg(SynthParams(), seed=9)
    assert a.signal.samples.tobytes() == b.signal.samples.tobytes()
    assert np.array_equal(a.peak_indices, b.peak_indices)


def test_peaks_are_local_maxima():
    rec = synth_ecg(SynthParams(bpm=80, duration_s=20, amplitude_noise=0.0), seed=5)
    x = rec.signal.samples
    for p in rec.peak_indices:
        lo, hi = max(p - 20, 0), min(p + 21, x.size)
        assert abs(lo + int(np.argmax(x[lo:hi])) - p) <= 1


def test_synth_param_validation():
    with pytest.raises(ValueError):
        synth_ecg(SynthParams(bpm=10))
    with pytest.raises(ValueError):
        synth_ecg(SynthParams(fs=50))
    with pytest.raises(ValueError):
        synth_ecg(SynthParams(rr_jitter=-1))


def test_segment_counts():
    rec = AnnotatedRecord(Signal(np.zeros(2**18), 360.0))
    assert len(segment(rec, 2048)) == 128
    assert segment(AnnotatedRecord(Signal(np.zeros(2047), 360.0)), 2048) == []
    with pytest.raises(ValueError):
        segment(rec, 0)


def test_segment_rebases_peaks():
    rec = AnnotatedRecord(Signal(np.zeros(5000), 360.0), np.array([10, 2050, 4500]))
    segs = segment(rec, 2048)
    assert len(segs) == 2
    assert list(segs[0].peak_indices) == [10]
    assert list(segs[1].peak_indices) == [2]
    assert all(len(s.signal) == 2048 for s in segs)


def test_segment_preserves_peak_count():
    rec = synth_ecg(SynthParams(bpm=70), seed=0, n_samples=3 * 2048 + 500)
    segs = segment(rec, 2048)
    kept = rec.peak_indices[rec.peak_indices < 3 * 2048].size
    assert sum(s.peak_indices.size for s in segs) == kept


def test_record_validation():
    with pytest.raises(ValueError):
        AnnotatedRecord(Signal(np.zeros(10), 360.0), np.array([5, 3]))
    with pytest.raises(ValueError):
        AnnotatedRecord(Signal(np.zeros(10), 360.0), np.array([10]))
    with pytest.raises(ValueError):
        AnnotatedRecord(Signal(np.zeros(10), 360.0), label="X")
    with pytest.raises(ValueError):
        Signal(np.array([np.nan]), 360.0)
