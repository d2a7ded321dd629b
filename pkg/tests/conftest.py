import numpy as np
import pytest

from ecgcrypt.ecg import SynthParams, synth_ecg


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ecg_segment():
    """One 2048-sample synthetic segment with light noise."""
    return synth_ecg(SynthParams(bpm=72, amplitude_noise=0.002), seed=4, n_samples=2048)


def sparse_vector(rng, n, k, scale=1.0):
    x = np.zeros(n)
    idx = rng.choice(n, size=k, replace=False)
    x[idx] = scale * rng.standard_normal(k)
    return x
