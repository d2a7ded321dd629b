import numpy as np
import pytest
import scipy.linalg

from ecgcrypt.sensing import (
    EmbedKey,
    RankDeficiencyError,
    SenseKey,
    annihilator,
    gen_gaussian_matrix,
    gen_sign_pattern,
    measurement_count,
    sub_seed,
)


def test_gaussian_deterministic():
    a = gen_gaussian_matrix(7, 30, 50)
    b = gen_gaussian_matrix(7, 30, 50)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, gen_gaussian_matrix(8, 30, 50))


def test_preset_dims():
    sk = SenseKey(1, 2048, 0.65)
    assert sk.m == 1331
    assert sk.matrix().shape == (1331, 2048)
    assert SenseKey(1, 2048, 0.3).m == 614
    assert SenseKey(1, 2048, 0.5).m == 1024


def test_gaussian_moments():
    rows = cols = 500
    A = gen_gaussian_matrix(3, rows, cols)
    assert abs(A.mean()) <= 4 / (np.sqrt(rows * cols) * np.sqrt(rows))
    assert abs(np.linalg.norm(A, axis=0).mean() - 1.0) <= 0.05


def test_gaussian_bad_dims():
    with pytest.raises(ValueError):
        gen_gaussian_matrix(0, 0, 5)
    with pytest.raises(ValueError):
        gen_gaussian_matrix(0, 5, 0)


def test_sign_pattern():
    assert gen_sign_pattern(1, 0).shape == (0,)
    assert np.array_equal(gen_sign_pattern(5, 100), gen_sign_pattern(5, 100))
    p = gen_sign_pattern(9, 10000)
    assert set(np.unique(p)) == {-1.0, 1.0}
    assert abs(p.mean()) <= 0.04
    with pytest.raises(ValueError):
        gen_sign_pattern(1, -1)


def test_energy_preservation(rng):
    A = gen_gaussian_matrix(11, 256, 512)
    energies = []
    for _ in range(200):
        s = rng.standard_normal(512)
        s /= np.linalg.norm(s)
        energies.append(np.sum((A @ s) ** 2))
    assert 0.9 <= np.mean(energies) <= 1.1


def test_annihilator_identity_block():
    m, t = 10, 3
    B = np.eye(m)[:, :t]
    F = annihilator(B)
    assert F.shape == (m - t, m)
    # rows span exactly the coordinate axes t..m-1
    assert np.max(np.abs(F[:, :t])) < 1e-12
    assert np.allclose(F[:, t:] @ F[:, t:].T, np.eye(m - t), atol=1e-12)


def test_annihilator_random():
    B = gen_gaussian_matrix(2, 40, 8)
    F = annihilator(B)
    assert F.shape == (32, 40)
    assert np.max(np.abs(F @ B)) <= 1e-10
    assert np.max(np.abs(F @ F.T - np.eye(32))) <= 1e-10


def test_annihilator_matches_svd_complement():
    B = gen_gaussian_matrix(4, 30, 7)
    F = annihilator(B)
    N = scipy.linalg.null_space(B.T).T
    # same subspace: equal orthogonal projectors
    assert np.max(np.abs(F.T @ F - N.T @ N)) < 1e-10


def test_annihilator_kills_column_space(rng):
    for seed, (m, t) in enumerate([(12, 3), (40, 20), (100, 99)]):
        B = gen_gaussian_matrix(seed, m, t)
        F = annihilator(B)
        v = B @ rng.standard_normal(t)
        assert np.linalg.norm(F @ v) <= 1e-9 * np.linalg.norm(v)


def test_annihilator_rank_deficient():
    B = gen_gaussian_matrix(1, 20, 4)
    B[:, 3] = B[:, 0] + B[:, 1]
    with pytest.raises(RankDeficiencyError):
        annihilator(B)


def test_annihilator_wide_rejected():
    with pytest.raises(ValueError):
        annihilator(np.ones((3, 3)))


def test_keys_validate():
    with pytest.raises(ValueError):
        SenseKey(1, 2048, 0.0)
    with pytest.raises(ValueError):
        EmbedKey(1, 0, 0.1)
    with pytest.raises(ValueError):
        EmbedKey(1, 10, -0.1)
    with pytest.raises(ValueError):
        EmbedKey(1, 20, 0.1).matrix(20)
    assert EmbedKey(1, 110, 0.1).matrix(1331).shape == (1331, 110)


def test_measurement_count_rounding():
    assert measurement_count(100, 0.29) == 29
    assert measurement_count(2048, 0.5) == 1024


def test_sub_seed_distinct():
    seeds = {sub_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert sub_seed(42, 0) == 42
