import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from rectgauss.core import (
    GOLDEN,
    MASK64,
    EstimatedModel,
    GenerativeModel,
    RandomStream,
    SampleMatrix,
    cholesky_psd_sqrt,
    mix64,
    raw_word,
    standard_normal,
)


def test_same_seed_same_sequence():
    a, b = RandomStream(1), RandomStream(1)
    assert [standard_normal(a) for _ in range(50)] == [standard_normal(b) for _ in range(50)]
    assert np.array_equal(RandomStream(7).normal(1000), RandomStream(7).normal(1000))


def test_different_seeds_differ():
    assert not np.array_equal(RandomStream(1).normal(10), RandomStream(2).normal(10))


def test_kernel_matches_python_splitmix():
    s = RandomStream(12345)
    for c in (0, 1, 2, 10**9):
        expected = mix64((s.key + (c + 1) * GOLDEN) & MASK64)
        assert int(raw_word(np.uint64(s.key), np.uint64(c))) == expected


def test_counter_advances_and_chunks_concatenate():
    a = RandomStream(3)
    whole = a.normal(10)
    b = RandomStream(3)
    parts = np.concatenate([b.normal(4), b.normal(6)])
    assert np.array_equal(whole, parts)
    assert a.counter == b.counter == 20


def test_normal_moments():
    z = RandomStream(99).normal(100_000)
    assert abs(z.mean()) < 0.02
    # sd of the sample variance is sqrt(2/n) ~ 0.0045; 0.03 is far outside 3 sigma
    assert abs(z.var() - 1) < 0.03


def test_uniform_open_interval():
    u = RandomStream(5).uniform(100_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_substreams_independent():
    root = RandomStream(11)
    a, b = root.substream(0).normal(50_000), root.substream(1).normal(50_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02
    assert np.array_equal(root.substream(1).normal(5), RandomStream(11).substream(1).normal(5))
    assert root.counter == 0


def test_normal_shape():
    assert RandomStream(0).normal((3, 4)).shape == (3, 4)


def test_generative_model_validation():
    with pytest.raises(ValueError):
        GenerativeModel(np.eye(2), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        GenerativeModel(np.eye(2), [0, 0], outer=np.ones((3, 3)))
    with pytest.raises(ValueError):
        GenerativeModel([[np.inf]], [0.0])
    m = GenerativeModel(np.ones((3, 2)), np.zeros(3), outer=np.ones((4, 3)))
    assert (m.d, m.k) == (3, 2)


def test_estimated_model_invariants():
    EstimatedModel(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        EstimatedModel(np.array([[1.0, 0.1], [0.2, 1.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        EstimatedModel(np.eye(2), np.array([-1.0, 0.0]))


def test_sample_matrix_rejects_empty():
    with pytest.raises(ValueError):
        SampleMatrix(np.zeros((0, 3)))


@pytest.mark.parametrize("m", [np.diag([4.0, 9.0]), np.eye(3)])
def test_psd_sqrt_examples(m):
    L = cholesky_psd_sqrt(m)
    assert np.allclose(L @ L.T, m, atol=1e-12)


def test_psd_sqrt_clips_negative_eigenvalue():
    q = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    m = q @ np.diag([1.0, -0.001]) @ q.T
    L = cholesky_psd_sqrt(m)
    w = np.linalg.eigvalsh(L @ L.T)
    assert np.allclose(w, [0.0, 1.0], atol=1e-9)


def test_psd_sqrt_rejects_asymmetric():
    with pytest.raises(ValueError):
        cholesky_psd_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 50), st.integers(1, 50)),
                  elements=st.floats(-10, 10)))
def test_psd_sqrt_property(a):
    m = a @ a.T if a.shape[0] == a.shape[1] else (a[:, :1] @ a[:, :1].T)
    m = 0.5 * (m + m.T) - 0.1 * np.eye(m.shape[0])  # mildly indefinite
    L = cholesky_psd_sqrt(m)
    w, v = np.linalg.eigh(m)
    clipped = (v * np.maximum(w, 0)) @ v.T
    assert np.linalg.norm(L @ L.T - clipped) <= 1e-9 * (1 + np.linalg.norm(m))
