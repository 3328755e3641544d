import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psdglasso.matrix import (
    INDEFINITE,
    ONLY_PSD,
    POSITIVE_DEFINITE,
    ConvergenceError,
    EigenDecomposition,
    IndefiniteMatrixError,
    SymMatrix,
    cholesky_pd_check,
    classify_definiteness,
    eigendecompose,
    null_space,
)

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


def random_symmetric(seed, p):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(p, p)) * np.exp(rng.normal())
    return (A + A.T) / 2


def random_pd(rng, p):
    A = rng.normal(size=(p, p + 2))
    return A @ A.T / (p + 2) + 1e-3 * np.eye(p)


def fake_decomposition(values):
    values = np.asarray(values, dtype=float)
    return EigenDecomposition(values, np.eye(len(values)))


# --- SymMatrix ---------------------------------------------------------------

def test_symmatrix_structural_symmetry():
    a = np.array([[1.0, 2.0], [2.0 + 1e-13, 3.0]])
    S = SymMatrix(a)
    assert S.entry(0, 1) == S.entry(1, 0)
    assert S.dim == 2
    with pytest.raises(ValueError):
        S.array[0, 0] = 5.0


def test_symmatrix_rejects_asymmetric_and_bad_shapes():
    with pytest.raises(ValueError):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        SymMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        SymMatrix([[np.nan]])
    assert SymMatrix.symmetrized([[1.0, 2.0], [0.0, 1.0]]).entry(0, 1) == 1.0


def test_scalar_matrix_allowed():
    S = SymMatrix(2.0)
    assert S.dim == 1
    E = eigendecompose(S)
    assert E.values.tolist() == [2.0]
    assert classify_definiteness(E).tag == POSITIVE_DEFINITE
    assert classify_definiteness(eigendecompose(SymMatrix(0.0))).tag == ONLY_PSD


# --- eigendecompose examples -------------------------------------------------

def test_identity():
    E = eigendecompose(np.eye(3))
    assert np.allclose(E.values, 1.0)
    assert np.allclose(E.vectors.T @ E.vectors, np.eye(3))
    for i in range(3):
        col = E.vectors[:, i]
        assert col[np.argmax(np.abs(col))] > 0


def test_example_one_matrix():
    E = eigendecompose([[0.0, 0.0], [0.0, 1.0]])
    assert E.values.tolist() == [1.0, 0.0]
    assert np.array_equal(E.vectors, [[0.0, 1.0], [1.0, 0.0]])


def test_rank_one_all_ones():
    E = eigendecompose([[1.0, 1.0], [1.0, 1.0]])
    assert np.allclose(E.values, [2.0, 0.0], atol=1e-15)
    r = 1 / np.sqrt(2)
    assert np.allclose(E.vectors[:, 0], [r, r], atol=1e-15)
    assert np.allclose(E.vectors[:, 1], [r, -r], atol=1e-15)


def test_sweep_cap_raises():
    A = random_symmetric(3, 12)
    with pytest.raises(ConvergenceError):
        eigendecompose(A, max_sweeps=1)


def test_deterministic():
    A = random_symmetric(11, 7)
    E1, E2 = eigendecompose(A), eigendecompose(A)
    assert np.array_equal(E1.values, E2.values)
    assert np.array_equal(E1.vectors, E2.vectors)


@settings(max_examples=60, deadline=None)
@given(seed=SEEDS, p=st.integers(min_value=1, max_value=20))
def test_reconstruction_and_orthonormality(seed, p):
    A = random_symmetric(seed, p)
    E = eigendecompose(A)
    V = E.vectors
    assert np.max(np.abs(V.T @ V - np.eye(p))) <= 1e-10
    scale = 1 + np.max(np.abs(E.values))
    assert np.max(np.abs(E.reconstruct() - A)) <= 1e-10 * scale
    assert np.all(np.diff(E.values) <= 0)
    # numpy's LAPACK eigensolver as an independent oracle for the spectrum
    assert np.allclose(E.values, np.linalg.eigvalsh(A)[::-1], atol=1e-10 * scale)
    for i in range(p):
        col = V[:, i]
        assert col[np.argmax(np.abs(col) >= np.abs(col).max() - 1e-12)] > 0


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS, p=st.integers(min_value=1, max_value=8))
def test_trace_identity(seed, p):
    rng = np.random.default_rng(seed)
    S, T = random_pd(rng, p), random_pd(rng, p)
    ES, ET = eigendecompose(S), eigendecompose(T)
    overlap = (ET.vectors.T @ ES.vectors) ** 2
    eigen_form = float(ET.values @ overlap @ ES.values)
    direct = float(np.trace(S @ T))
    assert abs(eigen_form - direct) <= 1e-9 * max(1.0, abs(direct))


# --- classification ----------------------------------------------------------

def test_classify_examples():
    c = classify_definiteness(fake_decomposition([1.0, 1e-15]), 1e-10)
    assert (c.tag, c.zero_eigen_count) == (ONLY_PSD, 1)
    c = classify_definiteness(fake_decomposition([2.0, 0.5]))
    assert (c.tag, c.zero_eigen_count) == (POSITIVE_DEFINITE, 0)
    assert classify_definiteness(fake_decomposition([1.0, -0.2])).tag == INDEFINITE
    with pytest.raises(ValueError):
        classify_definiteness(fake_decomposition([1.0]), 0.0)


def test_threshold_is_relative_to_largest_eigenvalue():
    # cutoff is rel_tol * max(1, lambda_max)
    assert classify_definiteness(fake_decomposition([1e3, 1e-8]), 1e-10).tag == ONLY_PSD
    assert classify_definiteness(fake_decomposition([1.0, 1e-8]), 1e-10).tag == POSITIVE_DEFINITE
    assert classify_definiteness(fake_decomposition([1e3, 1e-8]), 1e-12).tag == POSITIVE_DEFINITE
    assert classify_definiteness(fake_decomposition([1e-3, 1e-11]), 1e-10).tag == ONLY_PSD


# --- null space --------------------------------------------------------------

def test_null_space_examples():
    ns = null_space(eigendecompose([[0.0, 0.0], [0.0, 1.0]]))
    assert len(ns) == 1 and np.array_equal(ns[0], [1.0, 0.0])
    assert null_space(eigendecompose(np.eye(3))) == []
    ns = null_space(eigendecompose([[1.0, 1.0], [1.0, 1.0]]))
    assert len(ns) == 1
    assert np.allclose(ns[0], np.array([1.0, -1.0]) / np.sqrt(2))


def test_null_space_rejects_indefinite():
    with pytest.raises(IndefiniteMatrixError):
        null_space(eigendecompose([[1.0, 0.0], [0.0, -1.0]]))


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS, p=st.integers(min_value=2, max_value=10), data=st.data())
def test_null_space_and_complement_form_a_basis(seed, p, data):
    n = data.draw(st.integers(min_value=1, max_value=p - 1))
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    S = X.T @ X / n
    E = eigendecompose(S)
    ns = null_space(E)
    assert len(ns) == p - n
    thr = 1e-10 * max(1.0, E.values[0])
    rest = [E.vectors[:, i] for i in range(p) if abs(E.values[i]) > thr]
    B = np.column_stack(ns + rest)
    assert np.max(np.abs(B.T @ B - np.eye(p))) <= 1e-10
    for w in ns:
        assert np.linalg.norm(S @ w) <= 1e-8


# --- Cholesky ----------------------------------------------------------------

def test_cholesky_examples():
    assert cholesky_pd_check(np.eye(3))
    assert not cholesky_pd_check([[1.0, 1.0], [1.0, 1.0]])
    assert cholesky_pd_check([[2.0, 1.0], [1.0, 2.0]])
    assert not cholesky_pd_check([[1.0, 0.0], [0.0, -1.0]])
    assert cholesky_pd_check(SymMatrix(3.0))


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS, p=st.integers(min_value=1, max_value=8))
def test_cholesky_agrees_with_classification(seed, p):
    rng = np.random.default_rng(seed)
    A = random_pd(rng, p) - rng.uniform(0, 1.5) * np.eye(p)
    w = np.linalg.eigvalsh(A)
    if np.min(np.abs(w)) < 1e-6:
        return  # ill-conditioned; agreement only promised on well-conditioned input
    tag = classify_definiteness(eigendecompose(A)).tag
    assert cholesky_pd_check(A) == (tag == POSITIVE_DEFINITE)
