import numpy as np
import pytest

from psdglasso import glasso, mle, odglasso
from psdglasso.matrix import SymMatrix, classify_definiteness, eigendecompose
from psdglasso.sampling import (
    GaussianModel,
    draw,
    existence_study,
    rank_census,
    sample_covariance,
)


def test_single_known_mean_draw():
    model = GaussianModel(1, np.array([0.7]), SymMatrix([[4.0]]), mean_known=True)
    rep = sample_covariance(model, 1, 3)
    x = draw(model, 1, np.random.default_rng(3))[0, 0]
    assert rep.S.entry(0, 0) == pytest.approx((x - 0.7) ** 2, rel=1e-14)


@pytest.mark.parametrize("mean_known, expected", [(False, 3), (True, 2)])
def test_zero_eigen_counts(mean_known, expected):
    model = GaussianModel.standard(5, mean_known)
    for seed in range(10):
        rep = sample_covariance(model, 3, seed)
        assert rep.zero_eigen_count == expected
        assert rep.zero_eigen_count == classify_definiteness(eigendecompose(rep.S)).zero_eigen_count
        assert rep.diag_nonzero


def test_seed_determinism():
    model = GaussianModel(3, np.array([1.0, -1.0, 0.5]),
                          SymMatrix([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.5]]))
    a = sample_covariance(model, 7, 42).S
    b = sample_covariance(model, 7, 42).S
    assert np.array_equal(a.array, b.array)
    assert not np.array_equal(a.array, sample_covariance(model, 7, 43).S.array)


def test_law_sanity():
    theta = np.array([[2.0, -0.6], [-0.6, 1.0]])
    model = GaussianModel(2, np.array([3.0, -2.0]), SymMatrix(theta))
    S = sample_covariance(model, 100_000, 0).S.array
    assert np.allclose(S, np.linalg.inv(theta), rtol=0.05, atol=0.0)


def test_model_validation():
    with pytest.raises(ValueError):
        GaussianModel(2, np.zeros(2), SymMatrix([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        GaussianModel(2, np.zeros(3), SymMatrix(np.eye(2)))
    with pytest.raises(ValueError):
        sample_covariance(GaussianModel.standard(2), 0, 0)


@pytest.mark.parametrize("p, n, mean_known", [(5, 3, False), (3, 10, False), (4, 1, True)])
def test_rank_census_examples(p, n, mean_known):
    r = rank_census(GaussianModel.standard(p, mean_known), n, 100, seed=1)
    assert r["fraction_matching_theory"] == 1.0


def test_census_independent_of_worker_count():
    model = GaussianModel.standard(5)
    a = rank_census(model, 3, 20, seed=9, workers=1)
    b = rank_census(model, 3, 20, seed=9, workers=4)
    assert a == b
    rows1 = existence_study(model, [2, 4], odglasso(0.5), 10, seed=2, workers=1)
    rows4 = existence_study(model, [2, 4], odglasso(0.5), 10, seed=2, workers=4)
    assert rows1 == rows4


def test_existence_study_examples():
    unknown = GaussianModel.standard(6)
    for row in existence_study(unknown, [2, 3, 5], odglasso(0.5), 20, seed=0):
        assert row["exists_rate"] == 1.0
        assert row["mean_zero_eigen_count"] == 6 - (row["n"] - 1)
    for row in existence_study(unknown, range(2, 7), mle(), 20, seed=0):
        assert row["exists_rate"] == 0.0
    for row in existence_study(unknown, [2, 4, 8], glasso(0.2), 10, seed=0):
        assert row["exists_rate"] == 1.0
    known = GaussianModel.standard(4, mean_known=True)
    assert existence_study(known, [1], odglasso(0.5), 20, seed=0)[0]["exists_rate"] == 1.0
