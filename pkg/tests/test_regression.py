import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musae.errors import TaskPreconditionError
from musae.evaluation.regression import ElasticNet, r2, regression_scores, train_elastic_net


def linear_data(n=80, d=4, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    return X, X @ w + 1.5 + noise * rng.normal(size=n), w


def test_perfect_linear_data():
    X, y, w = linear_data()
    model = train_elastic_net(X, y, lam=0.0)
    assert r2(model.predict(X), y) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(model.coef_, w, atol=1e-5)
    assert model.intercept_ == pytest.approx(1.5, abs=1e-5)


def test_predicting_the_mean_scores_zero():
    y = np.array([1.0, 2.0, 4.0, 7.0])
    assert r2(np.full(4, y.mean()), y) == 0.0


def test_huge_penalty_zeroes_coefficients():
    X, y, _ = linear_data(noise=0.1)
    model = train_elastic_net(X, y, lam=1e6)
    assert np.all(model.coef_ == 0)
    assert model.intercept_ == pytest.approx(y.mean())


def test_constant_targets_rejected():
    with pytest.raises(TaskPreconditionError):
        r2([1.0, 2.0], [3.0, 3.0])


def test_ridge_limit_matches_closed_form():
    X, y, _ = linear_data(n=50, d=5, noise=0.5, seed=3)
    lam = 0.3
    model = ElasticNet(lam=lam, gamma=0.0, tol=1e-12).fit(X, y)
    Xc, yc = X - X.mean(axis=0), y - y.mean()
    n = len(y)
    w = np.linalg.solve(Xc.T @ Xc / n + lam * np.eye(5), Xc.T @ yc / n)
    assert np.allclose(model.coef_, w, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.001, 1.0), st.floats(0.0, 1.0))
def test_solution_satisfies_subgradient_conditions(seed, lam, gamma):
    X, y, _ = linear_data(n=40, d=6, noise=1.0, seed=seed)
    m = ElasticNet(lam=lam, gamma=gamma, tol=1e-12).fit(X, y)
    n = len(y)
    resid = y - m.predict(X)
    grad = -X.T @ resid / n + lam * (1 - gamma) * m.coef_
    l1 = lam * gamma
    active = m.coef_ != 0
    assert np.allclose(grad[active], -l1 * np.sign(m.coef_[active]), atol=1e-7)
    assert np.all(np.abs(grad[~active]) <= l1 + 1e-7)
    assert abs(resid.mean()) < 1e-9


def test_invalid_parameters():
    with pytest.raises(ValueError):
        ElasticNet(lam=-1)
    with pytest.raises(ValueError):
        ElasticNet(gamma=1.5)


def test_regression_scores_are_seeded():
    X, y, _ = linear_data(noise=0.3)
    a = regression_scores(X, y, range(4))
    assert a == regression_scores(X, y, range(4))
    assert all(s > 0.9 for s in a)
