from __future__ import annotations

import numpy as np

from ..errors import TaskPreconditionError


def _soft_threshold(x, thr):
    return np.sign(x) * max(abs(x) - thr, 0.0)


class ElasticNet:
    """Coordinate-descent elastic net.

    Minimizes ``1/(2n) ||y - Xw - b||^2 + lam * (gamma ||w||_1 + (1 - gamma) ||w||^2 / 2)``
    with an unpenalized intercept. Stops when no coefficient moves by more
    than ``tol`` (relative to the largest coefficient, floored at 1) in a sweep.
    """

    def __init__(self, lam: float = 0.01, gamma: float = 0.5, tol: float = 1e-6, max_sweeps: int = 10_000):
        if lam < 0 or not 0 <= gamma <= 1:
            raise ValueError("need lam >= 0 and gamma in [0, 1]")
        self.lam = lam
        self.gamma = gamma
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        x_mean, y_mean = X.mean(axis=0), y.mean()
        Xc = X - x_mean
        resid = y - y_mean
        col_sq = np.einsum("ij,ij->j", Xc, Xc) / n
        l1 = self.lam * self.gamma
        l2 = self.lam * (1.0 - self.gamma)
        w = np.zeros(d)
        for sweep in range(self.max_sweeps):
            biggest = 0.0
            for j in range(d):
                if col_sq[j] == 0.0:
                    continue
                old = w[j]
                rho = Xc[:, j] @ resid / n + col_sq[j] * old
                new = _soft_threshold(rho, l1) / (col_sq[j] + l2)
                if new != old:
                    resid -= Xc[:, j] * (new - old)
                    w[j] = new
                    biggest = max(biggest, abs(new - old))
            if biggest <= self.tol * max(1.0, np.abs(w).max()):
                break
        self.coef_ = w
        self.intercept_ = y_mean - x_mean @ w
        self.n_sweeps_ = sweep + 1
        return self

    def predict(self, X):
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_


def train_elastic_net(X, y, lam: float = 0.01, gamma: float = 0.5) -> ElasticNet:
    return ElasticNet(lam=lam, gamma=gamma).fit(X, y)


def r2(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    ss_tot = np.sum((truth - truth.mean()) ** 2)
    if ss_tot == 0:
        raise TaskPreconditionError("R^2 is undefined for constant targets")
    return float(1.0 - np.sum((truth - pred) ** 2) / ss_tot)


def regression_scores(X, y, seeds, lam: float = 0.01, gamma: float = 0.5,
                      train_fraction: float = 0.8) -> list[float]:
    """Test R^2 of the elastic net over seeded random splits."""
    X, y = np.asarray(X), np.asarray(y, dtype=np.float64)
    out = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        idx = rng.permutation(len(y))
        k = int(round(train_fraction * len(y)))
        tr, te = idx[:k], idx[k:]
        model = train_elastic_net(X[tr], y[tr], lam, gamma)
        out.append(r2(model.predict(X[te]), y[te]))
    return out

