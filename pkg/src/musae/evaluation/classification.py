"""L2-regularized softmax regression, micro-F1 and the k-shot protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from ..errors import TaskPreconditionError


class SoftmaxRegression:
    """Multinomial logistic regression.

    Minimizes mean cross-entropy + (lam / 2) * ||W||^2 with L-BFGS; the
    intercept is not penalized.
    """

    def __init__(self, lam: float = 0.01, tol: float = 1e-6, max_iter: int = 500):
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        classes, codes = np.unique(np.asarray(y), return_inverse=True)
        if len(classes) < 2:
            raise TaskPreconditionError("training labels contain a single class")
        n, d = X.shape
        k = len(classes)
        Y = np.zeros((n, k))
        Y[np.arange(n), codes] = 1.0
        lam = self.lam
        # W is optimized as V / sqrt(1 + lam) so that weights and intercepts
        # have comparable curvature even for very large penalties
        s = 1.0 / np.sqrt(1.0 + lam)

        def objective(theta):
            W = theta[: d * k].reshape(d, k) * s
            b = theta[d * k:]
            Z = X @ W + b
            lse = logsumexp(Z, axis=1)
            loss = np.mean(lse - np.sum(Z * Y, axis=1)) + 0.5 * lam * np.sum(W * W)
            R = (np.exp(Z - lse[:, None]) - Y) / n
            gW = X.T @ R + lam * W
            gb = R.sum(axis=0)
            return loss, np.concatenate([gW.ravel() * s, gb])

        # ftol=0 leaves the gradient tolerance as the convergence criterion
        res = minimize(objective, np.zeros(d * k + k), jac=True, method="L-BFGS-B",
                       options={"gtol": self.tol * s, "ftol": 0.0, "maxiter": self.max_iter})
        self.coef_ = res.x[: d * k].reshape(d, k) * s
        self.intercept_ = res.x[d * k:]
        self.classes_ = classes
        self.n_iter_ = res.nit
        return self

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        Z = self.decision_function(X)
        return np.exp(Z - logsumexp(Z, axis=1, keepdims=True))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def train_logreg(X, y, lam: float = 0.01) -> SoftmaxRegression:
    return SoftmaxRegression(lam=lam).fit(X, y)


def micro_f1(pred, truth) -> float:
    """Micro-averaged F1; for single-label predictions this is accuracy."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if pred.size == 0:
        raise ValueError("empty input")
    # pooled TP = correct, FP = FN = wrong
    tp = np.sum(pred == truth)
    wrong = pred.size - tp
    return float(2 * tp / (2 * tp + 2 * wrong))


def mean_stderr(scores) -> tuple[float, float]:
    s = np.asarray(scores, dtype=np.float64)
    if s.size < 2:
        return float(s.mean()), 0.0
    return float(s.mean()), float(s.std(ddof=1) / np.sqrt(s.size))


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    train: np.ndarray
    test: np.ndarray


def stratified_split(y, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded split keeping every class present in the training part."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        k = min(len(idx), max(1, int(round(train_fraction * len(idx)))))
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split_dataset(X, y, seed: int, train_fraction: float = 0.8) -> LabeledDataset:
    tr, te = stratified_split(y, train_fraction, seed)
    return LabeledDataset(np.asarray(X), np.asarray(y), tr, te)


def classification_scores(X, y, seeds, lam: float = 0.01, train_fraction: float = 0.8) -> list[float]:
    """Micro-F1 of softmax regression for each seeded 80/20 split."""
    out = []
    for seed in seeds:
        data = split_dataset(X, y, seed, train_fraction)
        model = train_logreg(data.X[data.train], data.y[data.train], lam)
        out.append(micro_f1(model.predict(data.X[data.test]), data.y[data.test]))
    return out


def kshot_eval(X, y, k: int, seeds, lam: float = 0.01) -> dict:
    """Train on k random nodes per class, score on the remaining nodes."""
    X, y = np.asarray(X), np.asarray(y)
    classes, sizes = np.unique(y, return_counts=True)
    for c, size in zip(classes, sizes):
        if size < k:
            label = c.item() if isinstance(c, np.generic) else c
            raise TaskPreconditionError(f"class {label!r} has {size} member(s), fewer than k={k}")
    scores = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        train = np.concatenate([rng.choice(np.flatnonzero(y == c), k, replace=False) for c in classes])
        test = np.setdiff1d(np.arange(len(y)), train)
        model = train_logreg(X[train], y[train], lam)
        scores.append(micro_f1(model.predict(X[test]), y[test]))
    mean, se = mean_stderr(scores)
    return {"k": k, "scores": scores, "mean": mean, "stderr": se}
