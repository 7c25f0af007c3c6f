"""The predictor roster. Every model exposes ``fit(X, y)`` and ``predict(X)``."""
from __future__ import annotations

import enum

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .trees import CART, GradientBoostedTrees, RandomForest


class PredictorKind(str, enum.Enum):
    RIDGE = "Ridge"
    BAYESIAN_RIDGE = "BayesianRidge"
    KNN = "KNN"
    RBF = "RBF"
    RBF_ENSEMBLE = "RBFEnsemble"
    CART = "CART"
    RANDOM_FOREST = "RandomForestE2EPP"
    GBT = "GradientBoostedTrees"


class _Standardizer:
    def fit(self, X):
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        return (X - self.mean_) / self.scale_


class Ridge:
    def __init__(self, alpha: float = 1.0, seed: int = 0):
        self.alpha = alpha

    def fit(self, X, y):
        X = np.asarray(X, float)
        y = np.asarray(y, float)
        self.scaler_ = _Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        self.intercept_ = y.mean()
        d = Z.shape[1]
        self.coef_ = np.linalg.solve(Z.T @ Z + self.alpha * np.eye(d), Z.T @ (y - self.intercept_))
        return self

    def predict(self, X):
        return self.scaler_.transform(np.asarray(X, float)) @ self.coef_ + self.intercept_


class BayesianRidge:
    """Evidence-maximizing ridge (MacKay updates) with near non-informative Gamma priors."""

    def __init__(self, max_iter: int = 300, tol: float = 1e-3, a1: float = 1e-6, a2: float = 1e-6,
                 l1: float = 1e-6, l2: float = 1e-6, seed: int = 0):
        self.max_iter = max_iter
        self.tol = tol
        self.a1, self.a2, self.l1, self.l2 = a1, a2, l1, l2

    def fit(self, X, y):
        X = np.asarray(X, float)
        y = np.asarray(y, float)
        self.scaler_ = _Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        self.intercept_ = y.mean()
        t = y - self.intercept_
        n, d = Z.shape
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
        s2 = s ** 2
        Uty = U.T @ t
        alpha = 1.0 / (np.var(t) + np.finfo(float).eps)  # noise precision
        lam = 1.0  # weight precision
        coef = np.zeros(d)
        for _ in range(self.max_iter):
            coef_new = Vt.T @ (s * Uty / (s2 + lam / alpha))
            gamma = np.sum(alpha * s2 / (lam + alpha * s2))
            resid = np.sum((t - Z @ coef_new) ** 2)
            lam = (gamma + 2 * self.l1) / (np.sum(coef_new ** 2) + 2 * self.l2)
            alpha = (n - gamma + 2 * self.a1) / (resid + 2 * self.a2)
            done = np.sum(np.abs(coef_new - coef)) < self.tol
            coef = coef_new
            if done:
                break
        self.coef_ = coef
        self.alpha_, self.lambda_ = alpha, lam
        return self

    def predict(self, X):
        return self.scaler_.transform(np.asarray(X, float)) @ self.coef_ + self.intercept_


class KNN:
    def __init__(self, k: int = 5, seed: int = 0):
        self.k = k

    def fit(self, X, y):
        X = np.asarray(X, float)
        self.scaler_ = _Standardizer().fit(X)
        self.Z_ = self.scaler_.transform(X)
        self.y_ = np.asarray(y, float)
        return self

    def predict(self, X):
        D = cdist(self.scaler_.transform(np.asarray(X, float)), self.Z_)
        k = min(self.k, len(self.y_))
        nn = np.argsort(D, axis=1, kind="stable")[:, :k]
        d = np.take_along_axis(D, nn, axis=1)
        out = np.empty(len(D))
        for i in range(len(D)):
            exact = d[i] == 0
            if exact.any():
                out[i] = self.y_[nn[i][exact]].mean()
            else:
                w = 1.0 / d[i]
                out[i] = w @ self.y_[nn[i]] / w.sum()
        return out


class RBF:
    """Gaussian-kernel ridge regression; bandwidth is the median pairwise distance."""

    def __init__(self, reg: float = 1e-2, seed: int = 0):
        self.reg = reg

    def fit(self, X, y):
        X = np.asarray(X, float)
        y = np.asarray(y, float)
        self.scaler_ = _Standardizer().fit(X)
        self.Z_ = self.scaler_.transform(X)
        dist = pdist(self.Z_)
        med = np.median(dist[dist > 0]) if np.any(dist > 0) else 1.0
        self.gamma_ = 1.0 / (2.0 * med ** 2)
        self.mean_ = y.mean()
        K = np.exp(-self.gamma_ * cdist(self.Z_, self.Z_, "sqeuclidean"))
        self.weights_ = np.linalg.solve(K + self.reg * np.eye(len(y)), y - self.mean_)
        return self

    def predict(self, X):
        Z = self.scaler_.transform(np.asarray(X, float))
        return np.exp(-self.gamma_ * cdist(Z, self.Z_, "sqeuclidean")) @ self.weights_ + self.mean_


class RBFEnsemble:
    def __init__(self, n_models: int = 10, reg: float = 1e-2, seed: int = 0):
        self.n_models = n_models
        self.reg = reg
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, float)
        y = np.asarray(y, float)
        rng = np.random.default_rng(self.seed)
        self.models_ = []
        for _ in range(self.n_models):
            boot = np.unique(rng.integers(0, len(y), len(y)))
            self.models_.append(RBF(self.reg).fit(X[boot], y[boot]))
        return self

    def predict(self, X):
        return np.mean([m.predict(X) for m in self.models_], axis=0)


_FACTORIES = {
    PredictorKind.RIDGE: Ridge,
    PredictorKind.BAYESIAN_RIDGE: BayesianRidge,
    PredictorKind.KNN: KNN,
    PredictorKind.RBF: RBF,
    PredictorKind.RBF_ENSEMBLE: RBFEnsemble,
    PredictorKind.CART: CART,
    PredictorKind.RANDOM_FOREST: RandomForest,
    PredictorKind.GBT: GradientBoostedTrees,
}

ALL_KINDS = tuple(PredictorKind)


def make_predictor(kind: PredictorKind | str, seed: int = 0, **params):
    return _FACTORIES[PredictorKind(kind)](seed=seed, **params)
