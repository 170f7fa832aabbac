"""Epsilon-support vector regression trained through its dual.

Primal::

    min 1/2 |m|^2 + C sum(xi + xi*)
    s.t. y_s - f(x_s) <= eps + xi_s,  f(x_s) - y_s <= eps + xi*_s,  xi, xi* >= 0

The model is kept in dual form, f(x) = sum_s beta_s k(x_s, x) + b with
beta_s = alpha_s - alpha*_s, so the feature map is never built.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from . import _smo
from .dataset import ColumnStats
from .metrics import kfold_partition, r2_score
from .rng import derive_seed, numpy_rng


@dataclass(frozen=True)
class SvrParams:
    C: float = 1.0
    epsilon: float = 0.2
    kernel: str = "rbf"
    gamma: Union[float, str] = "auto"
    tol: float = 1e-3
    max_passes: Optional[int] = None

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.kernel not in ("rbf", "linear"):
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise ValueError("gamma must be > 0 or 'auto'")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    def resolve_gamma(self, X) -> float:
        """'auto' is 1 / (D * Var(X)) over all entries; 1 / D if X is constant."""
        if self.gamma != "auto":
            return float(self.gamma)
        X = np.asarray(X, dtype=float)
        var = float(X.var())
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0 / X.shape[1]


@dataclass(frozen=True)
class SolverState:
    alpha: np.ndarray
    alpha_star: np.ndarray
    gradient: np.ndarray
    xi: np.ndarray
    xi_star: np.ndarray
    n_iter: int


@dataclass(frozen=True)
class SvrModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    params: SvrParams
    gamma: float
    support_indices: np.ndarray
    converged: bool
    kkt_gap: float
    n_iter: int
    train_stats: Optional[ColumnStats] = None
    state: Optional[SolverState] = None

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]


def rbf_kernel(x, z, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError("x and z must have equal length")
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    diff = x - z
    return float(np.exp(-gamma * np.dot(diff, diff)))


def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if kernel == "linear":
        return A @ B.T
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def dual_objective(beta, K, y, epsilon: float) -> float:
    """Dual objective to maximise: -1/2 b'Kb + y'b - eps |b|_1."""
    beta = np.asarray(beta, dtype=float)
    return float(-0.5 * beta @ K @ beta + np.dot(y, beta) - epsilon * np.abs(beta).sum())


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (N, D) with N matching y")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in X or y")
    return X, y


def train_svr(X, y, params: SvrParams = SvrParams(), seed: int = 0, train_stats: Optional[ColumnStats] = None) -> SvrModel:
    """Fit by sequential minimal optimisation on the dual.

    X is expected to be normalised already. The solver is deterministic, so
    ``seed`` has no effect; it is accepted so every estimator shares one
    signature. Training stops when the maximal KKT gap drops below ``tol`` or
    after ``max_passes`` sweeps of N pair updates (default 10 * N sweeps); in
    the latter case ``converged`` is False and ``kkt_gap`` holds the residual.
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    gamma = params.resolve_gamma(X)
    K = np.ascontiguousarray(kernel_matrix(X, X, params.kernel, gamma))
    passes = params.max_passes if params.max_passes is not None else 10 * n
    a, G, n_iter, gap = _smo.solve(K, y, float(params.C), float(params.epsilon), float(params.tol), int(passes) * n)
    s = np.concatenate([np.ones(n), -np.ones(n)])
    rho = _smo.offset(a, G, s, float(params.C))
    beta = a[:n] - a[n:]
    alpha = np.maximum(beta, 0.0)
    alpha_star = np.maximum(-beta, 0.0)
    fitted = K @ beta - rho
    state = SolverState(
        alpha=alpha, alpha_star=alpha_star, gradient=G,
        xi=np.maximum(0.0, y - fitted - params.epsilon),
        xi_star=np.maximum(0.0, fitted - y - params.epsilon),
        n_iter=int(n_iter),
    )
    sv = np.flatnonzero(beta != 0.0)
    return SvrModel(
        support_vectors=X[sv].copy(), dual_coeffs=beta[sv].copy(), bias=float(-rho), params=params,
        gamma=gamma, support_indices=sv, converged=bool(gap < params.tol), kkt_gap=float(max(gap, 0.0)),
        n_iter=int(n_iter), train_stats=train_stats, state=state,
    )


def predict_svr(model: SvrModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    if len(model.dual_coeffs) == 0:
        return np.full(X.shape[0], model.bias)
    K = kernel_matrix(X, model.support_vectors, model.params.kernel, model.gamma)
    # row-wise reduction keeps each output independent of the other rows
    return (K * model.dual_coeffs).sum(axis=1) + model.bias


def full_beta(model: SvrModel, n: int) -> np.ndarray:
    beta = np.zeros(n)
    beta[model.support_indices] = model.dual_coeffs
    return beta


def kkt_residual(model: SvrModel, X, y, beta=None) -> float:
    """Largest violation of the dual optimality conditions on (X, y).

    Combines the maximal-violating-pair gap with the box and equality
    constraints, so a perturbed coefficient vector is detected either way.
    ``beta`` overrides the model's coefficients (length N).
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    C, eps = model.params.C, model.params.epsilon
    beta = full_beta(model, n) if beta is None else np.asarray(beta, dtype=float)
    K = kernel_matrix(X, X, model.params.kernel, model.gamma)
    Kb = K @ beta
    a = np.concatenate([np.maximum(beta, 0.0), np.maximum(-beta, 0.0)])
    s = np.concatenate([np.ones(n), -np.ones(n)])
    G = np.concatenate([Kb + eps - y, -Kb + eps + y])
    gap, _, _ = _smo.violation(a, G, s, float(C))
    box = float(np.max(np.maximum(np.abs(beta) - C, 0.0), initial=0.0))
    return float(max(gap, 0.0, abs(beta.sum()), box))


def svr_feature_importance(params: SvrParams, X, y, folds: int = 3, seed: int = 0, method: str = "permutation") -> np.ndarray:
    """Per-feature importance for ranking inside RFE.

    ``permutation``: for each of ``folds`` held-out folds, the drop in held-out
    R2 when one feature column is shuffled, averaged over folds.
    ``weights``: |sum_s beta_s x_s| per feature, linear kernel only.
    """
    X, y = _check_xy(X, y)
    n, d = X.shape
    if method == "weights":
        if params.kernel != "linear":
            raise ValueError("weight importance needs the linear kernel")
        model = train_svr(X, y, params, seed)
        return np.abs(model.dual_coeffs @ model.support_vectors) if len(model.dual_coeffs) else np.zeros(d)
    if method != "permutation":
        raise ValueError(f"unknown importance method {method!r}")
    plan = kfold_partition(n, min(folds, n), derive_seed(seed, "svr-importance-folds"))
    drops = np.zeros((plan.k, d))
    for f in range(plan.k):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        model = train_svr(X[tr], y[tr], params, seed)
        Xte = np.array(X[te])
        base = r2_score(y[te], predict_svr(model, Xte)) if np.ptp(y[te]) > 0 else 0.0
        for j in range(d):
            # one derived stream per (fold, feature), so each shuffle is independent of evaluation order
            perm = numpy_rng(seed, "svr-importance", f, j).permutation(len(te))
            saved = Xte[:, j].copy()
            Xte[:, j] = saved[perm]
            score = r2_score(y[te], predict_svr(model, Xte)) if np.ptp(y[te]) > 0 else 0.0
            drops[f, j] = base - score
            Xte[:, j] = saved
    return drops.mean(axis=0)


def svr_to_dict(model: SvrModel) -> dict:
    return {
        "format": "merselect.svr/1",
        "params": asdict(model.params),
        "gamma": model.gamma,
        "n_features": model.n_features,
        "support_vectors": model.support_vectors.tolist(),
        "support_indices": model.support_indices.tolist(),
        "dual_coeffs": model.dual_coeffs.tolist(),
        "bias": model.bias,
        "converged": model.converged,
        "kkt_gap": model.kkt_gap,
        "n_iter": model.n_iter,
    }


def svr_from_dict(d: dict) -> SvrModel:
    sv = np.asarray(d["support_vectors"], dtype=float).reshape(-1, int(d["n_features"]))
    return SvrModel(
        support_vectors=sv, dual_coeffs=np.asarray(d["dual_coeffs"], float), bias=float(d["bias"]),
        params=SvrParams(**d["params"]), gamma=float(d["gamma"]),
        support_indices=np.asarray(d["support_indices"], np.int64), converged=bool(d["converged"]),
        kkt_gap=float(d["kkt_gap"]), n_iter=int(d["n_iter"]),
    )


def save_svr(model: SvrModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(svr_to_dict(model), fh)


def load_svr(path) -> SvrModel:
    with open(path, encoding="utf-8") as fh:
        return svr_from_dict(json.load(fh))
