"""Degree-2 factorization machine over binary (user | item) feature vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _kernels
from .data import RatingsDataset
from .encoding import ItemCodebook, UserCodebook


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class FMModel:
    """Trained FM parameters. ``V`` is (k, d); column j is the latent vector of feature j."""

    w0: float
    w: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    n_u: int
    n_m: int

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        V = np.ascontiguousarray(self.V, dtype=np.float64)
        if V.ndim != 2:
            raise ValueError("V must be a (k, d) matrix")
        d = self.n_u + self.n_m
        if w.shape != (d,) or V.shape[1] != d:
            raise ValueError(f"parameter shapes w{w.shape}, V{V.shape} do not match d={d}")
        w.flags.writeable = False
        V.flags.writeable = False
        object.__setattr__(self, "w0", float(self.w0))
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "V", V)

    @property
    def d(self) -> int:
        return self.n_u + self.n_m

    @property
    def k(self) -> int:
        return self.V.shape[0]

    @classmethod
    def zeros(cls, n_u: int, n_m: int, k: int) -> FMModel:
        d = n_u + n_m
        return cls(0.0, np.zeros(d), np.zeros((k, d)), n_u, n_m)

    @classmethod
    def random(cls, n_u: int, n_m: int, k: int, seed=None, scale: float = 1.0) -> FMModel:
        rng = np.random.default_rng(seed)
        d = n_u + n_m
        return cls(
            float(rng.normal(0.0, scale)),
            rng.normal(0.0, scale, d),
            rng.normal(0.0, scale, (k, d)),
            n_u,
            n_m,
        )

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.w0) and np.isfinite(self.w).all() and np.isfinite(self.V).all())


@dataclass(frozen=True)
class TrainConfig:
    k: int = 200
    learning_rate: float = 0.01
    epochs: int = 30
    reg_w0: float = 0.0
    reg_w: float = 1e-4
    reg_v: float = 1e-4
    init_std: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be > 0")
        if min(self.reg_w0, self.reg_w, self.reg_v) < 0:
            raise ValueError("regularization must be >= 0")
        if not self.init_std > 0:
            raise ValueError("init_std must be > 0")


def _check_binary(x, d: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1:] != (d,):
        raise ValueError(f"feature vector length {x.shape[-1:]} does not match d={d}")
    if not np.isin(x, (0, 1)).all():
        raise ValueError("feature vectors must be binary (0/1)")
    return x.astype(np.float64)


def predict(model: FMModel, x) -> float:
    """FM output in O(k*d) via the sum-of-squares identity for the pairwise term."""
    x = _check_binary(x, model.d)
    if x.ndim != 1:
        raise ValueError("predict takes one feature vector; use predict_batch")
    s = model.V @ x
    sq = (model.V * model.V) @ (x * x)
    return model.w0 + float(model.w @ x) + 0.5 * float(np.sum(s * s - sq))


def predict_batch(model: FMModel, X) -> np.ndarray:
    X = _check_binary(X, model.d)
    X = np.atleast_2d(X)
    S = X @ model.V.T
    SQ = (X * X) @ (model.V * model.V).T
    return model.w0 + X @ model.w + 0.5 * np.sum(S * S - SQ, axis=1)


def predict_naive(model: FMModel, x) -> float:
    """Literal double-sum evaluation; quadratic in d. Used as a test oracle."""
    x = _check_binary(x, model.d)
    if x.ndim != 1:
        raise ValueError("predict_naive takes one feature vector")
    total = model.w0
    for i in range(model.d):
        total += model.w[i] * x[i]
    for i in range(model.d):
        if x[i] == 0:
            continue
        for j in range(i + 1, model.d):
            if x[j] == 0:
                continue
            total += float(np.dot(model.V[:, i], model.V[:, j])) * x[i] * x[j]
    return float(total)


def encode_dataset(data: RatingsDataset, user_codebook: UserCodebook,
                   item_codebook: ItemCodebook) -> np.ndarray:
    """Binary design matrix (N_data, n_u + n_m); items use their primary code."""
    if user_codebook.n_users < data.n_users or item_codebook.n_items < data.n_items:
        raise ValueError("codebooks do not cover every user and item of the dataset")
    nu, nm = user_codebook.n_bits, item_codebook.n_bits
    ushift = np.arange(nu - 1, -1, -1)
    mshift = np.arange(nm - 1, -1, -1)
    U = (data.users[:, None] >> ushift) & 1
    M = (data.items[:, None] >> mshift) & 1
    return np.hstack([U, M]).astype(np.uint8)


def sample_gradient(model: FMModel, x, y: float, config: TrainConfig | None = None):
    """Per-sample gradient used by SGD, as dense arrays (g_w0, g_w, g_V).

    The objective is half squared error plus L2 on w0 and on the parameters
    of the active features only.
    """
    config = config or TrainConfig()
    x = _check_binary(x, model.d)
    active = np.flatnonzero(x).astype(np.int64)
    _, g0, gw_a, gV_a = _kernels.sample_gradient(
        active, float(y), model.w0, model.w, model.V,
        config.reg_w0, config.reg_w, config.reg_v,
    )
    gw = np.zeros(model.d)
    gV = np.zeros_like(model.V)
    gw[active] = gw_a
    gV[:, active] = gV_a
    return g0, gw, gV


def sample_objective(model: FMModel, x, y: float, config: TrainConfig | None = None) -> float:
    config = config or TrainConfig()
    x = _check_binary(x, model.d)
    active = x.astype(bool)
    err = predict(model, x) - y
    return (
        0.5 * err * err
        + 0.5 * config.reg_w0 * model.w0**2
        + 0.5 * config.reg_w * float(np.sum(model.w[active] ** 2))
        + 0.5 * config.reg_v * float(np.sum(model.V[:, active] ** 2))
    )


def _rmse(model: FMModel, X: np.ndarray, y: np.ndarray) -> float:
    return math.sqrt(float(np.mean((predict_batch(model, X) - y) ** 2)))


def fit_fm(X, y, n_u: int, n_m: int, config: TrainConfig, history: list | None = None) -> FMModel:
    """SGD on a binary design matrix.

    If ``history`` is a list it receives the training RMSE of the initial
    model followed by the RMSE after every epoch.
    """
    X = _check_binary(X, n_u + n_m)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("training data is empty")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")

    rng = np.random.default_rng(config.seed)
    d = n_u + n_m
    w0 = np.zeros(1)
    w = np.zeros(d)
    V = rng.normal(0.0, config.init_std, (config.k, d))

    rows, cols = np.nonzero(X)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=len(X)))]).astype(np.int64)
    indices = cols.astype(np.int64)

    def snapshot():
        return FMModel(w0[0], w.copy(), V.copy(), n_u, n_m)

    if history is not None:
        history.append(_rmse(snapshot(), X, y))
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(X)).astype(np.int64)
        _kernels.sgd_epoch(indptr, indices, y, order, w0, w, V, config.learning_rate,
                           config.reg_w0, config.reg_w, config.reg_v)
        if not (np.isfinite(w0).all() and np.isfinite(w).all() and np.isfinite(V).all()):
            raise TrainingDivergedError(f"non-finite parameters after epoch {epoch}")
        if history is not None:
            history.append(_rmse(snapshot(), X, y))
    return snapshot()


def train_sgd(data: RatingsDataset, user_codebook: UserCodebook, item_codebook: ItemCodebook,
              config: TrainConfig | None = None, history: list | None = None) -> FMModel:
    config = config or TrainConfig()
    if data.n_data == 0:
        raise ValueError("training data is empty")
    X = encode_dataset(data, user_codebook, item_codebook)
    return fit_fm(X, data.ratings, user_codebook.n_bits, item_codebook.n_bits, config, history)


def rmse(model: FMModel, data: RatingsDataset, user_codebook: UserCodebook,
         item_codebook: ItemCodebook) -> float:
    if data.n_data == 0:
        raise ValueError("cannot compute RMSE of an empty dataset")
    return _rmse(model, encode_dataset(data, user_codebook, item_codebook), data.ratings)


class FMRegressor(RegressorMixin, BaseEstimator):
    """Scikit-learn style FM regressor on binary feature matrices.

    Parameters
    ----------
    n_user_bits : int or None
        How many leading columns form the user block. Only recorded on the
        fitted model (``n_u``); ``None`` treats every column as item bits.
    k, learning_rate, epochs, reg_w0, reg_w, reg_v, init_std, random_state
        See :class:`TrainConfig`.
    """

    def __init__(self, n_user_bits=None, k=200, learning_rate=0.01, epochs=30, reg_w0=0.0,
                 reg_w=1e-4, reg_v=1e-4, init_std=0.01, random_state=42):
        self.n_user_bits = n_user_bits
        self.k = k
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.reg_w0 = reg_w0
        self.reg_w = reg_w
        self.reg_v = reg_v
        self.init_std = init_std
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(k=self.k, learning_rate=self.learning_rate, epochs=self.epochs,
                           reg_w0=self.reg_w0, reg_w=self.reg_w, reg_v=self.reg_v,
                           init_std=self.init_std, seed=self.random_state)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        n_u = 0 if self.n_user_bits is None else int(self.n_user_bits)
        if not 0 <= n_u <= X.shape[1]:
            raise ValueError("n_user_bits exceeds the number of features")
        self.n_features_in_ = X.shape[1]
        self.train_rmse_ = []
        self.model_ = fit_fm(X, y, n_u, X.shape[1] - n_u, self._config(), self.train_rmse_)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return predict_batch(self.model_, X)
