from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from .data import RatingsDataset
from .encoding import ItemCodebook, UserCodebook, build_item_codebook
from .fm import FMModel, TrainConfig, predict_batch, train_sgd
from .qubo import qubo_to_ising, reduce_for_user
from .solvers import (
    AnnealConfig,
    Recommendation,
    sample_sa,
    samples_to_recommendations,
    solve_direct,
    solve_exhaustive,
)

BACKENDS = ("direct", "sa", "exhaustive")


class FMQuboRecommender(RegressorMixin, BaseEstimator):
    """FM rating model over binary-encoded user/item ids with QUBO-based suggestions.

    ``fit`` takes ``X`` of shape (n, 2) holding raw ``(user_id, item_id)``
    pairs and ``y`` the ratings. ``predict`` returns FM ratings for such pairs
    and ``recommend`` produces a top-N list for one user with the chosen
    backend:

    - ``"direct"`` scores every item and sorts,
    - ``"sa"`` anneals the user's Ising problem and decodes the reads,
    - ``"exhaustive"`` enumerates every state (small item catalogues only).

    Examples
    --------
    >>> rec = FMQuboRecommender(k=8, epochs=5)
    >>> rec.fit([[1, 10], [1, 20], [2, 10]], [4.0, 2.0, 3.5])  # doctest: +ELLIPSIS
    FMQuboRecommender(...)
    >>> [r.item_id for r in rec.recommend(1, top=2)]  # doctest: +SKIP
    [10, 20]
    """

    def __init__(self, k=200, learning_rate=0.01, epochs=30, reg_w0=0.0, reg_w=1e-4, reg_v=1e-4,
                 init_std=0.01, random_state=42, backend="direct", shots=100, sweeps=1000,
                 beta_initial=0.1, beta_final=10.0, n_jobs=1):
        self.k = k
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.reg_w0 = reg_w0
        self.reg_w = reg_w
        self.reg_v = reg_v
        self.init_std = init_std
        self.random_state = random_state
        self.backend = backend
        self.shots = shots
        self.sweeps = sweeps
        self.beta_initial = beta_initial
        self.beta_final = beta_final
        self.n_jobs = n_jobs

    def train_config(self) -> TrainConfig:
        return TrainConfig(k=self.k, learning_rate=self.learning_rate, epochs=self.epochs,
                           reg_w0=self.reg_w0, reg_w=self.reg_w, reg_v=self.reg_v,
                           init_std=self.init_std, seed=self.random_state)

    def anneal_config(self, **overrides) -> AnnealConfig:
        params = dict(shots=self.shots, sweeps=self.sweeps, beta_initial=self.beta_initial,
                      beta_final=self.beta_final, seed=self.random_state)
        params.update(overrides)
        return AnnealConfig(**params)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=None, y_numeric=True)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: user id, item id")
        return self.fit_dataset(RatingsDataset.from_triples(X[:, 0], X[:, 1], y))

    def fit_dataset(self, data: RatingsDataset):
        """Train on ``data``; its id maps define the user and item catalogues.

        Items of the catalogue without ratings in ``data`` rank last in the
        surplus-code assignment.
        """
        self.user_codebook_ = UserCodebook.build(np.asarray(data.user_ids).tolist())
        self.item_codebook_ = build_item_codebook(np.asarray(data.item_ids).tolist(),
                                                  data.item_mean_ratings())
        self.train_rmse_ = []
        self.model_ = train_sgd(data, self.user_codebook_, self.item_codebook_,
                                self.train_config(), self.train_rmse_)
        self.n_features_in_ = 2
        return self

    @classmethod
    def from_model(cls, model: FMModel, user_codebook: UserCodebook, item_codebook: ItemCodebook,
                   **params) -> FMQuboRecommender:
        rec = cls(k=model.k, **params)
        rec.model_ = model
        rec.user_codebook_ = user_codebook
        rec.item_codebook_ = item_codebook
        rec.n_features_in_ = 2
        return rec

    def _item_index(self, raw_id) -> int:
        try:
            return self.item_codebook_.item_ids.index(raw_id)
        except ValueError:
            raise KeyError(f"unknown item id {raw_id!r}") from None

    def user_vector(self, user_id) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.user_codebook_.encode(self.user_codebook_.index_of(user_id))

    def feature_matrix(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = np.asarray(X, dtype=object)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError("X must have two columns: user id, item id")
        rows = [
            np.concatenate([self.user_vector(u), self.item_codebook_.primary_code(self._item_index(m))])
            for u, m in X.tolist()
        ]
        return np.array(rows, dtype=np.uint8).reshape(len(rows), self.model_.d)

    def predict(self, X):
        return predict_batch(self.model_, self.feature_matrix(X))

    def reduce(self, user_id):
        """Reduced QUBO for one user."""
        return reduce_for_user(self.model_, self.user_vector(user_id))

    def recommend(self, user_id, top: int = 10, backend: str | None = None,
                  anneal_config: AnnealConfig | None = None) -> list[Recommendation]:
        backend = backend or self.backend
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
        u0 = self.user_vector(user_id)
        if backend == "direct":
            return solve_direct(self.model_, u0, self.item_codebook_, top)
        ising = qubo_to_ising(reduce_for_user(self.model_, u0))
        if backend == "sa":
            samples = sample_sa(ising, anneal_config or self.anneal_config(), self.n_jobs)
        else:
            samples = solve_exhaustive(ising)
        return samples_to_recommendations(samples, self.item_codebook_, top)
