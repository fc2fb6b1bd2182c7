"""Factorization-machine recommendations through QUBO / Ising sampling."""

__version__ = "0.1.0"

from .data import RatingsDataset, ingest, make_synthetic_ratings, split, write_ratings_csv
from .encoding import (
    ItemCodebook,
    UserCodebook,
    build_item_codebook,
    decode,
    decode_index,
    encode_index,
)
from .fm import (
    FMModel,
    FMRegressor,
    TrainConfig,
    predict,
    predict_batch,
    predict_naive,
    rmse,
    train_sgd,
)
from .qubo import (
    IsingProblem,
    QuboProblem,
    ising_energy,
    qubo_energy,
    qubo_to_ising,
    reduce_for_user,
)
from .recommender import FMQuboRecommender
from .solvers import (
    AnnealConfig,
    ExhaustiveSampler,
    Recommendation,
    SampleSet,
    SimulatedAnnealingSampler,
    sample_sa,
    samples_to_recommendations,
    solve_direct,
    solve_exhaustive,
)

__all__ = [
    "AnnealConfig",
    "ExhaustiveSampler",
    "FMModel",
    "FMQuboRecommender",
    "FMRegressor",
    "IsingProblem",
    "ItemCodebook",
    "QuboProblem",
    "RatingsDataset",
    "Recommendation",
    "SampleSet",
    "SimulatedAnnealingSampler",
    "TrainConfig",
    "UserCodebook",
    "build_item_codebook",
    "decode",
    "decode_index",
    "encode_index",
    "ingest",
    "ising_energy",
    "make_synthetic_ratings",
    "predict",
    "predict_batch",
    "predict_naive",
    "qubo_energy",
    "qubo_to_ising",
    "reduce_for_user",
    "rmse",
    "sample_sa",
    "samples_to_recommendations",
    "solve_direct",
    "solve_exhaustive",
    "split",
    "train_sgd",
    "write_ratings_csv",
]
