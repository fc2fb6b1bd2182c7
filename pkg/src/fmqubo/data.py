"""Ratings ingestion, splitting and a MovieLens-layout synthetic generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = ("userId", "movieId", "rating", "timestamp")


class DataFormatError(ValueError):
    """Raised when a ratings file cannot be parsed."""


@dataclass(frozen=True)
class RatingsDataset:
    """(user, item, rating) triples with contiguous 0-based indices.

    ``user_ids[u]`` / ``item_ids[m]`` give the raw identifier for index u / m.
    Raw ids are sorted ascending, so index order follows raw-id order.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray

    def __post_init__(self):
        n = len(self.ratings)
        if not (len(self.users) == len(self.items) == n):
            raise ValueError("users, items and ratings must have equal length")
        if n and (self.users.max() >= len(self.user_ids) or self.items.max() >= len(self.item_ids)):
            raise ValueError("index out of range of the id maps")

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_data(self) -> int:
        return len(self.ratings)

    def __len__(self) -> int:
        return self.n_data

    @classmethod
    def from_triples(cls, user_raw, item_raw, ratings) -> RatingsDataset:
        user_raw = np.asarray(user_raw)
        item_raw = np.asarray(item_raw)
        ratings = np.asarray(ratings, dtype=np.float64)
        if len(ratings) == 0:
            raise ValueError("dataset is empty")
        user_ids, users = np.unique(user_raw, return_inverse=True)
        item_ids, items = np.unique(item_raw, return_inverse=True)
        return cls(
            users=users.astype(np.int64),
            items=items.astype(np.int64),
            ratings=ratings,
            user_ids=user_ids,
            item_ids=item_ids,
        )

    def subset(self, rows) -> RatingsDataset:
        """Rows selected by index, keeping this dataset's id maps."""
        rows = np.asarray(rows, dtype=np.int64)
        return RatingsDataset(
            users=self.users[rows],
            items=self.items[rows],
            ratings=self.ratings[rows],
            user_ids=self.user_ids,
            item_ids=self.item_ids,
        )

    def item_mean_ratings(self) -> np.ndarray:
        """Mean rating per item index; 0.0 for items without ratings."""
        sums = np.bincount(self.items, weights=self.ratings, minlength=self.n_items)
        counts = np.bincount(self.items, minlength=self.n_items)
        means = np.zeros(self.n_items)
        seen = counts > 0
        means[seen] = sums[seen] / counts[seen]
        return means


def _read_rows(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        if tuple(h.strip() for h in header[:3]) != HEADER[:3]:
            raise DataFormatError(
                f"{path}:1: expected header starting with userId,movieId,rating; got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise DataFormatError(f"{path}:{lineno}: expected at least 3 fields, got {len(row)}")
            try:
                yield int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None


def ingest(path, max_rows: int | None = None, fraction: float | None = None,
           seed: int = 42) -> RatingsDataset:
    """Load a MovieLens-layout ratings CSV.

    Exactly one selection mode applies: ``max_rows`` keeps the first N rows,
    ``fraction`` keeps a seeded uniform sample of that share of all rows (in
    file order), and neither keeps everything. Duplicate (user, item) pairs
    are kept as separate examples; the timestamp column is ignored.
    """
    if max_rows is not None and fraction is not None:
        raise ValueError("give max_rows or fraction, not both")
    if max_rows is not None and max_rows < 1:
        raise ValueError("max_rows must be >= 1")
    if fraction is not None and not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ratings file not found: {path}")

    rows = []
    for row in _read_rows(path):
        rows.append(row)
        if max_rows is not None and len(rows) >= max_rows:
            break
    if fraction is not None and rows:
        rng = np.random.default_rng(seed)
        n_keep = max(1, int(round(fraction * len(rows))))
        keep = np.sort(rng.choice(len(rows), size=n_keep, replace=False))
        rows = [rows[i] for i in keep]
    if not rows:
        raise DataFormatError(f"{path}: no ratings after selection")
    users, items, ratings = zip(*rows)
    return RatingsDataset.from_triples(users, items, ratings)


def split(data: RatingsDataset, holdout_fraction: float, seed: int = 42):
    """Seeded disjoint (train, test) split; both parts keep the full id maps."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must be in (0, 1)")
    n = data.n_data
    n_test = int(round(holdout_fraction * n))
    n_test = min(max(n_test, 1), n - 1) if n > 1 else 0
    if n_test == 0:
        raise ValueError("dataset too small to split")
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def make_synthetic_ratings(n_users: int, n_items: int, n_ratings: int, seed: int = 42,
                           rank: int = 4, noise: float = 0.5):
    """MovieLens-shaped synthetic ratings as a list of (userId, movieId, rating, timestamp).

    Every user and every item receives at least one rating (so ``n_ratings``
    must cover both), ratings follow a biased low-rank model rounded to half
    stars in [0.5, 5.0], item popularity is Zipf-like, movie ids are sparse
    like the real catalogue, and rows come sorted by user then timestamp.
    """
    if n_ratings < max(n_users, n_items):
        raise ValueError("n_ratings must be at least max(n_users, n_items)")
    rng = np.random.default_rng(seed)
    movie_ids = np.sort(rng.choice(np.arange(1, 4 * n_items + 1), size=n_items, replace=False))

    user_bias = rng.normal(0.0, 0.4, n_users)
    item_bias = rng.normal(0.0, 0.5, n_items)
    P = rng.normal(0.0, 0.5, (n_users, rank))
    Q = rng.normal(0.0, 0.5, (n_items, rank))

    popularity = 1.0 / np.arange(1, n_items + 1) ** 0.8
    popularity = popularity[rng.permutation(n_items)]
    popularity /= popularity.sum()
    activity = rng.pareto(1.5, n_users) + 1.0
    activity /= activity.sum()

    n_extra = n_ratings - n_items
    items = np.concatenate([rng.permutation(n_items), rng.choice(n_items, n_extra, p=popularity)])
    users = rng.choice(n_users, n_ratings, p=activity)
    users[rng.permutation(n_ratings)[:n_users]] = np.arange(n_users)

    raw = 3.5 + user_bias[users] + item_bias[items] + np.einsum("ij,ij->i", P[users], Q[items])
    raw += rng.normal(0.0, noise, n_ratings)
    ratings = np.clip(np.round(raw * 2.0) / 2.0, 0.5, 5.0)
    stamps = 1_000_000_000 + rng.integers(0, 300_000_000, n_ratings)

    order = np.lexsort((stamps, users))
    return [
        (int(users[r]) + 1, int(movie_ids[items[r]]), float(ratings[r]), int(stamps[r]))
        for r in order
    ]


def write_ratings_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for u, m, r, t in rows:
            writer.writerow((u, m, f"{r:.1f}", t))
