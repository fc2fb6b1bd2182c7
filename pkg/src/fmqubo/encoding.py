"""Binary codebooks for users and items.

Items get a *surjective* codebook: every bitstring of length
``n_bits = ceil(log2 N_m)`` decodes to a real item. Item ``i`` owns the
primary code ``i``; the surplus codes ``N_m .. 2**n_bits - 1`` are handed,
in order, to the best items by mean training rating, so those items own two
codes each.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def n_bits_for(count: int) -> int:
    """ceil(log2 count), with a floor of one bit."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return max(1, (count - 1).bit_length())


def encode_index(i: int, n_bits: int) -> np.ndarray:
    """Big-endian binary expansion of ``i`` as a uint8 vector."""
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if not 0 <= i < 2**n_bits:
        raise ValueError(f"index {i} out of range for {n_bits} bits")
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((int(i) >> shifts) & 1).astype(np.uint8)


def decode_index(bits) -> int:
    bits = np.asarray(bits)
    if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be a 1-d 0/1 vector")
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def all_codes(n_bits: int) -> np.ndarray:
    """All 2**n_bits codes as rows, row r encoding the integer r."""
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((np.arange(2**n_bits)[:, None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True)
class ItemCodebook:
    n_bits: int
    item_ids: tuple
    item_rank: np.ndarray = field(repr=False)
    code_to_item: np.ndarray = field(repr=False)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_surplus(self) -> int:
        return 2**self.n_bits - self.n_items

    @classmethod
    def from_rank(cls, item_ids, item_rank) -> ItemCodebook:
        item_ids = tuple(item_ids)
        n_items = len(item_ids)
        if n_items == 0:
            raise ValueError("codebook needs at least one item")
        item_rank = np.asarray(item_rank, dtype=np.int64)
        if sorted(item_rank.tolist()) != list(range(n_items)):
            raise ValueError("item_rank must be a permutation of item indices")
        n_bits = n_bits_for(n_items)
        surplus = 2**n_bits - n_items
        code_to_item = np.concatenate([np.arange(n_items), item_rank[:surplus]])
        return cls(n_bits, item_ids, item_rank, code_to_item)

    def codes_for(self, item: int) -> list[int]:
        """Integer codes that decode to ``item`` (primary code first)."""
        return np.flatnonzero(self.code_to_item == item).tolist()

    def primary_code(self, item: int) -> np.ndarray:
        return encode_index(item, self.n_bits)

    def decode(self, code) -> int:
        return decode(code, self)


def build_item_codebook(item_ids, mean_ratings=None) -> ItemCodebook:
    """Rank items by descending mean rating (ties: ascending raw id)."""
    item_ids = list(item_ids)
    if not item_ids:
        raise ValueError("empty item list")
    if mean_ratings is None:
        mean_ratings = np.zeros(len(item_ids))
    mean_ratings = np.asarray(mean_ratings, dtype=np.float64)
    if mean_ratings.shape != (len(item_ids),):
        raise ValueError("need one mean rating per item")
    rank = sorted(range(len(item_ids)), key=lambda i: (-mean_ratings[i], item_ids[i]))
    return ItemCodebook.from_rank(item_ids, rank)


def decode(code, cb: ItemCodebook) -> int:
    code = np.asarray(code)
    if code.shape != (cb.n_bits,):
        raise ValueError(f"code length {code.shape} does not match codebook n_bits={cb.n_bits}")
    return int(cb.code_to_item[decode_index(code)])


@dataclass(frozen=True)
class UserCodebook:
    """Bijective user index <-> code map; user ``u`` has code ``u``."""

    n_bits: int
    user_ids: tuple

    @classmethod
    def build(cls, user_ids) -> UserCodebook:
        user_ids = tuple(user_ids)
        if not user_ids:
            raise ValueError("empty user list")
        return cls(n_bits_for(len(user_ids)), user_ids)

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    def encode(self, user: int) -> np.ndarray:
        if not 0 <= user < self.n_users:
            raise ValueError(f"user index {user} out of range")
        return encode_index(user, self.n_bits)

    def index_of(self, raw_id) -> int:
        try:
            return self.user_ids.index(raw_id)
        except ValueError:
            raise KeyError(f"unknown user id {raw_id!r}") from None
