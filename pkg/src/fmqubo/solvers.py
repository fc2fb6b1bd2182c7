"""Suggestion backends: direct scoring, exhaustive enumeration, simulated annealing.

The annealer stand-in is classical single-site Metropolis annealing. Its
knobs mirror the annealer read-out interface (``shots`` reads, ``sweeps`` as
the analogue of annealing time); the two thermalization delays are recorded
in the metadata and have no effect.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from . import _kernels
from .encoding import ItemCodebook, all_codes
from .fm import FMModel, predict_batch
from .qubo import IsingProblem

MAX_EXHAUSTIVE_VARIABLES = 25


@dataclass(frozen=True)
class AnnealConfig:
    shots: int = 100
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 10.0
    programming_thermalization_us: int = 1000
    readout_thermalization_us: int = 0
    seed: int = 42

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be > 0")
        if self.sweeps < 1:
            raise ValueError("sweeps must be > 0")
        if not 0 < self.beta_initial < self.beta_final:
            raise ValueError("need 0 < beta_initial < beta_final")
        if self.programming_thermalization_us < 0 or self.readout_thermalization_us < 0:
            raise ValueError("thermalization times must be >= 0")


@dataclass(frozen=True)
class SampleSet:
    """Distinct states with energies (offset included) and read counts.

    States are stored as integer codes: bit i (big-endian) of ``codes[r]`` is
    the binary variable x_i = (s_i + 1) / 2. Records are sorted by energy, then
    by code.
    """

    n: int
    codes: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def num_reads(self) -> int:
        return int(self.occurrences.sum())

    @property
    def binary_states(self) -> np.ndarray:
        shifts = np.arange(self.n - 1, -1, -1)
        return ((self.codes[:, None] >> shifts) & 1).astype(np.int8)

    @property
    def states(self) -> np.ndarray:
        """Spin matrix (+1/-1), one row per record."""
        return (2 * self.binary_states - 1).astype(np.int8)

    @property
    def first(self):
        return self.states[0], float(self.energies[0])

    @classmethod
    def from_codes(cls, ising: IsingProblem, codes, metadata=None) -> SampleSet:
        """Aggregate raw read codes, recompute energies from ``ising``, sort."""
        uniq, counts = np.unique(np.asarray(codes, dtype=np.int64), return_counts=True)
        energies = code_energies(ising, uniq)
        order = np.lexsort((uniq, energies))
        return cls(ising.n, uniq[order], energies[order], counts[order].astype(np.int64),
                   dict(metadata or {}))

    def to_csv(self, path) -> None:
        """Metadata as ``# key: <json>`` lines, then ``state,energy,occurrences`` rows."""
        lines = [f"# {key}: {json.dumps(value, sort_keys=True)}" for key, value in self.metadata.items()]
        lines.append("state,energy,occurrences")
        bits = self.binary_states
        for r in range(len(self)):
            state = "".join(map(str, bits[r].tolist()))
            lines.append(f"{state},{float(self.energies[r])!r},{int(self.occurrences[r])}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path) -> SampleSet:
        metadata, codes, energies, occ = {}, [], [], []
        n = None
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition(": ")
                    metadata[key] = json.loads(value)
                elif line == "state,energy,occurrences" or not line:
                    continue
                else:
                    state, energy, count = line.split(",")
                    n = len(state)
                    codes.append(int(state, 2))
                    energies.append(float(energy))
                    occ.append(int(count))
        return cls(n or 0, np.array(codes, dtype=np.int64), np.array(energies),
                   np.array(occ, dtype=np.int64), metadata)


def code_energies(ising: IsingProblem, codes, chunk: int = 1 << 16) -> np.ndarray:
    """Ising energy plus offset for each integer-coded state."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(ising.n - 1, -1, -1)
    out = np.empty(len(codes))
    for lo in range(0, len(codes), chunk):
        block = codes[lo:lo + chunk]
        spins = (2 * ((block[:, None] >> shifts) & 1) - 1).astype(np.float64)
        out[lo:lo + chunk] = _kernels.ising_energies(ising.h, ising.J, spins)
    return out + ising.offset


@dataclass(frozen=True)
class Recommendation:
    item_index: int
    item_id: object
    rating: float
    hits: int = 1


class Sampler(Protocol):
    def sample(self, ising: IsingProblem) -> SampleSet: ...


def _code_ratings(model: FMModel, u0, n_bits: int) -> np.ndarray:
    """Predicted rating for user ``u0`` paired with every n_bits code."""
    codes = all_codes(n_bits)
    X = np.hstack([np.broadcast_to(np.asarray(u0, dtype=np.uint8), (len(codes), model.n_u)), codes])
    return predict_batch(model, X)


def _rank(items: np.ndarray, ratings: np.ndarray, k_s: int | None):
    order = np.lexsort((items, -ratings))
    if k_s is not None:
        order = order[:k_s]
    return order


def item_ratings(model: FMModel, u0, codebook: ItemCodebook) -> np.ndarray:
    """Each item's best rating over the codes that decode to it."""
    if model.n_m != codebook.n_bits:
        raise ValueError(f"model item bits {model.n_m} != codebook bits {codebook.n_bits}")
    per_code = _code_ratings(model, u0, codebook.n_bits)
    best = np.full(codebook.n_items, -np.inf)
    np.maximum.at(best, codebook.code_to_item, per_code)
    return best


def solve_direct(model: FMModel, u0, codebook: ItemCodebook, k_s: int) -> list[Recommendation]:
    """Score every item, sort by rating descending (ties: lower index first), keep ``k_s``."""
    if k_s < 1:
        raise ValueError("k_s must be >= 1")
    u0 = np.asarray(u0)
    if u0.shape != (model.n_u,):
        raise ValueError(f"user vector length {u0.shape} does not match n_u={model.n_u}")
    ratings = item_ratings(model, u0, codebook)
    items = np.arange(codebook.n_items)
    return [
        Recommendation(int(i), codebook.item_ids[i], float(ratings[i]))
        for i in _rank(items, ratings, k_s)
    ]


def solve_exhaustive(ising: IsingProblem, max_variables: int = MAX_EXHAUSTIVE_VARIABLES) -> SampleSet:
    if ising.n > max_variables:
        raise ValueError(
            f"exhaustive enumeration of {ising.n} variables exceeds the "
            f"max_variables={max_variables} guard"
        )
    start = time.perf_counter()
    samples = SampleSet.from_codes(ising, np.arange(2**ising.n), {"backend": "exhaustive"})
    samples.metadata["timing"] = {"total_s": time.perf_counter() - start}
    return samples


def beta_schedule(ising: IsingProblem, config: AnnealConfig) -> np.ndarray:
    """Linear inverse-temperature ramp, scaled by 1 / max |coefficient|."""
    scale = 1.0 / max(ising.max_abs_coefficient(), 1e-12)
    return np.linspace(config.beta_initial, config.beta_final, config.sweeps) * scale


def _run_shots(ising, Jsym, betas, seed, shots):
    n = ising.n
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    codes = np.empty(len(shots), dtype=np.int64)
    for slot, r in enumerate(shots):
        rng = np.random.default_rng([seed, r])
        spins = (2.0 * rng.integers(0, 2, n) - 1.0)
        uniforms = rng.random((len(betas), n))
        _kernels.anneal_shot(ising.h, Jsym, spins, betas, uniforms)
        codes[slot] = int(((spins > 0).astype(np.int64) * weights).sum())
    return codes


def sample_sa(ising: IsingProblem, config: AnnealConfig | None = None, n_jobs: int = 1) -> SampleSet:
    """Simulated-annealing reads of ``ising``.

    Shot r draws its initial state and acceptance uniforms from a generator
    seeded with ``(config.seed, r)``, so results do not depend on ``n_jobs``.
    """
    config = config or AnnealConfig()
    if ising.n < 1:
        raise ValueError("problem has no variables")
    start = time.perf_counter()
    Jsym = ising.J + ising.J.T
    betas = beta_schedule(ising, config)
    shot_ids = np.arange(config.shots)
    if n_jobs > 1:
        chunks = np.array_split(shot_ids, n_jobs)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda c: _run_shots(ising, Jsym, betas, config.seed, c), chunks))
        codes = np.concatenate(parts)
    else:
        codes = _run_shots(ising, Jsym, betas, config.seed, shot_ids)
    sampled = time.perf_counter()
    samples = SampleSet.from_codes(ising, codes, {"backend": "sa", "config": asdict(config)})
    samples.metadata["timing"] = {"sample_s": sampled - start, "total_s": time.perf_counter() - start}
    return samples


class SimulatedAnnealingSampler:
    """Sampler object wrapping :func:`sample_sa`."""

    def __init__(self, config: AnnealConfig | None = None, n_jobs: int = 1):
        self.config = config or AnnealConfig()
        self.n_jobs = n_jobs

    def sample(self, ising: IsingProblem) -> SampleSet:
        return sample_sa(ising, self.config, self.n_jobs)


class ExhaustiveSampler:
    def __init__(self, max_variables: int = MAX_EXHAUSTIVE_VARIABLES):
        self.max_variables = max_variables

    def sample(self, ising: IsingProblem) -> SampleSet:
        return solve_exhaustive(ising, self.max_variables)


def samples_to_recommendations(samples: SampleSet, codebook: ItemCodebook,
                               k_s: int | None = None) -> list[Recommendation]:
    """Decode reads to items, merge duplicates (best energy, summed hits), rank.

    The rating of an item is minus its best sampled energy, which equals the
    FM prediction for that code when the samples come from a reduced problem.
    """
    if len(samples) == 0:
        raise ValueError("empty sample set")
    if samples.n != codebook.n_bits:
        raise ValueError(f"sample width {samples.n} != codebook bits {codebook.n_bits}")
    items_per_read = codebook.code_to_item[samples.codes]
    best: dict[int, float] = {}
    hits: dict[int, int] = {}
    for item, energy, count in zip(items_per_read.tolist(), samples.energies.tolist(),
                                   samples.occurrences.tolist()):
        if item not in best or energy < best[item]:
            best[item] = energy
        hits[item] = hits.get(item, 0) + count
    items = np.array(list(best), dtype=np.int64)
    ratings = -np.array([best[i] for i in items.tolist()])
    return [
        Recommendation(int(items[r]), codebook.item_ids[items[r]], float(ratings[r]), hits[int(items[r])])
        for r in _rank(items, ratings, k_s)
    ]
