"""Overlap rates, suggestion-time benchmarks and complexity-curve fits."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .encoding import ItemCodebook, UserCodebook, build_item_codebook, n_bits_for
from .fm import FMModel
from .qubo import qubo_to_ising, reduce_for_user
from .solvers import (
    AnnealConfig,
    sample_sa,
    samples_to_recommendations,
    solve_direct,
    solve_exhaustive,
)

# Largest fully connected Ising problems embeddable on two D-Wave generations.
ADVANTAGE_MAX_QUBO_SIZE = 145
DW2000Q_MAX_QUBO_SIZE = 64


def overlap_rate(direct_topk, sampled, k_s: int) -> float:
    """Percent of the direct top-``k_s`` items that also appear in ``sampled``."""
    direct_topk = set(direct_topk)
    if len(direct_topk) != k_s:
        raise ValueError(f"direct top-k list has {len(direct_topk)} distinct items, expected k_s={k_s}")
    return 100.0 * len(direct_topk & set(sampled)) / k_s


@dataclass(frozen=True)
class OverlapReport:
    user_id: object
    backend: str
    shots: int
    k_s: int
    direct_items: tuple
    sampled_items: tuple
    overlap_rate: float

    @property
    def n_overlap(self) -> int:
        return len(set(self.direct_items) & set(self.sampled_items))


def sample_users(user_codebook: UserCodebook, n_users: int, seed: int = 42) -> list:
    """Seeded draw of raw user ids without replacement."""
    n = min(n_users, user_codebook.n_users)
    picks = np.random.default_rng(seed).choice(user_codebook.n_users, size=n, replace=False)
    return [user_codebook.user_ids[i] for i in picks.tolist()]


def _user_seed(seed: int, user_index: int) -> int:
    return int(np.random.SeedSequence([seed, user_index]).generate_state(1)[0])


def suggest_sampled(model: FMModel, u0, item_codebook: ItemCodebook, backend: str,
                    config: AnnealConfig | None, k_s: int | None = None):
    """Reduction, sampling and decoding for one user; the timed suggestion phase."""
    ising = qubo_to_ising(reduce_for_user(model, u0))
    if backend == "sa":
        samples = sample_sa(ising, config)
    elif backend == "exhaustive":
        samples = solve_exhaustive(ising)
    else:
        raise ValueError(f"unknown sampling backend {backend!r}")
    return samples_to_recommendations(samples, item_codebook, k_s)


def run_overlap_experiment(model: FMModel, user_codebook: UserCodebook, item_codebook: ItemCodebook,
                           users, ks=(10, 30, 50), config: AnnealConfig | None = None,
                           backend: str = "sa") -> list[OverlapReport]:
    """One report per (user, k_s).

    With the SA backend, each user's shots are seeded from
    ``(config.seed, user index)`` so users get independent but reproducible reads.
    """
    config = config or AnnealConfig()
    ks = sorted(set(int(k) for k in ks))
    reports = []
    for user_id in users:
        u_index = user_codebook.index_of(user_id)
        u0 = user_codebook.encode(u_index)
        direct = solve_direct(model, u0, item_codebook, max(ks))
        user_config = replace(config, seed=_user_seed(config.seed, u_index))
        sampled = suggest_sampled(model, u0, item_codebook, backend, user_config)
        shots = config.shots if backend == "sa" else 2**model.n_m
        for k_s in ks:
            direct_items = tuple(r.item_index for r in direct[:k_s])
            sampled_items = tuple(r.item_index for r in sampled[:k_s])
            reports.append(OverlapReport(
                user_id, backend, shots, k_s, direct_items, sampled_items,
                overlap_rate(direct_items, sampled_items, len(direct_items)),
            ))
    return reports


def mean_overlap(reports) -> dict:
    """Average overlap rate per (backend, shots, k_s)."""
    groups: dict = {}
    for r in reports:
        groups.setdefault((r.backend, r.shots, r.k_s), []).append(r.overlap_rate)
    return {key: statistics.fmean(vals) for key, vals in sorted(groups.items())}


OVERLAP_COLUMNS = ("user_id", "backend", "shots", "k_s", "n_overlap", "overlap_rate")


def write_overlap_csv(reports, path) -> None:
    """One row per report in OVERLAP_COLUMNS order; per-group means use user_id ``mean``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OVERLAP_COLUMNS)
        for r in reports:
            writer.writerow((r.user_id, r.backend, r.shots, r.k_s, r.n_overlap, repr(r.overlap_rate)))
        for (backend, shots, k_s), mean in mean_overlap(reports).items():
            writer.writerow(("mean", backend, shots, k_s, "", repr(mean)))


@dataclass(frozen=True)
class BenchInstance:
    model: FMModel
    user_codebook: UserCodebook
    item_codebook: ItemCodebook
    n_data: int = 0


@dataclass(frozen=True)
class BenchRecord:
    n_data: int
    n_items: int
    n_bits: int
    backend: str
    seconds: float
    user_id: object
    reps: int


def synthetic_instance(n_items: int, n_users: int = 1000, k: int = 200, seed: int = 0,
                       scale: float = 0.1) -> BenchInstance:
    """Random FM with a matching surjective codebook; stands in for a trained model in timings."""
    rng = np.random.default_rng(seed)
    ucb = UserCodebook.build(list(range(1, n_users + 1)))
    icb = build_item_codebook(list(range(1, n_items + 1)), rng.uniform(0.5, 5.0, n_items))
    model = FMModel.random(ucb.n_bits, icb.n_bits, k, seed=rng, scale=scale)
    return BenchInstance(model, ucb, icb)


def benchmark(instances, backends=("direct", "sa"), n_users: int = 5, reps: int = 5,
              config: AnnealConfig | None = None, top: int = 10, seed: int = 42) -> list[BenchRecord]:
    """Median wall time of the suggestion phase per (instance, backend, user).

    Training and model loading are outside the timed region.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    instances = list(instances)
    if len({inst.item_codebook.n_items for inst in instances}) < 2:
        raise ValueError("benchmark needs at least two distinct catalogue sizes")
    config = config or AnnealConfig()
    records = []
    for inst in instances:
        icb = inst.item_codebook
        for user_id in sample_users(inst.user_codebook, n_users, seed):
            u0 = inst.user_codebook.encode(inst.user_codebook.index_of(user_id))
            for backend in backends:
                times = []
                for _ in range(reps):
                    start = time.perf_counter()
                    if backend == "direct":
                        solve_direct(inst.model, u0, icb, top)
                    else:
                        suggest_sampled(inst.model, u0, icb, backend, config, top)
                    times.append(time.perf_counter() - start)
                records.append(BenchRecord(inst.n_data, icb.n_items, icb.n_bits, backend,
                                           statistics.median(times), user_id, reps))
    return records


def median_times(records) -> dict:
    """Median seconds per (backend, n_items)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.backend, r.n_items), []).append(r.seconds)
    return {key: statistics.median(vals) for key, vals in sorted(groups.items())}


def write_bench_csv(records, path) -> None:
    columns = [f.name for f in fields(BenchRecord)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            row = asdict(r)
            writer.writerow([repr(row[c]) if c == "seconds" else row[c] for c in columns])


def _direct_family(n):
    n = np.asarray(n, dtype=np.float64)
    return (n * np.log2(n)) ** 2


def _annealer_family(n):
    lg = np.log2(np.asarray(n, dtype=np.float64))
    return np.exp(np.sqrt(lg)) * lg


COMPLEXITY_FAMILIES = {"direct": _direct_family, "qa": _annealer_family}


@dataclass(frozen=True)
class ComplexityFit:
    """time(N_m) ~= scale * family(N_m) + shift."""

    family: str
    scale: float
    shift: float
    residuals: tuple = ()

    def __call__(self, n_items):
        return self.scale * COMPLEXITY_FAMILIES[self.family](n_items) + self.shift


def fit_complexity(n_items, seconds, family: str) -> ComplexityFit:
    """Least-squares scale and shift for ``direct`` ((N log N)^2) or ``qa`` (e^sqrt(log N) log N)."""
    if family not in COMPLEXITY_FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(COMPLEXITY_FAMILIES)}")
    n_items = np.asarray(n_items, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if len(n_items) != len(seconds):
        raise ValueError("n_items and seconds differ in length")
    if len(n_items) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(n_items)}")
    f = COMPLEXITY_FAMILIES[family](n_items)
    col_scale = np.abs(f).max() or 1.0
    A = np.column_stack([f / col_scale, np.ones_like(f)])
    if np.linalg.matrix_rank(A) < 2:
        raise ValueError("degenerate design matrix: need at least two distinct N_m values")
    coef, *_ = np.linalg.lstsq(A, seconds, rcond=None)
    scale, shift = coef[0] / col_scale, coef[1]
    residuals = seconds - (scale * f + shift)
    return ComplexityFit(family, float(scale), float(shift), tuple(residuals.tolist()))


def qubo_size(n_items: int) -> int:
    return n_bits_for(int(n_items))


def extrapolation_table(fits, exponents=range(1, 50)) -> list[dict]:
    """Fitted times at N_m = 10**e, with QUBO size and hardware-ceiling flags."""
    rows = []
    for e in exponents:
        n_items = 10**e
        size = qubo_size(n_items)
        row = {"n_items": f"1e{e}", "qubo_size": size,
               "fits_advantage": size <= ADVANTAGE_MAX_QUBO_SIZE,
               "fits_dw2000q": size <= DW2000Q_MAX_QUBO_SIZE}
        for fit in fits:
            row[f"{fit.family}_seconds"] = float(fit(float(n_items)))
        rows.append(row)
    return rows


def write_rows_csv(rows, path) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def captured_count(direct_topk, sampled) -> int:
    return len(set(direct_topk) & set(sampled))
