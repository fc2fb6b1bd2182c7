import numpy as np
import pytest
from scipy import stats

from fmqubo import FMModel, build_item_codebook, predict, predict_batch
from fmqubo.encoding import all_codes, encode_index
from fmqubo.qubo import IsingProblem, QuboProblem, ising_energy, qubo_to_ising, reduce_for_user
from fmqubo.solvers import (
    AnnealConfig,
    ExhaustiveSampler,
    SampleSet,
    SimulatedAnnealingSampler,
    sample_sa,
    samples_to_recommendations,
    solve_direct,
    solve_exhaustive,
)

from oracles import all_states, ising_energy_loops


def random_ising(rng, n):
    return IsingProblem(rng.normal(size=n), np.triu(rng.normal(size=(n, n)), 1), float(rng.normal()))


@pytest.fixture(scope="module")
def small_instance():
    rng = np.random.default_rng(99)
    n_items = 23
    icb = build_item_codebook(list(range(100, 100 + n_items)), rng.uniform(1, 5, n_items))
    model = FMModel.random(3, icb.n_bits, 6, seed=rng, scale=0.3)
    u0 = np.array([1, 0, 1])
    return model, icb, u0


def test_direct_order_matches_recomputed_sort(small_instance):
    model, icb, u0 = small_instance
    recs = solve_direct(model, u0, icb, 10)
    # oracle: predict each code separately, keep the best code per item, sort
    best = {}
    for code in range(2**icb.n_bits):
        item = int(icb.code_to_item[code])
        r = predict(model, np.concatenate([u0, encode_index(code, icb.n_bits)]))
        best[item] = max(best.get(item, -np.inf), r)
    expected = sorted(best, key=lambda i: (-best[i], i))[:10]
    assert [r.item_index for r in recs] == expected
    assert [r.item_id for r in recs] == [100 + i for i in expected]
    for r in recs:
        assert r.rating == pytest.approx(best[r.item_index], abs=1e-9)


def test_direct_full_ranking_is_permutation(small_instance):
    model, icb, u0 = small_instance
    recs = solve_direct(model, u0, icb, icb.n_items)
    assert sorted(r.item_index for r in recs) == list(range(icb.n_items))
    assert len(solve_direct(model, u0, icb, 1000)) == icb.n_items


def test_direct_ties_by_ascending_index():
    icb = build_item_codebook(range(4))
    model = FMModel(0.0, np.zeros(3), np.zeros((2, 3)), 1, 2)
    assert [r.item_index for r in solve_direct(model, [1], icb, 4)] == [0, 1, 2, 3]


def test_direct_errors(small_instance):
    model, icb, u0 = small_instance
    with pytest.raises(ValueError):
        solve_direct(model, u0, icb, 0)
    with pytest.raises(ValueError):
        solve_direct(model, [1, 0], icb, 5)


def test_exhaustive_single_field():
    s = solve_exhaustive(IsingProblem([1.0], [[0.0]], 0.5))
    assert s.states[0].tolist() == [-1]
    assert s.energies[0] == -1.0 + 0.5
    assert len(s) == 2


def test_exhaustive_zero_problem():
    s = solve_exhaustive(IsingProblem(np.zeros(3), np.zeros((3, 3)), 4.0))
    assert len(s) == 8 and (s.energies == 4.0).all()
    assert s.codes.tolist() == list(range(8))


def test_exhaustive_minimum_matches_scan(rng):
    p = random_ising(rng, 10)
    s = solve_exhaustive(p)
    scan = [ising_energy_loops(p.h.tolist(), p.J.tolist(), st) + p.offset for st in all_states(10, (-1, 1))]
    assert s.energies[0] == pytest.approx(min(scan), abs=1e-9)
    assert sorted(s.codes.tolist()) == list(range(1024))
    assert (np.diff(s.energies) >= 0).all()


def test_exhaustive_guard():
    with pytest.raises(ValueError, match="max_variables"):
        solve_exhaustive(IsingProblem(np.zeros(30), np.zeros((30, 30))))


def test_sa_strong_field():
    s = sample_sa(IsingProblem([10.0], [[0.0]]), AnnealConfig(shots=100))
    assert s.num_reads == 100
    down = s.occurrences[s.states[:, 0] == -1].sum()
    assert down >= 99


def test_sa_zero_problem_is_uniform():
    s = sample_sa(IsingProblem(np.zeros(5), np.zeros((5, 5))), AnnealConfig(shots=3200, sweeps=10))
    counts = np.zeros(32)
    counts[s.codes] = s.occurrences
    assert stats.chisquare(counts).pvalue > 0.01


def test_sa_is_deterministic_across_jobs(rng):
    p = random_ising(rng, 8)
    cfg = AnnealConfig(shots=64, sweeps=50, seed=3)
    a, b, c = sample_sa(p, cfg), sample_sa(p, cfg), sample_sa(p, cfg, n_jobs=4)
    for other in (b, c):
        assert np.array_equal(a.codes, other.codes)
        assert np.array_equal(a.energies, other.energies)
        assert np.array_equal(a.occurrences, other.occurrences)


def test_sampleset_energies_are_rederivable(rng):
    p = random_ising(rng, 9)
    s = sample_sa(p, AnnealConfig(shots=200, sweeps=20))
    np.testing.assert_allclose(ising_energy(p, s.states) + p.offset, s.energies, atol=1e-9)
    order_key = list(zip(s.energies.tolist(), s.codes.tolist()))
    assert order_key == sorted(order_key)
    assert s.metadata["config"]["shots"] == 200
    assert s.metadata["config"]["programming_thermalization_us"] == 1000


@pytest.mark.parametrize("bad", [
    dict(shots=0), dict(sweeps=0), dict(beta_initial=2.0, beta_final=1.0),
    dict(beta_initial=0.0), dict(readout_thermalization_us=-1),
])
def test_anneal_config_validation(bad):
    with pytest.raises(ValueError):
        AnnealConfig(**bad)


def test_sampler_objects(rng):
    p = random_ising(rng, 4)
    assert len(ExhaustiveSampler().sample(p)) == 16
    assert SimulatedAnnealingSampler(AnnealConfig(shots=5, sweeps=5)).sample(p).num_reads == 5


def test_ground_state_found_on_trained_instance(trained_5k, dataset_5k):
    rec = trained_5k
    ising = qubo_to_ising(rec.reduce(dataset_5k.user_ids[3]))
    assert ising.n == 12
    ground = solve_exhaustive(ising).codes[0]
    samples = sample_sa(ising, AnnealConfig(shots=4000))
    assert ground in set(samples.codes.tolist())


def test_single_shot_gives_one_recommendation(small_instance):
    model, icb, u0 = small_instance
    ising = qubo_to_ising(reduce_for_user(model, u0))
    recs = samples_to_recommendations(sample_sa(ising, AnnealConfig(shots=1, sweeps=10)), icb, 10)
    assert len(recs) == 1 and recs[0].hits == 1


def test_duplicate_codes_are_merged():
    icb = build_item_codebook(["a", "b", "c"], [1.0, 5.0, 2.0])
    ising = IsingProblem([0.1, -0.2], [[0, 0.05], [0, 0]])
    codes = [1, 3, 3, 0]  # codes 1 and 3 both decode to item "b"
    samples = SampleSet.from_codes(ising, codes)
    recs = samples_to_recommendations(samples, icb)
    by_id = {r.item_id: r for r in recs}
    assert by_id["b"].hits == 3
    assert len(recs) == 2
    best_b = min(e for c, e in zip(samples.codes, samples.energies) if c in (1, 3))
    assert by_id["b"].rating == -best_b


def test_recommendation_ratings_equal_fm_predictions(small_instance):
    model, icb, u0 = small_instance
    ising = qubo_to_ising(reduce_for_user(model, u0))
    samples = sample_sa(ising, AnnealConfig(shots=300, sweeps=30))
    ratings = predict_batch(model, np.hstack([np.tile(u0, (len(samples), 1)), samples.binary_states]))
    np.testing.assert_allclose(-samples.energies, ratings, atol=1e-9)
    # lower energy <=> higher rating
    assert (np.diff(ratings) <= 1e-12).all()


def test_exhaustive_recommendations_equal_direct(small_instance):
    model, icb, u0 = small_instance
    ising = qubo_to_ising(reduce_for_user(model, u0))
    via_samples = samples_to_recommendations(solve_exhaustive(ising), icb)
    direct = solve_direct(model, u0, icb, icb.n_items)
    assert [r.item_index for r in via_samples] == [r.item_index for r in direct]


def test_sampleset_csv_roundtrip(tmp_path, rng):
    p = random_ising(rng, 6)
    s = sample_sa(p, AnnealConfig(shots=50, sweeps=10))
    s.to_csv(tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0].startswith("# backend")
    assert "state,energy,occurrences" in text
    back = SampleSet.read_csv(tmp_path / "s.csv")
    assert back.n == 6
    assert np.array_equal(back.codes, s.codes)
    assert np.array_equal(back.energies, s.energies)
    assert back.metadata["config"] == s.metadata["config"]


def test_all_codes_helper_width():
    assert all_codes(3).shape == (8, 3)
