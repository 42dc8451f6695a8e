from collections import Counter

import numpy as np
import pytest

from corrnet.clustering import delineate_manual, pair_clusters
from corrnet.marketdata import INDUSTRIES, ValidationError
from corrnet.neighbornet import CircularOrdering
from corrnet.portfolio import (
    SelectionUniverse,
    SimulationError,
    Strategy,
    allocate_counts,
    select_by_cluster,
    select_by_industry,
    select_by_industry_cluster,
    select_random,
    simulate,
)


def make_universe(n=16, n_clusters=4, industries=INDUSTRIES, returns=None):
    """Universe with contiguous equal-ish clusters and round-robin industries."""
    tickers = tuple(f"T{i:02d}" for i in range(n))
    industry = {t: industries[i % len(industries)] for i, t in enumerate(tickers)}
    if returns is None:
        returns = {t: 0.01 * i for i, t in enumerate(tickers)}
    else:
        returns = {t: returns[i] for i, t in enumerate(tickers)}
    size = n // n_clusters
    boundaries = sorted({n - 1} | {size * (j + 1) - 1 for j in range(n_clusters - 1)})
    assignment = delineate_manual(CircularOrdering(tuple(range(n))), boundaries)
    pairing = pair_clusters(assignment)
    return SelectionUniverse(
        tickers=tickers,
        industry=industry,
        period_returns=returns,
        clusters=assignment,
        pairing=pairing,
    )


def cluster_of(universe, ticker):
    return universe.clusters.labels[universe.tickers.index(ticker)]


class TestAllocateCounts:
    def test_sixteen_over_five(self):
        rng = np.random.default_rng(0)
        counts = allocate_counts(16, 5, rng)
        assert sorted(counts.tolist()) == [3, 3, 3, 3, 4]
        assert counts.sum() == 16

    def test_four_over_five(self):
        rng = np.random.default_rng(1)
        counts = allocate_counts(4, 5, rng)
        assert sorted(counts.tolist()) == [0, 1, 1, 1, 1]

    def test_ten_over_five(self):
        rng = np.random.default_rng(2)
        assert allocate_counts(10, 5, rng).tolist() == [2, 2, 2, 2, 2]

    def test_remainder_uniform(self):
        rng = np.random.default_rng(3)
        hits = np.zeros(5)
        trials = 2000
        for _ in range(trials):
            hits += allocate_counts(16, 5, rng) == 4
        p = 1 / 5
        sigma = np.sqrt(trials * p * (1 - p))
        assert np.all(np.abs(hits - trials * p) <= 3 * sigma)

    def test_validation(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValidationError):
            allocate_counts(3, 0, rng)
        with pytest.raises(ValidationError):
            allocate_counts(-1, 3, rng)


class TestSelectRandom:
    def test_whole_universe(self):
        universe = make_universe(8)
        p = select_random(universe, 8, np.random.default_rng(0))
        assert set(p.members) == set(universe.tickers)

    def test_seeded_repeatability(self):
        universe = make_universe()
        a = select_random(universe, 4, np.random.default_rng(42))
        b = select_random(universe, 4, np.random.default_rng(42))
        assert a == b

    def test_oversized_rejected(self):
        universe = make_universe(8)
        with pytest.raises(ValidationError):
            select_random(universe, 9, np.random.default_rng(0))

    def test_pair_frequencies_uniform(self):
        universe = make_universe(5, n_clusters=2, industries=("Energy",))
        rng = np.random.default_rng(5)
        trials = 100_000
        counts = Counter(
            tuple(sorted(select_random(universe, 2, rng).members)) for _ in range(trials)
        )
        assert len(counts) == 10
        p = 1 / 10
        sigma = np.sqrt(trials * p * (1 - p))
        for pair, hits in counts.items():
            assert abs(hits - trials * p) <= 3 * sigma, pair

    def test_return_is_equal_weighted_mean(self):
        universe = make_universe(6, returns=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        p = select_random(universe, 6, np.random.default_rng(0))
        assert p.ret == pytest.approx(0.35)


class TestSelectByIndustry:
    def test_five_picks_cover_all_industries(self):
        universe = make_universe(20)
        for seed in range(20):
            p = select_by_industry(universe, 5, np.random.default_rng(seed))
            assert sorted(universe.industry[t] for t in p.members) == sorted(INDUSTRIES)

    def test_small_portfolio_distinct_industries(self):
        universe = make_universe(20)
        for seed in range(50):
            for k in (2, 3, 4, 5):
                p = select_by_industry(universe, k, np.random.default_rng(seed * 7 + k))
                industries = [universe.industry[t] for t in p.members]
                assert len(set(industries)) == k

    def test_single_industry_universe_falls_back(self):
        universe = make_universe(6, industries=("Materials",))
        p = select_by_industry(universe, 2, np.random.default_rng(0))
        assert len(p.members) == 2

    def test_overflow_reallocates(self):
        # Energy has a single member; allocations of 2 there must spill over.
        tickers = ("A", "B", "C", "D", "E")
        industry = {"A": "Energy", "B": "Finance", "C": "Finance", "D": "Finance", "E": "Finance"}
        universe = SelectionUniverse(
            tickers=tickers,
            industry=industry,
            period_returns={t: 0.1 for t in tickers},
        )
        for seed in range(30):
            p = select_by_industry(universe, 4, np.random.default_rng(seed))
            assert len(p.members) == 4

    def test_impossible_allocation_errors(self):
        tickers = ("A", "B")
        universe = SelectionUniverse(
            tickers=tickers,
            industry={"A": "Energy", "B": "Finance"},
            period_returns={"A": 0.1, "B": 0.2},
        )
        with pytest.raises(ValidationError):
            select_by_industry(universe, 3, np.random.default_rng(0))


class TestSelectByCluster:
    def test_pair_membership_respected(self):
        universe = make_universe(16, n_clusters=4)
        for seed in range(50):
            p = select_by_cluster(universe, 2, np.random.default_rng(seed))
            assert p.pairs is not None and len(p.pairs) == 1
            first, second = p.pairs[0]
            c = cluster_of(universe, first)
            assert cluster_of(universe, second) == universe.pairing.pair_of[c]

    def test_sixteen_from_eight_clusters_uses_allocation(self):
        universe = make_universe(32, n_clusters=8)
        for seed in range(10):
            p = select_by_cluster(universe, 16, np.random.default_rng(seed))
            per_cluster = Counter(cluster_of(universe, t) for t in p.members)
            assert sorted(per_cluster.values()) == [2] * 8

    def test_no_duplicates_over_trials(self):
        universe = make_universe(16, n_clusters=4)
        rng = np.random.default_rng(6)
        for _ in range(2000):
            k = int(rng.integers(2, 9))
            p = select_by_cluster(universe, k, rng)
            assert len(set(p.members)) == k

    def test_odd_size_appends_single(self):
        universe = make_universe(32, n_clusters=8)
        p = select_by_cluster(universe, 5, np.random.default_rng(1))
        assert len(p.members) == 5
        assert len(p.pairs) == 2

    def test_requires_clusters(self):
        universe = SelectionUniverse(
            tickers=("A", "B"),
            industry={"A": "Energy", "B": "Finance"},
            period_returns={"A": 0.1, "B": 0.2},
        )
        with pytest.raises(ValidationError):
            select_by_cluster(universe, 2, np.random.default_rng(0))


class TestSelectByIndustryCluster:
    def test_pairs_span_industries(self):
        universe = make_universe(20, n_clusters=4)
        for seed in range(100):
            p = select_by_industry_cluster(universe, 4, np.random.default_rng(seed))
            for first, second in p.pairs:
                assert universe.industry[first] != universe.industry[second]

    def test_single_industry_pair_infeasible(self):
        # Two clusters, everything Materials: no cross-industry pair exists.
        universe = make_universe(8, n_clusters=2, industries=("Materials",))
        with pytest.raises(ValidationError, match="redraws"):
            select_by_industry_cluster(universe, 2, np.random.default_rng(0))

    def test_audit_over_seeded_trials(self):
        universe = make_universe(20, n_clusters=5)
        rng = np.random.default_rng(7)
        for _ in range(2000):
            p = select_by_industry_cluster(universe, 4, rng)
            assert len(set(p.members)) == 4
            for first, second in p.pairs:
                assert universe.industry[first] != universe.industry[second]


class TestSimulate:
    def test_identical_returns_degenerate(self):
        universe = make_universe(12, returns=[0.07] * 12)
        for strategy in Strategy:
            result = simulate(universe, strategy, 4, iterations=50, seed=3)
            assert result.mean == pytest.approx(0.07)
            assert result.std_dev == pytest.approx(0.0, abs=1e-15)

    def test_fixed_seed_bit_identical(self):
        universe = make_universe()
        a = simulate(universe, Strategy.CLUSTER, 4, iterations=200, seed=11)
        b = simulate(universe, Strategy.CLUSTER, 4, iterations=200, seed=11)
        assert a.returns == b.returns
        assert (a.mean, a.std_dev) == (b.mean, b.std_dev)

    def test_mean_std_consistent_with_list(self):
        universe = make_universe()
        r = simulate(universe, Strategy.RANDOM, 4, iterations=300, seed=1)
        arr = np.array(r.returns)
        assert r.mean == pytest.approx(float(arr.mean()), abs=1e-12)
        assert r.std_dev == pytest.approx(float(arr.std(ddof=1)), abs=1e-12)

    def test_metadata_records_rng(self):
        universe = make_universe()
        r = simulate(universe, Strategy.RANDOM, 2, iterations=10, seed=5)
        assert r.metadata["rng"] == "PCG64"
        assert r.metadata["seed"] == 5

    def test_selection_error_reports_iteration(self):
        universe = make_universe(8, n_clusters=2, industries=("Materials",))
        with pytest.raises(SimulationError, match="iteration 0"):
            simulate(universe, Strategy.INDUSTRY_CLUSTER, 2, iterations=10, seed=0)

    def test_members_always_in_universe(self):
        universe = make_universe(20, n_clusters=5)
        rng_seed = 0
        for strategy in Strategy:
            result = simulate(universe, strategy, 8, iterations=100, seed=rng_seed)
            assert len(result.returns) == 100
