import io
import math
from datetime import date, timedelta

import numpy as np
import pytest

from corrnet.corrdist import (
    CorrelationMatrix,
    DistanceMatrix,
    correlations,
    distance_from_csv,
    distance_to_csv,
    matrix_from_csv,
    matrix_to_csv,
    summarize,
    to_distance,
)
from corrnet.marketdata import ReturnMatrix, ValidationError


def _returns(values, tickers=None):
    values = np.asarray(values, dtype=float)
    n_windows, n_tickers = values.shape
    tickers = tickers or tuple(f"T{i}" for i in range(n_tickers))
    base = date(2020, 1, 6)
    windows = tuple(
        (base + timedelta(days=7 * k), base + timedelta(days=7 * k + 4))
        for k in range(n_windows)
    )
    return ReturnMatrix(tickers=tuple(tickers), windows=windows, values=values)


def _corr(rho, tickers=None):
    rho = np.asarray(rho, dtype=float)
    tickers = tickers or tuple(f"T{i}" for i in range(rho.shape[0]))
    return CorrelationMatrix(tickers=tuple(tickers), rho=rho)


def _pearson_oracle(x, y):
    """Brute-force two-pass Pearson correlation."""
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)


class TestCorrelations:
    def test_identical_columns(self):
        col = [0.01, -0.02, 0.03, 0.005]
        rho = correlations(_returns(np.column_stack([col, col]))).rho
        assert rho[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_negated_column(self):
        col = np.array([0.01, -0.02, 0.03, 0.005])
        rho = correlations(_returns(np.column_stack([col, -col]))).rho
        assert rho[0, 1] == pytest.approx(-1.0, abs=1e-15)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(12)
        values = rng.normal(0, 0.02, (50, 3))
        rho = correlations(_returns(values)).rho
        for i in range(3):
            for j in range(3):
                expected = _pearson_oracle(values[:, i], values[:, j])
                assert rho[i, j] == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_column_names_ticker(self):
        values = np.column_stack([[0.01, 0.02, 0.03], [0.01, 0.01, 0.01]])
        with pytest.raises(ValidationError, match="T1"):
            correlations(_returns(values))

    def test_needs_three_windows(self):
        with pytest.raises(ValidationError, match=">= 3"):
            correlations(_returns(np.array([[0.1, 0.2], [0.2, 0.1]])))

    def test_unit_diagonal_and_symmetry(self):
        rng = np.random.default_rng(1)
        rho = correlations(_returns(rng.normal(0, 1, (30, 5)))).rho
        assert np.all(np.diag(rho) == 1.0)
        assert np.array_equal(rho, rho.T)


class TestToDistance:
    def test_endpoints(self):
        rho = _corr([[1.0, 1.0], [1.0, 1.0]])
        assert to_distance(rho).d[0, 1] == 0.0
        rho = _corr([[1.0, -1.0], [-1.0, 1.0]])
        assert to_distance(rho).d[0, 1] == 2.0
        rho = _corr([[1.0, 0.5], [0.5, 1.0]])
        assert to_distance(rho).d[0, 1] == 1.0

    def test_reported_period_one_mean(self):
        rho = _corr([[1.0, 0.266], [0.266, 1.0]])
        assert to_distance(rho).d[0, 1] == pytest.approx(1.21161, abs=5e-6)
        assert to_distance(rho).d[0, 1] == pytest.approx(math.sqrt(2 * (1 - 0.266)), abs=1e-15)

    def test_monotone_decreasing_in_rho(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = sorted(rng.uniform(-1, 1, 2))
            da = math.sqrt(2 * (1 - a))
            db = math.sqrt(2 * (1 - b))
            assert (a < b) == (da > db) or a == b

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        raw = rng.uniform(-1, 1, (6, 6))
        rho = (raw + raw.T) / 2
        np.fill_diagonal(rho, 1.0)
        d = to_distance(_corr(rho)).d
        back = 1.0 - d**2 / 2.0
        off = ~np.eye(6, dtype=bool)
        assert np.abs(back[off] - rho[off]).max() < 1e-12

    def test_range_bounds(self):
        rng = np.random.default_rng(4)
        raw = rng.uniform(-1, 1, (8, 8))
        rho = (raw + raw.T) / 2
        np.fill_diagonal(rho, 1.0)
        d = to_distance(_corr(rho)).d
        assert d.min() >= 0.0 and d.max() <= 2.0
        assert np.all(np.diag(d) == 0.0)


class TestSummarize:
    def test_pair_count_for_126(self):
        rng = np.random.default_rng(5)
        raw = rng.uniform(0, 0.5, (126, 126))
        rho = (raw + raw.T) / 2
        np.fill_diagonal(rho, 1.0)
        assert summarize(_corr(rho)).total_pairs == 7875

    def test_small_example(self):
        rho = np.array(
            [
                [1.0, 0.5, -0.1],
                [0.5, 1.0, 0.2],
                [-0.1, 0.2, 1.0],
            ]
        )
        s = summarize(_corr(rho))
        assert s.mean == pytest.approx(0.2)
        assert s.min == pytest.approx(-0.1)
        assert s.max == pytest.approx(0.5)
        assert s.negative_count == 1
        assert s.total_pairs == 3

    def test_constant_pairs_have_zero_std(self):
        rho = np.full((4, 4), 0.3)
        np.fill_diagonal(rho, 1.0)
        assert summarize(_corr(rho)).std_dev == 0.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(6)
        raw = rng.uniform(-0.5, 0.9, (7, 7))
        rho = (raw + raw.T) / 2
        np.fill_diagonal(rho, 1.0)
        perm = rng.permutation(7)
        permuted = rho[np.ix_(perm, perm)]
        a = summarize(_corr(rho))
        b = summarize(_corr(permuted))
        assert b.mean == pytest.approx(a.mean, abs=1e-14)
        assert b.std_dev == pytest.approx(a.std_dev, abs=1e-14)
        assert (b.min, b.max) == (a.min, a.max)
        assert (b.negative_count, b.total_pairs) == (a.negative_count, a.total_pairs)


class TestMatrixCsv:
    def test_distance_round_trip(self):
        rng = np.random.default_rng(7)
        raw = rng.uniform(0.1, 1.9, (5, 5))
        d = (raw + raw.T) / 2
        np.fill_diagonal(d, 0.0)
        dist = DistanceMatrix(tickers=("A", "B", "C", "D", "E"), d=d)
        text = distance_to_csv(dist)
        back = distance_from_csv(io.StringIO(text))
        assert back.tickers == dist.tickers
        assert np.array_equal(back.d, dist.d)

    def test_header_carries_tickers(self):
        names, values = matrix_from_csv(
            io.StringIO(matrix_to_csv(("X", "Y"), np.array([[0.0, 1.0], [1.0, 0.0]])))
        )
        assert names == ("X", "Y")
        assert values[0, 1] == 1.0


class TestValidation:
    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.2], [0.3, 1.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            CorrelationMatrix(tickers=("A", "B"), rho=m)

    def test_correlation_bounds_enforced(self):
        m = np.array([[1.0, 1.5], [1.5, 1.0]])
        with pytest.raises(ValidationError, match="lie in"):
            CorrelationMatrix(tickers=("A", "B"), rho=m)

    def test_negative_distance_rejected(self):
        m = np.array([[0.0, -0.5], [-0.5, 0.0]])
        with pytest.raises(ValidationError, match="non-negative"):
            DistanceMatrix(tickers=("A", "B"), d=m)
