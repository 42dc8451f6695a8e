"""Price/dividend ingestion, weekly and period returns, synthetic data generation.

Input CSVs use the schema ``date,ticker,close,dividend`` (ISO-8601 dates,
decimal point; the dividend column may be absent or blank, both read as 0).
Ticker metadata uses ``ticker,code,industry`` where ``code`` carries a
display name.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, TextIO

import numpy as np

INDUSTRIES = ("Energy", "Finance", "HealthCare", "Industrial", "Materials")

# Default study-period boundary dates (four consecutive market regimes).
DEFAULT_PERIOD_BOUNDARIES = (
    date(2005, 5, 13),
    date(2006, 6, 13),
    date(2007, 10, 16),
    date(2008, 10, 28),
    date(2010, 10, 19),
)

WINDOW_DAYS = 5  # trading days per return window

# Tickers missing more than this share of the pooled trading dates in a
# period are treated as halted and rejected outright.
MAX_MISSING_FRACTION = 0.05


class ParseError(ValueError):
    """Malformed input row; carries the offending 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(ValueError):
    """Input violates a data invariant (non-positive price, unknown ticker...)."""


class AlignmentError(ValueError):
    """Series cannot be placed on the shared trading-date grid."""


@dataclass(frozen=True)
class PriceSeries:
    """Dated closing prices and dividends for one ticker."""

    ticker: str
    industry: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]
    dividends: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.dates) == len(self.closes) == len(self.dividends)):
            raise ValidationError(f"{self.ticker}: ragged observation arrays")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValidationError(
                    f"{self.ticker}: dates not strictly increasing at {cur}"
                )
        for day, close, dividend in zip(self.dates, self.closes, self.dividends):
            if close <= 0:
                raise ValidationError(
                    f"{self.ticker}: non-positive close {close} on {day}"
                )
            if dividend < 0:
                raise ValidationError(
                    f"{self.ticker}: negative dividend {dividend} on {day}"
                )

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class StudyPeriod:
    label: str
    start_date: date
    end_date: date

    def __post_init__(self):
        if self.start_date >= self.end_date:
            raise ValidationError(
                f"period {self.label}: start {self.start_date} not before end {self.end_date}"
            )

    def contains(self, day: date) -> bool:
        return self.start_date <= day <= self.end_date


def periods_from_boundaries(
    boundaries: Iterable[date], labels: Iterable[str] | None = None
) -> tuple[StudyPeriod, ...]:
    """Build contiguous periods from k+1 boundary dates (shared endpoints)."""
    bounds = list(boundaries)
    if len(bounds) < 2:
        raise ValidationError("need at least two boundary dates")
    names = list(labels) if labels is not None else [
        str(i + 1) for i in range(len(bounds) - 1)
    ]
    if len(names) != len(bounds) - 1:
        raise ValidationError("label count must be boundary count - 1")
    return tuple(
        StudyPeriod(name, lo, hi) for name, lo, hi in zip(names, bounds, bounds[1:])
    )


@dataclass(frozen=True, eq=False)
class ReturnMatrix:
    """Simple returns over consecutive 5-trading-day windows, one column per ticker."""

    tickers: tuple[str, ...]
    windows: tuple[tuple[date, date], ...]
    values: np.ndarray  # shape (n_windows, n_tickers)

    def __post_init__(self):
        if self.values.shape != (len(self.windows), len(self.tickers)):
            raise ValidationError("return matrix shape mismatch")


def load_prices(
    source: TextIO | Iterable[str], metadata: Mapping[str, str]
) -> list[PriceSeries]:
    """Read the price/dividend CSV into one PriceSeries per ticker.

    Rows may arrive in any order; observations are sorted by date per ticker.
    ``metadata`` maps ticker to industry; unknown tickers are rejected.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input", 1) from None
    cols = [h.strip().lower() for h in header]
    try:
        i_date = cols.index("date")
        i_ticker = cols.index("ticker")
        i_close = cols.index("close")
    except ValueError:
        raise ParseError(f"header must name date,ticker,close: got {header!r}", 1) from None
    i_div = cols.index("dividend") if "dividend" in cols else None

    rows: dict[str, list[tuple[date, float, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            day = date.fromisoformat(row[i_date].strip())
            ticker = row[i_ticker].strip()
            close = float(row[i_close])
            if i_div is not None and len(row) > i_div and row[i_div].strip():
                dividend = float(row[i_div])
            else:
                dividend = 0.0
        except (ValueError, IndexError) as exc:
            raise ParseError(f"bad row {row!r}: {exc}", lineno) from None
        if not ticker:
            raise ParseError("empty ticker", lineno)
        if close <= 0:
            raise ValidationError(f"{ticker}: non-positive close {close} on {day}")
        if ticker not in metadata:
            raise ValidationError(f"unknown ticker {ticker!r} (not in metadata)")
        rows.setdefault(ticker, []).append((day, close, dividend))

    out = []
    for ticker in sorted(rows):
        obs = sorted(rows[ticker], key=lambda r: r[0])
        for (d1, _, _), (d2, _, _) in zip(obs, obs[1:]):
            if d1 == d2:
                raise ValidationError(f"{ticker}: duplicate date {d1}")
        out.append(
            PriceSeries(
                ticker=ticker,
                industry=metadata[ticker],
                dates=tuple(r[0] for r in obs),
                closes=tuple(r[1] for r in obs),
                dividends=tuple(r[2] for r in obs),
            )
        )
    return out


def load_metadata(source: TextIO | Iterable[str]) -> dict[str, str]:
    """Read the ``ticker,code,industry`` CSV into a ticker -> industry map."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty metadata", 1) from None
    cols = [h.strip().lower() for h in header]
    try:
        i_ticker = cols.index("ticker")
        i_industry = cols.index("industry")
    except ValueError:
        raise ParseError(f"metadata header must name ticker,industry: got {header!r}", 1) from None
    out: dict[str, str] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            ticker = row[i_ticker].strip()
            industry = row[i_industry].strip()
        except IndexError as exc:
            raise ParseError(f"bad metadata row {row!r}: {exc}", lineno) from None
        if not ticker or not industry:
            raise ParseError(f"blank ticker or industry in {row!r}", lineno)
        out[ticker] = industry
    return out


def _period_dates(series: PriceSeries, period: StudyPeriod) -> list[date]:
    return [d for d in series.dates if period.contains(d)]


def weekly_returns(series: list[PriceSeries], period: StudyPeriod) -> ReturnMatrix:
    """Non-overlapping 5-trading-day simple returns on the shared date grid.

    The grid is the intersection of all tickers' trading dates inside the
    period, after rejecting tickers that miss more than 5% of the pooled
    dates.  Window k runs from grid day 5k to 5(k+1); a final partial window
    is dropped.  Dividends with ex-date inside a window (exclusive of its
    first day, inclusive of its last) are added to the window's end price.
    """
    if not series:
        raise ValidationError("no price series given")
    per_ticker = {s.ticker: set(_period_dates(s, period)) for s in series}
    pooled: set[date] = set()
    for dates in per_ticker.values():
        pooled |= dates
    if not pooled:
        raise AlignmentError(f"no trading dates inside period {period.label}")
    bad = [
        t
        for t, dates in per_ticker.items()
        if len(pooled - dates) > MAX_MISSING_FRACTION * len(pooled)
    ]
    if bad:
        raise AlignmentError(
            f"period {period.label}: gaps on the shared grid for {', '.join(sorted(bad))}"
        )
    grid = sorted(set.intersection(*per_ticker.values()))
    if len(grid) < WINDOW_DAYS + 1:
        raise AlignmentError(
            f"period {period.label}: only {len(grid)} shared trading dates, need >= {WINDOW_DAYS + 1}"
        )

    n_windows = (len(grid) - 1) // WINDOW_DAYS
    windows = tuple(
        (grid[WINDOW_DAYS * k], grid[WINDOW_DAYS * (k + 1)]) for k in range(n_windows)
    )
    values = np.empty((n_windows, len(series)))
    for j, s in enumerate(series):
        idx = {d: i for i, d in enumerate(s.dates)}
        closes = np.asarray(s.closes)
        divs = np.asarray(s.dividends)
        for k, (lo, hi) in enumerate(windows):
            i_lo, i_hi = idx[lo], idx[hi]
            in_window = [
                i
                for i in range(i_lo + 1, i_hi + 1)
                if lo < s.dates[i] <= hi
            ]
            paid = divs[in_window].sum() if in_window else 0.0
            values[k, j] = (closes[i_hi] + paid) / closes[i_lo] - 1.0
    return ReturnMatrix(
        tickers=tuple(s.ticker for s in series), windows=windows, values=values
    )


def period_total_return(series: PriceSeries, period: StudyPeriod) -> float:
    """Total period return with dividends reinvested at the ex-date close.

    Holdings start at one unit bought at the first trading close on or after
    the period start; each dividend strictly after that date (and no later
    than the final trading date inside the period) buys more units at that
    day's close.
    """
    start_idx = next(
        (i for i, d in enumerate(series.dates) if d >= period.start_date), None
    )
    end_idx = next(
        (i for i in reversed(range(len(series.dates))) if series.dates[i] <= period.end_date),
        None,
    )
    if start_idx is None or end_idx is None or start_idx > end_idx:
        raise ValidationError(
            f"{series.ticker}: no price within period {period.label}"
        )
    units = 1.0
    for i in range(start_idx + 1, end_idx + 1):
        if series.dividends[i] > 0:
            units *= 1.0 + series.dividends[i] / series.closes[i]
    return units * series.closes[end_idx] / series.closes[start_idx] - 1.0


@dataclass(frozen=True)
class FactorSpec:
    """Two-level factor structure for synthetic prices.

    Daily log-returns mix an industry factor, a cluster factor and an
    idiosyncratic term; raising ``cluster_loading`` relative to the others
    widens the gap between intra- and inter-cluster correlations.
    """

    n_clusters: int = 4
    industry_loading: float = 0.6
    cluster_loading: float = 1.2
    idio_vol: float = 1.0
    daily_drift: float = 0.0002
    daily_scale: float = 0.012
    dividend_rate: float = 0.0  # fraction of close paid every ~quarter; 0 disables
    start: date = date(2004, 1, 5)
    start_price: float = 50.0


def _synthetic_ticker(i: int, industry: str) -> str:
    a, rem = divmod(i, 26 * 26)
    b, c = divmod(rem, 26)
    base = "S" + chr(65 + a) + chr(65 + b) + chr(65 + c)
    return f"{base}-{industry[0]}"


def _weekday_grid(start: date, n_days: int) -> list[date]:
    days = []
    cur = start
    while len(days) < n_days:
        if cur.weekday() < 5:
            days.append(cur)
        cur += timedelta(days=1)
    return days


def generate_synthetic(
    n_stocks: int, n_weeks: int, structure: FactorSpec, seed: int
) -> list[PriceSeries]:
    """Deterministic synthetic price histories following the factor model.

    Produces ``5*n_weeks + 1`` weekday observations per stock so the span
    holds exactly ``n_weeks`` full return windows.  Industries cycle through
    the five standard groups; cluster ids cycle modulo ``n_clusters``.
    """
    if n_stocks < 4:
        raise ValidationError(f"n_stocks must be >= 4, got {n_stocks}")
    if n_weeks < 1:
        raise ValidationError(f"n_weeks must be >= 1, got {n_weeks}")
    if structure.n_clusters < 1:
        raise ValidationError("n_clusters must be positive")

    n_days = WINDOW_DAYS * n_weeks + 1
    grid = _weekday_grid(structure.start, n_days)
    rng = np.random.default_rng(seed)
    industry_f = rng.standard_normal((n_days - 1, len(INDUSTRIES)))
    cluster_f = rng.standard_normal((n_days - 1, structure.n_clusters))
    idio = rng.standard_normal((n_days - 1, n_stocks))

    out = []
    for i in range(n_stocks):
        g = i % len(INDUSTRIES)
        c = i % structure.n_clusters
        logret = structure.daily_drift + structure.daily_scale * (
            structure.industry_loading * industry_f[:, g]
            + structure.cluster_loading * cluster_f[:, c]
            + structure.idio_vol * idio[:, i]
        )
        closes = structure.start_price * np.exp(np.concatenate([[0.0], np.cumsum(logret)]))
        dividends = np.zeros(n_days)
        if structure.dividend_rate > 0:
            for t in range(40, n_days, 65):
                dividends[t] = structure.dividend_rate * closes[t]
        industry = INDUSTRIES[g]
        out.append(
            PriceSeries(
                ticker=_synthetic_ticker(i, industry),
                industry=industry,
                dates=tuple(grid),
                closes=tuple(float(x) for x in closes),
                dividends=tuple(float(x) for x in dividends),
            )
        )
    return out


def prices_to_csv(series: Iterable[PriceSeries]) -> str:
    """Serialize series back to the input CSV schema."""
    lines = ["date,ticker,close,dividend"]
    for s in series:
        for day, close, dividend in zip(s.dates, s.closes, s.dividends):
            lines.append(f"{day.isoformat()},{s.ticker},{close!r},{dividend!r}")
    return "\n".join(lines) + "\n"


def metadata_to_csv(series: Iterable[PriceSeries]) -> str:
    """Serialize ticker metadata (ticker, display code, industry)."""
    lines = ["ticker,code,industry"]
    for s in series:
        lines.append(f"{s.ticker},{s.ticker},{s.industry}")
    return "\n".join(lines) + "\n"
