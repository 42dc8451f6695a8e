"""Four risk-based selection strategies and the Monte-Carlo harness.

Every simulation derives one PCG64 stream per iteration from a root
SeedSequence, so results are reproducible and independent of scheduling.
Cluster pairs are drawn without replacement until every cluster has been
used once, then with replacement; constrained redraws are capped at
MAX_RETRIES before the selection aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from corrnet.clustering import ClusterAssignment, ClusterPairing
from corrnet.marketdata import ValidationError

MAX_RETRIES = 100


class Strategy(Enum):
    RANDOM = "random"
    INDUSTRY = "industry"
    CLUSTER = "cluster"
    INDUSTRY_CLUSTER = "industry_cluster"


class SimulationError(RuntimeError):
    """A selection became infeasible mid-simulation."""


@dataclass(frozen=True)
class SelectionUniverse:
    tickers: tuple[str, ...]
    industry: Mapping[str, str]
    period_returns: Mapping[str, float]
    clusters: ClusterAssignment | None = None
    pairing: ClusterPairing | None = None

    def __post_init__(self):
        for t in self.tickers:
            if t not in self.industry:
                raise ValidationError(f"ticker {t} has no industry")
            if t not in self.period_returns:
                raise ValidationError(f"ticker {t} has no period return")
        if self.clusters is not None:
            if self.clusters.ordering.n != len(self.tickers):
                raise ValidationError("cluster assignment does not cover the universe")
            if self.pairing is None:
                raise ValidationError("clusters given without a pairing")

    def cluster_members(self) -> dict[int, tuple[str, ...]]:
        """Members per cluster id, in cycle-position order."""
        if self.clusters is None:
            raise ValidationError("universe has no clusters")
        return {
            cid: tuple(self.tickers[t] for t in self.clusters.members(cid))
            for cid in sorted(set(self.clusters.labels))
        }

    def industry_groups(self) -> dict[str, tuple[str, ...]]:
        groups: dict[str, list[str]] = {}
        for t in self.tickers:
            groups.setdefault(self.industry[t], []).append(t)
        return {g: tuple(members) for g, members in sorted(groups.items())}


@dataclass(frozen=True)
class Portfolio:
    members: tuple[str, ...]
    ret: float
    pairs: tuple[tuple[str, str], ...] | None = None  # audit trail of pair draws

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ValidationError("duplicate members in portfolio")


@dataclass(frozen=True)
class SimulationResult:
    strategy: Strategy
    size: int
    returns: tuple[float, ...]
    mean: float
    std_dev: float
    metadata: Mapping[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "size": self.size,
            "mean": self.mean,
            "std_dev": self.std_dev,
            "iterations": len(self.returns),
            "metadata": dict(self.metadata),
        }


def _portfolio(universe: SelectionUniverse, members, pairs=None) -> Portfolio:
    chosen = tuple(members)
    ret = float(np.mean([universe.period_returns[t] for t in chosen]))
    return Portfolio(members=chosen, ret=ret, pairs=pairs)


def allocate_counts(total: int, groups: int, rng: np.random.Generator) -> np.ndarray:
    """Quotient/remainder allocation of ``total`` picks over ``groups`` groups.

    total <= groups: that many groups, chosen uniformly, get one pick each.
    Otherwise every group gets floor(total/groups) and the remainder lands on
    uniformly chosen distinct groups.
    """
    if groups < 1:
        raise ValidationError("need at least one group")
    if total < 0:
        raise ValidationError("total must be non-negative")
    counts = np.zeros(groups, dtype=int)
    if total <= groups:
        if total:
            counts[rng.choice(groups, size=total, replace=False)] = 1
        return counts
    s, r = divmod(total, groups)
    counts[:] = s
    if r:
        counts[rng.choice(groups, size=r, replace=False)] += 1
    return counts


def _sample_groups(
    groups: Sequence[tuple[str, tuple[str, ...]]],
    counts: np.ndarray,
    rng: np.random.Generator,
) -> list[str]:
    """Allocate-and-sample shared by the industry and fallback cluster paths.

    Over-allocated groups push their excess onto uniformly chosen groups that
    still have capacity; if none remains the selection is infeasible.
    """
    sizes = np.array([len(members) for _, members in groups])
    counts = counts.copy()
    while np.any(counts > sizes):
        over = int(np.argmax(counts - sizes))
        counts[over] -= 1
        room = np.nonzero(counts < sizes)[0]
        if room.size == 0:
            raise ValidationError("allocation exceeds universe size")
        counts[int(rng.choice(room))] += 1
    chosen: list[str] = []
    for (name, members), c in zip(groups, counts):
        if c:
            picks = rng.choice(len(members), size=int(c), replace=False)
            chosen.extend(members[i] for i in sorted(picks))
    return chosen


def select_random(
    universe: SelectionUniverse, k: int, rng: np.random.Generator
) -> Portfolio:
    """Uniform sample of k distinct tickers."""
    n = len(universe.tickers)
    if k > n:
        raise ValidationError(f"portfolio size {k} exceeds universe {n}")
    picks = rng.choice(n, size=k, replace=False)
    return _portfolio(universe, (universe.tickers[i] for i in picks))


def select_by_industry(
    universe: SelectionUniverse, k: int, rng: np.random.Generator
) -> Portfolio:
    """Spread picks across industry groups by the quotient/remainder rule."""
    groups = list(universe.industry_groups().items())
    counts = allocate_counts(k, len(groups), rng)
    return _portfolio(universe, _sample_groups(groups, counts, rng))


class _ClusterPool:
    """Uniform cluster draws, without replacement until exhausted."""

    def __init__(self, cluster_ids: Sequence[int], rng: np.random.Generator):
        self._all = list(cluster_ids)
        self._pool = list(cluster_ids)
        self._rng = rng

    def draw(self) -> int:
        if self._pool:
            return self._pool.pop(int(self._rng.integers(len(self._pool))))
        return self._all[int(self._rng.integers(len(self._all)))]


def _draw_stock(
    members: Sequence[str], taken: set[str], rng: np.random.Generator
) -> str | None:
    avail = [t for t in members if t not in taken]
    if not avail:
        return None
    return avail[int(rng.integers(len(avail)))]


def _select_paired(
    universe: SelectionUniverse,
    k: int,
    rng: np.random.Generator,
    cross_industry: bool,
) -> Portfolio:
    if universe.clusters is None or universe.pairing is None:
        raise ValidationError("strategy requires clusters and a pairing")
    if k < 2:
        raise ValidationError("paired strategies need k >= 2")
    members = universe.cluster_members()
    cluster_ids = sorted(members)
    if k > len(cluster_ids):
        # More picks than clusters: fall back to the allocation rule.
        groups = [(str(cid), members[cid]) for cid in cluster_ids]
        counts = allocate_counts(k, len(groups), rng)
        return _portfolio(universe, _sample_groups(groups, counts, rng))

    pool = _ClusterPool(cluster_ids, rng)
    taken: set[str] = set()
    chosen: list[str] = []
    pairs: list[tuple[str, str]] = []
    for _ in range(k // 2):
        for _attempt in range(MAX_RETRIES):
            c = pool.draw()
            p = universe.pairing.pair_of[c]
            first = _draw_stock(members[c], taken, rng)
            if first is None:
                continue
            if cross_industry:
                second_pool = [
                    t
                    for t in members[p]
                    if t not in taken and universe.industry[t] != universe.industry[first]
                ]
                second = (
                    second_pool[int(rng.integers(len(second_pool)))]
                    if second_pool
                    else None
                )
            else:
                second = _draw_stock(members[p], taken | {first}, rng)
            if second is None:
                continue
            taken.update((first, second))
            chosen.extend((first, second))
            pairs.append((first, second))
            break
        else:
            raise ValidationError(
                f"no feasible cluster pair after {MAX_RETRIES} redraws"
            )
    if k % 2:
        for _attempt in range(MAX_RETRIES):
            c = pool.draw()
            pick = _draw_stock(members[c], taken, rng)
            if pick is not None:
                taken.add(pick)
                chosen.append(pick)
                break
        else:
            raise ValidationError(f"no cluster with stocks left after {MAX_RETRIES} redraws")
    return _portfolio(universe, chosen, tuple(pairs))


def select_by_cluster(
    universe: SelectionUniverse, k: int, rng: np.random.Generator
) -> Portfolio:
    """One stock from a drawn cluster plus one from its paired cluster, repeated."""
    return _select_paired(universe, k, rng, cross_industry=False)


def select_by_industry_cluster(
    universe: SelectionUniverse, k: int, rng: np.random.Generator
) -> Portfolio:
    """Cluster pairing with the extra rule that each pair spans two industries."""
    return _select_paired(universe, k, rng, cross_industry=True)


_SELECTORS = {
    Strategy.RANDOM: select_random,
    Strategy.INDUSTRY: select_by_industry,
    Strategy.CLUSTER: select_by_cluster,
    Strategy.INDUSTRY_CLUSTER: select_by_industry_cluster,
}


def select(
    universe: SelectionUniverse, strategy: Strategy, k: int, rng: np.random.Generator
) -> Portfolio:
    return _SELECTORS[strategy](universe, k, rng)


def simulate(
    universe: SelectionUniverse,
    strategy: Strategy,
    k: int,
    iterations: int = 1000,
    seed: int = 0,
) -> SimulationResult:
    """Sample ``iterations`` portfolios and record their equal-weighted returns."""
    if iterations < 2:
        raise ValidationError("need at least 2 iterations")
    selector = _SELECTORS[strategy]
    streams = np.random.SeedSequence(seed).spawn(iterations)
    returns = np.empty(iterations)
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        try:
            returns[i] = selector(universe, k, rng).ret
        except ValidationError as exc:
            raise SimulationError(f"iteration {i}: {exc}") from exc
    return SimulationResult(
        strategy=strategy,
        size=k,
        returns=tuple(float(r) for r in returns),
        mean=float(returns.mean()),
        std_dev=float(returns.std(ddof=1)),
        metadata={
            "rng": "PCG64",
            "seed": seed,
            "streams": "SeedSequence.spawn, one child per iteration",
        },
    )
