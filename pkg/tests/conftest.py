"""Shared builders: distance matrices, random tree metrics, circular systems."""

from __future__ import annotations

import numpy as np
import pytest

from corrnet.corrdist import DistanceMatrix
from corrnet.pipeline import Pipeline, PipelineConfig, SyntheticSpec


def dm(values: np.ndarray, names=None) -> DistanceMatrix:
    n = values.shape[0]
    tickers = tuple(names) if names else tuple(f"T{i:03d}" for i in range(n))
    return DistanceMatrix(tickers=tickers, d=np.asarray(values, dtype=float))


def random_tree_metric(n: int, rng: np.random.Generator):
    """Distances additive on a random binary tree plus its nontrivial splits."""
    next_id = n
    active = list(range(n))
    edges: dict[tuple[int, int], float] = {}
    while len(active) > 1:
        i, j = sorted(rng.choice(len(active), size=2, replace=False))
        a, b = active[i], active[j]
        parent = next_id
        next_id += 1
        edges[(parent, a)] = float(rng.uniform(0.1, 2.0))
        edges[(parent, b)] = float(rng.uniform(0.1, 2.0))
        active = [x for x in active if x not in (a, b)] + [parent]
    adj: dict[int, list[tuple[int, float]]] = {}
    for (p, c), w in edges.items():
        adj.setdefault(p, []).append((c, w))
        adj.setdefault(c, []).append((p, w))

    def leaves_under(child: int, parent: int) -> frozenset[int]:
        out = []
        stack = [(child, parent)]
        while stack:
            u, par = stack.pop()
            if u < n:
                out.append(u)
            for v, _w in adj.get(u, []):
                if v != par:
                    stack.append((v, u))
        return frozenset(out)

    splits = {
        leaves_under(c, p)
        for (p, c) in edges
        if 1 <= len(leaves_under(c, p)) <= n - 1
    }
    d = np.zeros((n, n))
    for src in range(n):
        dist = {src: 0.0}
        stack = [src]
        while stack:
            u = stack.pop()
            for v, w in adj.get(u, []):
                if v not in dist:
                    dist[v] = dist[u] + w
                    stack.append(v)
        for t in range(n):
            d[src, t] = dist[t]
    return d, splits


def is_contiguous(subset, taxa) -> bool:
    """True when the subset occupies one circular arc of the ordering."""
    n = len(taxa)
    positions = {list(taxa).index(t) for t in subset}
    if len(positions) in (0, n):
        return True
    gaps = sum(1 for p in positions if (p + 1) % n not in positions)
    return gaps == 1


def random_circular_instance(n: int, rng: np.random.Generator, sparse: bool = False):
    """A weighted circular split system on a random ordering, plus its metric."""
    from corrnet.splitweights import _metric_from_wmat, _valid_mask

    mask = _valid_mask(n)
    wmat = np.where(mask, rng.uniform(0.0, 1.0, (n, n)), 0.0)
    if sparse:
        keep = rng.random((n, n)) < 0.4
        wmat = np.where(keep, wmat, 0.0)
    dpos = _metric_from_wmat(wmat)
    perm = rng.permutation(n)
    dtax = np.zeros((n, n))
    dtax[np.ix_(perm, perm)] = dpos
    return wmat, perm, dtax


@pytest.fixture(scope="session")
def config126(tmp_path_factory) -> PipelineConfig:
    return PipelineConfig(
        out_dir=tmp_path_factory.mktemp("n126"),
        synthetic=SyntheticSpec(n_stocks=126, n_weeks=60, n_clusters=8, seed=11),
        boundaries=None,
        n_periods=2,
        k=8,
        min_size=4,
        sizes=(2, 4),
        iterations=200,
        seed=9,
    )


@pytest.fixture(scope="session")
def pipeline126(config126) -> Pipeline:
    """One shared n=126 build; the acceptance suite times its own fresh runs."""
    pipeline = Pipeline(config126)
    pipeline.network("1")
    return pipeline


@pytest.fixture(scope="session")
def two_regime_universe(tmp_path_factory):
    """Two-block synthetic market: clusters from period 1, returns from period 2."""
    config = PipelineConfig(
        out_dir=tmp_path_factory.mktemp("two_regime"),
        synthetic=SyntheticSpec(
            n_stocks=30, n_weeks=120, n_clusters=2, seed=21, cluster_loading=1.6
        ),
        n_periods=2,
        k=2,
        min_size=4,
    )
    return Pipeline(config).universe("1")
