"""Correlation clusters as contiguous arcs of the circular ordering.

Cuts sit between consecutive ordering positions: boundary b separates
positions b and b+1 (mod n).  Cluster 1 starts right after the cut nearest
position 0 and ids increase with position around the cycle.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from corrnet.marketdata import ValidationError
from corrnet.neighbornet import CircularOrdering
from corrnet.splitweights import WeightedSplitSystem, metric_positions


@dataclass(frozen=True)
class ClusterAssignment:
    ordering: CircularOrdering
    boundaries: tuple[int, ...]  # sorted cut positions
    labels: tuple[int, ...]  # labels[taxon] = cluster id, 1..k

    def __post_init__(self):
        n = self.ordering.n
        k = len(self.boundaries)
        if k < 1:
            raise ValidationError("need at least one boundary")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise ValidationError("boundaries must be sorted and distinct")
        if self.boundaries[0] < 0 or self.boundaries[-1] >= n:
            raise ValidationError("boundary out of range")
        if len(self.labels) != n or set(self.labels) != set(range(1, k + 1)):
            raise ValidationError("labels must cover cluster ids 1..k")

    @property
    def k(self) -> int:
        return len(self.boundaries)

    def arcs(self) -> list[tuple[int, int, int]]:
        """(start_position, end_position, cluster_id) per cluster, wrap allowed."""
        n = self.ordering.n
        out = []
        start_cut = _cut_nearest_zero(self.boundaries, n)
        i0 = self.boundaries.index(start_cut)
        for step in range(self.k):
            b_from = self.boundaries[(i0 + step) % self.k]
            b_to = self.boundaries[(i0 + step + 1) % self.k]
            out.append(((b_from + 1) % n, b_to, step + 1))
        return out

    def members(self, cluster_id: int) -> tuple[int, ...]:
        """Taxa of one cluster in position order around the cycle."""
        n = self.ordering.n
        for start, end, cid in self.arcs():
            if cid == cluster_id:
                size = (end - start) % n + 1
                return tuple(self.ordering.taxa[(start + t) % n] for t in range(size))
        raise ValidationError(f"no cluster {cluster_id}")

    def sizes(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for label in self.labels:
            out[label] = out.get(label, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "ordering": list(self.ordering.taxa),
            "boundaries": list(self.boundaries),
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ClusterAssignment":
        return cls(
            ordering=CircularOrdering(tuple(payload["ordering"])),
            boundaries=tuple(int(b) for b in payload["boundaries"]),
            labels=tuple(int(x) for x in payload["labels"]),
        )


@dataclass(frozen=True)
class ClusterPairing:
    pair_of: Mapping[int, int]


@dataclass(frozen=True)
class ContiguityReport:
    """Arcs of a later ordering covering a taxon subset."""

    arcs: tuple[tuple[int, int], ...]  # (start_position, end_position), wrap allowed
    score: float

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


def _cut_nearest_zero(boundaries: Sequence[int], n: int) -> int:
    # Cut b sits at position b + 0.5 on the cycle.
    def dist(b: int) -> float:
        x = b + 0.5
        return min(x, n - x)

    return min(boundaries, key=lambda b: (dist(b), b))


def _labels_from_boundaries(
    ordering: CircularOrdering, boundaries: tuple[int, ...]
) -> tuple[int, ...]:
    n = ordering.n
    labels = [0] * n
    k = len(boundaries)
    start_cut = _cut_nearest_zero(boundaries, n)
    i0 = boundaries.index(start_cut)
    for step in range(k):
        b_from = boundaries[(i0 + step) % k]
        b_to = boundaries[(i0 + step + 1) % k]
        size = (b_to - b_from) % n or n
        for t in range(size):
            pos = (b_from + 1 + t) % n
            labels[ordering.taxa[pos]] = step + 1
    return tuple(labels)


def delineate_manual(
    ordering: CircularOrdering, boundaries: Iterable[int]
) -> ClusterAssignment:
    """Assignment from analyst-chosen cut positions."""
    cuts = list(boundaries)
    if not cuts:
        raise ValidationError("need at least one boundary")
    if len(set(cuts)) != len(cuts):
        raise ValidationError("duplicate boundary would create an empty arc")
    if cuts != sorted(cuts):
        raise ValidationError("boundaries must be sorted")
    n = ordering.n
    if cuts[0] < 0 or cuts[-1] >= n:
        raise ValidationError(f"boundaries must lie in 0..{n - 1}")
    tup = tuple(cuts)
    return ClusterAssignment(
        ordering=ordering, boundaries=tup, labels=_labels_from_boundaries(ordering, tup)
    )


def delineate_auto(
    system: WeightedSplitSystem, k: int, min_size: int
) -> ClusterAssignment:
    """Cut the cycle at the k largest-gap positions subject to a minimum arc size.

    The gap at cut b is the fitted split-metric distance between the taxa at
    positions b and b+1; the k cuts maximizing the total gap are found
    exactly by fixing the first cut and solving the remaining chain by
    dynamic programming.  Ties resolve to the lexicographically smallest
    boundary set.
    """
    n = system.n
    if k < 2:
        raise ValidationError("need k >= 2 clusters")
    if min_size < 1:
        raise ValidationError("min_size must be >= 1")
    if k * min_size > n:
        raise ValidationError(f"infeasible: {k} clusters of >= {min_size} taxa exceed n={n}")
    dpos = metric_positions(system)
    gaps = np.array([dpos[b, (b + 1) % n] for b in range(n)])

    best_value = -np.inf
    best_cuts: list[int] | None = None
    for b0 in range(n):
        cuts = _best_chain_cuts(gaps, n, k, min_size, b0)
        if cuts is None:
            continue
        value = float(gaps[cuts].sum())
        key = sorted(int(c) for c in cuts)
        if value > best_value or (value == best_value and key < best_cuts):
            best_value = value
            best_cuts = key
    if best_cuts is None:
        raise ValidationError("no feasible boundary placement")
    tup = tuple(best_cuts)
    return ClusterAssignment(
        ordering=system.ordering,
        boundaries=tup,
        labels=_labels_from_boundaries(system.ordering, tup),
    )


def _best_chain_cuts(
    gaps: np.ndarray, n: int, k: int, min_size: int, b0: int
) -> np.ndarray | None:
    """Best cuts with the first fixed at b0; positions unrolled relative to b0."""
    h = np.array([gaps[(b0 + t) % n] for t in range(n)])
    # t_1 = 0; pick k-1 more offsets with consecutive spacing >= min_size and
    # wrap-around spacing n - t_k >= min_size.
    limit = n - min_size
    if (k - 1) * min_size > limit:
        return None
    # f[j][t]: best sum using j cuts, last at offset t.
    neg = -np.inf
    f = np.full((k, n), neg)
    choice = np.zeros((k, n), dtype=int)
    f[0, 0] = h[0]
    for j in range(1, k):
        # prefix max of f[j-1] shifted by min_size, preferring smaller t on ties
        best_t = -1
        best_v = neg
        for t in range(j * min_size, limit + 1):
            prev_t = t - min_size
            if prev_t >= 0 and f[j - 1, prev_t] > best_v:
                best_v = f[j - 1, prev_t]
                best_t = prev_t
            if best_v > neg:
                f[j, t] = best_v + h[t]
                choice[j, t] = best_t
    ts = [t for t in range(k - 1, limit + 1) if f[k - 1, t] > neg]
    if not ts:
        return None
    end = max(ts, key=lambda t: (f[k - 1, t], -t))
    cuts = [end]
    for j in range(k - 1, 0, -1):
        end = choice[j, end]
        cuts.append(end)
    cuts.reverse()
    return np.array([(b0 + t) % n for t in cuts])


def pair_clusters(assignment: ClusterAssignment) -> ClusterPairing:
    """Map every cluster to the one centred nearest its antipode.

    Centres are the mean arc position of the member taxa; for equally sized
    arcs with even k this is the exact antipodal involution.  Ties go to the
    lower cluster id.
    """
    k = assignment.k
    if k < 2:
        raise ValidationError("pairing needs at least 2 clusters")
    n = assignment.ordering.n
    centres: dict[int, float] = {}
    for start, end, cid in assignment.arcs():
        size = (end - start) % n + 1
        centres[cid] = (start + (size - 1) / 2.0) % n

    def circ_dist(a: float, b: float) -> float:
        raw = abs(a - b) % n
        return min(raw, n - raw)

    pair_of: dict[int, int] = {}
    for cid, centre in centres.items():
        antipode = (centre + n / 2.0) % n
        others = [c for c in sorted(centres) if c != cid]
        pair_of[cid] = min(others, key=lambda c: (circ_dist(centres[c], antipode), c))
    return ClusterPairing(pair_of=pair_of)


def combination_count(cluster_size: int, choose: int) -> int:
    """Exact binomial coefficient; the number of distinct within-cluster picks."""
    if choose < 0 or cluster_size < 0:
        raise ValidationError("counts must be non-negative")
    if choose > cluster_size:
        raise ValidationError(f"cannot choose {choose} from {cluster_size}")
    return math.comb(cluster_size, choose)


def track_membership(
    reference: ClusterAssignment,
    later_ordering: CircularOrdering,
    subset: Iterable[int],
) -> ContiguityReport:
    """How many contiguous arcs of a later ordering cover the given taxa.

    Score 1 means the subset stayed together; 1/m means it dispersed into m
    arcs.
    """
    taxa = set(subset)
    if not taxa:
        raise ValidationError("subset must be non-empty")
    n = later_ordering.n
    universe = set(range(n))
    if not taxa <= universe or not taxa <= set(reference.ordering.taxa):
        raise ValidationError("subset taxa missing from one of the orderings")
    positions = sorted(later_ordering.taxa.index(t) for t in taxa)
    if len(positions) == n:
        return ContiguityReport(arcs=((0, n - 1),), score=1.0)
    in_subset = [False] * n
    for p in positions:
        in_subset[p] = True
    arcs = []
    # scan runs circularly, starting just after a gap
    start_scan = next(p for p in range(n) if not in_subset[p])
    run_start = None
    for step in range(1, n + 1):
        pos = (start_scan + step) % n
        if in_subset[pos] and run_start is None:
            run_start = pos
        elif not in_subset[pos] and run_start is not None:
            arcs.append((run_start, (pos - 1) % n))
            run_start = None
    arcs.sort()
    return ContiguityReport(arcs=tuple(arcs), score=1.0 / len(arcs))


def assignment_to_csv(assignment: ClusterAssignment, tickers: Sequence[str]) -> str:
    """Two-column ``ticker,cluster`` CSV in cycle-position order."""
    n = assignment.ordering.n
    if len(tickers) != n:
        raise ValidationError("ticker count mismatch")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["ticker", "cluster"])
    for pos in range(n):
        taxon = assignment.ordering.taxa[pos]
        writer.writerow([tickers[taxon], assignment.labels[taxon]])
    return out.getvalue()


def memberships_from_csv(source: TextIO | Iterable[str]) -> dict[str, int]:
    """Read a ``ticker,cluster`` CSV into a membership map."""
    reader = csv.reader(source)
    header = next(reader)
    cols = [h.strip().lower() for h in header]
    i_t, i_c = cols.index("ticker"), cols.index("cluster")
    out: dict[str, int] = {}
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        out[row[i_t].strip()] = int(row[i_c])
    return out


def assignment_to_json(assignment: ClusterAssignment) -> str:
    return json.dumps(assignment.to_dict())


def assignment_from_json(payload: str) -> ClusterAssignment:
    return ClusterAssignment.from_dict(json.loads(payload))
