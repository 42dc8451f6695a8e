"""Circular split enumeration, non-negative least-squares weights, NEXUS export.

A circular split on an ordering of n taxa is a contiguous position interval
[lo, hi] against its complement; the full system holds n(n-1)/2 of them.
Fitting solves  min ||A w - d||  subject to w >= 0 where A is the 0/1
pair-by-split separation matrix.  A is never materialized: because each
split is an interval, both A w and A^T r reduce to two-dimensional prefix
sums over the position grid, so every product costs O(n^2) regardless of
the split count.

The solver is a Lawson-Hanson active-set iteration; the restricted normal
equations are solved exactly through a Gram matrix grown incrementally with
closed-form interval-overlap entries, and dual violators enter in blocks to
keep the outer loop short.  Inputs that are exactly circular for the given
ordering short-circuit through the closed-form interval stencil, which is
the unique exact decomposition in that case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from corrnet.corrdist import DistanceMatrix
from corrnet.marketdata import ValidationError
from corrnet.neighbornet import CircularOrdering

DUAL_TOL = 1e-10  # dual feasibility threshold (scaled by the gradient magnitude)


class ConvergenceError(RuntimeError):
    """Active-set iteration hit its cap; carries the best iterate found."""

    def __init__(self, message: str, weights: np.ndarray, residual: float):
        super().__init__(message)
        self.weights = weights
        self.residual = residual


@dataclass(frozen=True, order=True)
class CircularSplit:
    """Ordering positions lo..hi (inclusive) versus the complement.

    The stored side is the one not containing position 0, so 1 <= lo <= hi
    <= n-1.
    """

    lo: int
    hi: int

    def size(self) -> int:
        return self.hi - self.lo + 1

    def separates(self, pos_a: int, pos_b: int) -> bool:
        return (self.lo <= pos_a <= self.hi) != (self.lo <= pos_b <= self.hi)


@dataclass(frozen=True)
class WeightedSplitSystem:
    ordering: CircularOrdering
    splits: tuple[CircularSplit, ...]
    weights: tuple[float, ...]
    fit_residual: float

    def __post_init__(self):
        n = self.ordering.n
        if len(self.splits) != len(self.weights):
            raise ValidationError("splits/weights length mismatch")
        seen = set()
        for s, w in zip(self.splits, self.weights):
            if not (1 <= s.lo <= s.hi <= n - 1):
                raise ValidationError(f"split {s} out of range for n={n}")
            if w < 0:
                raise ValidationError(f"negative weight {w} for split {s}")
            if s in seen:
                raise ValidationError(f"duplicate split {s}")
            seen.add(s)
        if self.fit_residual < 0:
            raise ValidationError("negative residual")

    @property
    def n(self) -> int:
        return self.ordering.n

    def members_of(self, split: CircularSplit) -> tuple[int, ...]:
        """Taxa on the split's stored side."""
        return tuple(self.ordering.taxa[p] for p in range(split.lo, split.hi + 1))

    def to_dict(self) -> dict:
        return {
            "ordering": list(self.ordering.taxa),
            "splits": [[s.lo, s.hi] for s in self.splits],
            "weights": list(self.weights),
            "fit_residual": self.fit_residual,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "WeightedSplitSystem":
        return cls(
            ordering=CircularOrdering(tuple(payload["ordering"])),
            splits=tuple(CircularSplit(int(lo), int(hi)) for lo, hi in payload["splits"]),
            weights=tuple(float(w) for w in payload["weights"]),
            fit_residual=float(payload["fit_residual"]),
        )


def enumerate_splits(n: int) -> list[CircularSplit]:
    """All n(n-1)/2 circular splits of an n-taxon ordering, lexicographic."""
    if n < 2:
        raise ValidationError("need at least 2 taxa")
    return [CircularSplit(lo, hi) for lo in range(1, n) for hi in range(lo, n)]


# ---------------------------------------------------------------------------
# Implicit operator: weights live on an (n, n) array indexed [lo, hi].


def _pad_prefix(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[1:, 1:] = mat.cumsum(axis=0).cumsum(axis=1)
    return out


def _metric_from_wmat(wmat: np.ndarray) -> np.ndarray:
    """Position-space distances d(i,j) = sum of weights of separating splits."""
    n = wmat.shape[0]
    pp = _pad_prefix(wmat)
    a = pp[1 : n + 1, 0:n]  # pp[i+1, j]
    vb = pp[np.arange(1, n + 1), np.arange(0, n)]  # pp[i+1, i]
    vc = pp[1 : n + 1, n]  # pp[i+1, n]
    f = 2.0 * a - vb[:, None] + vc[None, :] - vb[None, :] - vc[:, None]
    d = np.triu(f, k=1)
    return d + d.T


def _adjoint_to_wmat(r: np.ndarray) -> np.ndarray:
    """For symmetric r (zero diagonal): g[lo,hi] = sum of r over separated pairs."""
    n = r.shape[0]
    rowsum = r.sum(axis=1)
    crs = np.concatenate([[0.0], np.cumsum(rowsum)])
    pt = _pad_prefix(r)
    lo = np.arange(n)[:, None]
    hi = np.arange(n)[None, :]
    rs = crs[hi + 1] - crs[np.broadcast_to(lo, (n, n))]
    block = (
        pt[hi + 1, hi + 1]
        - pt[np.broadcast_to(lo, (n, n)), hi + 1]
        - pt[hi + 1, np.broadcast_to(lo, (n, n))]
        + pt[lo, lo]
    )
    g = rs - block
    mask = _valid_mask(n)
    return np.where(mask, g, 0.0)


def _valid_mask(n: int) -> np.ndarray:
    lo = np.arange(n)[:, None]
    hi = np.arange(n)[None, :]
    return (lo >= 1) & (hi >= lo) & (hi <= n - 1)


def _stencil_wmat(t: np.ndarray) -> np.ndarray:
    """Closed-form interval decomposition, exact when t is circular.

    w[lo, hi] = (t[lo-1, hi] + t[lo, hi+1] - t[lo-1, hi+1] - t[lo, hi]) / 2
    with the indices taken modulo n.
    """
    n = t.shape[0]
    up = np.roll(t, 1, axis=0)  # [lo, hi] -> t[lo-1, hi]
    right = np.roll(t, -1, axis=1)  # [lo, hi] -> t[lo, hi+1]
    diag = np.roll(up, -1, axis=1)  # [lo, hi] -> t[lo-1, hi+1]
    w = 0.5 * (up + right - diag - t)
    return np.where(_valid_mask(n), w, 0.0)


def _rms_over_pairs(residual: np.ndarray) -> float:
    n = residual.shape[0]
    iu = np.triu_indices(n, k=1)
    return float(np.sqrt(np.mean(residual[iu] ** 2)))


def _pairs_separated_by_both(n, lo1, hi1, lo2, hi2):
    """Gram entries of the pair-by-split incidence matrix, in closed form.

    A pair lies on opposite sides of both interval splits iff one member is
    in the intersection and the other outside the union, or one is in each
    one-sided difference, so the count follows from the interval overlap.
    """
    inter = np.maximum(0, np.minimum(hi1, hi2) - np.maximum(lo1, lo2) + 1)
    s1 = hi1 - lo1 + 1
    s2 = hi2 - lo2 + 1
    return inter * (n - s1 - s2 + inter) + (s1 - inter) * (s2 - inter)


class _GramSystem:
    """Normal equations restricted to the passive splits, grown incrementally."""

    def __init__(self, n: int, b: np.ndarray):
        self.n = n
        self.b = b
        self.lo = np.zeros(0, dtype=int)
        self.hi = np.zeros(0, dtype=int)
        self.gram = np.zeros((0, 0))
        self.rhs = np.zeros(0)

    def __len__(self) -> int:
        return len(self.lo)

    def add(self, lo_new: np.ndarray, hi_new: np.ndarray) -> None:
        k, m = len(self.lo), len(lo_new)
        grown = np.empty((k + m, k + m))
        grown[:k, :k] = self.gram
        cross = _pairs_separated_by_both(
            self.n, self.lo[:, None], self.hi[:, None], lo_new[None, :], hi_new[None, :]
        )
        block = _pairs_separated_by_both(
            self.n, lo_new[:, None], hi_new[:, None], lo_new[None, :], hi_new[None, :]
        )
        grown[:k, k:] = cross
        grown[k:, :k] = cross.T
        grown[k:, k:] = block
        self.gram = grown
        self.lo = np.concatenate([self.lo, lo_new])
        self.hi = np.concatenate([self.hi, hi_new])
        self.rhs = self.b[self.lo, self.hi]

    def keep(self, mask: np.ndarray) -> None:
        idx = np.flatnonzero(mask)
        self.lo = self.lo[idx]
        self.hi = self.hi[idx]
        self.gram = self.gram[np.ix_(idx, idx)]
        self.rhs = self.rhs[idx]

    def least_squares(self) -> np.ndarray:
        try:
            c = np.linalg.cholesky(self.gram)
            y = np.linalg.solve(c, self.rhs)
            return np.linalg.solve(c.T, y)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(self.gram, self.rhs, rcond=None)[0]

    def scatter(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.lo, self.hi] = values
        return out


def _nnls_interval(
    t: np.ndarray, max_outer: int, dual_tol: float
) -> tuple[np.ndarray, int]:
    """Lawson-Hanson style active-set NNLS over the circular split system.

    Columns enter the passive set in blocks of the strongest dual violators
    (a documented speed-up over one-at-a-time addition; the KKT logic is
    unchanged) and the restricted least-squares subproblems are solved
    exactly through the incrementally maintained Gram matrix.  An infeasible
    subproblem solution steps back along the usual line search; coordinates
    pinned at zero that still point outward leave the passive set.
    """
    n = t.shape[0]
    valid = _valid_mask(n)
    b = _adjoint_to_wmat(t)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    w = np.zeros((n, n))
    passive = np.zeros((n, n), dtype=bool)
    system = _GramSystem(n, b)
    best_w = w.copy()
    best_rms = _rms_over_pairs(t)
    block_cap = 256
    single_mode = False
    outer = 0
    while True:
        g = b - _adjoint_to_wmat(_metric_from_wmat(w))
        candidates = np.where(valid & ~passive, g, -np.inf)
        g_max = float(candidates.max())
        if g_max <= dual_tol * scale:
            return w, outer
        if outer >= max_outer:
            raise ConvergenceError(
                f"NNLS did not converge within {max_outer} iterations",
                best_w,
                best_rms,
            )
        outer += 1
        if single_mode:
            flat = np.array([int(np.argmax(candidates))])
        else:
            threshold = max(dual_tol * scale, 0.5 * g_max)
            violators = np.flatnonzero(candidates.ravel() >= threshold)
            order = np.argsort(-candidates.ravel()[violators], kind="stable")
            flat = violators[order][:block_cap]
        lo_new, hi_new = flat // n, flat % n
        passive[lo_new, hi_new] = True
        system.add(lo_new, hi_new)

        while len(system):
            z = system.least_squares()
            if float(z.min()) > 0.0:
                w = system.scatter(z)
                break
            w_vec = w[system.lo, system.hi]
            negative = z <= 0.0
            denom = w_vec - z
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(negative & (denom > 0), w_vec / denom, np.inf)
            alpha = float(np.minimum(ratios.min(), 1.0))
            w_vec = w_vec + alpha * (z - w_vec)
            tiny = 1e-12 * max(1.0, float(np.abs(w_vec).max(initial=0.0)))
            drop = negative & (w_vec <= tiny)
            if not drop.any():
                drop = np.zeros_like(negative)
                drop[int(np.argmin(z))] = True
            w_vec[drop] = 0.0
            passive[system.lo[drop], system.hi[drop]] = False
            w = system.scatter(w_vec)
            system.keep(~drop)
        rms = _rms_over_pairs(t - _metric_from_wmat(w))
        if rms < best_rms - 1e-15:
            best_rms = rms
            best_w = w.copy()
        elif not single_mode and rms > best_rms + 1e-9 * max(best_rms, 1e-9):
            # A block round regressed numerically: fall back to one-at-a-time.
            single_mode = True


def _positions_metric(t_taxa: np.ndarray, ordering: CircularOrdering) -> np.ndarray:
    perm = np.asarray(ordering.taxa)
    return t_taxa[np.ix_(perm, perm)]


def fit_weights(
    d: DistanceMatrix,
    ordering: CircularOrdering,
    drop_threshold: float | None = None,
    dual_tol: float = DUAL_TOL,
    max_iter: int | None = None,
) -> WeightedSplitSystem:
    """Non-negative split weights for ``d`` on the given circular ordering.

    After the fit, weights below ``drop_threshold`` (default: 1e-6 times the
    largest fitted weight, floored at 1e-9) are removed; the reported
    residual is the RMS pair misfit of the retained system.  Raises
    ConvergenceError if the active-set loop exceeds its cap or the KKT
    conditions fail badly.
    """
    n = ordering.n
    if set(ordering.taxa) != set(range(d.n)):
        raise ValidationError("ordering does not cover the distance matrix taxa")
    t = _positions_metric(d.d, ordering)
    if n < 2:
        return WeightedSplitSystem(ordering, (), (), 0.0)

    w0 = _stencil_wmat(t)
    stencil_scale = max(1.0, float(np.abs(w0).max(initial=0.0)))
    if float(w0.min(initial=0.0)) >= -1e-12 * stencil_scale:
        wmat = np.maximum(w0, 0.0)
    else:
        if max_iter is None:
            max_iter = 10 * (n * (n - 1) // 2)
        wmat, _ = _nnls_interval(t, max_iter, dual_tol)

    g = _adjoint_to_wmat(t - _metric_from_wmat(wmat))
    gscale = max(1.0, float(np.abs(_adjoint_to_wmat(t)).max(initial=0.0)))
    kkt_tol = 1e-6 * gscale
    retained_bad = float(np.abs(g[wmat > 0]).max(initial=0.0))
    inactive_bad = float(g[(wmat <= 0) & _valid_mask(n)].max(initial=0.0))
    if retained_bad > kkt_tol or inactive_bad > kkt_tol:
        raise ConvergenceError(
            f"KKT violation after fit: retained {retained_bad:.3e}, inactive {inactive_bad:.3e}",
            wmat,
            _rms_over_pairs(t - _metric_from_wmat(wmat)),
        )

    wmax = float(wmat.max(initial=0.0))
    threshold = drop_threshold if drop_threshold is not None else 1e-6 * max(wmax, 1e-9)
    kept = np.where(_valid_mask(n) & (wmat >= threshold) & (wmat > 0))
    splits = tuple(CircularSplit(int(lo), int(hi)) for lo, hi in zip(*kept))
    weights = tuple(float(wmat[lo, hi]) for lo, hi in zip(*kept))
    kept_mat = np.zeros_like(wmat)
    kept_mat[kept] = wmat[kept]
    residual = _rms_over_pairs(t - _metric_from_wmat(kept_mat))
    return WeightedSplitSystem(ordering, splits, weights, residual)


def metric_positions(system: WeightedSplitSystem) -> np.ndarray:
    """Position-space distance matrix implied by the system's weights."""
    n = system.n
    wmat = np.zeros((n, n))
    for s, w in zip(system.splits, system.weights):
        wmat[s.lo, s.hi] = w
    return _metric_from_wmat(wmat)


def split_metric(
    system: WeightedSplitSystem, tickers: Sequence[str] | None = None
) -> DistanceMatrix:
    """Taxon-space distances: sum of weights of the splits separating each pair."""
    n = system.n
    dpos = metric_positions(system)
    perm = np.asarray(system.ordering.taxa)
    d = np.zeros((n, n))
    d[np.ix_(perm, perm)] = dpos
    names = tuple(tickers) if tickers is not None else tuple(str(i) for i in range(n))
    return DistanceMatrix(tickers=names, d=d)


# ---------------------------------------------------------------------------
# NEXUS interchange


def export_nexus(system: WeightedSplitSystem, labels: Sequence[str]) -> str:
    """NEXUS document with a TAXA block and a SplitsTree-style SPLITS block.

    The CYCLE line lists the ordering as 1-based taxon ids; each matrix row
    gives the split weight followed by the 1-based ids of the side not
    containing the first cycle position.  Weights are written with repr so a
    re-parse restores them exactly.
    """
    n = system.n
    if len(labels) != n:
        raise ValidationError(f"expected {n} labels, got {len(labels)}")
    lines = ["#NEXUS", "", "BEGIN TAXA;", f"DIMENSIONS NTAX={n};", "TAXLABELS"]
    for i, label in enumerate(labels, start=1):
        safe = str(label).replace("'", "''")
        lines.append(f"[{i}] '{safe}'")
    lines += [";", "END; [TAXA]", "", "BEGIN SPLITS;"]
    lines.append(f"DIMENSIONS NTAX={n} NSPLITS={len(system.splits)};")
    lines.append("FORMAT LABELS=NO WEIGHTS=YES;")
    lines.append(f"PROPERTIES FIT={system.fit_residual!r} CYCLIC;")
    lines.append("CYCLE " + " ".join(str(t + 1) for t in system.ordering.taxa) + ";")
    lines.append("MATRIX")
    for k, (split, weight) in enumerate(zip(system.splits, system.weights), start=1):
        members = sorted(t + 1 for t in system.members_of(split))
        ids = " ".join(str(m) for m in members)
        lines.append(f"[{k}, size={split.size()}]\t{weight!r}\t{ids},")
    lines += [";", "END; [SPLITS]", ""]
    return "\n".join(lines)


def parse_nexus(text: str) -> tuple[WeightedSplitSystem, tuple[str, ...]]:
    """Parse documents produced by :func:`export_nexus`."""
    label_matches = re.findall(r"^\[\d+\]\s+'((?:[^']|'')*)'", text, flags=re.M)
    labels = tuple(m.replace("''", "'") for m in label_matches)
    cycle_m = re.search(r"^CYCLE\s+([\d\s]+);", text, flags=re.M)
    if not cycle_m:
        raise ValidationError("NEXUS document has no CYCLE line")
    taxa = tuple(int(tok) - 1 for tok in cycle_m.group(1).split())
    ordering = CircularOrdering(taxa)
    n = ordering.n
    if len(labels) != n:
        raise ValidationError("label count does not match cycle length")
    fit_m = re.search(r"PROPERTIES FIT=([\deE.+-]+)", text)
    residual = float(fit_m.group(1)) if fit_m else 0.0

    pos_of = {taxon: p for p, taxon in enumerate(taxa)}
    splits = []
    weights = []
    matrix_m = re.search(r"^MATRIX$(.*?)^;", text, flags=re.M | re.S)
    if matrix_m:
        for line in matrix_m.group(1).strip().splitlines():
            line = line.strip().rstrip(",")
            if not line:
                continue
            row_m = re.match(r"\[\d+, size=\d+\]\s+(\S+)\s+(.*)$", line)
            if not row_m:
                raise ValidationError(f"unparseable splits row: {line!r}")
            weight = float(row_m.group(1))
            members = [int(tok) - 1 for tok in row_m.group(2).split()]
            positions = sorted(pos_of[t] for t in members)
            lo, hi = positions[0], positions[-1]
            if positions != list(range(lo, hi + 1)) or lo < 1:
                raise ValidationError(f"split side not a canonical arc: {members}")
            splits.append(CircularSplit(lo, hi))
            weights.append(weight)
    system = WeightedSplitSystem(ordering, tuple(splits), tuple(weights), residual)
    return system, labels
