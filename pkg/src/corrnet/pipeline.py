"""End-to-end orchestration: data -> correlations -> network -> clusters -> simulations.

A Pipeline caches every stage per study period.  Selection models are built
in period t and evaluated on period t+1 returns, so a four-period
configuration yields three report files.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from corrnet import clustering, corrdist, inference, marketdata, neighbornet, portfolio, splitweights
from corrnet.clustering import ClusterAssignment, ClusterPairing
from corrnet.corrdist import CorrelationMatrix, DistanceMatrix
from corrnet.marketdata import PriceSeries, StudyPeriod, ValidationError
from corrnet.neighbornet import CircularOrdering
from corrnet.portfolio import SelectionUniverse, SimulationResult, Strategy
from corrnet.splitweights import WeightedSplitSystem

STRATEGY_ORDER = (
    Strategy.RANDOM,
    Strategy.INDUSTRY,
    Strategy.CLUSTER,
    Strategy.INDUSTRY_CLUSTER,
)

REPORT_HEADER = ("size", "random", "industry", "cluster", "industry_cluster", "p_value")


@dataclass(frozen=True)
class SyntheticSpec:
    n_stocks: int = 30
    n_weeks: int = 160
    n_clusters: int = 6
    seed: int = 7
    industry_loading: float = 0.6
    cluster_loading: float = 1.2
    dividend_rate: float = 0.004


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: Path
    prices: Path | None = None
    metadata: Path | None = None
    boundaries: tuple[date, ...] | None = None
    n_periods: int = 4
    k: int = 8
    min_size: int = 4
    sizes: tuple[int, ...] = (2, 4, 8, 16)
    iterations: int = 1000
    seed: int = 0
    levene_center: str = "median"
    synthetic: SyntheticSpec | None = None


def load_config(path: Path) -> PipelineConfig:
    """Read the flat-section INI config; paths resolve relative to the file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config {path}")
    base = Path(path).resolve().parent
    data = parser["data"] if parser.has_section("data") else {}

    def _path(key):
        raw = data.get(key)
        return (base / raw).resolve() if raw else None

    boundaries = None
    if parser.has_option("periods", "boundaries"):
        raw = parser.get("periods", "boundaries")
        boundaries = tuple(date.fromisoformat(tok.strip()) for tok in raw.split(",") if tok.strip())
    synthetic = None
    if parser.has_section("synthetic"):
        sec = parser["synthetic"]
        synthetic = SyntheticSpec(
            n_stocks=sec.getint("n_stocks", 30),
            n_weeks=sec.getint("n_weeks", 160),
            n_clusters=sec.getint("n_clusters", 6),
            seed=sec.getint("seed", 7),
            industry_loading=sec.getfloat("industry_loading", 0.6),
            cluster_loading=sec.getfloat("cluster_loading", 1.2),
            dividend_rate=sec.getfloat("dividend_rate", 0.004),
        )
    clu = parser["clustering"] if parser.has_section("clustering") else {}
    sim = parser["simulation"] if parser.has_section("simulation") else {}
    sizes = tuple(
        int(tok) for tok in str(sim.get("sizes", "2,4,8,16")).split(",") if str(tok).strip()
    )
    out_raw = data.get("out", "artifacts")
    return PipelineConfig(
        out_dir=(base / out_raw).resolve(),
        prices=_path("prices"),
        metadata=_path("metadata"),
        boundaries=boundaries,
        n_periods=int(parser.get("periods", "count", fallback=4)),
        k=int(clu.get("k", 8)),
        min_size=int(clu.get("min_size", 4)),
        sizes=sizes,
        iterations=int(sim.get("iterations", 1000)),
        seed=int(sim.get("seed", 0)),
        levene_center=str(sim.get("levene_center", "median")),
        synthetic=synthetic,
    )


def _fmt(value: float) -> str:
    return format(value, ".6g")


def _derive_seed(root: int, size: int, strategy_index: int) -> int:
    """Deterministic per-(size, strategy) stream seed from the root seed."""
    state = np.random.SeedSequence([root, size, strategy_index]).generate_state(1, np.uint64)
    return int(state[0] % (2**63))


class Pipeline:
    """Caches one build per study period and writes the disk artifacts."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._series: list[PriceSeries] | None = None
        self._industry: dict[str, str] | None = None
        self._periods: tuple[StudyPeriod, ...] | None = None
        self._networks: dict[str, tuple[CircularOrdering, WeightedSplitSystem]] = {}
        self._clusters: dict[str, ClusterAssignment] = {}
        self._returns: dict[str, marketdata.ReturnMatrix] = {}

    # -- data -----------------------------------------------------------

    def _ensure_data(self) -> None:
        if self._series is not None:
            return
        cfg = self.config
        if cfg.synthetic is not None:
            spec = marketdata.FactorSpec(
                n_clusters=cfg.synthetic.n_clusters,
                industry_loading=cfg.synthetic.industry_loading,
                cluster_loading=cfg.synthetic.cluster_loading,
                dividend_rate=cfg.synthetic.dividend_rate,
            )
            series = marketdata.generate_synthetic(
                cfg.synthetic.n_stocks, cfg.synthetic.n_weeks, spec, cfg.synthetic.seed
            )
            cfg.out_dir.mkdir(parents=True, exist_ok=True)
            (cfg.out_dir / "prices.csv").write_text(marketdata.prices_to_csv(series))
            (cfg.out_dir / "metadata.csv").write_text(marketdata.metadata_to_csv(series))
            self._series = series
            self._industry = {s.ticker: s.industry for s in series}
        else:
            if cfg.prices is None or cfg.metadata is None:
                raise ValidationError("config needs prices/metadata paths or a [synthetic] section")
            with open(cfg.metadata, newline="") as f:
                self._industry = marketdata.load_metadata(f)
            with open(cfg.prices, newline="") as f:
                self._series = marketdata.load_prices(f, self._industry)

    @property
    def series(self) -> list[PriceSeries]:
        self._ensure_data()
        return self._series

    @property
    def industry(self) -> dict[str, str]:
        self._ensure_data()
        return self._industry

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(s.ticker for s in self.series)

    def periods(self) -> tuple[StudyPeriod, ...]:
        if self._periods is None:
            cfg = self.config
            if cfg.boundaries is not None:
                self._periods = marketdata.periods_from_boundaries(cfg.boundaries)
            else:
                # Split the covered dates into n_periods contiguous periods.
                grid = self.series[0].dates
                cuts = np.linspace(0, len(grid) - 1, cfg.n_periods + 1).astype(int)
                self._periods = marketdata.periods_from_boundaries(grid[c] for c in cuts)
        return self._periods

    def period(self, label: str) -> StudyPeriod:
        for p in self.periods():
            if p.label == label:
                return p
        raise KeyError(f"unknown period {label!r}")

    def next_period(self, label: str) -> StudyPeriod:
        periods = self.periods()
        for i, p in enumerate(periods[:-1]):
            if p.label == label:
                return periods[i + 1]
        raise KeyError(f"period {label!r} has no successor")

    # -- per-period stages ----------------------------------------------

    def returns(self, label: str) -> marketdata.ReturnMatrix:
        if label not in self._returns:
            self._returns[label] = marketdata.weekly_returns(self.series, self.period(label))
        return self._returns[label]

    def correlation(self, label: str) -> CorrelationMatrix:
        return corrdist.correlations(self.returns(label))

    def distance(self, label: str) -> DistanceMatrix:
        return corrdist.to_distance(self.correlation(label))

    def network(self, label: str) -> tuple[CircularOrdering, WeightedSplitSystem]:
        if label not in self._networks:
            d = self.distance(label)
            ordering, _trace = neighbornet.circular_ordering(d)
            system = splitweights.fit_weights(d, ordering)
            self._networks[label] = (ordering, system)
        return self._networks[label]

    def clusters(self, label: str) -> ClusterAssignment:
        if label not in self._clusters:
            _, system = self.network(label)
            n = system.n
            k = min(self.config.k, max(2, n // max(1, self.config.min_size)))
            min_size = min(self.config.min_size, max(1, n // k))
            self._clusters[label] = clustering.delineate_auto(system, k, min_size)
        return self._clusters[label]

    def set_clusters(self, label: str, boundaries: list[int]) -> ClusterAssignment:
        ordering, _ = self.network(label)
        assignment = clustering.delineate_manual(ordering, sorted(boundaries))
        self._clusters[label] = assignment
        self.write_cluster_csv(label)
        return assignment

    def pairing(self, label: str) -> ClusterPairing:
        return clustering.pair_clusters(self.clusters(label))

    def universe(self, est_label: str) -> SelectionUniverse:
        eval_period = self.next_period(est_label)
        period_returns = {
            s.ticker: marketdata.period_total_return(s, eval_period) for s in self.series
        }
        return SelectionUniverse(
            tickers=self.tickers,
            industry=self.industry,
            period_returns=period_returns,
            clusters=self.clusters(est_label),
            pairing=self.pairing(est_label),
        )

    # -- simulation reports ----------------------------------------------

    def simulate_pair(
        self,
        est_label: str,
        sizes: tuple[int, ...] | None = None,
        iterations: int | None = None,
        seed: int | None = None,
        strategies: tuple[Strategy, ...] = STRATEGY_ORDER,
    ) -> dict:
        cfg = self.config
        sizes = sizes or cfg.sizes
        iterations = iterations or cfg.iterations
        seed = cfg.seed if seed is None else seed
        universe = self.universe(est_label)
        eval_label = self.next_period(est_label).label
        results: list[SimulationResult] = []
        tests = []
        rows: list[list[str]] = []
        for size in sizes:
            per_strategy = {}
            for si, strategy in enumerate(strategies):
                stream = _derive_seed(seed, size, si)
                per_strategy[strategy] = portfolio.simulate(
                    universe, strategy, size, iterations=iterations, seed=stream
                )
            results.extend(per_strategy.values())
            samples = [per_strategy[s].returns for s in strategies]
            anova = inference.anova_oneway(samples)
            lev = inference.levene(samples, center=cfg.levene_center)
            tests.append({"size": size, "anova": anova, "levene": lev})
            mean_row = [str(size)]
            std_row = [""]
            for strategy in strategies:
                res = per_strategy[strategy]
                mean_row.append(_fmt(res.mean))
                std_row.append(f"({_fmt(res.std_dev)})")
            mean_row.append(_fmt(anova.p_value))
            std_row.append(f"({_fmt(lev.p_value)})")
            rows.append(mean_row)
            rows.append(std_row)
        return {
            "estimation": est_label,
            "evaluation": eval_label,
            "seed": seed,
            "iterations": iterations,
            "results": results,
            "tests": tests,
            "table": {"header": list(REPORT_HEADER), "rows": rows},
        }

    # -- artifacts --------------------------------------------------------

    def write_cluster_csv(self, label: str) -> Path:
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.out_dir / f"clusters_{label}.csv"
        path.write_text(clustering.assignment_to_csv(self.clusters(label), self.tickers))
        return path

    def write_network(self, label: str) -> list[Path]:
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        ordering, system = self.network(label)
        out = self.config.out_dir
        nex = out / f"network_{label}.nex"
        nex.write_text(splitweights.export_nexus(system, self.tickers))
        txt = out / f"ordering_{label}.txt"
        txt.write_text(",".join(self.tickers[t] for t in ordering.taxa) + "\n")
        js = out / f"network_{label}.json"
        js.write_text(json.dumps(system.to_dict()))
        return [nex, txt, js]

    def write_correlation_summary(self) -> Path:
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        lines = ["period,mean,std_dev,min,max,negative_count,total_pairs"]
        for p in self.periods():
            s = corrdist.summarize(self.correlation(p.label))
            lines.append(
                f"{p.label},{_fmt(s.mean)},{_fmt(s.std_dev)},{_fmt(s.min)},"
                f"{_fmt(s.max)},{s.negative_count},{s.total_pairs}"
            )
        path = self.config.out_dir / "correlation_summary.csv"
        path.write_text("\n".join(lines) + "\n")
        return path

    def write_report(self, report: dict) -> Path:
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        path = (
            self.config.out_dir
            / f"report_{report['estimation']}_to_{report['evaluation']}.csv"
        )
        lines = [",".join(report["table"]["header"])]
        lines += [",".join(row) for row in report["table"]["rows"]]
        path.write_text("\n".join(lines) + "\n")
        return path

    def run_all(self) -> list[Path]:
        """The full pipeline; returns every artifact path written."""
        artifacts = [self.write_correlation_summary()]
        periods = self.periods()
        for p in periods[:-1]:
            artifacts.extend(self.write_network(p.label))
            artifacts.append(self.write_cluster_csv(p.label))
        for p in periods[:-1]:
            report = self.simulate_pair(p.label)
            artifacts.append(self.write_report(report))
        return artifacts
