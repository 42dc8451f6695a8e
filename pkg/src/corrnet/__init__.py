"""Circular correlation networks and cluster-based portfolio simulation.

The package turns stock price histories into weekly-return correlation
matrices, maps them to distances, builds a circular ordering of the stocks
with a Neighbor-Net style agglomeration, fits non-negative circular split
weights, delineates correlation clusters on the ordering, and evaluates
four portfolio selection strategies by Monte-Carlo simulation with ANOVA
and Levene significance tests.
"""

from corrnet.marketdata import (
    AlignmentError,
    FactorSpec,
    ParseError,
    PriceSeries,
    ReturnMatrix,
    StudyPeriod,
    ValidationError,
    generate_synthetic,
    load_metadata,
    load_prices,
    period_total_return,
    weekly_returns,
)
from corrnet.corrdist import (
    CorrelationMatrix,
    CorrelationSummary,
    DistanceMatrix,
    correlations,
    summarize,
    to_distance,
)
from corrnet.neighbornet import (
    AgglomerationTrace,
    CircularOrdering,
    canonicalize,
    circular_ordering,
)
from corrnet.splitweights import (
    CircularSplit,
    ConvergenceError,
    WeightedSplitSystem,
    enumerate_splits,
    export_nexus,
    fit_weights,
    parse_nexus,
    split_metric,
)
from corrnet.clustering import (
    ClusterAssignment,
    ClusterPairing,
    ContiguityReport,
    combination_count,
    delineate_auto,
    delineate_manual,
    pair_clusters,
    track_membership,
)
from corrnet.portfolio import (
    Portfolio,
    SelectionUniverse,
    SimulationResult,
    Strategy,
    allocate_counts,
    select_by_cluster,
    select_by_industry,
    select_by_industry_cluster,
    select_random,
    simulate,
)
from corrnet.inference import TestReport, anova_oneway, f_upper_tail, levene

__version__ = "0.1.0"
