"""Ready-made synthetic worlds for experiments.

A world bundles everything an end-to-end run needs: the bundled
taxonomy, a skew-matched synthetic classification standing in for a real
top-list classification, the induced total order and traffic model, and
a generated population with stable top-T profiles.

The default shape matches the published top-1M skew statistics at desk
scale: 42 topics never observed, the most common topic on ~18.8% of
domains, a long tail of topics on only a handful of domains each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .classification import (
    DomainClassification,
    PrevalenceTable,
    SkewSpec,
    prevalence,
    synthesize_skewed_classification,
)
from .population import (
    RankedDomainList,
    TrafficModel,
    UniqueDomainCountModel,
    UserProfile,
    generate_population,
)
from .taxonomy import Taxonomy, bundled_taxonomy


@dataclass(frozen=True)
class WorldConfig:
    n_users: int = 10_000
    n_domains: int = 50_000
    seed: int = 0
    T: int = 5
    skew: SkewSpec = field(
        default_factory=lambda: SkewSpec(zero_topics=42, top_fraction=0.188, median=4)
    )
    head_topics: int = 42
    head_floor: int = 600
    head_placement: Optional[tuple[float, float]] = (0.0, 1.0)  # None = rank-biased
    mid_topics: int = 0
    mid_count_range: tuple[int, int] = (12, 35)
    mid_placement: tuple[float, float] = (0.3, 1.0)
    tail_placement: tuple[float, float] = (0.4, 1.0)
    traffic_exponent: float = 1.0
    count_mu_median: float = 28.0
    count_sigma: float = 0.8
    count_min: int = 8
    count_max: int = 2_000


@dataclass(frozen=True)
class World:
    config: WorldConfig
    taxonomy: Taxonomy
    classification: DomainClassification
    prevalence: PrevalenceTable
    order: RankedDomainList
    traffic: TrafficModel
    counts: UniqueDomainCountModel
    population: tuple[UserProfile, ...]


def build_world(config: WorldConfig = WorldConfig(), taxonomy: Optional[Taxonomy] = None) -> World:
    """Build a fully wired synthetic world, deterministic in config.seed."""
    tax = taxonomy or bundled_taxonomy()
    classification = synthesize_skewed_classification(
        tax,
        config.n_domains,
        config.skew,
        seed=config.seed,
        head_topics=config.head_topics,
        head_floor=config.head_floor,
        head_placement=config.head_placement,
        mid_topics=config.mid_topics,
        mid_count_range=config.mid_count_range,
        mid_placement=config.mid_placement,
        tail_placement=config.tail_placement,
    )
    order = RankedDomainList(tuple(classification.domains()))
    traffic = TrafficModel(kind="zipf", exponent=config.traffic_exponent)
    counts = UniqueDomainCountModel(
        mu=math.log(config.count_mu_median),
        sigma=config.count_sigma,
        minimum=config.count_min,
        maximum=config.count_max,
    )
    population = generate_population(
        config.n_users,
        order,
        traffic,
        counts,
        classification,
        seed=config.seed,
        T=config.T,
        taxonomy=tax,
    )
    return World(
        config=config,
        taxonomy=tax,
        classification=classification,
        prevalence=prevalence(classification, tax),
        order=order,
        traffic=traffic,
        counts=counts,
        population=tuple(population),
    )


def aggressive_skew_config(n_users: int, seed: int = 1) -> WorldConfig:
    """Noise-removal study world: very skewed prevalence.

    42 never-observed topics, the top topic on 18.8% of domains, and only
    42 topics above the threshold-10 line. Users' interests concentrate
    on the prevalent pool, making the threshold prior a strong noise
    signal (the defaults of WorldConfig).
    """
    return WorldConfig(n_users=n_users, seed=seed)


def wide_pool_config(n_users: int, seed: int = 1) -> WorldConfig:
    """Cross-site tracking study world: broad interest pool.

    ~180 topics above the threshold-10 line with gently decaying
    visibility, the shape of a real top-1M classification. Profile
    combinations are diverse enough that overlap matching separates
    users, which is what the re-identification experiments measure.
    """
    return WorldConfig(
        n_users=n_users,
        seed=seed,
        head_topics=180,
        head_floor=60,
        count_mu_median=22.0,
    )
