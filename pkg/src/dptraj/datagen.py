"""Synthetic trajectory corpora with transit-like shape.

Record lengths follow a truncated geometric law (heavy tail, configurable
mean) and background locations follow a Zipf law over the universe. An
optional set of planted routes gives the corpus sequential structure and
gives frequent-pattern evaluations a known ground truth: a planted record
rides its route from the first stop for as many stops as its drawn length
allows, and records longer than the route wander on with background
locations. Route popularity can be skewed so supports spread out instead of
piling up on one value. Routes are pairwise disjoint location runs whenever
the universe is big enough, like distinct transit lines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LocationUniverse, TrajectoryDb


@dataclass(frozen=True)
class GenConfig:
    n_locations: int
    n_records: int
    avg_len: float
    max_len: int
    n_planted_routes: int = 0
    planted_fraction: float = 0.25
    route_length: int = 3
    route_skew: float = 0.0
    zipf_skew: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_locations < 1:
            raise ValueError("need at least one location")
        if self.n_records < 0:
            raise ValueError("record count must be >= 0")
        if not 1 <= self.avg_len <= self.max_len:
            raise ValueError(
                f"need 1 <= avg_len <= max_len, got avg_len={self.avg_len}, max_len={self.max_len}"
            )
        if self.n_planted_routes < 0:
            raise ValueError("route count must be >= 0")
        if not 0 <= self.planted_fraction <= 1:
            raise ValueError("planted fraction must be in [0, 1]")
        if self.n_planted_routes:
            if self.route_length < 1:
                raise ValueError("route length must be >= 1")
            if self.route_length > self.n_locations:
                raise ValueError("route length exceeds universe size")
        if self.route_skew < 0:
            raise ValueError("route skew must be >= 0")
        if self.zipf_skew < 0:
            raise ValueError("zipf skew must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def _location_weights(n_locations: int, skew: float) -> np.ndarray:
    weights = (np.arange(1, n_locations + 1, dtype=float)) ** (-skew)
    return weights / weights.sum()


def planted_routes(config: GenConfig) -> list[tuple[int, ...]]:
    """The routes :func:`generate` plants for this config, drawn from a
    route-only stream so the list can be recovered without regenerating the
    corpus.

    When the universe can hold them, routes are disjoint runs carved from one
    permutation; otherwise each route is an independent draw of distinct
    locations (distinct routes guaranteed either way).
    """
    if not config.n_planted_routes:
        return []
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1)))
    total = config.n_planted_routes * config.route_length
    if total <= config.n_locations:
        carved = rng.permutation(config.n_locations)[:total]
        return [
            tuple(carved[i : i + config.route_length].tolist())
            for i in range(0, total, config.route_length)
        ]
    routes: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    while len(routes) < config.n_planted_routes:
        route = tuple(
            rng.choice(config.n_locations, size=config.route_length, replace=False).tolist()
        )
        if route not in seen:
            seen.add(route)
            routes.append(route)
    return routes


def generate(config: GenConfig) -> tuple[TrajectoryDb, LocationUniverse]:
    """Build a corpus and its universe deterministically from the config."""
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0)))
    width = len(str(max(config.n_locations - 1, 1)))
    universe = LocationUniverse(tuple(f"L{i:0{width}d}" for i in range(config.n_locations)))
    if config.n_records == 0:
        return TrajectoryDb(()), universe

    lengths = np.minimum(
        rng.geometric(1.0 / config.avg_len, size=config.n_records), config.max_len
    )
    weights = _location_weights(config.n_locations, config.zipf_skew)

    planted_at: dict[int, tuple[int, ...]] = {}
    if config.n_planted_routes:
        routes = planted_routes(config)
        planted_count = round(config.n_records * config.planted_fraction)
        chosen = rng.choice(config.n_records, size=planted_count, replace=False)
        popularity = _location_weights(len(routes), config.route_skew)
        assignment = rng.choice(len(routes), size=planted_count, p=popularity)
        for record, route_idx in zip(chosen.tolist(), assignment.tolist()):
            planted_at[record] = routes[route_idx]

    flat = rng.choice(config.n_locations, size=int(lengths.sum()), p=weights).tolist()
    offsets = np.concatenate([[0], np.cumsum(lengths)]).tolist()

    trajectories: list[tuple[int, ...]] = []
    for i in range(config.n_records):
        record = flat[offsets[i] : offsets[i + 1]]
        route = planted_at.get(i)
        if route is not None:
            # ride the line for the trip length; wander past the terminus
            ridden = min(len(record), len(route))
            record[:ridden] = route[:ridden]
        trajectories.append(tuple(record))
    return TrajectoryDb(tuple(trajectories)), universe
