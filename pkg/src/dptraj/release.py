"""Materialize a sanitized trajectory database from a prefix tree."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .tree import FlatTree, PrefixTree, flatten_tree, node_prefix
from .model import TrajectoryDb


def generate_release(
    tree: PrefixTree, use_inference: bool, flat: FlatTree | None = None
) -> TrajectoryDb:
    """Emit the database encoded by the tree's counts.

    Each non-root node terminates ``round(count - sum of child counts)``
    trajectories (clamped at zero, halves rounded to even); that many copies
    of its prefix are appended, visiting nodes in postorder. With
    ``use_inference`` the adjusted counts are read, otherwise the raw noisy
    counts ("basic" variant); both run on the same tree so the two variants
    share one set of random draws.
    """
    if flat is None:
        flat = flatten_tree(tree)
    n = len(flat)
    if use_inference:
        counts = np.empty(n)
        counts[0] = 0.0
        for i in range(1, n):
            value = flat.order[i].adjusted_count
            if value is None:
                raise ValueError("adjusted counts missing; run the inference passes first")
            counts[i] = value
    else:
        counts = flat.noisy.copy()
        counts[0] = 0.0

    child_sum = np.zeros(n)
    np.add.at(child_sum, flat.parent[1:], counts[1:])
    terminated = np.maximum(np.rint(counts - child_sum), 0.0).astype(np.int64)
    terminated[0] = 0

    released: list[tuple[int, ...]] = []
    for i in flat.postorder_indices():
        copies = int(terminated[i])
        if copies:
            prefix = node_prefix(flat.order[i])
            released.extend([prefix] * copies)
    return TrajectoryDb(tuple(released))


@dataclass(frozen=True)
class ReleaseStats:
    records: int
    length_histogram: dict[int, int]
    distinct_locations: int


def release_stats(db: TrajectoryDb) -> ReleaseStats:
    lengths = Counter(len(t) for t in db)
    locations: set[int] = set()
    for t in db:
        locations.update(t)
    return ReleaseStats(
        records=len(db),
        length_histogram=dict(sorted(lengths.items())),
        distinct_locations=len(locations),
    )
