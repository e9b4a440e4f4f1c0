"""Prefix-tree construction: exact counts and the noisy, thresholded variant.

The noisy builder works level by level. At each frontier node every universe
location is a candidate child: candidates backed by at least one trajectory
get an individually noised count and survive only above the threshold, while
the (typically many) zero-count candidates are resolved in one shot -- a
binomial draw decides how many pass, and those are placed on uniformly chosen
empty locations with counts drawn from the passing-count distribution. Nodes
born from empty candidates carry no trajectories and are not expanded further
unless ``expand_empty`` is set; full symmetric expansion multiplies the node
count by roughly ``0.03 * len(universe)`` per level and is only practical for
small universes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import LocationUniverse, Trajectory, TrajectoryDb
from .privacy import (
    BudgetLedger,
    PrivacyParams,
    RandomSource,
    budget_ledger,
    laplace_noise,
    sample_pass_count,
    sample_passing_noisy_count,
)


class TreeNode:
    """One prefix-tree node; the root carries no location.

    ``true_count`` and ``trajectory_ids`` exist only while building and are
    never written to any output. ``fitted_count`` and ``adjusted_count`` are
    filled by the inference pass.
    """

    __slots__ = (
        "location",
        "depth",
        "parent",
        "children",
        "true_count",
        "noisy_count",
        "fitted_count",
        "adjusted_count",
        "empty_born",
        "trajectory_ids",
    )

    def __init__(self, location: int | None, depth: int, parent: "TreeNode | None"):
        self.location = location
        self.depth = depth
        self.parent = parent
        self.children: list[TreeNode] = []
        self.true_count = 0
        self.noisy_count = 0.0
        self.fitted_count: float | None = None
        self.adjusted_count: float | None = None
        self.empty_born = False
        self.trajectory_ids: list[int] | None = None

    def __repr__(self) -> str:
        return (
            f"TreeNode(location={self.location}, depth={self.depth}, "
            f"noisy_count={self.noisy_count:.3f}, children={len(self.children)})"
        )


@dataclass
class PrefixTree:
    root: TreeNode
    universe: LocationUniverse
    params: PrivacyParams | None = None

    @property
    def ledger(self) -> BudgetLedger | None:
        return budget_ledger(self.params) if self.params is not None else None

    def nodes(self):
        """All nodes in depth-first order, root first."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())


def node_prefix(node: TreeNode) -> Trajectory:
    """The trajectory prefix spelled by the root-to-node path."""
    if node.parent is None:
        raise ValueError("the virtual root does not represent a prefix")
    locations: list[int] = []
    cur: TreeNode | None = node
    while cur is not None and cur.parent is not None:
        locations.append(cur.location)  # type: ignore[arg-type]
        cur = cur.parent
    locations.reverse()
    return tuple(locations)


def _group_extensions(
    trajectories: tuple[Trajectory, ...], ids: list[int], depth: int
) -> dict[int, list[int]]:
    """Split a node's trajectories by their next location; shorter ones stop here."""
    groups: dict[int, list[int]] = {}
    for i in ids:
        t = trajectories[i]
        if len(t) > depth:
            groups.setdefault(t[depth], []).append(i)
    return groups


def build_exact_tree(
    db: TrajectoryDb,
    universe: LocationUniverse,
    max_depth: int | None = None,
    keep_trajectory_ids: bool = False,
) -> PrefixTree:
    """Noise-free prefix tree: one node per distinct prefix occurring in db."""
    trajectories = db.trajectories
    root = TreeNode(None, 0, None)
    root.trajectory_ids = list(range(len(trajectories)))
    root.true_count = len(trajectories)
    root.noisy_count = float(len(trajectories))

    frontier = [root]
    depth = 0
    while frontier and (max_depth is None or depth < max_depth):
        next_frontier: list[TreeNode] = []
        for node in frontier:
            groups = _group_extensions(trajectories, node.trajectory_ids, depth)
            for loc in sorted(groups):
                child = TreeNode(loc, depth + 1, node)
                child.trajectory_ids = groups[loc]
                child.true_count = len(groups[loc])
                child.noisy_count = float(child.true_count)
                node.children.append(child)
                next_frontier.append(child)
            if not keep_trajectory_ids:
                node.trajectory_ids = None
        frontier = next_frontier
        depth += 1
    if not keep_trajectory_ids:
        for node in frontier:
            node.trajectory_ids = None
    return PrefixTree(root=root, universe=universe, params=None)


def build_noisy_tree(
    db: TrajectoryDb,
    universe: LocationUniverse,
    params: PrivacyParams,
    source: RandomSource,
    expand_empty: bool = False,
    threads: int = 1,
    keep_trajectory_ids: bool = False,
) -> PrefixTree:
    """Thresholded noisy prefix tree of height at most ``params.height``.

    Each node's randomness comes from a sub-stream keyed by its root path, so
    the result depends only on (db, universe, params, source seed) and not on
    ``threads``.
    """
    trajectories = db.trajectories
    universe_size = len(universe)
    scale = params.noise_scale
    theta = params.threshold

    root = TreeNode(None, 0, None)
    root.trajectory_ids = list(range(len(trajectories)))
    root.true_count = len(trajectories)
    root.noisy_count = float("nan")  # the root count is never measured or released

    def expand(node: TreeNode) -> None:
        path = node_prefix(node) if node.parent is not None else ()
        rng = source.stream(*path)
        groups = _group_extensions(trajectories, node.trajectory_ids or [], node.depth)
        candidates = sorted(groups)
        if candidates:
            if len(candidates) <= 32:  # scalar draws beat numpy dispatch here
                noisy = [len(groups[c]) + laplace_noise(scale, rng) for c in candidates]
            else:
                counts = np.fromiter(
                    (len(groups[c]) for c in candidates), float, len(candidates)
                )
                noisy = counts + laplace_noise(scale, rng, size=len(candidates))
            for loc, noisy_count in zip(candidates, noisy):
                if noisy_count >= theta:
                    child = TreeNode(loc, node.depth + 1, node)
                    child.trajectory_ids = groups[loc]
                    child.true_count = len(groups[loc])
                    child.noisy_count = float(noisy_count)
                    node.children.append(child)
        # All remaining locations are zero-count candidates; resolve them in one shot.
        empty_pool_size = universe_size - len(candidates)
        passing = sample_pass_count(empty_pool_size, params, rng)
        if passing:
            mask = np.ones(universe_size, dtype=bool)
            mask[candidates] = False
            pool = np.flatnonzero(mask)
            # partial Fisher-Yates: the first `passing` slots become the sample
            swaps = rng.integers(np.arange(passing), empty_pool_size)
            for i, j in enumerate(swaps):
                pool[i], pool[j] = pool[j], pool[i]
            values = sample_passing_noisy_count(params, rng, size=passing)
            for loc, value in zip(pool[:passing].tolist(), values):
                child = TreeNode(loc, node.depth + 1, node)
                child.trajectory_ids = []
                child.true_count = 0
                child.noisy_count = float(value)
                child.empty_born = True
                node.children.append(child)
        if not keep_trajectory_ids:
            node.trajectory_ids = None

    frontier = [root]
    for _ in range(params.height):
        if not frontier:
            break
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(expand, frontier, chunksize=64))
        else:
            for node in frontier:
                expand(node)
        next_frontier: list[TreeNode] = []
        for node in frontier:
            for child in node.children:
                if expand_empty or not child.empty_born:
                    next_frontier.append(child)
        frontier = next_frontier
    if not keep_trajectory_ids:
        for node in frontier:
            node.trajectory_ids = None
    return PrefixTree(root=root, universe=universe, params=params)


@dataclass
class FlatTree:
    """Array view of a tree for the vectorized inference and release passes.

    ``order`` lists nodes parents-before-children (index 0 is the root);
    iterating it backwards visits children before parents with earlier
    siblings last, i.e. a postorder traversal when read in reverse.
    """

    order: list[TreeNode]
    parent: np.ndarray
    depth: np.ndarray
    noisy: np.ndarray
    n_children: np.ndarray

    def __len__(self) -> int:
        return len(self.order)

    def postorder_indices(self):
        return range(len(self.order) - 1, -1, -1)


def flatten_tree(tree: PrefixTree) -> FlatTree:
    order: list[TreeNode] = []
    parent: list[int] = []
    stack: list[tuple[TreeNode, int]] = [(tree.root, -1)]
    while stack:
        node, parent_idx = stack.pop()
        idx = len(order)
        order.append(node)
        parent.append(parent_idx)
        for child in node.children:
            stack.append((child, idx))
    n = len(order)
    depth = np.fromiter((node.depth for node in order), np.int64, n)
    noisy = np.fromiter((node.noisy_count for node in order), np.float64, n)
    n_children = np.fromiter((len(node.children) for node in order), np.int64, n)
    return FlatTree(
        order=order,
        parent=np.asarray(parent, dtype=np.int64),
        depth=depth,
        noisy=noisy,
        n_children=n_children,
    )


def dump_tree(tree: PrefixTree) -> str:
    """Debug outline: one node per line, depth-indented token and noisy count.

    True counts never appear here; the dump is safe to share alongside a
    release.
    """
    lines: list[str] = []
    stack = list(reversed(tree.root.children))
    while stack:
        node = stack.pop()
        token = tree.universe.token_of(node.location)  # type: ignore[arg-type]
        lines.append(f"{'  ' * (node.depth - 1)}{token} {node.noisy_count:.2f}")
        stack.extend(reversed(node.children))
    return "\n".join(lines) + ("\n" if lines else "")
