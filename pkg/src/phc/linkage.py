"""Closest-link graph construction and sub-cluster extraction.

Every row links to its single nearest other row; undirected connected
components of those links are the natural clusters.  Within one cluster, a
frequency grid counts how often each row is someone's closest row; rows
whose inbound count reaches a threshold become exemplars that seed
sub-clusters, and members that end up alone move to the additional list.

All ties anywhere resolve to the lowest row id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import L2, Metric


@dataclass(frozen=True)
class SubClusterSet:
    """Sub-cluster partition of one cluster: groups of >= 2 plus escapees."""

    subclusters: list[set[int]]
    additional: set[int]


class _UnionFind:
    """Union-find over integer ids, smaller root wins on equal rank."""

    def __init__(self, ids):
        self.parent = {i: i for i in ids}
        self.rank = {i: 0 for i in ids}

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb] or (self.rank[ra] == self.rank[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def _stack(universe) -> tuple[list[int], np.ndarray]:
    """Sort rows by id and stack their features; validates id uniqueness."""
    rows = sorted(universe, key=lambda r: r.id)
    ids = [r.id for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate row ids in universe")
    matrix = np.stack([np.asarray(r.features, dtype=float) for r in rows])
    return ids, matrix


def closest_links(universe, metric: Metric = L2) -> dict[int, int]:
    """Map each row id to the id of its nearest other row.

    Ties break to the lowest candidate id.  Requires at least two rows.
    """
    if len(universe) < 2:
        raise ValueError(f"need at least 2 rows to link, got {len(universe)}")
    ids, matrix = _stack(universe)
    dist = metric.pairwise(matrix, matrix)
    np.fill_diagonal(dist, np.inf)
    # argmin returns the first minimum; rows are in ascending id order,
    # which is exactly the tie rule
    nearest = np.argmin(dist, axis=1)
    return {ids[i]: ids[j] for i, j in enumerate(nearest)}


def components(link_map: dict[int, int]) -> list[set[int]]:
    """Connected components of the undirected closest-link graph.

    Output order is deterministic: components sorted by smallest member id.
    """
    nodes = set(link_map) | set(link_map.values())
    uf = _UnionFind(nodes)
    for a in sorted(link_map):
        uf.union(a, link_map[a])
    groups: dict[int, set[int]] = {}
    for node in nodes:
        groups.setdefault(uf.find(node), set()).add(node)
    return sorted(groups.values(), key=min)


def frequency_grid(cluster: set[int], universe, metric: Metric = L2) -> dict[int, int]:
    """Inbound closest-link counts within one cluster.

    Links are recomputed restricted to the cluster's members, because a
    member's global closest row may sit in another cluster.
    """
    if len(cluster) < 2:
        raise ValueError(f"frequency grid needs a cluster of >= 2, got {len(cluster)}")
    members = [r for r in universe if r.id in cluster]
    if len(members) != len(cluster):
        missing = cluster - {r.id for r in members}
        raise ValueError(f"cluster rows missing from universe: {sorted(missing)}")
    links = closest_links(members, metric=metric)
    inbound = {rid: 0 for rid in sorted(cluster)}
    for target in links.values():
        inbound[target] += 1
    return inbound


def subcluster(
    cluster: set[int],
    grid: dict[int, int],
    universe,
    exemplar_threshold: int = 2,
    metric: Metric = L2,
) -> SubClusterSet:
    """Partition a cluster into sub-clusters seeded by high-inbound exemplars.

    Rows whose inbound count reaches ``exemplar_threshold`` become exemplars;
    every member joins its nearest exemplar (ties to the lowest exemplar id).
    With fewer than two exemplars the whole cluster stays one sub-cluster.
    Groups that end up with a single member are moved to ``additional``.
    """
    if exemplar_threshold < 2:
        raise ValueError("exemplar_threshold must be at least 2")
    exemplars = sorted(rid for rid in cluster if grid.get(rid, 0) >= exemplar_threshold)
    if len(exemplars) < 2:
        return SubClusterSet(subclusters=[set(cluster)], additional=set())

    members = sorted((r for r in universe if r.id in cluster), key=lambda r: r.id)
    member_ids = [r.id for r in members]
    matrix = np.stack([np.asarray(r.features, dtype=float) for r in members])
    by_id = {r.id: r for r in members}
    exemplar_matrix = np.stack(
        [np.asarray(by_id[e].features, dtype=float) for e in exemplars]
    )
    # first minimum along ascending exemplar ids implements the tie rule
    owner = np.argmin(metric.pairwise(matrix, exemplar_matrix), axis=1)

    groups: dict[int, set[int]] = {e: set() for e in exemplars}
    for rid, which in zip(member_ids, owner):
        groups[exemplars[which]].add(rid)

    subclusters = [groups[e] for e in exemplars if len(groups[e]) >= 2]
    additional = {rid for e in exemplars if len(groups[e]) == 1 for rid in groups[e]}
    return SubClusterSet(subclusters=subclusters, additional=additional)
