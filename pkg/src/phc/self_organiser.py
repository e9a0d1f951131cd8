"""The unsupervised self-organising loop.

Starting from the connected components of the closest-link graph, each
iteration rebuilds every cluster's sub-cluster branches from its frequency
grid, pools stranded single-row sub-clusters into one fresh base cluster,
merges cluster pairs whose centroid gap x falls below the average pairwise
distance u-bar among their pooled sub-cluster centroids, refreshes all
centroids, and finally moves every row to the base cluster with the nearest
centroid.  The loop stops when no row moves, when the cluster count repeats
across two consecutive iterations, or at the iteration cap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linkage
from .metric import Centroid, Metric, get_metric

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelfOrgConfig:
    exemplar_threshold: int = 2
    max_iterations: int = 50
    metric: str = "l2"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.exemplar_threshold < 2:
            raise ValueError("exemplar_threshold must be >= 2")
        get_metric(self.metric)  # validates the name


@dataclass
class SubCluster:
    id: int
    member_ids: set[int]
    centroid: Centroid


@dataclass
class Cluster:
    id: int
    member_ids: set[int]
    centroid: Centroid
    subclusters: list[SubCluster] = field(default_factory=list)


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    cluster_count: int
    moved: int


@dataclass
class ClusterModel:
    clusters: list[Cluster]
    iteration: int = 0
    config: SelfOrgConfig = field(default_factory=SelfOrgConfig)
    trace: list[IterationStats] = field(default_factory=list)

    def row_ids(self) -> set[int]:
        out: set[int] = set()
        for cluster in self.clusters:
            out |= cluster.member_ids
        return out

    def subcluster_count(self) -> int:
        return sum(len(c.subclusters) for c in self.clusters)

    def cluster_of(self) -> dict[int, int]:
        """Row id -> owning cluster id."""
        owner = {}
        for cluster in self.clusters:
            for rid in cluster.member_ids:
                owner[rid] = cluster.id
        return owner

    def subcluster_of(self) -> dict[int, tuple[int, int]]:
        """Row id -> (cluster id, sub-cluster id)."""
        owner = {}
        for cluster in self.clusters:
            for sub in cluster.subclusters:
                for rid in sub.member_ids:
                    owner[rid] = (cluster.id, sub.id)
        return owner


def _features_by_id(rows) -> dict[int, np.ndarray]:
    return {r.id: np.asarray(r.features, dtype=float) for r in rows}


def _mean_centroid(member_ids: set[int], feats: dict[int, np.ndarray]) -> Centroid:
    matrix = np.stack([feats[rid] for rid in sorted(member_ids)])
    return Centroid(values=matrix.mean(axis=0), count=len(member_ids))


def _metric_of(model: ClusterModel) -> Metric:
    return get_metric(model.config.metric)


def initial_model(rows, config: SelfOrgConfig | None = None) -> ClusterModel:
    """Clusters = connected components of the closest-link graph."""
    if len(rows) < 2:
        raise ValueError("need at least 2 rows")
    config = config or SelfOrgConfig()
    metric = get_metric(config.metric)
    feats = _features_by_id(rows)
    links = linkage.closest_links(rows, metric=metric)
    parts = linkage.components(links)
    clusters = [
        Cluster(id=cid, member_ids=set(part), centroid=_mean_centroid(part, feats))
        for cid, part in enumerate(parts)
    ]
    log.info("initial model: %d clusters from %d rows", len(clusters), len(rows))
    return ClusterModel(clusters=clusters, iteration=0, config=config)


def refine_subclusters(model: ClusterModel, rows) -> ClusterModel:
    """Rebuild every cluster's branches; pool stranded rows into a new cluster.

    Stranded rows (size-1 sub-cluster escapees) leave their cluster and are
    pooled, across all clusters, into one appended base cluster carrying a
    single sub-cluster.  Base centroids are refreshed from the surviving
    members.
    """
    metric = _metric_of(model)
    feats = _features_by_id(rows)
    pool: set[int] = set()
    for cluster in model.clusters:
        if len(cluster.member_ids) == 1:
            cluster.subclusters = [
                SubCluster(id=-1, member_ids=set(cluster.member_ids),
                           centroid=_mean_centroid(cluster.member_ids, feats))
            ]
            continue
        grid = linkage.frequency_grid(cluster.member_ids, rows, metric=metric)
        parts = linkage.subcluster(
            cluster.member_ids, grid, rows,
            exemplar_threshold=model.config.exemplar_threshold, metric=metric,
        )
        pool |= parts.additional
        cluster.member_ids -= parts.additional
        cluster.subclusters = [
            SubCluster(id=-1, member_ids=set(group),
                       centroid=_mean_centroid(group, feats))
            for group in sorted(parts.subclusters, key=min)
        ]
        cluster.centroid = _mean_centroid(cluster.member_ids, feats)
    if pool:
        new_id = max((c.id for c in model.clusters), default=-1) + 1
        model.clusters.append(
            Cluster(
                id=new_id,
                member_ids=set(pool),
                centroid=_mean_centroid(pool, feats),
                subclusters=[
                    SubCluster(id=-1, member_ids=set(pool),
                               centroid=_mean_centroid(pool, feats))
                ],
            )
        )
    _number_subclusters(model)
    return model


def _number_subclusters(model: ClusterModel) -> None:
    next_id = 0
    for cluster in sorted(model.clusters, key=lambda c: c.id):
        for sub in sorted(cluster.subclusters, key=lambda s: min(s.member_ids)):
            sub.id = next_id
            next_id += 1


def merge_pass(model: ClusterModel, rows) -> ClusterModel:
    """Combine cluster pairs whose centroid distance beats their pooled spread.

    Pairs are considered in ascending order of centroid distance x.  For a
    pair, u-bar is the mean pairwise distance among the centroids of both
    clusters' sub-clusters pooled together; the pair merges when x < u-bar.
    After every merge the scan restarts, so the most similar pairs always go
    first.  The merged cluster keeps the union of both sub-cluster lists
    until the next refinement rebuilds them.
    """
    metric = _metric_of(model)
    if len(model.clusters) < 2:
        return model
    feats = _features_by_id(rows)
    order = sorted(range(len(model.clusters)), key=lambda i: model.clusters[i].id)
    clusters = [model.clusters[i] for i in order]
    k = len(clusters)

    sub_cents = []
    sub_owner = []
    for idx, cluster in enumerate(clusters):
        for sub in cluster.subclusters:
            sub_cents.append(sub.centroid.values)
            sub_owner.append(idx)
    counts = np.bincount(sub_owner, minlength=k).astype(float) if sub_owner else np.zeros(k)

    # cross[i, j] = sum of distances over ordered sub-centroid pairs (a in i, b in j);
    # the diagonal holds twice the within-cluster pair sum
    if sub_cents:
        sub_matrix = np.stack(sub_cents)
        owner = np.asarray(sub_owner)
        dist_sub = metric.pairwise(sub_matrix, sub_matrix)
        flat = owner[:, None] * k + owner[None, :]
        cross = np.bincount(
            flat.ravel(), weights=dist_sub.ravel(), minlength=k * k
        ).reshape(k, k)
    else:
        cross = np.zeros((k, k))

    cent_matrix = np.stack([c.centroid.values for c in clusters])
    x = metric.pairwise(cent_matrix, cent_matrix)
    alive = np.ones(k, dtype=bool)
    upper = np.triu(np.ones((k, k), dtype=bool), 1)

    while True:
        intra = np.diag(cross) / 2.0
        pooled = counts[:, None] + counts[None, :]
        pairs = pooled * (pooled - 1) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ubar = (intra[:, None] + intra[None, :] + cross) / pairs
        candidate = upper & alive[:, None] & alive[None, :] & (pairs >= 1)
        candidate &= x < ubar
        if not candidate.any():
            break
        masked = np.where(candidate, x, np.inf)
        best = masked.min()
        i, j = map(int, np.argwhere(masked == best)[0])  # row-major = id order

        keep, drop = clusters[i], clusters[j]
        keep.member_ids |= drop.member_ids
        keep.subclusters = keep.subclusters + drop.subclusters
        keep.centroid = _mean_centroid(keep.member_ids, feats)
        keep.id = min(keep.id, drop.id)

        counts[i] += counts[j]
        cross[i, :] += cross[j, :]
        cross[:, i] += cross[:, j]
        alive[j] = False

        cent_matrix[i] = keep.centroid.values
        fresh = metric.pairwise(cent_matrix[i][None, :], cent_matrix)[0]
        x[i, :] = fresh
        x[:, i] = fresh

    model.clusters = [c for idx, c in enumerate(clusters) if alive[idx]]
    return model


def recompute_centroids(model: ClusterModel, rows) -> ClusterModel:
    """Refresh every cluster and sub-cluster centroid from current members."""
    feats = _features_by_id(rows)
    for cluster in model.clusters:
        cluster.centroid = _mean_centroid(cluster.member_ids, feats)
        for sub in cluster.subclusters:
            sub.centroid = _mean_centroid(sub.member_ids, feats)
    return model


def reassign_pass(model: ClusterModel, rows) -> tuple[ClusterModel, int]:
    """Move every row to the base cluster with the nearest centroid.

    Decisions are taken against a frozen snapshot of the centroids, then
    applied at once.  Ties go to the lowest cluster id; clusters emptied by
    the pass are deleted.  Sub-cluster membership of rows that moved is left
    to the next refinement.
    """
    metric = _metric_of(model)
    clusters = sorted(model.clusters, key=lambda c: c.id)
    ordered = sorted(rows, key=lambda r: r.id)
    matrix = np.stack([np.asarray(r.features, dtype=float) for r in ordered])
    cent_matrix = np.stack([c.centroid.values for c in clusters])
    owner = np.argmin(metric.pairwise(matrix, cent_matrix), axis=1)

    current = model.cluster_of()
    moved = 0
    new_members: dict[int, set[int]] = {c.id: set() for c in clusters}
    for row, which in zip(ordered, owner):
        target = clusters[which].id
        if current.get(row.id) != target:
            moved += 1
        new_members[target].add(row.id)

    feats = _features_by_id(rows)
    survivors = []
    for cluster in clusters:
        members = new_members[cluster.id]
        if not members:
            continue
        departed = cluster.member_ids - members
        cluster.member_ids = members
        for sub in cluster.subclusters:
            sub.member_ids -= departed
        cluster.subclusters = [s for s in cluster.subclusters if s.member_ids]
        survivors.append(cluster)
    model.clusters = survivors
    return model, moved


def _finalize(model: ClusterModel, rows) -> ClusterModel:
    """Renumber clusters and sub-clusters deterministically by member order."""
    model.clusters.sort(key=lambda c: min(c.member_ids))
    for cid, cluster in enumerate(model.clusters):
        cluster.id = cid
    _number_subclusters(model)
    recompute_centroids(model, rows)
    return model


def run(rows, config: SelfOrgConfig | None = None) -> ClusterModel:
    """Execute the full self-organising loop until it settles.

    Stops when a pass moves no rows, when the cluster count is unchanged
    across two consecutive iterations, or at ``max_iterations``.  Returns the
    final model with a per-iteration trace of cluster count and moved rows.
    """
    config = config or SelfOrgConfig()
    model = initial_model(rows, config)
    previous_count = None
    moved = 0
    for iteration in range(1, config.max_iterations + 1):
        refine_subclusters(model, rows)
        merge_pass(model, rows)
        recompute_centroids(model, rows)
        model, moved = reassign_pass(model, rows)
        model.iteration = iteration
        count = len(model.clusters)
        model.trace.append(
            IterationStats(iteration=iteration, cluster_count=count, moved=moved)
        )
        log.debug("iteration %d: %d clusters, %d rows moved", iteration, count, moved)
        if moved == 0:
            break
        if previous_count is not None and previous_count == count:
            break
        previous_count = count
    if moved > 0:
        # rows moved in the last pass: rebuild branches so the returned model
        # carries a full cluster/sub-cluster partition
        refine_subclusters(model, rows)
    return _finalize(model, rows)


def classify(model: ClusterModel, q, metric: Metric | None = None) -> tuple[int, int | None]:
    """Top-down descent: nearest base centroid, then nearest sub-centroid.

    The branch is chosen at the base level first, so a closer sub-centroid
    in another base cluster never wins.  Ties go to the lowest id.
    """
    if not model.clusters:
        raise ValueError("cannot classify with an empty model")
    metric = metric or _metric_of(model)
    q = np.asarray(q, dtype=float)
    dim = model.clusters[0].centroid.values.shape[0]
    if q.shape != (dim,):
        raise ValueError(f"query has dimension {q.shape}, model expects ({dim},)")

    clusters = sorted(model.clusters, key=lambda c: c.id)
    cent_matrix = np.stack([c.centroid.values for c in clusters])
    best = clusters[int(np.argmin(metric.pairwise(q[None, :], cent_matrix)[0]))]
    if not best.subclusters:
        return best.id, None
    subs = sorted(best.subclusters, key=lambda s: s.id)
    sub_matrix = np.stack([s.centroid.values for s in subs])
    chosen = subs[int(np.argmin(metric.pairwise(q[None, :], sub_matrix)[0]))]
    return best.id, chosen.id
