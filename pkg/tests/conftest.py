from __future__ import annotations

import numpy as np
import pytest

from phc.dataset import DataRow, Oracle
from phc.metric import Centroid
from phc.self_organiser import Cluster, ClusterModel, SelfOrgConfig, SubCluster


def rows_from_values(values) -> list[DataRow]:
    """Build DataRows from a list of 1-D values or feature tuples."""
    out = []
    for rid, value in enumerate(values):
        vec = np.atleast_1d(np.asarray(value, dtype=float))
        out.append(DataRow(id=rid, features=vec))
    return out


def manual_model(spec, config=None):
    """Build a model from [(members_dict, [sub_member_sets...]), ...].

    members_dict maps row id -> feature value/tuple; centroids are computed
    as exact means.  Returns (model, rows).
    """
    clusters = []
    all_feats = {}
    for cid, (members, subs) in enumerate(spec):
        feats = {rid: np.atleast_1d(np.asarray(v, float)) for rid, v in members.items()}
        all_feats.update(feats)
        centroid = Centroid(
            np.stack([feats[r] for r in sorted(feats)]).mean(axis=0), len(feats)
        )
        subclusters = []
        for sub_members in subs:
            sub_feats = np.stack([all_feats[r] for r in sorted(sub_members)])
            subclusters.append(
                SubCluster(id=-1, member_ids=set(sub_members),
                           centroid=Centroid(sub_feats.mean(axis=0), len(sub_members)))
            )
        clusters.append(
            Cluster(id=cid, member_ids=set(members), centroid=centroid,
                    subclusters=subclusters)
        )
    model = ClusterModel(clusters=clusters, config=config or SelfOrgConfig())
    rows = rows_from_values([all_feats[r] for r in sorted(all_feats)])
    assert [r.id for r in rows] == sorted(all_feats)
    sid = 0
    for cluster in model.clusters:
        for sub in cluster.subclusters:
            sub.id = sid
            sid += 1
    return model, rows


def make_blobs(k: int, per_blob: int = 20, spread: float = 0.3, gap: float = 3.0,
               dim: int = 2, seed: int = 7):
    """Well-separated gaussian blobs: inter-blob distance >= 5x the spread.

    Returns (rows, oracle) where the oracle labels each row with its blob.
    """
    assert gap >= 5 * spread
    rng = np.random.default_rng(seed)
    rows, labels = [], {}
    rid = 0
    for blob in range(k):
        center = np.zeros(dim)
        center[0] = blob * gap
        for _ in range(per_blob):
            rows.append(DataRow(id=rid, features=center + rng.normal(0, spread, dim)))
            labels[rid] = blob
            rid += 1
    oracle = Oracle(labels=labels, category_names={b: f"blob{b}" for b in range(k)})
    return rows, oracle


@pytest.fixture(scope="session")
def iris_data():
    from phc.dataset import find_dataset, load_dataset

    csv_path, schema_path = find_dataset("iris")
    return load_dataset(csv_path, schema_path)


@pytest.fixture(scope="session")
def iris_model(iris_data):
    from phc import self_organiser

    rows, _, _ = iris_data
    return self_organiser.run(rows)
