"""JSON (de)serialization for cluster models and report documents.

All documents are written with sorted keys and a trailing newline so that
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .metric import Centroid
from .self_organiser import (
    Cluster,
    ClusterModel,
    IterationStats,
    SelfOrgConfig,
    SubCluster,
)

FORMAT_VERSION = 1


def dumps_canonical(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_json(path, document: dict) -> None:
    Path(path).write_text(dumps_canonical(document), encoding="utf-8")


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc


def _centroid_to_list(centroid: Centroid) -> list[float]:
    return [float(v) for v in centroid.values]


def model_to_dict(model: ClusterModel) -> dict:
    """Structural part of a model document (no envelope fields)."""
    return {
        "format_version": FORMAT_VERSION,
        "iterations": model.iteration,
        "trace": [
            {"iter": t.iteration, "cluster_count": t.cluster_count, "moved": t.moved}
            for t in model.trace
        ],
        "clusters": [
            {
                "id": cluster.id,
                "members": sorted(cluster.member_ids),
                "centroid": _centroid_to_list(cluster.centroid),
                "subclusters": [
                    {
                        "id": sub.id,
                        "members": sorted(sub.member_ids),
                        "centroid": _centroid_to_list(sub.centroid),
                    }
                    for sub in cluster.subclusters
                ],
            }
            for cluster in model.clusters
        ],
    }


def model_from_dict(document: dict) -> ClusterModel:
    try:
        version = document["format_version"]
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported model format_version {version}")
        config_doc = document.get("config", {})
        config = SelfOrgConfig(
            exemplar_threshold=config_doc.get("exemplar_threshold", 2),
            max_iterations=config_doc.get("max_iterations", 50),
            metric=config_doc.get("metric", "l2"),
        )
        clusters = []
        for cdoc in document["clusters"]:
            members = set(cdoc["members"])
            subclusters = [
                SubCluster(
                    id=sdoc["id"],
                    member_ids=set(sdoc["members"]),
                    centroid=Centroid(
                        values=np.asarray(sdoc["centroid"], dtype=float),
                        count=len(sdoc["members"]),
                    ),
                )
                for sdoc in cdoc["subclusters"]
            ]
            clusters.append(
                Cluster(
                    id=cdoc["id"],
                    member_ids=members,
                    centroid=Centroid(
                        values=np.asarray(cdoc["centroid"], dtype=float),
                        count=len(members),
                    ),
                    subclusters=subclusters,
                )
            )
        trace = [
            IterationStats(
                iteration=t["iter"], cluster_count=t["cluster_count"], moved=t["moved"]
            )
            for t in document.get("trace", [])
        ]
        return ClusterModel(
            clusters=clusters,
            iteration=document.get("iterations", 0),
            config=config,
            trace=trace,
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc


def load_model(path) -> ClusterModel:
    return model_from_dict(read_json(path))
