"""Coherence scoring and the benchmark comparison harness.

A sub-cluster's coherence error is its size minus the count of its most
frequent true category; a sub-cluster is coherent when the error is zero.
The harness runs the self-organiser over the five reference datasets and
prints the measured numbers beside the published ones, judging each dataset
against a tolerance band rather than point equality.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from . import self_organiser
from .dataset import Oracle, find_dataset, load_dataset
from .errors import DatasetUnavailable
from .self_organiser import ClusterModel, SelfOrgConfig

log = logging.getLogger(__name__)


def coherence_error(labels) -> int:
    """Size of a label multiset minus its largest single-category count."""
    counts = Counter(labels)
    if not counts:
        raise ValueError("coherence error of an empty label set is undefined")
    return sum(counts.values()) - max(counts.values())


@dataclass(frozen=True)
class SubClusterScore:
    subcluster_id: int
    size: int
    majority_category: int
    error: int


@dataclass(frozen=True)
class CoherenceReport:
    per_subcluster: list[SubClusterScore]
    total_incoherent: int
    cluster_count: int
    subcluster_count: int


def score_model(model: ClusterModel, oracle: Oracle) -> CoherenceReport:
    """Coherence error of every sub-cluster plus model-level totals."""
    scores = []
    for cluster in sorted(model.clusters, key=lambda c: c.id):
        for sub in sorted(cluster.subclusters, key=lambda s: s.id):
            try:
                labels = [oracle.category_of(rid) for rid in sorted(sub.member_ids)]
            except KeyError as exc:
                raise ValueError(f"row {exc.args[0]} missing from oracle") from exc
            counts = Counter(labels)
            top = max(counts.values())
            majority = min(c for c, n in counts.items() if n == top)
            scores.append(
                SubClusterScore(
                    subcluster_id=sub.id,
                    size=len(labels),
                    majority_category=majority,
                    error=len(labels) - top,
                )
            )
    return CoherenceReport(
        per_subcluster=scores,
        total_incoherent=sum(s.error for s in scores),
        cluster_count=len(model.clusters),
        subcluster_count=len(scores),
    )


def teaching_efficiency(report, n: int) -> float:
    """Oracle queries used per data row; below 1.0 means teaching was saved."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return report.queries_used / n


#: Published coherence results the harness prints measured values against.
REFERENCE_RESULTS = {
    "iris": {"incoherent": 2, "rows": 150, "so_clusters": 30, "actual": 3},
    "wine": {"incoherent": 4, "rows": 178, "so_clusters": 18, "actual": 3},
    "zoo": {"incoherent": 7, "rows": 101, "so_clusters": 18, "actual": 7},
    "liver": {"incoherent": 86, "rows": 345, "so_clusters": 62, "actual": 2},
    "abalone": {"incoherent": 2234, "rows": 4177, "so_clusters": 785, "actual": 29},
}

#: Acceptance bands.  Exact replication is out of reach (the published
#: numbers depend on unstated encoding and grid details), so each dataset
#: gets a generous band instead of point equality.
BANDS = {
    "iris": {"max_incoherent": 8, "subclusters": (3, 60)},
    "wine": {"max_incoherent": 18, "subclusters": (3, 60)},
    "zoo": {"max_incoherent": 15, "subclusters": (7, 50)},
    "liver": {"incoherent_ratio": (0.10, 0.45)},
    "abalone": {"incoherent_ratio": (0.30, 0.75)},
}


def _check_band(name: str, measured: dict) -> dict:
    band = BANDS[name]
    checks = {}
    if "max_incoherent" in band:
        checks["incoherent"] = {
            "limit": band["max_incoherent"],
            "value": measured["incoherent"],
            "ok": measured["incoherent"] <= band["max_incoherent"],
        }
    if "subclusters" in band:
        lo, hi = band["subclusters"]
        checks["subclusters"] = {
            "range": [lo, hi],
            "value": measured["subclusters"],
            "ok": lo <= measured["subclusters"] <= hi,
        }
    if "incoherent_ratio" in band:
        lo, hi = band["incoherent_ratio"]
        ratio = measured["incoherent"] / measured["rows"]
        checks["incoherent_ratio"] = {
            "range": [lo, hi],
            "value": ratio,
            "ok": lo <= ratio <= hi,
        }
    return checks


def evaluate_dataset(name: str, config: SelfOrgConfig, data_dir=None) -> dict:
    """Run the self-organiser on one named dataset and band-check the result."""
    csv_path, schema_path = find_dataset(name, data_dir=data_dir)
    rows, oracle, _ = load_dataset(csv_path, schema_path)
    model = self_organiser.run(rows, config)
    report = score_model(model, oracle)
    measured = {
        "incoherent": report.total_incoherent,
        "rows": len(rows),
        "clusters": report.cluster_count,
        "subclusters": report.subcluster_count,
        "iterations": model.iteration,
        "actual_categories": oracle.n_categories,
    }
    checks = _check_band(name, measured)
    return {
        "name": name,
        "status": "ok",
        "reference": REFERENCE_RESULTS[name],
        "measured": measured,
        "checks": checks,
        "passed": all(c["ok"] for c in checks.values()),
    }


def table1_harness(
    dataset_names,
    config: SelfOrgConfig | None = None,
    data_dir=None,
    allow_missing: bool = False,
) -> dict:
    """Comparison document over the requested datasets.

    Unavailable datasets are skipped with a notice; the document only counts
    as passed with missing entries when ``allow_missing`` is set.
    """
    config = config or SelfOrgConfig()
    results = []
    for name in dataset_names:
        try:
            results.append(evaluate_dataset(name, config, data_dir=data_dir))
        except DatasetUnavailable as exc:
            log.warning("skipping %s: %s", name, exc)
            results.append(
                {
                    "name": name,
                    "status": "missing",
                    "notice": str(exc),
                    "reference": REFERENCE_RESULTS.get(name),
                }
            )
    present = [r for r in results if r["status"] == "ok"]
    missing = [r for r in results if r["status"] == "missing"]
    passed = all(r["passed"] for r in present) and (allow_missing or not missing)
    return {
        "datasets": results,
        "missing": [r["name"] for r in missing],
        "allow_missing": allow_missing,
        "passed": passed,
    }


def render_table(document: dict) -> str:
    """Human-readable rendering: measured values beside the published ones."""
    header = (
        f"{'dataset':<10} {'incoherent':>18} {'clusters':>9} "
        f"{'subclusters':>21} {'actual':>7} {'band':>6}"
    )
    lines = [header, "-" * len(header)]
    for result in document["datasets"]:
        name = result["name"]
        reference = result.get("reference") or {}
        if result["status"] == "missing":
            lines.append(f"{name:<10} {'(dataset missing)':>18}")
            continue
        measured = result["measured"]
        incoherent = (
            f"{measured['incoherent']}/{measured['rows']} "
            f"(ref {reference['incoherent']}/{reference['rows']})"
        )
        subclusters = f"{measured['subclusters']} (ref {reference['so_clusters']})"
        verdict = "pass" if result["passed"] else "FAIL"
        lines.append(
            f"{name:<10} {incoherent:>18} {measured['clusters']:>9} "
            f"{subclusters:>21} {measured['actual_categories']:>7} {verdict:>6}"
        )
    lines.append("")
    lines.append("overall: " + ("pass" if document["passed"] else "FAIL"))
    return "\n".join(lines)
