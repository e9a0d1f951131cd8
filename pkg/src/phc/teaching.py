"""Supervised teaching phase over a frozen cluster model.

The learner may ask an oracle for the true category of one row at a time.
Each answer lands in a knowledge tree: a flat set of category leaves holding
the taught rows and their true centroid, plus cross-links from sub-clusters
to the categories taught inside them.  When a sub-cluster turns out to hold
two or more categories, an inter-node discriminates between the taught row
sets of that sub-cluster only.  Untaught rows take the label of their
sub-cluster's unique link (Inferred), of the nearest inter-node branch
(Inferred), or of the nearest leaf centroid as a fallback (Guess).

The model is never restructured during teaching; the only randomness in the
whole package is this module's seeded query sampler.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dataset import Oracle
from .errors import OracleInconsistencyError
from .metric import Centroid, Metric, get_metric
from .self_organiser import ClusterModel


class Confidence(str, Enum):
    KNOWN = "Known"
    INFERRED = "Inferred"
    GUESS = "Guess"


@dataclass
class CategoryLeaf:
    category: int
    taught_rows: set[int]
    true_centroid: Centroid


@dataclass
class InterNodeBranch:
    category: int
    row_ids: set[int]
    centroid: Centroid


@dataclass
class InterNode:
    subcluster_id: int
    branches: list[InterNodeBranch]


@dataclass
class TeachingSession:
    model: ClusterModel
    oracle: Oracle
    seed: int
    smart_sampling: bool = False
    leaves: dict[int, CategoryLeaf] = field(default_factory=dict)
    internodes: dict[int, InterNode] = field(default_factory=dict)
    cross_links: dict[int, set[int]] = field(default_factory=dict)
    asked: set[int] = field(default_factory=set)
    query_log: list[tuple[int, int, int]] = field(default_factory=list)

    # derived, fixed at session start
    _rng: random.Random = field(default_factory=random.Random, repr=False)
    _features: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _row_sub: dict[int, int] = field(default_factory=dict, repr=False)
    _sub_rows: dict[int, set[int]] = field(default_factory=dict, repr=False)
    _metric: Metric = None  # type: ignore[assignment]


class SessionComplete(Exception):
    """Raised by query_once when the sampling pool is empty."""


@dataclass(frozen=True)
class TeachingReport:
    queries_used: int
    accuracy: float
    known: int
    inferred: int
    guess: int
    query_log: list[tuple[int, int, int]]
    per_category: dict[str, dict]


def start_session(
    model: ClusterModel,
    rows,
    oracle: Oracle,
    seed: int,
    smart_sampling: bool = False,
) -> TeachingSession:
    """Open a teaching session over a converged model.

    ``rows`` is the same universe the model was built on; the session needs
    the feature vectors to maintain leaf and branch centroids.  The model is
    treated as read-only throughout.
    """
    if not model.clusters:
        raise ValueError("cannot teach an empty model")
    session = TeachingSession(
        model=model, oracle=oracle, seed=seed, smart_sampling=smart_sampling
    )
    session._rng = random.Random(seed)
    session._features = {r.id: np.asarray(r.features, dtype=float) for r in rows}
    session._metric = get_metric(model.config.metric)
    for cluster in model.clusters:
        for sub in cluster.subclusters:
            session._sub_rows[sub.id] = set(sub.member_ids)
            for rid in sub.member_ids:
                session._row_sub[rid] = sub.id
    if set(session._row_sub) != model.row_ids():
        raise ValueError(
            "model rows are not fully covered by sub-clusters; "
            "teach a converged model"
        )
    missing = set(session._row_sub) - set(session._features)
    if missing:
        raise ValueError(f"model rows missing from the dataset: {sorted(missing)[:5]}")
    return session


def query_pool(session: TeachingSession) -> list[int]:
    """Row ids the sampler may draw from, in ascending id order.

    Uniform mode: every unasked row.  Smart mode: unasked rows in
    sub-clusters with no cross-link yet, then, once all are covered, unasked
    rows in conflicted (multi-link) sub-clusters.
    """
    unasked = [rid for rid in sorted(session._row_sub) if rid not in session.asked]
    if not session.smart_sampling:
        return unasked
    uncovered = [
        rid
        for rid in unasked
        if len(session.cross_links.get(session._row_sub[rid], ())) == 0
    ]
    if uncovered:
        return uncovered
    return [
        rid
        for rid in unasked
        if len(session.cross_links.get(session._row_sub[rid], ())) >= 2
    ]


def query_once(session: TeachingSession) -> tuple[int, int]:
    """Draw one random unasked row from the pool and ask the oracle."""
    pool = query_pool(session)
    if not pool:
        raise SessionComplete("no queryable rows remain")
    row_id = pool[session._rng.randrange(len(pool))]
    category = session.oracle.category_of(row_id)
    session.asked.add(row_id)
    session.query_log.append((len(session.query_log) + 1, row_id, category))
    return row_id, category


def incorporate(session: TeachingSession, row_id: int, category: int) -> TeachingSession:
    """Fold one taught (row, category) fact into the knowledge tree."""
    if row_id not in session.asked:
        raise ValueError(f"row {row_id} was never queried")
    for leaf in session.leaves.values():
        if row_id in leaf.taught_rows and leaf.category != category:
            raise OracleInconsistencyError(
                f"row {row_id} taught as both {leaf.category} and {category}"
            )

    leaf = session.leaves.get(category)
    if leaf is None:
        leaf = CategoryLeaf(category=category, taught_rows=set(), true_centroid=None)
        session.leaves[category] = leaf
    leaf.taught_rows.add(row_id)
    leaf.true_centroid = _mean_of(session, leaf.taught_rows)

    sub_id = session._row_sub[row_id]
    links = session.cross_links.setdefault(sub_id, set())
    links.add(category)
    if len(links) >= 2:
        _rebuild_internode(session, sub_id)
    return session


def _mean_of(session: TeachingSession, row_ids: set[int]) -> Centroid:
    matrix = np.stack([session._features[rid] for rid in sorted(row_ids)])
    return Centroid(values=matrix.mean(axis=0), count=len(row_ids))


def _rebuild_internode(session: TeachingSession, sub_id: int) -> None:
    """Branches hold this sub-cluster's taught rows per category, nothing more."""
    taught_here = session._sub_rows[sub_id] & session.asked
    per_category: dict[int, set[int]] = {}
    for rid in taught_here:
        per_category.setdefault(session.oracle.category_of(rid), set()).add(rid)
    branches = [
        InterNodeBranch(
            category=category,
            row_ids=row_ids,
            centroid=_mean_of(session, row_ids),
        )
        for category, row_ids in sorted(per_category.items())
    ]
    session.internodes[sub_id] = InterNode(subcluster_id=sub_id, branches=branches)


def infer_labels(session: TeachingSession) -> dict[int, tuple[int | None, Confidence]]:
    """Label every row with the best current knowledge and a confidence level.

    Taught rows are Known.  A row in a sub-cluster with exactly one
    cross-link inherits that category (Inferred); in a conflicted
    sub-cluster the nearest inter-node branch centroid decides (Inferred);
    with no link at all the nearest leaf centroid is a Guess, or no label
    when nothing has been taught yet.
    """
    metric = session._metric
    taught_category = {
        rid: leaf.category
        for leaf in session.leaves.values()
        for rid in leaf.taught_rows
    }
    leaf_items = sorted(session.leaves.items())
    leaf_matrix = (
        np.stack([leaf.true_centroid.values for _, leaf in leaf_items])
        if leaf_items
        else None
    )

    out: dict[int, tuple[int | None, Confidence]] = {}
    for rid in sorted(session._row_sub):
        if rid in taught_category:
            out[rid] = (taught_category[rid], Confidence.KNOWN)
            continue
        sub_id = session._row_sub[rid]
        links = session.cross_links.get(sub_id, set())
        if len(links) == 1:
            out[rid] = (next(iter(links)), Confidence.INFERRED)
        elif len(links) >= 2:
            node = session.internodes[sub_id]
            q = session._features[rid][None, :]
            branch_matrix = np.stack([b.centroid.values for b in node.branches])
            best = int(np.argmin(metric.pairwise(q, branch_matrix)[0]))
            out[rid] = (node.branches[best].category, Confidence.INFERRED)
        else:
            if leaf_matrix is None:
                out[rid] = (None, Confidence.GUESS)
            else:
                q = session._features[rid][None, :]
                best = int(np.argmin(metric.pairwise(q, leaf_matrix)[0]))
                out[rid] = (leaf_items[best][0], Confidence.GUESS)
    return out


def _all_correct(session: TeachingSession, oracle: Oracle) -> bool:
    inferred = infer_labels(session)
    return all(
        inferred[rid][0] == oracle.category_of(rid) for rid in session._row_sub
    )


def run_teaching(session: TeachingSession, oracle: Oracle, budget: int) -> TeachingReport:
    """Query-and-incorporate until done, budget out, or nothing left to ask.

    "Done" means every row's inferred label matches the oracle; that check
    lives here in the harness, the learner never sees untaught labels.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    while len(session.query_log) < budget:
        if _all_correct(session, oracle):
            break
        pool = query_pool(session)
        if not pool:
            break
        row_id, category = query_once(session)
        incorporate(session, row_id, category)
    return build_report(session, oracle)


def build_report(session: TeachingSession, oracle: Oracle) -> TeachingReport:
    inferred = infer_labels(session)
    n = len(session._row_sub)
    correct = sum(
        1 for rid, (cat, _) in inferred.items() if cat == oracle.category_of(rid)
    )
    counts = {level: 0 for level in Confidence}
    for _, level in inferred.values():
        counts[level] += 1

    per_category: dict[str, dict] = {}
    for cid in sorted(oracle.category_names):
        name = oracle.category_names[cid]
        predicted = [rid for rid, (cat, _) in inferred.items() if cat == cid]
        true_hits = sum(1 for rid in predicted if oracle.category_of(rid) == cid)
        per_category[name] = {
            "predicted": len(predicted),
            "correct": true_hits,
            "precision": (true_hits / len(predicted)) if predicted else 0.0,
            "support": sum(1 for v in oracle.labels.values() if v == cid),
        }

    return TeachingReport(
        queries_used=len(session.query_log),
        accuracy=correct / n,
        known=counts[Confidence.KNOWN],
        inferred=counts[Confidence.INFERRED],
        guess=counts[Confidence.GUESS],
        query_log=list(session.query_log),
        per_category=per_category,
    )


def report_to_dict(report: TeachingReport, session: TeachingSession, oracle: Oracle) -> dict:
    """JSON form of a report, including per-row and per-sub-cluster labels."""
    inferred = infer_labels(session)
    names = oracle.category_names
    row_labels = {
        str(rid): {
            "category": names[cat] if cat is not None else None,
            "confidence": level.value,
        }
        for rid, (cat, level) in inferred.items()
    }
    subcluster_labels = {}
    for sub_id in sorted(session._sub_rows):
        links = session.cross_links.get(sub_id, set())
        if len(links) == 1:
            category, level = next(iter(links)), Confidence.INFERRED
        elif len(links) >= 2:
            category, level = None, Confidence.INFERRED
        else:
            category, level = None, Confidence.GUESS
        subcluster_labels[str(sub_id)] = {
            "category": names[category] if category is not None else None,
            "confidence": level.value,
            "links": sorted(names[c] for c in links),
        }
    return {
        "queries_used": report.queries_used,
        "accuracy": report.accuracy,
        "known": report.known,
        "inferred": report.inferred,
        "guess": report.guess,
        "query_log": [
            {"step": step, "row": rid, "category": names[cat]}
            for step, rid, cat in report.query_log
        ],
        "per_category": report.per_category,
        "row_labels": row_labels,
        "subcluster_labels": subcluster_labels,
    }
