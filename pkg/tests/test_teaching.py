from __future__ import annotations

import numpy as np
import pytest

from phc.dataset import Oracle
from phc.errors import OracleInconsistencyError
from phc.modelio import dumps_canonical, model_to_dict
from phc.teaching import (
    Confidence,
    SessionComplete,
    build_report,
    incorporate,
    infer_labels,
    query_once,
    query_pool,
    run_teaching,
    start_session,
)

from conftest import make_blobs, manual_model


def oracle_for(labels: dict[int, int], names=None) -> Oracle:
    cats = sorted(set(labels.values()))
    return Oracle(
        labels=dict(labels),
        category_names=names or {c: f"cat{c}" for c in cats},
    )


def mixed_sub_fixture():
    """One cluster, one sub-cluster of four rows: two near 0 (A), two near 1 (B)."""
    model, rows = manual_model([({0: 0.0, 1: 0.1, 2: 0.9, 3: 1.0}, [[0, 1, 2, 3]])])
    oracle = oracle_for({0: 0, 1: 0, 2: 1, 3: 1}, names={0: "A", 1: "B"})
    return model, rows, oracle


def two_sub_fixture():
    """Two pure sub-clusters in separate clusters, categories A and B."""
    model, rows = manual_model([
        ({0: 0.0, 1: 0.2}, [[0, 1]]),
        ({2: 5.0, 3: 5.2}, [[2, 3]]),
    ])
    oracle = oracle_for({0: 0, 1: 0, 2: 1, 3: 1}, names={0: "A", 1: "B"})
    return model, rows, oracle


# --- session start -------------------------------------------------------

def test_fresh_session_all_guess():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    assert session.query_log == []
    labels = infer_labels(session)
    assert all(level is Confidence.GUESS for _, level in labels.values())
    assert all(cat is None for cat, _ in labels.values())


def test_same_seed_same_first_query():
    model, rows, oracle = two_sub_fixture()
    first_a = query_once(start_session(model, rows, oracle, seed=99))
    first_b = query_once(start_session(model, rows, oracle, seed=99))
    assert first_a == first_b


def test_teaching_never_mutates_the_model():
    model, rows, oracle = two_sub_fixture()
    before = dumps_canonical(model_to_dict(model))
    session = start_session(model, rows, oracle, seed=5)
    run_teaching(session, oracle, budget=len(rows))
    assert dumps_canonical(model_to_dict(model)) == before


def test_unconverged_model_rejected():
    model, rows, _ = two_sub_fixture()
    model.clusters[0].subclusters = []
    with pytest.raises(ValueError):
        start_session(model, rows, oracle_for({0: 0, 1: 0, 2: 1, 3: 1}), seed=0)


# --- query_once ----------------------------------------------------------

def test_pool_of_one_returns_that_row():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=3)
    session.asked |= {0, 1, 2}
    row_id, category = query_once(session)
    assert row_id == 3
    assert category == oracle.category_of(3)


def test_queried_row_becomes_known():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=3)
    row_id, category = query_once(session)
    incorporate(session, row_id, category)
    assert infer_labels(session)[row_id] == (category, Confidence.KNOWN)


def test_exhausted_pool_raises_session_complete():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=3)
    session.asked |= {0, 1, 2, 3}
    with pytest.raises(SessionComplete):
        query_once(session)


def test_no_requery_of_asked_rows():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=21)
    seen = []
    for _ in range(4):
        row_id, category = query_once(session)
        incorporate(session, row_id, category)
        seen.append(row_id)
    assert sorted(seen) == [0, 1, 2, 3]


# --- incorporate ---------------------------------------------------------

def test_first_taught_row_creates_leaf():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked.add(0)
    incorporate(session, 0, 0)
    assert set(session.leaves) == {0}
    leaf = session.leaves[0]
    assert leaf.taught_rows == {0}
    assert np.allclose(leaf.true_centroid.values, rows[0].features)


def test_conflicting_sub_cluster_grows_internode():
    model, rows, oracle = mixed_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked |= {0, 3}
    incorporate(session, 0, 0)
    assert not session.internodes
    incorporate(session, 3, 1)
    sub_id = session._row_sub[0]
    node = session.internodes[sub_id]
    assert [b.category for b in node.branches] == [0, 1]
    assert node.branches[0].row_ids == {0}
    assert node.branches[1].row_ids == {3}


def test_second_row_of_same_category_extends_leaf():
    model, rows, oracle = mixed_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked |= {0, 1}
    incorporate(session, 0, 0)
    incorporate(session, 1, 0)
    assert not session.internodes
    leaf = session.leaves[0]
    assert leaf.taught_rows == {0, 1}
    assert np.allclose(leaf.true_centroid.values, [0.05])


def test_incorporate_requires_queried_row():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    with pytest.raises(ValueError):
        incorporate(session, 0, 0)


def test_inconsistent_label_is_fatal():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked.add(0)
    incorporate(session, 0, 0)
    with pytest.raises(OracleInconsistencyError):
        incorporate(session, 0, 1)


# --- infer_labels --------------------------------------------------------

def test_single_link_propagates_to_whole_subcluster():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked.add(0)
    incorporate(session, 0, 0)
    labels = infer_labels(session)
    assert labels[0] == (0, Confidence.KNOWN)
    assert labels[1] == (0, Confidence.INFERRED)
    # the other sub-cluster has no link; nearest leaf centroid is a guess
    assert labels[2] == (0, Confidence.GUESS)
    assert labels[3] == (0, Confidence.GUESS)


def test_conflicted_subcluster_uses_nearest_branch():
    model, rows, oracle = mixed_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    session.asked |= {0, 3}
    incorporate(session, 0, 0)
    incorporate(session, 3, 1)
    labels = infer_labels(session)
    assert labels[1] == (0, Confidence.INFERRED)  # 0.1 is nearer branch A at 0.0
    assert labels[2] == (1, Confidence.INFERRED)  # 0.9 is nearer branch B at 1.0


def test_empty_tree_gives_no_labels():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    assert all(
        value == (None, Confidence.GUESS) for value in infer_labels(session).values()
    )


# --- smart sampling pool -------------------------------------------------

def test_smart_pool_prefers_uncovered_subclusters():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1, smart_sampling=True)
    session.asked.add(0)
    incorporate(session, 0, 0)
    assert query_pool(session) == [2, 3]  # the unlinked sub-cluster only


def test_smart_pool_drains_conflicted_subclusters():
    model, rows, oracle = mixed_sub_fixture()
    session = start_session(model, rows, oracle, seed=1, smart_sampling=True)
    session.asked |= {0, 3}
    incorporate(session, 0, 0)
    incorporate(session, 3, 1)
    assert query_pool(session) == [1, 2]  # conflicted sub keeps its unasked rows


def test_smart_pool_empties_when_all_covered_coherently():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1, smart_sampling=True)
    for rid, cat in ((0, 0), (2, 1)):
        session.asked.add(rid)
        incorporate(session, rid, cat)
    assert query_pool(session) == []


# --- run_teaching --------------------------------------------------------

def test_budget_zero_reports_pure_guessing():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=1)
    report = run_teaching(session, oracle, budget=0)
    assert report.queries_used == 0
    assert report.accuracy == 0.0
    assert report.guess == len(rows)


def test_blobs_need_one_query_per_subcluster():
    rows, oracle = make_blobs(k=3, per_blob=12, spread=0.25, gap=4.0, seed=13)
    from phc.self_organiser import run as so_run

    model = so_run(rows)
    session = start_session(model, rows, oracle, seed=42, smart_sampling=True)
    report = run_teaching(session, oracle, budget=len(rows))
    assert report.accuracy == 1.0
    assert report.queries_used <= model.subcluster_count()
    assert report.queries_used < len(rows)


def test_query_budget_is_respected():
    rows, oracle = make_blobs(k=2, per_blob=10, spread=0.2, gap=4.0, seed=8)
    from phc.self_organiser import run as so_run

    model = so_run(rows)
    session = start_session(model, rows, oracle, seed=0)
    report = run_teaching(session, oracle, budget=5)
    assert report.queries_used <= 5


def test_confidence_counts_partition_rows():
    model, rows, oracle = mixed_sub_fixture()
    session = start_session(model, rows, oracle, seed=2)
    for _ in range(2):
        row_id, category = query_once(session)
        incorporate(session, row_id, category)
    report = build_report(session, oracle)
    assert report.known + report.inferred + report.guess == len(rows)


def test_known_labels_are_monotone():
    model, rows, oracle = two_sub_fixture()
    session = start_session(model, rows, oracle, seed=7)
    known: dict[int, int] = {}
    while True:
        pool = query_pool(session)
        if not pool:
            break
        row_id, category = query_once(session)
        incorporate(session, row_id, category)
        labels = infer_labels(session)
        for rid, expected in known.items():
            assert labels[rid] == (expected, Confidence.KNOWN)
        known[row_id] = category


def test_run_teaching_deterministic():
    rows, oracle = make_blobs(k=2, per_blob=8, spread=0.2, gap=4.0, seed=4)
    from phc.self_organiser import run as so_run
    from phc.teaching import report_to_dict

    model = so_run(rows)
    docs = []
    for _ in range(2):
        session = start_session(model, rows, oracle, seed=11)
        report = run_teaching(session, oracle, budget=len(rows))
        docs.append(dumps_canonical(report_to_dict(report, session, oracle)))
    assert docs[0] == docs[1]
