"""Network construction from event logs and the adjacency primitive."""

import numpy as np
import pytest

from actdyn import (
    CollaborationNetwork,
    ContributionEvent,
    EventKind,
    InputError,
    build_qa_network,
    build_wiki_network,
)
from actdyn.graph import read_edge_list, read_events_csv, write_edge_list, write_events_csv

from conftest import k2, random_graph, star, triangle


def post(t, user, artifact):
    return ContributionEvent(t, user, EventKind.POST, artifact)


def reply(t, user, artifact, parent):
    return ContributionEvent(t, user, EventKind.REPLY, artifact, parent)


def edit(t, user, article):
    # wiki logs reuse the article id as the artifact and carry no parent
    return ContributionEvent(t, user, EventKind.REPLY, article)


def edge_set(net):
    return {tuple(sorted((net.users[i], net.users[j]))) for i, j in net.edges}


# -- qa builder ---------------------------------------------------------------


def test_qa_single_interaction():
    net = build_qa_network([post(0, "A", "Q1"), reply(1, "B", "B1", "Q1")])
    assert net.n == 2
    assert net.m == 1
    assert edge_set(net) == {("A", "B")}


def test_qa_self_reply_removed():
    net = build_qa_network([post(0, "A", "Q1"), reply(1, "A", "A1", "Q1")])
    assert net.n == 1
    assert net.m == 0


def test_qa_thread_with_comment_on_answer():
    # Hand enumeration: B answers A's question (B-A), C answers it (C-A),
    # C comments on B's answer (C-B) -> three edges.
    events = [
        post(0, "A", "Q1"),
        reply(1, "B", "B1", "Q1"),
        reply(2, "C", "C1", "Q1"),
        reply(3, "C", "C2", "B1"),
    ]
    net = build_qa_network(events)
    assert net.m == 3
    assert edge_set(net) == {("A", "B"), ("A", "C"), ("B", "C")}


def test_qa_duplicate_pairs_collapse():
    events = [
        post(0, "A", "Q1"),
        reply(1, "B", "B1", "Q1"),
        reply(2, "B", "B2", "Q1"),
    ]
    assert build_qa_network(events).m == 1


def test_qa_dangling_parent_rejected():
    events = [post(0, "A", "Q1"), reply(1, "B", "B1", "MISSING")]
    with pytest.raises(InputError, match="MISSING"):
        build_qa_network(events)


def test_qa_ambiguous_artifact_rejected():
    events = [post(0, "A", "Q1"), post(1, "B", "Q1")]
    with pytest.raises(InputError, match="two authors"):
        build_qa_network(events)


def test_qa_order_insensitive():
    rng = np.random.default_rng(11)
    events = [post(0, "A", "Q1"), post(0, "B", "Q2")]
    for i in range(20):
        user = f"u{i % 7}"
        target = events[int(rng.integers(0, len(events)))].artifact
        events.append(reply(i + 1, user, f"r{i}", target))
    reference = edge_set(build_qa_network(events))
    for seed in range(5):
        shuffled = list(events)
        np.random.default_rng(seed).shuffle(shuffled)
        assert edge_set(build_qa_network(shuffled)) == reference


def test_qa_zero_degree_users_kept():
    events = [post(0, "A", "Q1"), post(1, "B", "Q2"), reply(2, "C", "C1", "Q1")]
    net = build_qa_network(events)
    assert net.n == 3  # B never interacted but stays
    assert net.isolated_node_count == 1


# -- wiki builder ---------------------------------------------------------------


def test_wiki_consecutive_editors():
    events = [
        post(0, "A", "X"),
        edit(1, "B", "X"),
        edit(2, "A", "X"),
    ]
    net = build_wiki_network(events)
    assert net.m == 1  # A->B and B->A collapse; nothing else
    assert edge_set(net) == {("A", "B")}


def test_wiki_single_editor():
    events = [post(0, "A", "X"), edit(1, "A", "X"), edit(2, "A", "X")]
    net = build_wiki_network(events)
    assert net.n == 1
    assert net.m == 0


def test_wiki_per_article_pairs():
    events = [
        post(0, "A", "X"),
        edit(1, "B", "X"),
        post(2, "B", "Y"),
        edit(3, "C", "Y"),
    ]
    net = build_wiki_network(events)
    assert edge_set(net) == {("A", "B"), ("B", "C")}


def test_wiki_tie_break_by_ingestion_order():
    # same timestamp everywhere: consecutive pairs follow list order
    events = [post(5, "A", "X"), edit(5, "B", "X"), edit(5, "C", "X")]
    net = build_wiki_network(events)
    assert edge_set(net) == {("A", "B"), ("B", "C")}


def test_wiki_time_order_matters():
    early_b = [post(0, "A", "X"), edit(1, "B", "X"), edit(2, "C", "X")]
    late_b = [post(0, "A", "X"), edit(3, "B", "X"), edit(2, "C", "X")]
    assert edge_set(build_wiki_network(early_b)) == {("A", "B"), ("B", "C")}
    assert edge_set(build_wiki_network(late_b)) == {("A", "C"), ("B", "C")}


# -- invariants ---------------------------------------------------------------


def _fuzz_log(rng, n_users=12, n_events=60):
    events = [post(0, f"u{rng.integers(n_users)}", "seed")]
    for i in range(n_events):
        user = f"u{rng.integers(n_users)}"
        if rng.random() < 0.3:
            events.append(post(i + 1, user, f"q{i}"))
        else:
            target = events[int(rng.integers(0, len(events)))].artifact
            events.append(reply(i + 1, user, f"r{i}", target))
    return events


@pytest.mark.parametrize("seed", range(8))
def test_network_invariants_fuzz(seed):
    rng = np.random.default_rng(seed)
    events = _fuzz_log(rng)
    try:
        net = build_qa_network(events)
    except InputError:
        pytest.skip("ambiguous fuzz log")
    adj = net.adjacency()
    dense = adj.toarray()
    assert np.array_equal(dense, dense.T)
    assert np.all(np.diag(dense) == 0)
    assert dense.sum() == 2 * net.m
    assert set(dense.ravel()) <= {0.0, 1.0}
    users_in_events = {ev.user for ev in events}
    assert set(net.users) == users_in_events


def test_apply_adjacency_k2():
    assert np.allclose(k2().apply_adjacency(np.array([1.0, 0.0])), [0.0, 1.0])


def test_apply_adjacency_triangle():
    assert np.allclose(triangle().apply_adjacency(np.ones(3)), [2.0, 2.0, 2.0])


def test_apply_adjacency_star():
    net = star(4)
    result = net.apply_adjacency(np.ones(5))
    assert result[net.index_of("hub")] == 4.0
    for i in range(4):
        assert result[net.index_of(f"leaf{i}")] == 1.0


def test_apply_adjacency_length_mismatch():
    with pytest.raises(InputError):
        k2().apply_adjacency(np.ones(3))


@pytest.mark.parametrize("seed", range(5))
def test_apply_adjacency_linear_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    net = random_graph(30, 0.15, rng)
    v = rng.standard_normal(net.n)
    w = rng.standard_normal(net.n)
    a, b = rng.standard_normal(2)
    assert abs(net.apply_adjacency(v) @ w - v @ net.apply_adjacency(w)) <= 1e-12
    assert np.allclose(
        net.apply_adjacency(a * v + b * w),
        a * net.apply_adjacency(v) + b * net.apply_adjacency(w),
        atol=1e-12,
    )


# -- file formats ---------------------------------------------------------------


def test_events_csv_round_trip(tmp_path):
    events = [
        post(1388534400.0, "alice", "Q1"),
        reply(1388620800.0, "bob", "B1", "Q1"),
    ]
    path = tmp_path / "events.csv"
    write_events_csv(events, path)
    assert read_events_csv(path) == events


def test_events_csv_iso_timestamps(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text(
        "timestamp,user,kind,artifact,parent\n"
        "2014-01-01T00:00:00Z,alice,post,Q1,\n"
        "2014-01-01T05:00:00+01:00,bob,reply,B1,Q1\n"
    )
    events = read_events_csv(path)
    assert events[0].timestamp == 1388534400.0
    assert events[1].timestamp == 1388534400.0 + 4 * 3600


def test_events_csv_bad_rows_report_line(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text(
        "timestamp,user,kind,artifact,parent\n"
        "2014-01-01T00:00:00Z,alice,post,Q1,\n"
        "not-a-time,bob,reply,B1,Q1\n"
    )
    with pytest.raises(InputError, match=":3"):
        read_events_csv(path)

    path.write_text("timestamp,user,kind,artifact,parent\n1,bob,shout,B1,\n")
    with pytest.raises(InputError, match="post or reply"):
        read_events_csv(path)


def test_events_csv_empty(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text("timestamp,user,kind,artifact,parent\n")
    with pytest.raises(InputError, match="no events"):
        read_events_csv(path)


def test_edge_list_round_trip_with_isolated(tmp_path):
    net = CollaborationNetwork(["a", "b", "loner"], [("a", "b")])
    path = tmp_path / "net.edges"
    write_edge_list(net, path)
    loaded = read_edge_list(path)
    assert loaded.n == 3
    assert loaded.m == 1
    assert loaded.isolated_node_count == 1
    assert set(loaded.users) == {"a", "b", "loner"}
