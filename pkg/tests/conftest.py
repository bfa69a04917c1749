"""Shared fixtures and small graph/series builders for the test suite."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

from actdyn import CollaborationNetwork, karate_club, largest_eigenvalue
from actdyn.preprocess import ActivitySeries

WEEK0 = date(2014, 1, 6)  # a Monday


def k2() -> CollaborationNetwork:
    return CollaborationNetwork(["a", "b"], [("a", "b")])


def triangle() -> CollaborationNetwork:
    return CollaborationNetwork(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])


def star(leaves: int) -> CollaborationNetwork:
    users = ["hub"] + [f"leaf{i}" for i in range(leaves)]
    return CollaborationNetwork(users, [("hub", u) for u in users[1:]])


def path(n: int) -> CollaborationNetwork:
    users = [str(i) for i in range(n)]
    return CollaborationNetwork(users, list(zip(users, users[1:])))


def isolated_node() -> CollaborationNetwork:
    return CollaborationNetwork(["solo"], [])


def random_graph(n: int, p: float, rng: np.random.Generator) -> CollaborationNetwork:
    users = [str(i) for i in range(n)]
    edges = [
        (users[i], users[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return CollaborationNetwork(users, edges)


def random_connected_graph(
    n: int, rng: np.random.Generator, extra_edge_prob: float = 0.08
) -> CollaborationNetwork:
    """Random spanning tree plus extra edges; always connected."""
    users = [str(i) for i in range(n)]
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((users[j], users[i]))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.append((users[i], users[j]))
    return CollaborationNetwork(users, edges)


def weekly_series(net: CollaborationNetwork, values: np.ndarray) -> ActivitySeries:
    """Wrap a (n_users, n_weeks) matrix with consecutive calendar weeks."""
    weeks = [WEEK0 + timedelta(weeks=i) for i in range(values.shape[1])]
    return ActivitySeries(users=net.users, weeks=weeks, values=values)


@pytest.fixture(scope="session")
def karate() -> CollaborationNetwork:
    return karate_club()


@pytest.fixture(scope="session")
def karate_kappa1(karate) -> float:
    return largest_eigenvalue(karate).kappa1
