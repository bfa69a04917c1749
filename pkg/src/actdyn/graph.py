"""Undirected collaboration networks built from contribution event logs.

Users are nodes; an edge records that two users collaborated at least once.
Two builders cover the two log flavors: question/answer threads (an edge
between a reply's author and the author of whatever was replied to) and
wiki change-logs (an edge between chronologically consecutive editors of
the same article). Networks are simple (0/1 adjacency, no self-loops) and
keep zero-degree users.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import InputError


_DENSE_OPERATOR_LIMIT = 512


class EventKind(Enum):
    POST = "post"
    REPLY = "reply"


@dataclass(frozen=True)
class ContributionEvent:
    """One logged contribution.

    timestamp is UTC seconds. artifact identifies the content this event
    created (question, answer, comment, or article); parent identifies the
    artifact it directly responds to (None for posts and for wiki edits).
    """

    timestamp: float
    user: str
    kind: EventKind
    artifact: str
    parent: str | None = None

    def __post_init__(self):
        if not np.isfinite(self.timestamp):
            raise InputError(f"event has non-finite timestamp: {self!r}")


class CollaborationNetwork:
    """Immutable simple undirected graph over user identifiers.

    External user ids are mapped to dense indices 0..n-1 on construction;
    the mapping is stable for the lifetime of the network. Adjacency is
    stored sparse (CSR) for mat-vec work.
    """

    def __init__(self, users: Sequence[str], edges: Iterable[tuple[str, str]]):
        self._users: list[str] = list(users)
        self._index: dict[str, int] = {u: i for i, u in enumerate(self._users)}
        if len(self._index) != len(self._users):
            raise InputError("duplicate user ids in node list")

        pairs: set[tuple[int, int]] = set()
        for a, b in edges:
            ia, ib = self._index[a], self._index[b]
            if ia == ib:
                continue  # self-loops never enter the network
            pairs.add((min(ia, ib), max(ia, ib)))
        self._edges = frozenset(pairs)

        n = len(self._users)
        if pairs:
            r = np.fromiter((p[0] for p in self._edges), dtype=np.int64)
            c = np.fromiter((p[1] for p in self._edges), dtype=np.int64)
            data = np.ones(2 * len(self._edges))
            adj = sparse.coo_matrix(
                (data, (np.concatenate([r, c]), np.concatenate([c, r]))),
                shape=(n, n),
            )
            self._adj = adj.tocsr()
        else:
            self._adj = sparse.csr_matrix((n, n))
        self._dense: np.ndarray | None = None
        self._degree = np.asarray(self._adj.sum(axis=1)).ravel()

    # -- structure ----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._users)

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def users(self) -> list[str]:
        return list(self._users)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Edges as dense-index pairs (i, j) with i < j."""
        return self._edges

    @property
    def degree(self) -> np.ndarray:
        return self._degree.copy()

    @property
    def isolated_node_count(self) -> int:
        return int(np.count_nonzero(self._degree == 0))

    def index_of(self, user: str) -> int:
        try:
            return self._index[user]
        except KeyError:
            raise InputError(f"unknown user id: {user!r}") from None

    def has_user(self, user: str) -> bool:
        return user in self._index

    def adjacency(self) -> sparse.csr_matrix:
        """The symmetric 0/1 adjacency matrix (CSR, shared, do not mutate)."""
        return self._adj

    def adjacency_operator(self):
        """Adjacency in whichever backing wins for this size.

        Dense mat-vec beats CSR below a few hundred nodes; integrators run
        millions of mat-vecs, so the crossover matters. Both backings
        support `adj @ v`. Shared, do not mutate.
        """
        if self.n <= _DENSE_OPERATOR_LIMIT:
            if self._dense is None:
                self._dense = self._adj.toarray()
            return self._dense
        return self._adj

    def apply_adjacency(self, v: np.ndarray) -> np.ndarray:
        """Adjacency mat-vec: result[i] = sum of v[j] over neighbors j of i."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise InputError(
                f"vector length {v.shape} does not match node count {self.n}"
            )
        return self.adjacency_operator() @ v

    def edge_users(self) -> list[tuple[str, str]]:
        return [(self._users[i], self._users[j]) for i, j in sorted(self._edges)]

    def __repr__(self):
        return f"CollaborationNetwork(n={self.n}, m={self.m})"


# -- builders ---------------------------------------------------------------


def build_qa_network(events: Sequence[ContributionEvent]) -> CollaborationNetwork:
    """Network from a question/answer log.

    Every reply adds an undirected edge between its author and the author
    of the artifact it directly responds to (a question for answers, an
    answer or question for comments). Self-pairs are dropped and duplicate
    pairs collapse to one edge. Event order does not matter.
    """
    if not events:
        raise InputError("no events")

    author_of: dict[str, str] = {}
    for ev in events:
        prev = author_of.get(ev.artifact)
        if prev is not None and prev != ev.user:
            raise InputError(
                f"artifact {ev.artifact!r} is claimed by two authors "
                f"({prev!r} and {ev.user!r}); ambiguous log"
            )
        author_of[ev.artifact] = ev.user

    edges: list[tuple[str, str]] = []
    for ev in events:
        if ev.kind is not EventKind.REPLY:
            continue
        if not ev.parent:
            raise InputError(f"reply event without parent reference: {ev!r}")
        target_author = author_of.get(ev.parent)
        if target_author is None:
            raise InputError(
                f"dangling parent reference {ev.parent!r} in event {ev!r}"
            )
        edges.append((ev.user, target_author))

    users = _unique_users(events)
    return CollaborationNetwork(users, edges)


def build_wiki_network(events: Sequence[ContributionEvent]) -> CollaborationNetwork:
    """Network from a wiki change-log.

    Per article, events are sorted chronologically (ties broken by ingestion
    order, which makes builds reproducible) and an edge is added between each
    pair of consecutive distinct editors.
    """
    if not events:
        raise InputError("no events")

    by_artifact: dict[str, list[tuple[float, int, str]]] = {}
    for seq, ev in enumerate(events):
        by_artifact.setdefault(ev.artifact, []).append((ev.timestamp, seq, ev.user))

    edges: list[tuple[str, str]] = []
    for history in by_artifact.values():
        history.sort()
        for (_, _, a), (_, _, b) in zip(history, history[1:]):
            if a != b:
                edges.append((a, b))

    users = _unique_users(events)
    return CollaborationNetwork(users, edges)


def _unique_users(events: Sequence[ContributionEvent]) -> list[str]:
    seen: dict[str, None] = {}
    for ev in sorted(events, key=lambda e: (e.timestamp, e.user)):
        seen.setdefault(ev.user, None)
    return list(seen)


# -- event-log CSV ----------------------------------------------------------

_CSV_HEADER = ["timestamp", "user", "kind", "artifact", "parent"]


def parse_timestamp(raw: str) -> float:
    """ISO-8601 or integer/float epoch seconds, normalized to UTC seconds."""
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    text = raw.replace("Z", "+00:00")  # fromisoformat lacks Z-support on 3.10
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise InputError(f"unparseable timestamp: {raw!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def read_events_csv(path: str | Path) -> list[ContributionEvent]:
    """Read an event log (header: timestamp,user,kind,artifact,parent).

    Raises InputError with the offending line number on malformed rows.
    """
    events: list[ContributionEvent] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: no events")
        if [h.strip().lower() for h in header] != _CSV_HEADER:
            raise InputError(
                f"{path}: expected header {','.join(_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 5:
                raise InputError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            ts_raw, user, kind_raw, artifact, parent = (c.strip() for c in row)
            try:
                ts = parse_timestamp(ts_raw)
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            try:
                kind = EventKind(kind_raw.lower())
            except ValueError:
                raise InputError(
                    f"{path}:{lineno}: kind must be post or reply, got {kind_raw!r}"
                ) from None
            if not user:
                raise InputError(f"{path}:{lineno}: empty user")
            if not artifact:
                raise InputError(f"{path}:{lineno}: empty artifact")
            events.append(
                ContributionEvent(ts, user, kind, artifact, parent or None)
            )
    if not events:
        raise InputError(f"{path}: no events")
    return events


def write_events_csv(events: Sequence[ContributionEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for ev in events:
            writer.writerow(
                [repr(ev.timestamp), ev.user, ev.kind.value, ev.artifact,
                 ev.parent or ""]
            )


# -- edge-list export/import -------------------------------------------------


def write_edge_list(net: CollaborationNetwork, path: str | Path) -> None:
    """Edge-list text (userA<TAB>userB per line) plus a JSON sidecar.

    The sidecar records {n, m, isolated_node_count} and additionally the
    isolated node ids, which the edge-list lines cannot represent.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in net.edge_users():
            fh.write(f"{a}\t{b}\n")
    degree = net.degree
    isolated = [u for u, d in zip(net.users, degree) if d == 0]
    sidecar = {
        "n": net.n,
        "m": net.m,
        "isolated_node_count": net.isolated_node_count,
        "isolated_nodes": isolated,
    }
    with open(path.with_suffix(path.suffix + ".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_edge_list(path: str | Path) -> CollaborationNetwork:
    """Rebuild a network from an edge-list file (and sidecar, if present)."""
    path = Path(path)
    edges: list[tuple[str, str]] = []
    users: dict[str, None] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'userA<TAB>userB'")
            a, b = parts[0].strip(), parts[1].strip()
            if not a or not b:
                raise InputError(f"{path}:{lineno}: empty user id")
            users.setdefault(a, None)
            users.setdefault(b, None)
            edges.append((a, b))
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if sidecar_path.exists():
        with open(sidecar_path, encoding="utf-8") as fh:
            sidecar = json.load(fh)
        for u in sidecar.get("isolated_nodes", []):
            users.setdefault(u, None)
    return CollaborationNetwork(list(users), edges)
