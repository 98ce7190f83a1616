"""AS-level topology: relationships, customer cones, and the provider-free clique.

The graph is loaded from the standard serial-1 AS-relationship format:
``<asnA>|<asnB>|-1`` records that asnA is a transit provider of asnB, and
``<asnA>|<asnB>|0`` records a settlement-free peering.  Provider chains must
be acyclic; the propagation engine relies on that to converge.
"""

from __future__ import annotations

import enum
import logging
from collections import defaultdict
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

MAX_ASN = 2**32 - 1


class TopologyError(ValueError):
    """Raised for malformed relationship data or invariant violations."""


class Relationship(enum.IntEnum):
    """Relationship code as recorded in a serial-1 data line."""

    P2C = -1
    P2P = 0


class Rel(str, enum.Enum):
    """What a neighbor (or route source) is, from one AS's point of view.

    SELF is not a topology relation; it marks locally originated routes in
    the routing engine.
    """

    CUSTOMER = "customer"
    PEER = "peer"
    PROVIDER = "provider"
    SELF = "self"


def _check_asn(asn: int) -> int:
    if not isinstance(asn, int) or isinstance(asn, bool) or not 0 < asn <= MAX_ASN:
        raise TopologyError(f"invalid ASN {asn!r}: must be a positive 32-bit integer")
    return asn


class Topology:
    """Immutable AS graph with provider/customer/peer adjacency.

    Construct via :meth:`from_records` or :func:`load_topology`; instances are
    safe for concurrent reads.
    """

    def __init__(
        self,
        providers: Mapping[int, frozenset[int]],
        customers: Mapping[int, frozenset[int]],
        peers: Mapping[int, frozenset[int]],
        ix_memberships: Mapping[str, frozenset[int]] | None = None,
    ):
        self.providers = dict(providers)
        self.customers = dict(customers)
        self.peers = dict(peers)
        self.asns = frozenset(self.providers)
        self.ix_memberships = dict(ix_memberships or {})
        self._cone_cache: dict[int, frozenset[int]] = {}

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[int, int, int]],
        ix_memberships: Mapping[str, Iterable[int]] | None = None,
    ) -> "Topology":
        """Build and validate a topology from (asnA, asnB, code) records.

        Code -1 means asnA is the provider of asnB; 0 means they peer.
        Rejects self-loops, duplicate edges between the same ASN pair, and
        cycles in the provider-customer subgraph.
        """
        providers: dict[int, set[int]] = defaultdict(set)
        customers: dict[int, set[int]] = defaultdict(set)
        peers: dict[int, set[int]] = defaultdict(set)
        seen_pairs: set[frozenset[int]] = set()
        for a, b, code in records:
            _check_asn(a)
            _check_asn(b)
            if a == b:
                raise TopologyError(f"self-loop on AS{a}")
            pair = frozenset((a, b))
            if pair in seen_pairs:
                if code == Relationship.P2C and a in customers.get(b, ()):
                    raise TopologyError(
                        f"provider-customer cycle through AS{a} and AS{b}"
                    )
                raise TopologyError(f"duplicate edge between AS{a} and AS{b}")
            seen_pairs.add(pair)
            if code == Relationship.P2C:
                customers[a].add(b)
                providers[b].add(a)
            elif code == Relationship.P2P:
                peers[a].add(b)
                peers[b].add(a)
            else:
                raise TopologyError(f"unknown relationship code {code}")
            for asn in (a, b):
                providers.setdefault(asn, set())
                customers.setdefault(asn, set())
                peers.setdefault(asn, set())

        _check_c2p_acyclic(customers)

        ix = {}
        if ix_memberships is not None:
            for ix_id, members in ix_memberships.items():
                mset = frozenset(_check_asn(m) for m in members)
                ix[str(ix_id)] = mset

        return cls(
            {a: frozenset(s) for a, s in providers.items()},
            {a: frozenset(s) for a, s in customers.items()},
            {a: frozenset(s) for a, s in peers.items()},
            ix,
        )

    def providers_of(self, asn: int) -> frozenset[int]:
        self._require(asn)
        return self.providers[asn]

    def customers_of(self, asn: int) -> frozenset[int]:
        self._require(asn)
        return self.customers[asn]

    def peers_of(self, asn: int) -> frozenset[int]:
        self._require(asn)
        return self.peers[asn]

    def neighbors_of(self, asn: int) -> frozenset[int]:
        self._require(asn)
        return self.providers[asn] | self.customers[asn] | self.peers[asn]

    def rel_from(self, asn: int, neighbor: int) -> Rel:
        """Classify `neighbor` from `asn`'s point of view."""
        if neighbor in self.customers[asn]:
            return Rel.CUSTOMER
        if neighbor in self.peers[asn]:
            return Rel.PEER
        if neighbor in self.providers[asn]:
            return Rel.PROVIDER
        raise TopologyError(f"AS{neighbor} is not adjacent to AS{asn}")

    def records(self) -> list[tuple[int, int, int]]:
        """Edge list in serial-1 record form, deterministically sorted."""
        recs = [
            (p, c, int(Relationship.P2C))
            for p in sorted(self.customers)
            for c in sorted(self.customers[p])
        ]
        recs += [
            (a, b, int(Relationship.P2P))
            for a in sorted(self.peers)
            for b in sorted(self.peers[a])
            if a < b
        ]
        return recs

    def _require(self, asn: int) -> None:
        if asn not in self.asns:
            raise TopologyError(f"unknown ASN {asn}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.providers == other.providers
            and self.peers == other.peers
            and self.ix_memberships == other.ix_memberships
        )

    def __repr__(self) -> str:
        n_p2c = sum(len(c) for c in self.customers.values())
        n_p2p = sum(len(p) for p in self.peers.values()) // 2
        return f"Topology({len(self.asns)} ASes, {n_p2c} p2c, {n_p2p} p2p)"


def _check_c2p_acyclic(customers: Mapping[int, set[int]]) -> None:
    # Iterative three-color DFS over provider->customer edges.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {asn: WHITE for asn in customers}
    for root in customers:
        if color[root] != WHITE:
            continue
        stack: list[tuple[int, Iterable[int]]] = [(root, iter(sorted(customers[root])))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color.get(nxt, WHITE) == GRAY:
                    raise TopologyError(
                        f"provider-customer cycle through AS{nxt} and AS{node}"
                    )
                if color.get(nxt, WHITE) == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(sorted(customers.get(nxt, ())))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()


def load_topology(source: str | bytes) -> Topology:
    """Parse AS-relationship text into a validated Topology.

    Lines starting with ``#`` are comments.  Data lines are
    ``asnA|asnB|code`` with code -1 (asnA provider of asnB) or 0 (peers).
    Parse errors report the 1-based line number.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    records = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) < 3:
            raise TopologyError(f"line {lineno}: malformed record {raw!r}")
        try:
            a, b, code = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: malformed record {raw!r}") from exc
        records.append((a, b, code))
    return Topology.from_records(records)


def serialize_topology(topo: Topology) -> str:
    """Render the edge set back to serial-1 text; inverse of load_topology."""
    return "\n".join("|".join(str(f) for f in rec) for rec in topo.records()) + "\n"


def load_ix_memberships(source: str) -> dict[str, frozenset[int]]:
    """Parse IX membership text: lines ``ix-id|asn``; ``#`` comments ignored."""
    members: dict[str, set[int]] = defaultdict(set)
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: malformed IX record {raw!r}")
        try:
            asn = int(parts[1])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: malformed IX record {raw!r}") from exc
        members[parts[0]].add(_check_asn(asn))
    return {ix: frozenset(s) for ix, s in members.items()}


def customer_cone(topo: Topology, asn: int) -> frozenset[int]:
    """All ASes reachable from `asn` by descending provider->customer edges.

    Excludes `asn` itself.  Results are cached on the topology.
    """
    topo._require(asn)
    cached = topo._cone_cache.get(asn)
    if cached is not None:
        return cached
    seen: set[int] = set()
    stack = list(topo.customers[asn])
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(topo.customers[node] - seen)
    cone = frozenset(seen)
    topo._cone_cache[asn] = cone
    return cone


def tier1_clique(topo: Topology) -> frozenset[int]:
    """ASes with no transit provider.

    The group is expected to interconnect in a full peering mesh; any
    provider-free pair without a p2p edge is logged as a warning rather
    than treated as an error, because inter-AS payments are not observable.
    """
    clique = frozenset(a for a in topo.asns if not topo.providers[a])
    for a, b in tier1_mesh_gaps(topo):
        log.warning("provider-free ASes %d and %d are not peering", a, b)
    return clique


def tier1_mesh_gaps(topo: Topology) -> list[tuple[int, int]]:
    """Provider-free AS pairs missing a p2p edge, sorted."""
    clique = sorted(a for a in topo.asns if not topo.providers[a])
    return [
        (a, b)
        for i, a in enumerate(clique)
        for b in clique[i + 1 :]
        if b not in topo.peers[a]
    ]


def augment_with_ix_peering(topo: Topology) -> Topology:
    """Add a p2p edge for every co-located IX pair not already connected.

    Existing provider-customer edges are never rewritten: demoting a transit
    link to peering would corrupt customer cones.  Idempotent.
    """
    if not topo.ix_memberships:
        raise TopologyError("topology has no IX membership data")
    peers = {a: set(s) for a, s in topo.peers.items()}
    providers = dict(topo.providers)
    customers = dict(topo.customers)
    for members in topo.ix_memberships.values():
        for a in members:
            if a not in providers:
                providers[a] = frozenset()
                customers[a] = frozenset()
                peers[a] = set()
        ordered = sorted(members)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                if b in peers[a] or b in providers[a] or b in customers[a]:
                    continue
                peers[a].add(b)
                peers[b].add(a)
    return Topology(
        providers,
        customers,
        {a: frozenset(s) for a, s in peers.items()},
        topo.ix_memberships,
    )
