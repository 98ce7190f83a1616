"""Topology-level analyses: zone derivation, protection counts, local regions.

"Protected" counts an AS that is either a zone member or a non-member with
at least one member transit provider; peering-only attachment does not
count.  A customer's local region is every AS that could deliver an
announcement to it without the announcement crossing a zone member --
its residual attack surface.
"""

from __future__ import annotations

import enum
import ipaddress
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .registry import Prefix, RegistrySet, Roa
from .routing import Origination, PolicyHooks, PreferenceOrder, propagate
from .topology import Rel, Topology, customer_cone
from .vipzone import ZoneConfig, zone_policy


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ZoneDerivation:
    """Connected-membership fixpoint of a roster, plus its attached customers."""

    input_roster: frozenset[int]
    connected_members: frozenset[int]
    attached_customers: frozenset[int]


def derive_connected_zone(topo: Topology, roster: Iterable[int]) -> ZoneDerivation:
    """Reduce a membership roster to its connected core.

    Seeds with the provider-free roster members, then repeatedly admits any
    roster member that already has an admitted provider, to fixpoint.
    Attached customers are all non-members with at least one provider in
    the connected core.
    """
    roster_set = frozenset(roster)
    for asn in roster_set:
        topo._require(asn)
    connected = {a for a in roster_set if not topo.providers_of(a)}
    frontier = True
    while frontier:
        frontier = False
        for asn in roster_set - connected:
            if topo.providers_of(asn) & connected:
                connected.add(asn)
                frontier = True
    attached = attached_customers(topo, connected)
    return ZoneDerivation(roster_set, frozenset(connected), attached)


def attached_customers(topo: Topology, members: Iterable[int]) -> frozenset[int]:
    """Non-members having at least one transit provider in the member set."""
    member_set = frozenset(members)
    return frozenset(
        a
        for a in topo.asns
        if a not in member_set and topo.providers_of(a) & member_set
    )


def protected_count(topo: Topology, members: Iterable[int]) -> int:
    member_set = frozenset(members)
    return len(member_set) + len(attached_customers(topo, member_set))


class GrowthOrder(enum.Enum):
    BY_CONE_SIZE = "by_cone_size"
    GREEDY_PROTECTED_GAIN = "greedy_protected_gain"


def cone_size_order(topo: Topology) -> list[int]:
    """All ASNs by descending customer-cone size, ties broken by lower ASN."""
    return sorted(topo.asns, key=lambda a: (-len(customer_cone(topo, a)), a))


def zone_growth_curve(
    topo: Topology, order: GrowthOrder, steps: Sequence[int]
) -> list[tuple[int, int]]:
    """Protected-AS counts for hypothetical zones of the given sizes.

    BY_CONE_SIZE admits ASes in descending cone-size order.
    GREEDY_PROTECTED_GAIN admits, at each step, the AS with the largest
    marginal protected count (ties: larger cone, then lower ASN).
    Sizes beyond the AS count are clamped.
    """
    if list(steps) != sorted(steps):
        raise AnalysisError("zone sizes must be ascending")
    n = len(topo.asns)
    targets = [min(s, n) for s in steps]
    curve = []
    if order is GrowthOrder.BY_CONE_SIZE:
        ranked = cone_size_order(topo)
        for size in targets:
            zone = ranked[:size]
            curve.append((size, protected_count(topo, zone)))
        return curve

    zone: set[int] = set()
    protected: set[int] = set()
    remaining = set(topo.asns)

    def gain_key(cand: int):
        gain = len(({cand} | set(topo.customers_of(cand))) - protected)
        return (gain, len(customer_cone(topo, cand)), -cand)

    for size in targets:
        while len(zone) < size:
            chosen = max(remaining, key=gain_key)
            zone.add(chosen)
            remaining.discard(chosen)
            protected |= {chosen} | set(topo.customers_of(chosen))
        curve.append((size, len(protected)))
    return curve


@dataclass(frozen=True)
class LocalRegion:
    """ASes able to reach `customer` with an announcement that never
    crosses a zone member."""

    customer: int
    region: frozenset[int]


def local_region(
    topo: Topology,
    cfg: ZoneConfig,
    customer: int,
    filtered_peer_edges: frozenset[tuple[int, int]] = frozenset(),
) -> LocalRegion:
    """Member-avoiding reverse reachability over valid export paths.

    Walks upward through every non-member provider chain above the
    customer; at each rung collects the member-avoiding customer cone and
    each non-member peer with its cone.  filtered_peer_edges names peering
    sessions (unordered pairs) across which announcements are assumed
    prefix-filtered and therefore ignored.
    """
    topo._require(customer)
    members = cfg.members
    if customer in members:
        raise AnalysisError(f"AS{customer} is a zone member")
    filtered = {frozenset(e) for e in filtered_peer_edges}

    def cone_avoiding(root: int) -> set[int]:
        seen: set[int] = set()
        stack = [c for c in topo.customers_of(root) if c not in members]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(
                c for c in topo.customers_of(node) if c not in members and c not in seen
            )
        return seen

    region: set[int] = set()
    rungs: set[int] = set()
    stack = [customer]
    while stack:
        node = stack.pop()
        if node in rungs:
            continue
        rungs.add(node)
        region |= cone_avoiding(node)
        for peer in topo.peers_of(node):
            if peer in members or frozenset((node, peer)) in filtered:
                continue
            region.add(peer)
            region |= cone_avoiding(peer)
        for provider in topo.providers_of(node):
            if provider not in members:
                region.add(provider)
                stack.append(provider)
    region |= rungs
    region.discard(customer)
    region -= set(members)
    return LocalRegion(customer, frozenset(region))


@dataclass(frozen=True)
class RegionSummary:
    zone_size: int
    p10: float
    p50: float
    p90: float
    frac_leq_1: float
    histogram: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LocalRegionDistribution:
    """Per-customer region sizes and quantile summaries at each zone size.

    Region sizes exclude the customer itself; a stub whose only provider is
    a member therefore reports 0.
    """

    rows: tuple[tuple[int, int, int], ...]  # (zone_size, customer, region_size)
    summaries: tuple[RegionSummary, ...]


def local_region_distribution(
    topo: Topology, zone_sizes: Sequence[int], with_ix_augmentation: bool = False
) -> LocalRegionDistribution:
    """Region-size distribution for attached customers of cone-ordered zones.

    When with_ix_augmentation is set, peering is first closed over shared
    IX memberships.
    """
    from .topology import augment_with_ix_peering

    work_topo = augment_with_ix_peering(topo) if with_ix_augmentation else topo
    ranked = cone_size_order(work_topo)
    rows: list[tuple[int, int, int]] = []
    summaries = []
    for size in zone_sizes:
        members = frozenset(ranked[: min(size, len(ranked))])
        cfg = ZoneConfig(members=members)
        sizes = []
        for cust in sorted(attached_customers(work_topo, members)):
            region = local_region(work_topo, cfg, cust).region
            rows.append((size, cust, len(region)))
            sizes.append(len(region))
        if sizes:
            arr = np.asarray(sizes, dtype=float)
            p10, p50, p90 = (float(q) for q in np.percentile(arr, [10, 50, 90]))
            frac = float(np.mean(arr <= 1))
            counts, edges = np.histogram(arr, bins=min(10, max(1, len(set(sizes)))))
            hist = tuple(
                (int(edges[i]), int(counts[i])) for i in range(len(counts))
            )
        else:
            p10 = p50 = p90 = frac = 0.0
            hist = ()
        summaries.append(RegionSummary(size, p10, p50, p90, frac, hist))
    return LocalRegionDistribution(tuple(rows), tuple(summaries))


@dataclass(frozen=True)
class RoutingExceptions:
    """Destinations a member must reach via a provider only because it
    prefers VERIFIED routes."""

    member: int
    count: int
    destinations: tuple[int, ...]


def synthetic_prefix(asn: int) -> Prefix:
    """Deterministic per-AS probe prefix used by whole-topology analyses."""
    return ipaddress.IPv6Network((0x20010DB8 << 96) | (asn << 16), 112)


def routing_exceptions(
    topo: Topology, cfg: ZoneConfig, member: int, *, workers: int = 1
) -> RoutingExceptions:
    """Count destinations where VERIFIED-first selection at `member` picks a
    provider route while plain economic preference would have used a
    customer or peer route.

    Every AS originates a synthetic probe prefix backed by a matching ROA
    so perimeter verification succeeds wherever the zone rules allow it;
    the network is then solved twice, toggling only this member's
    preference order, and the member's best-route relationships diffed.
    """
    if member not in cfg.members:
        raise AnalysisError(f"AS{member} is not a zone member")
    originations = [Origination(a, synthetic_prefix(a)) for a in sorted(topo.asns)]
    reg = RegistrySet.build(roas=[Roa(synthetic_prefix(a), a) for a in sorted(topo.asns)])

    base_policy = zone_policy(topo, cfg, reg)
    verified_rib = propagate(topo, originations, base_policy, workers=workers)

    # The member keeps applying zone import/export duties in both runs; only
    # its preference order is toggled.
    plain_order = PreferenceOrder(verified_first=False, verified_tag=cfg.verified_tag)

    def mixed_preference(asn: int) -> PreferenceOrder:
        return plain_order if asn == member else base_policy.preference_for(asn)

    plain_rib = propagate(
        topo,
        originations,
        PolicyHooks(base_policy.import_route, base_policy.export_route, mixed_preference),
        workers=workers,
    )

    exceptions = []
    for asn in sorted(topo.asns):
        prefix = synthetic_prefix(asn)
        with_v = verified_rib.best(member, prefix)
        without_v = plain_rib.best(member, prefix)
        if with_v is None or without_v is None:
            continue
        if with_v.learned_rel is Rel.PROVIDER and without_v.learned_rel in (
            Rel.CUSTOMER,
            Rel.PEER,
        ):
            exceptions.append(asn)
    return RoutingExceptions(member, len(exceptions), tuple(exceptions))


def growth_csv(curve: Sequence[tuple[int, int]]) -> str:
    lines = ["zone_size,protected_count"]
    lines += [f"{size},{count}" for size, count in curve]
    return "\n".join(lines) + "\n"


def region_rows_csv(dist: LocalRegionDistribution) -> str:
    lines = ["zone_size,customer_asn,region_size"]
    lines += [f"{z},{c},{s}" for z, c, s in dist.rows]
    return "\n".join(lines) + "\n"


def region_summary_csv(dist: LocalRegionDistribution) -> str:
    # region_size excludes the customer itself; the common convention that
    # counts the AS too reads these as size+1.
    lines = ["zone_size,p10,p50,p90,frac_leq_1"]
    lines += [
        f"{s.zone_size},{s.p10:g},{s.p50:g},{s.p90:g},{s.frac_leq_1:g}"
        for s in dist.summaries
    ]
    return "\n".join(lines) + "\n"


def exceptions_csv(results: Sequence[RoutingExceptions]) -> str:
    lines = ["member,exception_count,destination_asns"]
    lines += [
        f"{r.member},{r.count},{';'.join(str(d) for d in r.destinations)}"
        for r in results
    ]
    return "\n".join(lines) + "\n"
