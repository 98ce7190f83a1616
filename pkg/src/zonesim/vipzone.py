"""Zone-of-trust policy: perimeter verification and the VERIFIED community.

Members of a connected zone verify single-hop announcements from directly
attached neighbors and tag the good ones with a VERIFIED community; tagged
routes are preferred over untagged ones for the same prefix everywhere
inside the zone.  The import rules applied at each member, in order:

  R1  strip VERIFIED from anything arriving from a non-member;
  R2  drop announcements whose origin is RPKI-invalid;
  R3  drop announcements whose first-hop ASN fails the know-your-customer
      check for that session;
  R4  retain VERIFIED arriving from another member;
  R5  for a single-hop route from a directly attached customer or peer,
      verify the origin: add VERIFIED, drop, or pass through unverified;
  ASPA-EXT  optionally extend R5 to two-hop routes whose far pair is
      confirmed by a provider-authorization record (never longer paths);
  R6  anything else is forwarded without the tag.

Exports never remove the tag, so customers of members can see which routes
were verified on entry.  Rule 7 (route-collector export) is realized by the
RIB dump in the routing module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable

from .registry import (
    AspaState,
    OriginVerdict,
    RegistrySet,
    RovState,
    aspa_pair_valid,
    rov_validate,
    verify_customer_origin,
)
from .routing import PolicyHooks, PreferenceOrder, Route
from .topology import Rel, Topology

VERIFIED = "VERIFIED:1"


class ZoneValidationError(ValueError):
    """Raised when a membership set is not a connected zone."""

    def __init__(self, violations: list[int]):
        self.violations = list(violations)
        names = ", ".join(f"AS{a}" for a in self.violations)
        super().__init__(f"members without a member transit provider: {names}")


@dataclass(frozen=True)
class ZoneConfig:
    """Zone membership plus rule toggles.

    honor_verified_non_members lists non-members that opt in to preferring
    VERIFIED routes from their member neighbors (stripping tags arriving
    from non-members first).
    """

    members: frozenset[int]
    aspa_extension: bool = False
    verified_tag: str = VERIFIED
    honor_verified_non_members: frozenset[int] = frozenset()


class Outcome(enum.Enum):
    DROP = "drop"
    FORWARD_VERIFIED = "forward_verified"
    FORWARD_UNVERIFIED = "forward_unverified"


@dataclass(frozen=True)
class VerificationOutcome:
    outcome: Outcome
    reason: str


def validate_zone(topo: Topology, members: Iterable[int]) -> ZoneConfig:
    """Check zone connectivity: every member is provider-free or has a
    member transit provider.  Raises ZoneValidationError listing each
    disconnected member; unknown ASNs are a TopologyError.
    """
    member_set = frozenset(members)
    for asn in member_set:
        topo._require(asn)
    violations = sorted(
        asn
        for asn in member_set
        if topo.providers_of(asn) and not (topo.providers_of(asn) & member_set)
    )
    if violations:
        raise ZoneValidationError(violations)
    return ZoneConfig(members=member_set)


def member_import(
    cfg: ZoneConfig,
    reg: RegistrySet,
    member: int,
    neighbor: int,
    neighbor_rel: Rel,
    route: Route,
) -> tuple[VerificationOutcome, Route | None]:
    """Apply the zone import rules at a member; the route has already
    passed the engine's loop check.

    Returns the decided outcome and the (possibly re-tagged) route, or None
    when dropped.
    """
    tag = cfg.verified_tag
    in_zone = neighbor in cfg.members

    # R1: no tag survives entry from outside the zone.
    if not in_zone and tag in route.communities:
        route = replace(route, communities=route.communities - {tag})

    # R2: RPKI-invalid origins are dropped no matter the source.
    if rov_validate(reg, route.prefix, route.origin) is RovState.INVALID:
        return VerificationOutcome(Outcome.DROP, "R2"), None

    # R3: the ASN the neighbor used must be one the member knows is theirs.
    entry = reg.kyc.get((member, neighbor))
    allowed = entry.allowed_asns if entry and entry.allowed_asns else frozenset({neighbor})
    if route.as_path[0] not in allowed:
        return VerificationOutcome(Outcome.DROP, "R3"), None

    # R4: trust tags relayed by other members.
    if in_zone and tag in route.communities:
        return VerificationOutcome(Outcome.FORWARD_VERIFIED, "R4"), route

    uniq = len(set(route.as_path))
    if neighbor_rel in (Rel.CUSTOMER, Rel.PEER):
        # R5: verify single-hop originations from directly attached
        # sessions.  Members announcing their own prefixes over a direct
        # session are verified the same way.
        if uniq == 1:
            verdict = verify_customer_origin(
                reg, member, neighbor, route.prefix, route.origin
            )
            if verdict is OriginVerdict.REJECTED:
                return VerificationOutcome(Outcome.DROP, "R5"), None
            if verdict is OriginVerdict.VERIFIED:
                tagged = replace(route, communities=route.communities | {tag})
                return VerificationOutcome(Outcome.FORWARD_VERIFIED, "R5"), tagged
        # ASPA-EXT: a two-hop path may be verified when the origin has
        # registered the adjacent AS as a provider; never longer paths.
        elif (
            cfg.aspa_extension
            and not in_zone
            and uniq == 2
            and len(route.as_path) == 2
            and not (set(route.as_path) & cfg.members)
            and aspa_pair_valid(reg, route.origin, route.as_path[0])
            is AspaState.CONFIRMED
        ):
            tagged = replace(route, communities=route.communities | {tag})
            return VerificationOutcome(Outcome.FORWARD_VERIFIED, "ASPA-EXT"), tagged

    # R6: not established as valid; forward without the tag.
    return VerificationOutcome(Outcome.FORWARD_UNVERIFIED, "R6"), route


def member_export(cfg: ZoneConfig, member: int, to_neighbor: int, route: Route) -> Route:
    """Exports keep the VERIFIED tag for members and non-members alike;
    export scoping is the routing engine's job."""
    return route


def member_preference(cfg: ZoneConfig, asn: int) -> PreferenceOrder:
    """Members and opted-in non-members rank VERIFIED routes first."""
    verified_first = asn in cfg.members or asn in cfg.honor_verified_non_members
    return PreferenceOrder(verified_first=verified_first, verified_tag=cfg.verified_tag)


def zone_policy(topo: Topology, cfg: ZoneConfig, reg: RegistrySet) -> PolicyHooks:
    """Bundle the zone rules as hooks for the propagation engine."""
    members = cfg.members
    honor = cfg.honor_verified_non_members
    tag = cfg.verified_tag

    def import_route(importer: int, neighbor: int, rel: Rel, route: Route) -> Route | None:
        if importer in members:
            _, admitted = member_import(cfg, reg, importer, neighbor, rel, route)
            return admitted
        if importer in honor and neighbor not in members and tag in route.communities:
            # Opted-in non-members only trust tags from member sessions.
            return replace(route, communities=route.communities - {tag})
        return route

    def export_route(
        exporter: int, neighbor: int, rel: Rel, route: Route, gr_allows: bool
    ) -> Route | None:
        if not gr_allows:
            return None
        if exporter in members:
            return member_export(cfg, exporter, neighbor, route)
        return route

    def preference_for(asn: int) -> PreferenceOrder:
        return member_preference(cfg, asn)

    return PolicyHooks(import_route, export_route, preference_for)


def load_zone_config(source: str) -> ZoneConfig:
    """Parse a zone config file: one member ASN per line plus key-value
    header lines (``aspa_extension=true|false``, optional
    ``honor_verified=<asn;asn;...>``).  ``#`` comments ignored.
    """
    members: set[int] = set()
    aspa_extension = False
    honor: frozenset[int] = frozenset()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "aspa_extension":
                if value not in ("true", "false"):
                    raise ValueError(f"line {lineno}: aspa_extension must be true|false")
                aspa_extension = value == "true"
            elif key == "honor_verified":
                honor = frozenset(int(a) for a in value.split(";") if a)
            else:
                raise ValueError(f"line {lineno}: unknown zone config key {key!r}")
            continue
        try:
            members.add(int(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed zone member {raw!r}") from exc
    return ZoneConfig(
        members=frozenset(members),
        aspa_extension=aspa_extension,
        honor_verified_non_members=honor,
    )
