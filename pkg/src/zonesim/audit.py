"""Off-path conformance auditing of member-exported route views.

Three checks run over route-collector views, one view per member, all from
the same snapshot:

  R1-FalseVerified  a VERIFIED route whose path had more than one unique
      ASN before it entered the zone (more than two when the
      provider-authorization extension is on and a confirming record
      exists) indicts the member that introduced it;
  R2-InvalidOrigin  a route whose origin is RPKI-invalid indicts the
      member that introduced it;
  R3-TagStripped    a member whose view lacks VERIFIED on a route that the
      neighboring member it learned it from shows as VERIFIED for the same
      prefix and path suffix failed to forward the tag.

The entry member is the member closest to the origin in the path; when the
path contains no member, the view's owner introduced the route itself.  A
member's exported view is evidence against that member (it advertised the
route), so R1/R2 findings may rest on the culprit's own view; R3 always
needs both sides of the member-member edge, and missing views degrade to a
logged coverage warning rather than an accusation.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .registry import Prefix, RegistrySet, RovState, AspaState, aspa_pair_valid, rov_validate
from .routing import Rib, Route, parse_rib_dump
from .topology import Rel, Topology
from .vipzone import ZoneConfig

log = logging.getLogger(__name__)


class AuditError(ValueError):
    pass


class AuditRule(enum.Enum):
    R1_FALSE_VERIFIED = "R1-FalseVerified"
    R2_INVALID_ORIGIN = "R2-InvalidOrigin"
    R3_TAG_STRIPPED = "R3-TagStripped"


@dataclass(frozen=True)
class MemberView:
    """One member's route-collector export: its best routes at a snapshot."""

    member: int
    routes: tuple[Route, ...]
    snapshot_id: str = "default"


@dataclass(frozen=True)
class AuditFinding:
    """One non-conformance, pinned on a member.

    observed_at names the view supplying the evidence: the owner of the
    view holding the offending route for R1/R2, and the upstream witness
    whose view shows the tag the culprit dropped for R3.
    """

    rule: AuditRule
    culprit: int
    observed_at: int
    evidence: Route
    waived: bool = False
    note: str = ""

    def csv_row(self) -> str:
        path = " ".join(str(a) for a in self.evidence.as_path)
        return (
            f"{self.rule.value},{self.culprit},{self.observed_at},"
            f"{self.evidence.prefix},{path},{str(self.waived).lower()},{self.note}"
        )


FINDINGS_CSV_HEADER = "rule,culprit,observed_at,prefix,as_path,waived,note"


@dataclass(frozen=True)
class Waiver:
    """A registered intent to announce a non-conformant route."""

    member: int
    prefix: Prefix
    note: str = ""


def register_exception(cfg: ZoneConfig, member: int, prefix: Prefix, note: str = "") -> Waiver:
    """Record a member's declared exception; audit findings matching the
    (member, prefix) pair are reported as waived, never dropped."""
    if member not in cfg.members:
        raise AuditError(f"AS{member} is not a zone member")
    return Waiver(member, prefix, note)


def views_from_rib(rib: Rib, cfg: ZoneConfig, snapshot_id: str = "default") -> list[MemberView]:
    """Rule 7: every member exports its best routes to the collector."""
    views = []
    for member in sorted(cfg.members):
        entries = rib.entries(member)
        routes = tuple(
            entries[p].best for p in sorted(entries, key=_prefix_key)
        )
        views.append(MemberView(member, routes, snapshot_id))
    return views


def load_member_view(text: str, snapshot_id: str = "default") -> MemberView:
    """Parse a view file: a RIB dump filtered to a single ASN's rows."""
    rows = parse_rib_dump(text)
    if not rows:
        raise AuditError("view file contains no routes")
    owners = {asn for asn, _ in rows}
    if len(owners) != 1:
        raise AuditError(f"view file mixes rows for ASes {sorted(owners)}")
    member = owners.pop()
    return MemberView(member, tuple(r for _, r in rows), snapshot_id)


def _prefix_key(prefix: Prefix):
    return (prefix.version, int(prefix.network_address), prefix.prefixlen)


def _entry_member(path: Sequence[int], members: frozenset[int], owner: int) -> tuple[int, tuple[int, ...]]:
    """The member closest to the origin, and the unique pre-entry ASNs.

    Scanning from the origin end, the first member in the path introduced
    the route; if none appears, the view's owner imported it directly and
    the whole path is pre-entry.
    """
    for i in range(len(path) - 1, -1, -1):
        if path[i] in members:
            tail = path[i + 1 :]
            return path[i], tuple(dict.fromkeys(tail))
    return owner, tuple(dict.fromkeys(path))


def audit_views(
    cfg: ZoneConfig,
    topo: Topology,
    reg: RegistrySet,
    views: Sequence[MemberView],
    waivers: Iterable[Waiver] = (),
) -> list[AuditFinding]:
    """Run the three conformance checks over the given member views.

    Findings are deduplicated per underlying announcement (the same tagged
    route seen in several views yields one finding, observed at the lowest
    ASN) and sorted by (rule, culprit, prefix, path).
    """
    if not views:
        return []
    snapshots = {v.snapshot_id for v in views}
    if len(snapshots) != 1:
        raise AuditError(f"views span multiple snapshots: {sorted(snapshots)}")
    members = cfg.members
    for view in views:
        if view.member not in members:
            raise AuditError(f"view owner AS{view.member} is not a zone member")

    by_member = {v.member: v for v in views}
    tag = cfg.verified_tag
    # keyed by (rule, culprit, prefix, canonical evidence path)
    found: dict[tuple, AuditFinding] = {}

    def record(rule: AuditRule, culprit: int, observed_at: int, route: Route, canonical: tuple):
        key = (rule, culprit, _prefix_key(route.prefix), canonical)
        existing = found.get(key)
        if existing is None or observed_at < existing.observed_at:
            found[key] = AuditFinding(rule, culprit, observed_at, route)

    for view in views:
        for route in view.routes:
            entry, pre = _entry_member(route.as_path, members, view.member)

            if tag in route.communities:
                limit = 1
                if cfg.aspa_extension and len(pre) == 2:
                    if aspa_pair_valid(reg, pre[-1], pre[0]) is AspaState.CONFIRMED:
                        limit = 2
                if len(pre) > limit:
                    record(AuditRule.R1_FALSE_VERIFIED, entry, view.member, route, pre)

            if rov_validate(reg, route.prefix, route.origin) is RovState.INVALID:
                record(AuditRule.R2_INVALID_ORIGIN, entry, view.member, route, pre)

            neighbor = route.as_path[0]
            if (
                route.learned_rel is not Rel.SELF
                and neighbor in members
                and tag not in route.communities
            ):
                witness = by_member.get(neighbor)
                if witness is None:
                    log.warning(
                        "no view from AS%d; cannot audit tag forwarding at AS%d",
                        neighbor,
                        view.member,
                    )
                    continue
                suffix = route.as_path[1:]
                for upstream in witness.routes:
                    if (
                        upstream.prefix == route.prefix
                        and upstream.as_path == suffix
                        and tag in upstream.communities
                    ):
                        record(
                            AuditRule.R3_TAG_STRIPPED,
                            view.member,
                            neighbor,
                            route,
                            route.as_path,
                        )

    waiver_keys = {(w.member, w.prefix): w for w in waivers}
    findings = []
    for finding in found.values():
        waiver = waiver_keys.get((finding.culprit, finding.evidence.prefix))
        if waiver is not None:
            finding = replace(finding, waived=True, note=waiver.note)
        findings.append(finding)
    findings.sort(
        key=lambda f: (
            f.rule.value,
            f.culprit,
            _prefix_key(f.evidence.prefix),
            f.evidence.as_path,
        )
    )
    return findings


def findings_csv(findings: Sequence[AuditFinding]) -> str:
    lines = [FINDINGS_CSV_HEADER]
    lines += [f.csv_row() for f in findings]
    return "\n".join(lines) + "\n"
