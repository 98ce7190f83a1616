"""Trusted out-of-band databases: ROAs, provider authorizations, IRR, KYC.

These stores are modeled as already-authenticated data; no cryptography.
All lookups are total functions over an immutable :class:`RegistrySet`.
"""

from __future__ import annotations

import csv
import enum
import io
import ipaddress
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

Prefix = ipaddress.IPv4Network | ipaddress.IPv6Network


class RegistryError(ValueError):
    """Raised for malformed registry files or invalid records."""


def parse_prefix(text: str) -> Prefix:
    """Parse a prefix in canonical form (no host bits set)."""
    try:
        return ipaddress.ip_network(text.strip())
    except ValueError as exc:
        raise RegistryError(f"invalid prefix {text!r}: {exc}") from exc


class RovState(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    NOT_FOUND = "not_found"


class AspaState(enum.Enum):
    CONFIRMED = "confirmed"
    CONTRADICTED = "contradicted"
    NO_RECORD = "no_record"


class OriginVerdict(enum.Enum):
    VERIFIED = "verified"
    REJECTED = "rejected"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Roa:
    """Authorization for `origin_asn` to originate `prefix`.

    When max_length is absent the effective maximum equals the ROA prefix
    length, so only exact-length announcements validate.
    """

    prefix: Prefix
    origin_asn: int
    max_length: int | None = None

    def __post_init__(self):
        if self.max_length is not None:
            if not self.prefix.prefixlen <= self.max_length <= self.prefix.max_prefixlen:
                raise RegistryError(
                    f"ROA {self.prefix} maxLength {self.max_length} out of range"
                )

    @property
    def effective_max_length(self) -> int:
        return self.max_length if self.max_length is not None else self.prefix.prefixlen

    def covers(self, prefix: Prefix) -> bool:
        return self.prefix.version == prefix.version and prefix.subnet_of(self.prefix)


@dataclass(frozen=True)
class AspaRecord:
    """A customer's registered set of transit providers."""

    customer_asn: int
    provider_asns: frozenset[int]

    def __post_init__(self):
        if not self.provider_asns:
            raise RegistryError(f"ASPA for AS{self.customer_asn} lists no providers")
        if self.customer_asn in self.provider_asns:
            raise RegistryError(f"ASPA for AS{self.customer_asn} lists itself")


@dataclass(frozen=True)
class KycEntry:
    """What a member has established a directly connected neighbor may announce.

    allowed_asns empty means the member has no explicit ASN list, in which
    case only the neighbor's own ASN is considered legitimate.
    """

    allowed_asns: frozenset[int] = frozenset()
    allowed_prefixes: frozenset[Prefix] = frozenset()


@dataclass(frozen=True)
class RegistrySet:
    """Immutable bundle of all verification sources used during a run."""

    roas: tuple[Roa, ...] = ()
    aspas: Mapping[int, frozenset[int]] = field(default_factory=dict)
    irr_prefixes: Mapping[int, frozenset[Prefix]] = field(default_factory=dict)
    kyc: Mapping[tuple[int, int], KycEntry] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        roas: Iterable[Roa] = (),
        aspas: Iterable[AspaRecord] = (),
        irr: Iterable[tuple[int, Prefix]] = (),
        kyc: Mapping[tuple[int, int], KycEntry] | None = None,
    ) -> "RegistrySet":
        aspa_map: dict[int, frozenset[int]] = {}
        for rec in aspas:
            if rec.customer_asn in aspa_map:
                raise RegistryError(f"duplicate ASPA for AS{rec.customer_asn}")
            aspa_map[rec.customer_asn] = rec.provider_asns
        irr_map: dict[int, set[Prefix]] = {}
        for asn, prefix in irr:
            irr_map.setdefault(asn, set()).add(prefix)
        return cls(
            tuple(roas),
            aspa_map,
            {a: frozenset(s) for a, s in irr_map.items()},
            dict(kyc or {}),
        )


class _RoaIndex:
    """ROAs bucketed by (version, length, network bits).

    A covering ROA must sit at some length not exceeding the query's, with
    matching leading bits, so lookup probes one bucket per registered
    length instead of scanning the store.
    """

    def __init__(self, roas: Iterable[Roa]):
        self.buckets: dict[tuple[int, int, int], list[Roa]] = {}
        self.lengths: dict[int, list[int]] = {4: [], 6: []}
        for roa in roas:
            version = roa.prefix.version
            length = roa.prefix.prefixlen
            key = (version, length, int(roa.prefix.network_address))
            if key not in self.buckets:
                self.buckets[key] = []
                self.lengths[version].append(length)
            self.buckets[key].append(roa)
        for version in self.lengths:
            self.lengths[version] = sorted(set(self.lengths[version]))

    def covering(self, prefix: Prefix) -> list[Roa]:
        version = prefix.version
        bits = prefix.max_prefixlen
        net = int(prefix.network_address)
        found: list[Roa] = []
        for length in self.lengths[version]:
            if length > prefix.prefixlen:
                break
            shift = bits - length
            hit = self.buckets.get((version, length, (net >> shift) << shift))
            if hit:
                found.extend(hit)
        return found


def _roa_index(reg: RegistrySet) -> _RoaIndex:
    index = getattr(reg, "_index", None)
    if index is None:
        index = _RoaIndex(reg.roas)
        object.__setattr__(reg, "_index", index)
    return index


def rov_validate(reg: RegistrySet, prefix: Prefix, origin: int) -> RovState:
    """Classify a (prefix, origin) pair against the ROA store.

    NOT_FOUND when no ROA prefix contains the announced prefix; VALID when
    any covering ROA matches the origin and the announced length does not
    exceed that ROA's effective maxLength; INVALID otherwise.  Results are
    cached on the (immutable) registry.
    """
    cache = getattr(reg, "_rov_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(reg, "_rov_cache", cache)
    state = cache.get((prefix, origin))
    if state is None:
        covered = False
        for roa in _roa_index(reg).covering(prefix):
            covered = True
            if roa.origin_asn == origin and prefix.prefixlen <= roa.effective_max_length:
                state = RovState.VALID
                break
        else:
            state = RovState.INVALID if covered else RovState.NOT_FOUND
        cache[(prefix, origin)] = state
    return state


def aspa_pair_valid(reg: RegistrySet, customer: int, alleged_provider: int) -> AspaState:
    """Check whether `customer` has registered `alleged_provider` as a provider."""
    providers = reg.aspas.get(customer)
    if providers is None:
        return AspaState.NO_RECORD
    if alleged_provider in providers:
        return AspaState.CONFIRMED
    return AspaState.CONTRADICTED


def verify_customer_origin(
    reg: RegistrySet, member: int, neighbor: int, prefix: Prefix, origin: int
) -> OriginVerdict:
    """Decide whether a single-hop origination from a direct neighbor is legitimate.

    An RPKI-invalid origin is always REJECTED, as is an origin outside the
    member's explicit KYC ASN list for that neighbor.  Otherwise any one
    positive source suffices for VERIFIED: a valid ROA, an authenticated IRR
    entry, or the member's configured prefix list.  With no basis either way
    the verdict is UNKNOWN and the caller forwards the route unverified.
    """
    rov = rov_validate(reg, prefix, origin)
    entry = reg.kyc.get((member, neighbor))
    if rov is RovState.INVALID:
        if prefix in reg.irr_prefixes.get(origin, frozenset()) or (
            entry is not None and prefix in entry.allowed_prefixes
        ):
            # A covering ROA contradicts a positive IRR/prefix-list entry;
            # the drop rule dominates, but the conflict is worth surfacing.
            log.warning(
                "AS%d: %s from AS%d is RPKI-invalid despite an IRR/prefix-list "
                "entry; dropping per the covering ROA",
                member,
                prefix,
                origin,
            )
        return OriginVerdict.REJECTED
    if entry is not None and entry.allowed_asns and origin not in entry.allowed_asns:
        return OriginVerdict.REJECTED
    if rov is RovState.VALID:
        return OriginVerdict.VERIFIED
    if prefix in reg.irr_prefixes.get(origin, frozenset()):
        return OriginVerdict.VERIFIED
    if entry is not None and prefix in entry.allowed_prefixes:
        return OriginVerdict.VERIFIED
    return OriginVerdict.UNKNOWN


def _rows(source: str, expected_header: str, what: str) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise RegistryError(f"empty {what} file") from None
    if [h.strip() for h in header] != expected_header.split(","):
        raise RegistryError(f"{what} file: expected header {expected_header!r}")
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        yield lineno, [f.strip() for f in row]


def load_roas(source: str) -> tuple[Roa, ...]:
    """Parse ROA CSV: ``prefix,maxlen,asn``; empty maxlen means absent."""
    roas = []
    for lineno, row in _rows(source, "prefix,maxlen,asn", "ROA"):
        try:
            prefix = parse_prefix(row[0])
            maxlen = int(row[1]) if row[1] else None
            roas.append(Roa(prefix, int(row[2]), maxlen))
        except (RegistryError, ValueError, IndexError) as exc:
            raise RegistryError(f"ROA file line {lineno}: {exc}") from exc
    return tuple(roas)


def load_aspas(source: str) -> dict[int, frozenset[int]]:
    """Parse ASPA CSV: ``customer_asn,provider_asns`` with ``;``-separated providers."""
    records = {}
    for lineno, row in _rows(source, "customer_asn,provider_asns", "ASPA"):
        try:
            rec = AspaRecord(
                int(row[0]),
                frozenset(int(p) for p in row[1].split(";") if p),
            )
        except (RegistryError, ValueError, IndexError) as exc:
            raise RegistryError(f"ASPA file line {lineno}: {exc}") from exc
        if rec.customer_asn in records:
            raise RegistryError(
                f"ASPA file line {lineno}: duplicate record for AS{rec.customer_asn}"
            )
        records[rec.customer_asn] = rec.provider_asns
    return records


def load_irr(source: str) -> dict[int, frozenset[Prefix]]:
    """Parse IRR CSV: ``asn,prefix``."""
    irr: dict[int, set[Prefix]] = {}
    for lineno, row in _rows(source, "asn,prefix", "IRR"):
        try:
            irr.setdefault(int(row[0]), set()).add(parse_prefix(row[1]))
        except (RegistryError, ValueError, IndexError) as exc:
            raise RegistryError(f"IRR file line {lineno}: {exc}") from exc
    return {a: frozenset(s) for a, s in irr.items()}


def load_kyc(source: str) -> dict[tuple[int, int], KycEntry]:
    """Parse KYC CSV: ``member_asn,neighbor_asn,allowed_asns,allowed_prefixes``.

    The list fields are ``;``-separated; an empty list means absent.
    """
    kyc = {}
    for lineno, row in _rows(
        source, "member_asn,neighbor_asn,allowed_asns,allowed_prefixes", "KYC"
    ):
        try:
            key = (int(row[0]), int(row[1]))
            entry = KycEntry(
                frozenset(int(a) for a in row[2].split(";") if a),
                frozenset(parse_prefix(p) for p in row[3].split(";") if p),
            )
        except (RegistryError, ValueError, IndexError) as exc:
            raise RegistryError(f"KYC file line {lineno}: {exc}") from exc
        if key in kyc:
            raise RegistryError(f"KYC file line {lineno}: duplicate entry for {key}")
        kyc[key] = entry
    return kyc


def check_kyc_adjacency(reg: RegistrySet, topo) -> None:
    """Scenario-assembly check: KYC keys must reference adjacent ASN pairs."""
    for member, neighbor in reg.kyc:
        if neighbor not in topo.neighbors_of(member):
            raise RegistryError(
                f"KYC entry ({member}, {neighbor}) references non-adjacent ASes"
            )
