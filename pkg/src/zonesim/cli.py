"""File-in, file-out command-line front end.

Every subcommand reads local files, writes its results plus a run manifest
into --out-dir, and signals findings through the exit code:

  0  clean run
  1  input or parse error (message on stderr, file:line where known)
  2  scenario misdirection detected and --fail-on-harm was set
  3  audit produced non-waived findings

Outputs are deterministic: identical inputs produce byte-identical files
regardless of --workers.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import analysis, attacks, audit, registry, routing, topology, vipzone

__version__ = "0.1.0"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# Parameters holding file paths; recorded by basename so a run is
# reproducible from any checkout location (content hashes carry identity).
_PATH_PARAMS = frozenset(
    {"topology", "roas", "aspas", "irr", "kyc", "zone", "originations",
     "scenario", "roster", "views", "waivers", "ix"}
)


class _Run:
    """Collects input/output digests and writes the manifest last."""

    def __init__(self, command: str, params: dict, out_dir: Path):
        self.command = command
        self.params = {}
        for key, value in params.items():
            if value is None:
                continue
            if key in _PATH_PARAMS:
                if isinstance(value, list):
                    value = [Path(v).name for v in value]
                else:
                    value = Path(value).name
            self.params[key] = value
        self.out_dir = out_dir
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        out_dir.mkdir(parents=True, exist_ok=True)

    def read(self, path: str | Path) -> str:
        data = Path(path).read_bytes()
        name = Path(path).name
        digest = _sha256(data)
        if self.inputs.get(name, digest) != digest:
            suffix = 2
            while self.inputs.get(f"{name}#{suffix}", digest) != digest:
                suffix += 1
            name = f"{name}#{suffix}"
        self.inputs[name] = digest
        return data.decode("utf-8")

    def parse(self, path: str | Path, parser):
        """Read and parse one input, annotating errors with the file path
        so messages read file: line N: ..."""
        text = self.read(path)
        try:
            return parser(text)
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from exc

    def write(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        (self.out_dir / name).write_bytes(data)
        self.outputs[name] = _sha256(data)

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "parameters": self.params,
            "tool_version": __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        self.write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_registries(run: _Run, args) -> registry.RegistrySet:
    return registry.RegistrySet(
        roas=run.parse(args.roas, registry.load_roas) if args.roas else (),
        aspas=run.parse(args.aspas, registry.load_aspas) if args.aspas else {},
        irr_prefixes=run.parse(args.irr, registry.load_irr) if args.irr else {},
        kyc=run.parse(args.kyc, registry.load_kyc) if args.kyc else {},
    )


def _load_zone(run: _Run, topo: topology.Topology, path: str) -> vipzone.ZoneConfig:
    cfg = run.parse(path, vipzone.load_zone_config)
    vipzone.validate_zone(topo, cfg.members)
    for asn in cfg.honor_verified_non_members:
        topo._require(asn)
    return cfg


def _load_originations(text: str) -> list[routing.Origination]:
    origs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if lineno == 1 and line == "asn,prefix":
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise routing.RoutingError(f"originations line {lineno}: expected asn,prefix")
        try:
            origs.append(
                routing.Origination(int(parts[0]), registry.parse_prefix(parts[1]))
            )
        except ValueError as exc:
            raise routing.RoutingError(f"originations line {lineno}: {exc}") from exc
    return origs


def _load_asn_list(text: str) -> list[int]:
    asns = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            asns.append(int(line))
        except ValueError as exc:
            raise ValueError(f"roster line {lineno}: malformed ASN {raw!r}") from exc
    return asns


def _json_rows(header: str, csv_text: str) -> str:
    keys = header.split(",")
    rows = []
    for line in csv_text.splitlines()[1:]:
        parts = line.split(",", len(keys) - 1)
        rows.append(dict(zip(keys, parts)))
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def _emit(run: _Run, stem: str, header: str, csv_text: str, fmt: str) -> None:
    if fmt == "json":
        run.write(f"{stem}.json", _json_rows(header, csv_text))
    else:
        run.write(f"{stem}.csv", csv_text)


def cmd_simulate(args) -> int:
    run = _Run(
        "simulate",
        {
            "topology": args.topology,
            "originations": args.originations,
            "roas": args.roas,
            "aspas": args.aspas,
            "irr": args.irr,
            "kyc": args.kyc,
            "zone": args.zone,
            "scenario": args.scenario,
            "fail_on_harm": args.fail_on_harm or None,
            "format": args.format,
        },
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    reg = _load_registries(run, args)
    registry.check_kyc_adjacency(reg, topo)
    origs = run.parse(args.originations, _load_originations)
    if args.zone:
        cfg = _load_zone(run, topo, args.zone)
        hooks = vipzone.zone_policy(topo, cfg, reg)
    else:
        cfg = vipzone.ZoneConfig(members=frozenset())
        hooks = routing.gao_rexford_hooks()

    exit_code = 0
    if args.scenario:
        scenario = run.parse(args.scenario, attacks.load_scenario)
        rib = attacks.scenario_rib(
            topo, reg, cfg, origs, scenario, workers=args.workers
        )
        report = attacks.classify_harm(topo, rib, scenario)
        run.write("rib.txt", routing.dump_rib(rib))
        _emit(run, "harm", attacks.HARM_CSV_HEADER, attacks.harm_csv([report]), args.format)
        if args.fail_on_harm and report.misdirected:
            exit_code = 2
    else:
        rib = routing.propagate(topo, origs, hooks, workers=args.workers)
        run.write("rib.txt", routing.dump_rib(rib))
    run.finish()
    return exit_code


def cmd_zone(args) -> int:
    run = _Run(
        "zone",
        {"topology": args.topology, "roster": args.roster, "format": args.format},
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    roster = run.parse(args.roster, _load_asn_list)
    derivation = analysis.derive_connected_zone(topo, roster)
    rows = ["asn,role"]
    rows += [f"{a},member" for a in sorted(derivation.connected_members)]
    rows += [f"{a},attached_customer" for a in sorted(derivation.attached_customers)]
    _emit(run, "zone_report", "asn,role", "\n".join(rows) + "\n", args.format)
    run.finish()
    print(
        f"roster {len(derivation.input_roster)} ASNs; "
        f"connected members {len(derivation.connected_members)}; "
        f"attached customers {len(derivation.attached_customers)}"
    )
    return 0


def cmd_curve(args) -> int:
    run = _Run(
        "curve",
        {
            "topology": args.topology,
            "order": args.order,
            "sizes": args.sizes,
            "format": args.format,
        },
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    order = (
        analysis.GrowthOrder.GREEDY_PROTECTED_GAIN
        if args.order == "greedy"
        else analysis.GrowthOrder.BY_CONE_SIZE
    )
    sizes = [int(s) for s in args.sizes.split(",") if s]
    curve = analysis.zone_growth_curve(topo, order, sizes)
    _emit(run, "growth", "zone_size,protected_count", analysis.growth_csv(curve), args.format)
    run.finish()
    return 0


def cmd_local_region(args) -> int:
    run = _Run(
        "local-region",
        {
            "topology": args.topology,
            "zone": args.zone,
            "customer": args.customer,
            "sizes": args.sizes,
            "ix": args.ix,
            "format": args.format,
        },
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    if args.ix:
        ix = run.parse(args.ix, topology.load_ix_memberships)
        topo = topology.Topology(topo.providers, topo.customers, topo.peers, ix)

    if args.customer is not None:
        if not args.zone:
            raise ValueError("--customer requires --zone")
        cfg = _load_zone(run, topo, args.zone)
        work = topology.augment_with_ix_peering(topo) if args.ix else topo
        region = analysis.local_region(work, cfg, args.customer)
        rows = "\n".join(str(a) for a in sorted(region.region))
        run.write("region.txt", rows + ("\n" if rows else ""))
    else:
        if not args.sizes:
            raise ValueError("provide --sizes for distributions or --customer for one region")
        sizes = [int(s) for s in args.sizes.split(",") if s]
        dist = analysis.local_region_distribution(topo, sizes, bool(args.ix))
        _emit(
            run,
            "regions",
            "zone_size,customer_asn,region_size",
            analysis.region_rows_csv(dist),
            args.format,
        )
        _emit(
            run,
            "region_summary",
            "zone_size,p10,p50,p90,frac_leq_1",
            analysis.region_summary_csv(dist),
            args.format,
        )
    run.finish()
    return 0


def cmd_exceptions(args) -> int:
    run = _Run(
        "exceptions",
        {
            "topology": args.topology,
            "zone": args.zone,
            "member": args.member,
            "format": args.format,
        },
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    cfg = _load_zone(run, topo, args.zone)
    members = [args.member] if args.member is not None else sorted(cfg.members)
    results = [
        analysis.routing_exceptions(topo, cfg, m, workers=args.workers)
        for m in members
    ]
    _emit(
        run,
        "exceptions",
        "member,exception_count,destination_asns",
        analysis.exceptions_csv(results),
        args.format,
    )
    run.finish()
    return 0


def cmd_audit(args) -> int:
    run = _Run(
        "audit",
        {
            "topology": args.topology,
            "zone": args.zone,
            "views": list(args.views),
            "waivers": args.waivers,
            "format": args.format,
        },
        Path(args.out_dir),
    )
    topo = run.parse(args.topology, topology.load_topology)
    reg = _load_registries(run, args)
    cfg = _load_zone(run, topo, args.zone)
    views = [run.parse(p, audit.load_member_view) for p in args.views]
    waivers = []
    if args.waivers:
        for lineno, raw in enumerate(run.read(args.waivers).splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line == "member,prefix,note":
                continue
            parts = [p.strip() for p in line.split(",", 2)]
            if len(parts) < 2:
                raise audit.AuditError(f"waivers line {lineno}: expected member,prefix[,note]")
            waivers.append(
                audit.register_exception(
                    cfg,
                    int(parts[0]),
                    registry.parse_prefix(parts[1]),
                    parts[2] if len(parts) > 2 else "",
                )
            )
    findings = audit.audit_views(cfg, topo, reg, views, waivers)
    _emit(
        run,
        "findings",
        audit.FINDINGS_CSV_HEADER,
        audit.findings_csv(findings),
        args.format,
    )
    run.finish()
    return 3 if any(not f.waived for f in findings) else 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--topology", required=True, help="AS-relationship file")
    parser.add_argument("--roas", help="ROA CSV")
    parser.add_argument("--aspas", help="ASPA CSV")
    parser.add_argument("--irr", help="IRR CSV")
    parser.add_argument("--kyc", help="KYC CSV")
    parser.add_argument("--zone", help="zone config file")
    parser.add_argument("--workers", type=int, default=1, help="parallel prefix workers")
    parser.add_argument("--out-dir", required=True, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zonesim",
        description="AS-level routing simulator with verified-route zones of trust",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="propagate routes, optionally under attack")
    _add_common(p)
    p.add_argument("--originations", required=True, help="originations CSV (asn,prefix)")
    p.add_argument("--scenario", help="attack scenario file")
    p.add_argument("--fail-on-harm", action="store_true", help="exit 2 on misdirection")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("zone", help="derive the connected zone from a roster")
    _add_common(p)
    p.add_argument("--roster", required=True, help="roster file, one ASN per line")
    p.set_defaults(func=cmd_zone)

    p = sub.add_parser("curve", help="protected-AS growth curve")
    _add_common(p)
    p.add_argument("--order", choices=("by_cone_size", "greedy"), default="by_cone_size")
    p.add_argument("--sizes", required=True, help="comma-separated zone sizes")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("local-region", help="local-region sizes for attached customers")
    _add_common(p)
    p.add_argument("--customer", type=int, help="report one customer's region")
    p.add_argument("--sizes", help="comma-separated zone sizes for distributions")
    p.add_argument("--ix", help="IX membership file; enables peering augmentation")
    p.set_defaults(func=cmd_local_region)

    p = sub.add_parser("exceptions", help="verified-first routing exceptions per member")
    _add_common(p)
    p.add_argument("--member", type=int, help="restrict to one member")
    p.set_defaults(func=cmd_exceptions)

    p = sub.add_parser("audit", help="check member views for rule violations")
    _add_common(p)
    p.add_argument("--views", nargs="+", required=True, help="member view files")
    p.add_argument("--waivers", help="waiver CSV (member,prefix,note)")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
