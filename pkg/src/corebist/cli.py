"""Command-line surface: lint, bist, faultsim, import, tap, diagnose, report.

Exit codes: 0 success, 1 validation failure, 2 runtime error. All randomness
is seeded through the plan (ALFSR polynomial + seed) and echoed in every
report header, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import access, bist, circuit, compactor, diagnosis, faultsim, tpg
from .errors import CoreBistError, NetlistError, PlanError, ProtocolError, \
    SimulationError

REPORT_SCHEMA_VERSION = 1

WORKERS_ENV = "COREBIST_WORKERS"


def _default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header(netlist, plan=None):
    h = {"schema_version": REPORT_SCHEMA_VERSION, "netlist": netlist.name}
    if plan is not None:
        h["alfsr"] = {"poly": str(plan.alfsr_poly),
                      "seed": f"{plan.alfsr_seed:#x}"}
        h["pattern_count"] = plan.pattern_count
    return h


def _load_plan(args, netlist):
    if not args.plan:
        raise PlanError("--plan is required for this command")
    plan = bist.BistPlan.load(args.plan)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        plan = replace(plan, alfsr_seed=args.seed, golden=None)
    return plan


def parse_pattern_file(path, netlist, plan):
    """External patterns: one vector per line, binary MSB-left, width =
    sum of block input widths in plan binding order; '#' comments."""
    blocks = {b.name: b for b in netlist.blocks}
    ports = [blocks[b.block].input_port for b in plan.bindings]
    total = sum(len(p) for p in ports)
    patterns = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            if set(line) - {"0", "1"}:
                raise SimulationError(f"{path}:{lineno}: non-binary vector")
            if len(line) != total:
                raise SimulationError(
                    f"{path}:{lineno}: vector width {len(line)} != "
                    f"expected {total} (sum of block input widths)")
            assignment = {}
            pos = 0
            for port in ports:
                chunk = line[pos:pos + len(port)]
                pos += len(port)
                # MSB-left text; port lists are LSB-first
                for net, ch in zip(port, reversed(chunk)):
                    assignment[net] = int(ch)
            patterns.append(tuple(assignment[n] for n in netlist.primary_inputs))
    if not patterns:
        raise SimulationError(f"{path}: no patterns")
    return patterns


def _resolve_patterns(args, netlist, plan):
    """--patterns N (count) or --patterns FILE (external vectors)."""
    spec = getattr(args, "patterns", None)
    if spec is None:
        return bist.plan_patterns(netlist, plan), plan.pattern_count, "alfsr"
    if spec.isdigit():
        count = int(spec)
        return bist.plan_patterns(netlist, plan, count=count), count, "alfsr"
    patterns = parse_pattern_file(spec, netlist, plan)
    return patterns, len(patterns), os.path.basename(spec)


# -- subcommands ---------------------------------------------------------------

def cmd_lint(args):
    try:
        netlist = circuit.load_netlist(args.netlist)
    except (NetlistError, OSError) as e:
        print(f"FAIL: {e}")
        return 1
    print(f"OK: {netlist.name}: {len(netlist.nets)} nets, "
          f"{len(netlist.gates)} gates, {len(netlist.flops)} flops, "
          f"{len(netlist.blocks)} blocks")
    return 0


def _coverage_tables(netlist, patterns, workers, kinds=("saf", "tdf")):
    out = {}
    if "saf" in kinds:
        universe = faultsim.collapse(
            faultsim.enumerate_faults(netlist, ("SA0", "SA1")), netlist)
        report = faultsim.parallel_fault_sim(netlist, universe, patterns,
                                             workers=workers)
        out["SAF"] = report
    if "tdf" in kinds:
        universe = faultsim.enumerate_faults(netlist, ("STR", "STF"))
        out["TDF"] = faultsim.tdf_sim(netlist, universe, patterns,
                                      workers=workers)
    return out


def _coverage_json(tables):
    blocks = {}
    for kind, report in tables.items():
        for bname, row in report.per_block().items():
            entry = blocks.setdefault(bname, {})
            entry[kind] = {"faults": row["faults"],
                           "detected": row["detected"],
                           "fc_percent": round(100.0 * row["coverage"], 2)}
            entry["clock_cycles"] = report.pattern_count
    return blocks


def cmd_bist(args):
    netlist = circuit.load_netlist(args.netlist)
    plan = _load_plan(args, netlist)
    if plan.golden is None:
        plan = bist.compute_golden(netlist, plan)
    result = bist.run_selftest(netlist, plan)
    patterns, count, source = _resolve_patterns(args, netlist, plan)
    tables = _coverage_tables(netlist, patterns, args.workers)

    payload = _header(netlist, plan)
    payload["patterns_applied"] = result.patterns_applied
    payload["pattern_source"] = source
    payload["signatures"] = [
        {"block": s.block, "poly": str(s.polynomial), "value": "0x" + s.hex(),
         "pattern_count": s.pattern_count}
        for s in result.signatures]
    payload["pass"] = list(result.passed)
    payload["coverage"] = _coverage_json(tables)
    if args.toggle:
        frac, _counts = circuit.toggle_activity(netlist, patterns)
        payload["toggle_activity"] = round(frac, 4)

    out = os.path.join(args.out, "bist_report.json")
    _write_json(out, payload)
    print(_render_bist(payload))
    print(f"report written to {out}")
    return 0


def _render_bist(p):
    lines = [f"netlist {p['netlist']}  ALFSR {p['alfsr']['poly']} "
             f"seed {p['alfsr']['seed']}  patterns {p['patterns_applied']}"]
    for s, ok in zip(p["signatures"], p["pass"]):
        lines.append(f"  {s['block']:<14} signature {s['value']}  "
                     f"{'PASS' if ok else 'FAIL'}")
    lines.append(f"{'Component':<14} {'Kind':<4} {'Faults':>8} {'FC [%]':>7} "
                 f"{'Cycles':>7}")
    for bname, entry in sorted(p["coverage"].items()):
        for kind in ("SAF", "TDF"):
            if kind in entry:
                row = entry[kind]
                lines.append(f"{bname:<14} {kind:<4} {row['faults']:>8} "
                             f"{row['fc_percent']:>7.2f} "
                             f"{entry['clock_cycles']:>7}")
    if "toggle_activity" in p:
        lines.append(f"toggle activity: {p['toggle_activity']:.2%}")
    return "\n".join(lines)


def cmd_faultsim(args):
    netlist = circuit.load_netlist(args.netlist)
    plan = _load_plan(args, netlist)
    patterns, count, source = _resolve_patterns(args, netlist, plan)
    kinds = tuple(k.strip().lower() for k in args.kinds.split(","))
    tables = _coverage_tables(netlist, patterns, args.workers, kinds)
    payload = _header(netlist, plan)
    payload["pattern_source"] = source
    payload["pattern_count"] = count
    payload["coverage"] = _coverage_json(tables)
    payload["summary"] = {k: faultsim.coverage(r) for k, r in tables.items()}
    if args.compare:
        ext = parse_pattern_file(args.compare, netlist, plan)
        ext_tables = _coverage_tables(netlist, ext, args.workers, kinds)
        payload["comparison"] = {
            "external_file": os.path.basename(args.compare),
            "external_pattern_count": len(ext),
            "coverage": _coverage_json(ext_tables),
        }
    out = os.path.join(args.out, "coverage_report.json")
    _write_json(out, payload)
    for kind, report in tables.items():
        print(f"{kind}: {report.detected}/{len(report.faults)} detected "
              f"({100.0 * report.coverage:.2f}%) with {count} patterns")
    print(f"report written to {out}")
    return 0


def cmd_import(args):
    netlist = circuit.load_netlist(args.netlist)
    plan = _load_plan(args, netlist)
    patterns = parse_pattern_file(args.file, netlist, plan)
    print(f"OK: {len(patterns)} patterns, width "
          f"{len(netlist.primary_inputs)} primary inputs")
    if args.out:
        out = os.path.join(args.out, "imported_patterns.json")
        _write_json(out, {
            "schema_version": REPORT_SCHEMA_VERSION,
            "source": os.path.basename(args.file),
            "pattern_count": len(patterns),
            "primary_inputs": list(netlist.primary_inputs),
            "patterns": ["".join(str(b) for b in reversed(p)) for p in patterns],
        })
        print(f"normalized patterns written to {out}")
    return 0


def cmd_tap(args):
    netlist = circuit.load_netlist(args.netlist)
    plan = _load_plan(args, netlist)
    trace = access.SerialTrace.load(args.trace)
    session = access.TapSession(bist.BistSession(netlist, plan))
    tdo = access.drive_trace(session, trace)
    rendered = access.SerialTrace(trace.samples).render(tdo=tdo)
    out = os.path.join(args.out, "tap_trace.out")
    with open(out, "w") as fh:
        fh.write(rendered)
    print(f"{len(trace.samples)} edges replayed; final TAP state "
          f"{session.tap.value}; TDO trace written to {out}")
    if args.expect:
        expected = access.SerialTrace.load(args.expect)
        exp = expected.tdo
        if exp is None:
            raise ProtocolError(f"{args.expect}: golden trace has no TDO column")
        got = [0 if b is None else b for b in tdo]
        for i, (g, e) in enumerate(zip(got, exp)):
            if g != e:
                print(f"MISMATCH at edge {i}: got TDO={g}, expected {e}")
                return 1
        if len(got) != len(exp):
            print(f"MISMATCH: length {len(got)} vs expected {len(exp)}")
            return 1
        print("TDO matches golden trace")
    return 0


def cmd_diagnose(args):
    netlist = circuit.load_netlist(args.netlist)
    plan = _load_plan(args, netlist)
    patterns, count, source = _resolve_patterns(args, netlist, plan)
    universe = faultsim.collapse(
        faultsim.enumerate_faults(netlist, ("SA0", "SA1")), netlist)
    matrix = diagnosis.build_matrix(netlist, universe, patterns,
                                    granularity=args.granularity, plan=plan,
                                    workers=args.workers)
    report = diagnosis.classify(matrix)
    fault_blocks = faultsim._assign_blocks(netlist, universe.faults)
    per_block = diagnosis.classify_per_block(matrix, fault_blocks)

    payload = _header(netlist, plan)
    payload["pattern_source"] = source
    payload["pattern_count"] = count
    payload["overall"] = report.to_dict()
    payload["per_block"] = {b: r.to_dict() for b, r in per_block.items()}
    out = os.path.join(args.out, "diagnosis_report.json")
    _write_json(out, payload)

    print(f"{'Component':<14} {'Max size':>8} {'Med size':>8}")
    for bname, rep in per_block.items():
        print(f"{bname:<14} {rep.max_size:>8} {rep.mean_size:>8.1f}")
    print(f"{'(overall)':<14} {report.max_size:>8} {report.mean_size:>8.1f}")
    print(f"report written to {out}")
    return 0


def cmd_report(args):
    with open(args.file) as fh:
        payload = json.load(fh)
    if "signatures" in payload:
        print(_render_bist(payload))
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


# -- entry point ---------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="corebist",
        description="BIST workbench: pattern generation, signature "
                    "compaction, fault coverage, diagnosis, serial access.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, plan=True):
        p.add_argument("netlist", help="bench-format netlist file")
        if plan:
            p.add_argument("--plan", help="BIST plan JSON file")
            p.add_argument("--seed", type=lambda s: int(s, 0),
                           help="override the plan's ALFSR seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=_default_workers(),
                       help=f"fault-sim worker processes (env {WORKERS_ENV})")

    p = sub.add_parser("lint", help="parse and validate a netlist")
    p.add_argument("netlist")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("bist", help="run the full self-test plus coverage")
    common(p)
    p.add_argument("--patterns", help="pattern count or external pattern file")
    p.add_argument("--toggle", action="store_true",
                   help="also measure toggle activity")
    p.set_defaults(func=cmd_bist)

    p = sub.add_parser("faultsim", help="fault simulation and coverage only")
    common(p)
    p.add_argument("--patterns", help="pattern count or external pattern file")
    p.add_argument("--kinds", default="saf,tdf", help="saf,tdf subset")
    p.add_argument("--compare", help="external pattern file for a "
                                     "side-by-side coverage table")
    p.set_defaults(func=cmd_faultsim)

    p = sub.add_parser("import", help="validate an external pattern file")
    p.add_argument("file", help="pattern file (one binary vector per line)")
    common(p)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("tap", help="replay a serial TAP trace")
    p.add_argument("trace", help="trace file: 'TCK TMS TDI' per line")
    common(p)
    p.add_argument("--expect", help="golden trace with TDO column to diff")
    p.set_defaults(func=cmd_tap)

    p = sub.add_parser("diagnose", help="diagnostic matrix and fault classes")
    common(p)
    p.add_argument("--patterns", help="pattern count or external pattern file")
    p.add_argument("--granularity", choices=diagnosis.GRANULARITIES,
                   default="pattern")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("report", help="render a JSON report as text")
    p.add_argument("file")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NetlistError, PlanError, SimulationError, ProtocolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except CoreBistError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
