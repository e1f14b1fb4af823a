"""Command-line front end: ``tclab <command> ...`` writes a JSON report to stdout.

Exit codes: 0 for clean verdicts, 2 for domain findings (arbitrage, no
price system, empty dual interior), 1 for input errors.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path

from . import __version__, lp
from .arbitrage import check_na2, is_na2_witness, validate_witness
from .cones import check_ef_conditions
from .fatou import replication_norm_sweep
from .market import load_claim, load_market
from .numeric import InputError, jsonable
from .pricing import find_cps
from .superhedging import superhedge_price

SCHEMA = "tclab.report/1"
EXIT_OK, EXIT_INPUT, EXIT_FINDING = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _mode(args) -> str:
    return "exact" if args.exact else "float"


def _vector(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_validate(args):
    tree = load_market(args.spec, exact=args.exact)
    return EXIT_OK, {"valid": True, "d": tree.d, "T": tree.T, "nodes": len(tree),
                     "leaves": len(tree.leaves())}


def cmd_check_ef(args):
    tree = load_market(args.spec, exact=args.exact)
    nodes = {}
    finding = False
    for n in tree:
        rep = check_ef_conditions(n.cone, mode=_mode(args))
        finding |= not rep["interior_nonempty"]
        nodes[str(n.id)] = rep
    return (EXIT_FINDING if finding else EXIT_OK), {"nodes": nodes, "interior_nonempty_everywhere": not finding}


def cmd_check_na2(args):
    tree = load_market(args.spec, exact=args.exact)
    rep = check_na2(tree, method=args.method, mode=_mode(args))
    out = rep.to_json()
    if args.witness:
        node = tree.root if args.at is None else args.at
        ok, w = is_na2_witness(tree, node, _vector(args.witness), mode=_mode(args))
        out["candidate_witness"] = {"node": node, "eta": _vector(args.witness), "is_witness": ok,
                                    "checks": validate_witness(tree, w) if w else None,
                                    "witness": w.to_json() if w else None}
    finding = not rep.holds or rep.agree is False
    return (EXIT_FINDING if finding else EXIT_OK), out


def cmd_find_cps(args):
    tree = load_market(args.spec, exact=args.exact)
    anchor = (args.at, _vector(args.anchor)) if args.anchor else None
    if anchor is not None and args.at is None:
        raise InputError("--anchor requires --at")
    res = find_cps(tree, t0=args.t0, strict=args.strict, anchor=anchor,
                   node=None if anchor else args.at, mode=_mode(args))
    out = {"found": res.found, "strict": args.strict, "margin": jsonable(res.margin),
           "system": res.system.to_json() if res.system else None,
           "certificate": jsonable(res.certificate) if res.certificate is not None else None}
    return (EXIT_OK if res.found else EXIT_FINDING), out


def cmd_superhedge(args):
    tree = load_market(args.spec, exact=args.exact)
    if not args.claim:
        raise InputError("--claim is required")
    claim = load_claim(args.claim, exact=args.exact)
    res = superhedge_price(tree, claim, node=args.at, t0=args.t0, mode=_mode(args), dual_only=args.dual_only)
    return (EXIT_FINDING if res.status == "arbitrage" else EXIT_OK), res.to_json()


def cmd_fatou_sweep(args):
    d_list = [int(v) for v in args.d.split(",")] if args.d else [4, 8, 16]
    if any(d < 2 for d in d_list):
        raise InputError("every d must be at least 2")
    if args.eps <= 0:
        raise InputError("--eps must be positive")
    rows = replication_norm_sweep(args.eps, d_list, n=args.n)
    return EXIT_OK, {"eps": args.eps, "n": args.n, "table": rows}


COMMANDS = {
    "validate": cmd_validate,
    "check-ef": cmd_check_ef,
    "check-na2": cmd_check_na2,
    "find-cps": cmd_find_cps,
    "superhedge": cmd_superhedge,
    "fatou-sweep": cmd_fatou_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tclab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tclab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, spec=True):
        if spec:
            p.add_argument("spec", help="market-spec JSON file")
        p.add_argument("--exact", action="store_true", help="route every LP through exact rationals")
        p.add_argument("--report", help="also write the JSON report to this path")
        p.add_argument("--dump-lp", help="append a text dump of every LP solved to this path")
        return p

    common(sub.add_parser("validate", help="validate a market spec"))
    common(sub.add_parser("check-ef", help="efficient-friction diagnostics per node"))
    p = common(sub.add_parser("check-na2", help="decide no-arbitrage of the second kind"))
    p.add_argument("--method", choices=["primal", "dual", "both"], default="both")
    p.add_argument("--witness", help="comma-separated candidate position to test at --at (default: root)")
    p.add_argument("--at", type=int, help="node for --witness")
    p = common(sub.add_parser("find-cps", help="search a consistent price system"))
    p.add_argument("--t0", type=int, default=0)
    p.add_argument("--at", type=int, help="subtree root node")
    p.add_argument("--strict", action="store_true", help="require interior dual values")
    p.add_argument("--anchor", help="comma-separated value of Z at --at")
    p = common(sub.add_parser("superhedge", help="superhedging price of a terminal claim"))
    p.add_argument("--claim", help="claim JSON file")
    p.add_argument("--at", type=int, help="hedge start node (default: root)")
    p.add_argument("--t0", type=int, help="time of the start node (checked)")
    p.add_argument("--dual-only", action="store_true")
    p = common(sub.add_parser("fatou-sweep", help="counter-example replication sweep"), spec=False)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--d", default="4,8,16", help="comma-separated truncations")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def _csv(rows) -> str:
    buf = io.StringIO()
    fields = ["d", "lp_min_norm", "oracle_partial_sum", "na2_verdict", "transfer_norm", "gn_price", "method"]
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def run(argv=None, stdout=None) -> int:
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    start = time.perf_counter()
    dump = lp.dump_lps(args.dump_lp) if args.dump_lp else contextlib.nullcontext()
    try:
        with dump:
            code, results = COMMANDS[args.command](args)
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "version": __version__,
        "mode": _mode(args),
        "input": {"path": getattr(args, "spec", None),
                  "sha256": _digest(args.spec) if getattr(args, "spec", None) else None},
        "exit_code": code,
        "results": jsonable(results),
        "timings": {"total_seconds": time.perf_counter() - start},
    }
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    if getattr(args, "format", "json") == "csv":
        stdout.write(_csv(results["table"]))
    else:
        stdout.write(text + "\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
