"""Command-line front end.

Exit codes: 0 the judgment holds, 1 it fails (reason on stderr), 2 malformed
input.  Exit codes are the machine-readable verdict; traces go to stdout.
"""

import argparse
import sys

from .bench import run_benchmark, write_report
from .errors import RelcheckError
from .lam import boolean_eval, check_judgment, parse_rpoint, parse_term, parse_type
from .machine import normal_run, render_trace
from .mll import load_structure
from .relsem import oracle_check, parse_point_list

ORACLE_WARN_CELLS = 12


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="relcheck")
    sub = top.add_subparsers(dest="command", required=True)

    def add_structure_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("structure", help="path to a .mllps structure file")
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--point", help="comma-separated conclusion points")
        group.add_argument("--point-file", help="file containing the same point syntax")
        return p

    check = add_structure_command("check", "run the token machine on a point")
    check.add_argument("--trace", action="store_true", help="print the event log")
    check.add_argument("--max-steps", type=int, default=None,
                       help="override the displacement cap (default 2 * cells)")
    check.add_argument("--fresh-prefix", default="_g",
                       help="name prefix for machine-introduced variables")

    trace = add_structure_command("trace", "run the machine and print the event log")
    trace.add_argument("--max-steps", type=int, default=None)
    trace.add_argument("--fresh-prefix", default="_g")

    add_structure_command("oracle", "decide the same judgment by exhaustive search")

    lc = sub.add_parser("lambda-check", help="membership of a point for a closed term")
    lc.add_argument("term")
    lc.add_argument("--type", required=True, dest="stype")
    lc.add_argument("--point", required=True)

    lb = sub.add_parser("lambda-bool", help="classify a closed boolean term")
    lb.add_argument("term")

    bench = sub.add_parser("bench", help="time the chain family; writes CSV and a figure")
    bench.add_argument("--sizes", default="100,1000,10000",
                       help="comma-separated chain sizes")
    bench.add_argument("--out-dir", default="reports")
    bench.add_argument("--repeats", type=int, default=3)
    return top


def _load_point(ns):
    if ns.point_file is not None:
        with open(ns.point_file, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = ns.point
    return parse_point_list(text)


def _cmd_machine(ns, force_trace: bool) -> int:
    ps = load_structure(ns.structure)
    point = _load_point(ns)
    prefix = ns.fresh_prefix.lstrip("?")
    result = normal_run(ps, point, max_displacements=ns.max_steps, fresh_prefix=prefix)
    if force_trace or getattr(ns, "trace", False):
        sys.stdout.write(render_trace(result))
    if result.accepted:
        return 0
    print(f"rejected: {result.reason}", file=sys.stderr)
    return 1


def _cmd_oracle(ns) -> int:
    ps = load_structure(ns.structure)
    if len(ps.cells) > ORACLE_WARN_CELLS:
        print(
            f"warning: exhaustive search over {len(ps.cells)} cells may be very slow",
            file=sys.stderr,
        )
    point = _load_point(ns)
    if oracle_check(ps, point):
        return 0
    print("rejected: no experiment realizes this point", file=sys.stderr)
    return 1


def _cmd_lambda_check(ns) -> int:
    term = parse_term(ns.term)
    stype = parse_type(ns.stype)
    point = parse_rpoint(ns.point)
    if check_judgment(term, stype, point):
        return 0
    print("rejected: point is not in the term's interpretation", file=sys.stderr)
    return 1


def _cmd_lambda_bool(ns) -> int:
    verdict = boolean_eval(parse_term(ns.term))
    print(verdict.value)
    return 0 if verdict.value == "true" else 1


def _cmd_bench(ns) -> int:
    sizes = [int(s) for s in ns.sizes.split(",") if s.strip()]
    rows = run_benchmark(sizes, repeats=ns.repeats)
    csv_path, png_path = write_report(rows, ns.out_dir)
    for r in rows:
        print(f"n={r.size} cells={r.cells} displacements={r.displacements} "
              f"unifications={r.unifications} seconds={r.seconds:.4f}")
    print(f"wrote {csv_path} and {png_path}")
    return 0


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "check":
            return _cmd_machine(ns, force_trace=False)
        if ns.command == "trace":
            return _cmd_machine(ns, force_trace=True)
        if ns.command == "oracle":
            return _cmd_oracle(ns)
        if ns.command == "lambda-check":
            return _cmd_lambda_check(ns)
        if ns.command == "lambda-bool":
            return _cmd_lambda_bool(ns)
        return _cmd_bench(ns)
    except RelcheckError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
