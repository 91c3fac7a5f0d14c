"""The ``effws`` command line.

Subcommands: ``check`` (parse, desugar, typecheck), ``run`` (evaluate a
file under one of the three routes), ``translate`` (emit the translated
program), ``diff`` (differential runs over a file or generated
programs), ``bench`` (the N-queens benchmark).  Exit codes: 0 success,
1 program error, 2 internal disagreement, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .. import core_delimcc as cd
from .. import core_eff as ce
from ..delimcc_step import run_step
from ..errors import EffwsError
from ..pipeline import ROUTES, surface_to_core
from ..runtime import DEFAULT_FUEL, DEFAULT_MAX_DEPTH
from ..surface import parse
from ..translate import translate
from .diff import diff_run
from .generate import GenConfig, gen_program
from .queens import VARIANTS, bench_queens

EXIT_OK = 0
EXIT_PROGRAM_ERROR = 1
EXIT_DISAGREE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="effws", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="evaluation step budget")
        sp.add_argument("--depth", type=int, default=DEFAULT_MAX_DEPTH, help="evaluation depth budget")

    sp = sub.add_parser("check", help="parse, desugar and typecheck a file")
    sp.add_argument("file")
    sp.add_argument("--dump-core", action="store_true", help="print the core program as an s-expression")

    sp = sub.add_parser("run", help="run a file under one evaluation route")
    sp.add_argument("file")
    sp.add_argument("--semantics", choices=ROUTES, default="eff")
    sp.add_argument("--trace-steps", action="store_true", help="dump machine configurations (step route)")
    common(sp)

    sp = sub.add_parser("translate", help="translate a file to the delimited-control calculus")
    sp.add_argument("file")
    sp.add_argument("--emit", action="store_true", help="print the translated program as an s-expression")
    sp.add_argument("--dump-delimcc", action="store_true", help="alias of --emit")

    sp = sub.add_parser("diff", help="compare the three routes")
    sp.add_argument("file", nargs="?", help="source file (omit with --gen)")
    sp.add_argument("--gen", action="store_true", help="diff generated programs instead of a file")
    sp.add_argument("--seed", type=int, default=0, help="first generator seed")
    sp.add_argument("--count", type=int, default=1, help="number of generated programs")
    sp.add_argument("--size", type=int, default=20, help="generator size budget")
    sp.add_argument("--state", action="store_true", help="enable state-shaped templates")
    sp.add_argument("--dynamic", action="store_true", help="enable dynamic-effect templates")
    common(sp)

    sp = sub.add_parser("bench", help="N-queens benchmark")
    sp.add_argument("--n", type=int, required=True, help="board size")
    sp.add_argument("--variant", choices=VARIANTS, default="effect-backtrack")
    sp.add_argument("--json", action="store_true", help="emit the result as JSON")
    sp.add_argument("--fuel", type=int, default=10**8)
    sp.add_argument("--depth", type=int, default=DEFAULT_MAX_DEPTH)
    return p


def _load(path: str) -> ce.CoreEffProgram:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    core = surface_to_core(parse(text))
    ce.typecheck(core)
    return core


def _cmd_check(args) -> int:
    core = _load(args.file)
    if args.dump_core:
        print(ce.sexp(core))
    else:
        print(f"{args.file}: ok, type {ce.typecheck(core)}")
    return EXIT_OK


def _cmd_run(args) -> int:
    core = _load(args.file)
    if args.semantics == "eff":
        from ..eff_denot import run_eff

        out = run_eff(core, fuel=args.fuel, max_depth=args.depth)
    elif args.semantics == "trans":
        from ..delimcc_denot import run_delimcc

        out = run_delimcc(translate(core), fuel=args.fuel, max_depth=args.depth)
    else:
        trace_fn = None
        if args.trace_steps:
            from ..delimcc_step import describe

            def trace_fn(i, m):
                if i < 10_000:
                    print(f"[{i}] {describe(m)}", file=sys.stderr)

        out = run_step(translate(core), fuel=args.fuel, max_depth=args.depth, trace_fn=trace_fn)
    print(out.trace_text())
    print(out.result_line())
    return EXIT_OK if out.kind == "value" else EXIT_PROGRAM_ERROR


def _cmd_translate(args) -> int:
    core = _load(args.file)
    d = translate(core)
    cd.typecheck(d)
    if args.emit or args.dump_delimcc:
        print(cd.sexp(d))
    else:
        print(f"{args.file}: translation ok, type {cd.typecheck(d)}")
    return EXIT_OK


def _cmd_diff(args) -> int:
    reports = []
    if args.gen:
        for seed in range(args.seed, args.seed + args.count):
            cfg = GenConfig(seed=seed, size=args.size, state=args.state, dynamic=args.dynamic)
            p = gen_program(cfg)
            reports.append(diff_run(p, fuel=args.fuel, max_depth=args.depth, program_id=f"gen-{seed}"))
    else:
        if args.file is None:
            print("effws diff: either FILE or --gen is required", file=sys.stderr)
            return EXIT_USAGE
        core = _load(args.file)
        reports.append(diff_run(core, fuel=args.fuel, max_depth=args.depth, program_id=args.file))
    for r in reports:
        print(r.to_json_line())
    return EXIT_OK if all(r.verdict == "agree" for r in reports) else EXIT_DISAGREE


def _cmd_bench(args) -> int:
    r = bench_queens(args.n, args.variant, fuel=args.fuel, max_depth=args.depth)
    if args.json:
        print(json.dumps(r.to_json()))
    else:
        sol = " ".join(map(str, r.solution)) if r.solution else "-"
        print(
            f"{r.variant} n={r.n}: {'solved' if r.solved else 'no solution'}"
            f" [{sol}] in {r.wall_time_s:.3f}s ({r.steps} steps)"
        )
    return EXIT_OK


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "translate":
            return _cmd_translate(args)
        if args.command == "diff":
            return _cmd_diff(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except EffwsError as ex:
        print(str(ex), file=sys.stderr)
        return EXIT_PROGRAM_ERROR
    except FileNotFoundError as ex:
        print(str(ex), file=sys.stderr)
        return EXIT_PROGRAM_ERROR
    except ValueError as ex:
        print(str(ex), file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError(args.command)


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
