"""Command-line entry point: ``mine``, ``eval`` and ``oracle`` subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import IO, Sequence

from .descriptors import (
    Descriptor,
    DescriptorFamily,
    ObjectUniverse,
    StoreError,
    bucketize_numeric,
    load_bucket_specs,
    load_numeric_matrix,
    load_universe,
    read_boolean_matrix,
    read_descriptor_records,
)
from .expressions import (
    ExpressionError,
    Redescription,
    Threshold,
    entropy_distance,
    make_redescription,
    parse,
    render,
)
from .miner import ConfigError, InvariantError, MinerConfig, SyntacticBias, run
from .oracle import DEFAULT_BOUND, Oracle, OracleTooLarge
from .tightening import TightenResult

log = logging.getLogger("cartwheels")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse already exits 2; keep the message terse
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--universe", required=True, help="object identifiers, one per line")
    g.add_argument("--x-family", help="X descriptors: name<TAB>id1,id2,... (or a 0/1 CSV if it ends in .csv)")
    g.add_argument("--y-family", help="Y descriptors, same formats as --x-family")
    g.add_argument("--numeric-matrix", help="CSV of numeric values (first column object id)")
    g.add_argument("--bucket-spec", help="YAML/JSON list of {variable, boundaries}")
    g.add_argument(
        "--numeric-side", choices=("X", "Y"), default="X", help="family that receives bucketized descriptors"
    )


def _add_bias(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", default="0.5", help="Jaccard threshold in (0,1]; p/q is exact")
    p.add_argument("--depth-top", type=int, default=2, help="depth limit of the X tree")
    p.add_argument("--depth-bottom", type=int, default=2, help="depth limit of the Y tree")
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--bias", action="append", default=[], choices=SyntacticBias.FLAGS, metavar="FLAG",
                   help=f"syntactic restriction, repeatable: {', '.join(SyntacticBias.FLAGS)}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cartwheels", description="Mine redescriptions between two descriptor families.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mine = sub.add_parser("mine", help="run the alternating tree miner")
    _add_inputs(mine)
    _add_bias(mine)
    mine.add_argument("--seed", type=int, required=True)
    mine.add_argument("--max-idle", type=int, default=10)
    mine.add_argument("--max-alternations", type=int, default=1000)
    mine.add_argument("--root-random-prob", type=float, default=0.1)
    mine.add_argument("--tighten-tolerance", default="0", help="allowed Jaccard drop per tightening step")
    mine.add_argument("--no-tighten", action="store_true")
    mine.add_argument("--exploration", choices=("keep-terminal", "whole-path"), default="keep-terminal")
    mine.add_argument("--explain", action="store_true", help="include tightening steps in the output")
    mine.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    mine.add_argument("--output", help="write redescriptions here instead of stdout")
    mine.add_argument("--report", help="write the run report (config echo, iteration log) as JSON")
    mine.add_argument("--timing", action="store_true", help="add wall-clock time to the report")

    ev = sub.add_parser("eval", help="score one expression pair")
    _add_inputs(ev)
    ev.add_argument("--lhs", required=True)
    ev.add_argument("--rhs", required=True)
    ev.add_argument("--format", choices=("jsonl", "text"), default="text")

    orc = sub.add_parser("oracle", help="enumerate all admissible redescriptions of a small input")
    _add_inputs(orc)
    _add_bias(orc)
    orc.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="refuse inputs with more admissible expressions")
    orc.add_argument("--output")
    return parser


# -- input assembly -------------------------------------------------------


def _open(path: str) -> IO[str]:
    return open(path, encoding="utf-8", newline="")


def _read_descriptors(path: str, universe: ObjectUniverse, tag: str) -> list[Descriptor]:
    with _open(path) as fh:
        if path.lower().endswith(".csv"):
            return read_boolean_matrix(fh, universe, tag)
        return read_descriptor_records(fh, universe, tag)


def load_inputs(args: argparse.Namespace) -> tuple[ObjectUniverse, DescriptorFamily, DescriptorFamily]:
    with _open(args.universe) as fh:
        universe = load_universe(fh)
    parts: dict[str, list[Descriptor]] = {"X": [], "Y": []}
    if args.x_family:
        parts["X"] = _read_descriptors(args.x_family, universe, "X")
    if args.y_family:
        parts["Y"] = _read_descriptors(args.y_family, universe, "Y")
    if bool(args.numeric_matrix) != bool(args.bucket_spec):
        raise StoreError("--numeric-matrix and --bucket-spec must be given together")
    if args.numeric_matrix:
        with _open(args.numeric_matrix) as fh:
            matrix = load_numeric_matrix(fh)
        with _open(args.bucket_spec) as fh:
            specs = load_bucket_specs(fh)
        parts[args.numeric_side] += bucketize_numeric(matrix, specs, universe)
    for side in ("X", "Y"):
        if not parts[side]:
            raise StoreError(f"no {side} descriptors given (use --{side.lower()}-family or --numeric-matrix)")
    return universe, DescriptorFamily("X", universe, parts["X"]), DescriptorFamily("Y", universe, parts["Y"])


def _threshold(text: str) -> Threshold:
    try:
        theta = Threshold.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not 0 < theta.value <= 1:
        raise ConfigError("theta must lie in (0,1]")
    return theta


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


# -- output ---------------------------------------------------------------


def redescription_record(
    r: Redescription, x: DescriptorFamily, y: DescriptorFamily, tightening: TightenResult | None = None
) -> dict:
    u = x.universe
    rec = {
        "lhs": render(r.lhs, x),
        "rhs": render(r.rhs, y),
        "jaccard": str(r.jaccard),
        "jaccard_float": float(r.jaccard),
        "complement_jaccard": str(r.complement_jaccard),
        "complement_jaccard_float": float(r.complement_jaccard),
        "lhs_support": u.ids_of(r.lhs_support),
        "rhs_support": u.ids_of(r.rhs_support),
        "iteration": r.iteration,
        "seed": r.seed,
    }
    if tightening is not None:
        rec["tightened_from"] = {
            "lhs": render(tightening.original.lhs, x),
            "rhs": render(tightening.original.rhs, y),
            "jaccard": str(tightening.original.jaccard),
        }
        rec["tightening"] = [s.as_dict() for s in tightening.steps]
    return rec


def _json_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": ")) + "\n"


def _text_line(r: Redescription, x: DescriptorFamily, y: DescriptorFamily) -> str:
    return f"{render(r.lhs, x)} ⟺ {render(r.rhs, y)} (J={r.jaccard})\n"


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- commands -------------------------------------------------------------


def cmd_mine(args: argparse.Namespace) -> int:
    _, x, y = load_inputs(args)
    config = MinerConfig(
        theta=_threshold(args.theta),
        depth_top=args.depth_top,
        depth_bottom=args.depth_bottom,
        max_idle_alternations=args.max_idle,
        max_total_alternations=args.max_alternations,
        min_support=args.min_support,
        seed=args.seed,
        root_random_prob=args.root_random_prob,
        bias=SyntacticBias.from_flags(args.bias),
        tighten_tolerance=_fraction(args.tighten_tolerance),
        tighten=not args.no_tighten,
        exploration=args.exploration,
    )
    found, report = run(x, y, config)
    lines = []
    for r, t in zip(found, report.tightening):
        if args.format == "text":
            lines.append(_text_line(r, x, y))
        else:
            lines.append(_json_line(redescription_record(r, x, y, t if args.explain else None)))
    _write(args.output, "".join(lines))
    if args.report:
        body = report.as_dict(timing=args.timing)
        body["redescriptions"] = len(found)
        _write(args.report, json.dumps(body, ensure_ascii=False, indent=2) + "\n")
    log.info("%d redescriptions, stopped on %s", len(found), report.stop_reason)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    universe, x, y = load_inputs(args)
    r = make_redescription(parse(args.lhs, x), parse(args.rhs, y), x, y)
    if args.format == "jsonl":
        rec = redescription_record(r, x, y)
        rec["entropy_distance"] = entropy_distance(r.lhs_support, r.rhs_support, universe)
        sys.stdout.write(_json_line(rec))
        return EXIT_OK
    ids = universe.ids_of
    sys.stdout.write(
        f"jaccard {float(r.jaccard):.6f} ({r.jaccard})\n"
        f"complement {float(r.complement_jaccard):.6f} ({r.complement_jaccard})\n"
        f"entropy_distance {entropy_distance(r.lhs_support, r.rhs_support, universe):.6f}\n"
        f"lhs {render(r.lhs, x)} = {{{', '.join(ids(r.lhs_support))}}}\n"
        f"rhs {render(r.rhs, y)} = {{{', '.join(ids(r.rhs_support))}}}\n"
    )
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    universe, x, y = load_inputs(args)
    bias = SyntacticBias.from_flags(args.bias)
    if args.depth_top < 1 or args.depth_bottom < 1:
        raise ConfigError("tree depths must be >= 1")
    oracle = Oracle(
        x,
        y,
        args.depth_top,
        args.depth_bottom,
        negation=(bias.negation_lhs, bias.negation_rhs),
        disjunction=(bias.disjunction_lhs, bias.disjunction_rhs),
        bound=args.bound,
    )
    lines = []
    for p in oracle.pairs(_threshold(args.theta), args.min_support):
        lines.append(
            _json_line(
                {
                    "lhs": render(p.lhs, x),
                    "rhs": render(p.rhs, y),
                    "jaccard": _ratio_text(p.jaccard),
                    "complement_jaccard": _ratio_text(p.complement_jaccard),
                    "lhs_support": universe.ids_of(p.lhs_support),
                    "rhs_support": universe.ids_of(p.rhs_support),
                }
            )
        )
    _write(args.output, "".join(lines))
    return EXIT_OK


def _ratio_text(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


COMMANDS = {"mine": cmd_mine, "eval": cmd_eval, "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except InvariantError as exc:
        print(f"cartwheels: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (StoreError, ExpressionError, ConfigError, OracleTooLarge) as exc:
        print(f"cartwheels: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"cartwheels: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
