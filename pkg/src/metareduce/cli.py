"""Command line front end: ``metareduce <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import __version__
from .clause import MetaruleSyntaxError, Metarule, SortError, parse, sort_key
from .fragments import (CONSTRAINTS, FragmentSpec, ResourceGuardError, count_fragment,
                        enumerate_fragment)
from .reduction import (ORDER_POLICIES, ReductionRelation, check_validity, is_redundant,
                        mreduce, reduce_with_report)
from .resolution import derives_k
from .theory import WITNESSES, hypothesis_space_size

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def threads_from_env() -> int:
    """METAREDUCE_THREADS, default the machine's core count.  All searches
    are sequential, so the value only has to be valid; output never depends
    on it."""
    raw = os.environ.get("METAREDUCE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"METAREDUCE_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError("METAREDUCE_THREADS must be a positive integer")
    return n


def read_theory(path: str) -> list[Metarule]:
    """One metarule per line; ``#`` starts a comment."""
    out = []
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse(line))
        except (MetaruleSyntaxError, SortError) as e:
            raise UsageError(f"{path}:{no}: {e}")
    return out


def _arities(text: str) -> frozenset[int]:
    try:
        return frozenset(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad arity list {text!r}")


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _clause(text: str) -> Metarule:
    try:
        return parse(text)
    except (MetaruleSyntaxError, SortError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_fragment(p, required=True):
    p.add_argument("--constraint", choices=CONSTRAINTS, default="connected")
    p.add_argument("--arities", type=_arities, required=required)
    p.add_argument("--max-body", type=int, required=required)


def _add_relation(p, default_kind=None):
    p.add_argument("--relation", type=str.upper, choices=["S", "E", "D"],
                   default=default_kind, required=default_kind is None)
    p.add_argument("--depth", type=_nonneg, default=7)
    p.add_argument("--slack", type=_nonneg, default=0)


def _add_output(p):
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metareduce", description="Enumerate and reduce sets of metarules.")
    parser.add_argument("--version", action="version", version=f"metareduce {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", help="list the metarules of a fragment")
    _add_fragment(p)
    p.add_argument("--count-only", action="store_true")
    _add_output(p)

    p = sub.add_parser("reduce", help="reduce a fragment or a theory file")
    _add_fragment(p, required=False)
    p.add_argument("--set", metavar="FILE", help="theory file instead of a fragment")
    _add_relation(p)
    p.add_argument("--order", choices=ORDER_POLICIES, default="size-desc")
    p.add_argument("--target-max-body", type=int, metavar="M",
                   help="reduce to the clauses with at most M body literals")
    p.add_argument("--no-repair", action="store_true",
                   help="single pass only; the result may lose support at the depth bound")
    p.add_argument("--validate", action="store_true",
                   help="re-check every removed and every kept clause")
    p.add_argument("--timeout", type=float, default=0, help="seconds, 0 for none")
    p.add_argument("--plot", metavar="FILE", help="write a body-size histogram (PNG)")
    _add_output(p)

    p = sub.add_parser("check", help="is a clause redundant in a theory")
    p.add_argument("--set", metavar="FILE", required=True)
    p.add_argument("--clause", type=_clause, required=True)
    _add_relation(p)
    _add_output(p)

    p = sub.add_parser("derive", help="find a derivation of a clause")
    p.add_argument("--set", metavar="FILE", required=True)
    p.add_argument("--clause", type=_clause, required=True)
    p.add_argument("--depth", type=_nonneg, default=7)
    p.add_argument("--trace", action="store_true", help="print every resolution step")
    _add_output(p)

    p = sub.add_parser("witness", help="print an irreducibility witness")
    p.add_argument("--name", choices=sorted(WITNESSES), required=True)
    p.add_argument("--param", type=int)
    _add_output(p)

    p = sub.add_parser("hspace", help="hypothesis space bound (p^(m+1) k)^n")
    p.add_argument("--predicates", type=_nonneg, required=True)
    p.add_argument("--metarules", type=_nonneg, required=True)
    p.add_argument("--max-body", type=_nonneg, required=True)
    p.add_argument("--clauses", type=_nonneg, required=True)
    _add_output(p)
    return parser


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _lines(clauses) -> str:
    return "".join(m.text + "\n" for m in sorted(clauses, key=sort_key))


def _relation(args) -> ReductionRelation:
    return ReductionRelation(args.relation, args.depth, args.slack)


def cmd_enumerate(args) -> int:
    spec = FragmentSpec(args.arities, args.max_body, args.constraint)
    if args.count_only:
        n = count_fragment(spec)
        _emit(args, json.dumps({"fragment": spec.name, "count": n}) if args.format == "json" else str(n))
        return EXIT_OK
    clauses = enumerate_fragment(spec)
    if args.format == "json":
        _emit(args, json.dumps({"fragment": spec.name, "count": len(clauses),
                                "clauses": [m.text for m in clauses]}, indent=2))
    else:
        _emit(args, _lines(clauses))
    return EXIT_OK


def _input_theory(args):
    if args.set:
        return read_theory(args.set), args.set, None
    if args.arities is None or args.max_body is None:
        raise UsageError("reduce needs --set FILE or --arities and --max-body")
    spec = FragmentSpec(args.arities, args.max_body, args.constraint)
    return enumerate_fragment(spec), spec.name, spec


def plot_body_sizes(path: str, theory, kept, title: str) -> None:
    try:
        import matplotlib
    except ImportError:
        raise UsageError("--plot needs matplotlib (pip install artifact[plot])")

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = sorted({len(m.body) for m in theory})
    before = [sum(len(m.body) == s for m in theory) for s in sizes]
    after = [sum(len(m.body) == s for m in kept) for s in sizes]
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = range(len(sizes))
    ax.bar([x - 0.2 for x in xs], before, width=0.4, label="input", color="0.7")
    ax.bar([x + 0.2 for x in xs], after, width=0.4, label="kept", color="C0")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(s) for s in sizes])
    ax.set_xlabel("body size")
    ax.set_ylabel("clauses")
    if max(before, default=0) > 50:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_reduce(args) -> int:
    theory, desc, spec = _input_theory(args)
    rel = _relation(args)
    timeout = args.timeout or None
    if args.target_max_body is not None:
        arities = spec.arities if spec else frozenset(len(l.args) for m in theory for l in (m.head, *m.body))
        target = FragmentSpec(arities, args.target_max_body, spec.constraint if spec else "none")
        kept = mreduce(theory, rel, target, order=args.order, timeout=timeout,
                       repair=not args.no_repair)
        if kept is None:
            msg = f"{desc} cannot be reduced into {target.name}"
            _emit(args, json.dumps({"input": desc, "target": target.name, "ok": False})
                  if args.format == "json" else msg)
            return EXIT_NEGATIVE
        if args.format == "json":
            _emit(args, json.dumps({"input": desc, "target": target.name, "ok": True,
                                    "kept": [m.text for m in kept]}, indent=2))
        else:
            _emit(args, _lines(kept))
        return EXIT_OK
    report = reduce_with_report(theory, rel, order=args.order, timeout=timeout, description=desc,
                                repair=not args.no_repair)
    if report.restored and args.format == "text":
        print(f"metareduce: kept {len(report.restored)} clause(s) to restore support",
              file=sys.stderr)
    kept = [parse(t) for t in report.kept]
    if args.validate:
        report.validity = check_validity(theory, kept, rel).to_dict()
    if args.plot:
        plot_body_sizes(args.plot, theory, kept, f"{desc} {rel}-reduction")
    _emit(args, report.to_json() if args.format == "json" else report.kept_text())
    if report.validity is not None and not report.validity["ok"]:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_check(args) -> int:
    theory = read_theory(args.set)
    rel = _relation(args)
    verdict = is_redundant(theory, args.clause, rel)
    if args.format == "json":
        _emit(args, json.dumps({"clause": args.clause.text, "relation": rel.kind,
                                "depth": rel.depth, "redundant": verdict}))
    else:
        _emit(args, "redundant" if verdict else "irredundant")
    return EXIT_OK if verdict else EXIT_NEGATIVE


def cmd_derive(args) -> int:
    theory = read_theory(args.set)
    trace = derives_k(theory, args.clause, args.depth)
    if args.format == "json":
        _emit(args, json.dumps({"clause": args.clause.text, "derivable": trace is not None,
                                "root": trace.root if trace else None,
                                "steps": trace.to_list() if trace else []}, indent=2))
    elif trace is None:
        _emit(args, f"not derivable within {args.depth} steps")
    elif args.trace:
        _emit(args, trace.render())
    else:
        n = len(trace)
        _emit(args, f"derivable in {n} step{'' if n == 1 else 's'} from {trace.root}")
    return EXIT_OK if trace is not None else EXIT_NEGATIVE


def cmd_witness(args) -> int:
    fn, needs_param = WITNESSES[args.name]
    if needs_param and args.param is None:
        raise UsageError(f"witness {args.name} needs --param")
    if not needs_param and args.param is not None:
        raise UsageError(f"witness {args.name} takes no --param")
    try:
        m = fn(args.param) if needs_param else fn()
    except ValueError as e:
        raise UsageError(str(e))
    if args.format == "json":
        _emit(args, json.dumps({"name": args.name, "param": args.param,
                                "clause": m.text, "body_size": len(m.body)}))
    else:
        _emit(args, m.text)
    return EXIT_OK


def cmd_hspace(args) -> int:
    n = hypothesis_space_size(args.predicates, args.metarules, args.max_body, args.clauses)
    if args.format == "json":
        _emit(args, json.dumps({"size": str(n), "digits": len(str(n))}))
    else:
        _emit(args, str(n))
    return EXIT_OK


COMMANDS = {
    "enumerate": cmd_enumerate,
    "reduce": cmd_reduce,
    "check": cmd_check,
    "derive": cmd_derive,
    "witness": cmd_witness,
    "hspace": cmd_hspace,
}


def run(argv: Sequence[str] | None = None) -> int:
    try:
        threads_from_env()
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"metareduce: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as e:
        print(f"metareduce: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as e:
        print(f"metareduce: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
