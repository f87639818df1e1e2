"""``deckprob`` command line.

Exit codes: 0 success, 2 invalid deck, 3 unparsable sequence, 4 runtime
failure (entropy, preparation cap, undefined conditional).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from deckprob import discard, quantum
from deckprob.deck import Deck, reference_deck, validate
from deckprob.engine import conditional_prob, prepare, sequence_prob
from deckprob.errors import (
    AdditivityError,
    DeckError,
    EntropyUnavailable,
    ParseError,
    PreparationExhausted,
    UndefinedConditional,
)
from deckprob.grammar import parse, parse_sequence
from deckprob.interference import InterferenceQuery, interference
from deckprob.mc.simulate import External, Seeded, SystemVariant, run_protocol
from deckprob.tables import build_tables, fmt_decimal, fmt_exact, tables_csv, tables_json

EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_RUNTIME = 0, 2, 3, 4


def _load_deck(path: str | None) -> Deck:
    if path is None:
        return reference_deck()
    try:
        return Deck.load(path)
    except OSError as exc:
        raise DeckError(f"cannot read deck file {path}: {exc.strerror or exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pair(text: str, what: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"{what} must look like VAR=VALUE")
    a, b = text.split("=", 1)
    return a.strip(), b.strip()


def _prob_line(p: Fraction) -> str:
    return f"{fmt_exact(p)}\t{fmt_decimal(p)}\n"


# -- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    deck = _load_deck(args.deck)
    report = validate(deck)
    payload = {"ok": report.ok, "N": report.N, "V": report.V, "message": report.message}
    if report.variable:
        payload["variable"] = report.variable
    if report.value:
        payload["value"] = report.value
    _emit(json.dumps(payload) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_tables(args) -> int:
    tables = build_tables(_load_deck(args.deck))
    text = tables_csv(tables) if args.format == "csv" else tables_json(tables, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_prob(args) -> int:
    deck = _load_deck(args.deck)
    seq = parse_sequence(args.expr, deck)
    if args.given:
        p = conditional_prob(seq, parse_sequence(args.given, deck))
    else:
        p = sequence_prob(seq)
    if args.format == "json":
        payload = {"sequence": args.expr, "exact": fmt_exact(p), "decimal": fmt_decimal(p)}
        if args.given:
            payload["given"] = args.given
        _emit(json.dumps(payload) + "\n", args.out)
    elif args.format == "csv":
        _emit(f"sequence,exact_num,exact_den,decimal\n\"{args.expr}\",{p.numerator},{p.denominator},{fmt_decimal(p)}\n",
              args.out)
    else:
        _emit(_prob_line(p), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    deck = _load_deck(args.deck)
    parsed = parse(args.expr, deck)
    variant = SystemVariant.parse(args.variant)
    if variant is SystemVariant.SVI or (variant is SystemVariant.SVD and args.entropy_device):
        entropy = External(args.entropy_device)
    else:
        entropy = Seeded(args.seed)
    table = run_protocol(
        deck, parsed.prep, parsed.steps, args.n, variant, entropy,
        streams=args.streams, workers=args.workers, max_prep_iterations=args.max_prep,
        label=str(parsed),
    )
    text = table.to_json(indent=2) + "\n" if args.format == "json" else table.to_csv()
    _emit(text, args.out)
    return EXIT_OK


def cmd_interfere(args) -> int:
    deck = _load_deck(args.deck)
    name, c = args.event
    t = deck.target(name)
    members = tuple(args.against.split(",")) if args.against else t.members(c)
    prep = prepare(deck, *args.prep)
    q = interference(InterferenceQuery((name, c), members, prep, args.q))
    if args.format == "json":
        _emit(json.dumps({"event": f"{name}={c}", "against": list(members),
                          "prep": "=".join(args.prep), "q": "=".join(args.q),
                          "exact": fmt_exact(q), "decimal": fmt_decimal(q)}) + "\n", args.out)
    else:
        _emit(_prob_line(q), args.out)
    return EXIT_OK


def cmd_exercises(args) -> int:
    report = discard.exercise_report()
    if args.format == "json":
        _emit(json.dumps(report, indent=2) + "\n", args.out)
    else:
        _emit(discard.report_markdown(report), args.out)
    return EXIT_OK


def cmd_quantum(args) -> int:
    import numpy as np

    fuzz = quantum.theorem_fuzz(tuple(args.dim), args.trials, args.seed)
    plus = np.array([1, 1]) / np.sqrt(2)
    m = quantum.margenau_check(plus, np.eye(2), quantum.rotation_basis(np.pi / 4), 1)
    payload = {
        "fuzz": fuzz.to_dict(),
        "margenau": {"lhs": m.lhs, "dephased": m.dephased, "direct": m.direct},
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if not fuzz.failures else EXIT_RUNTIME


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--deck", help="deck JSON file (default: built-in 3x3 deck)")
    common.add_argument("--out", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="deckprob", description="Exact and simulated card-deck sequence probabilities.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check the equal-marginal rule")
    s.set_defaults(fn=cmd_validate)

    s = sub.add_parser("tables", parents=[common], help="conditional, defect, marginal-gap and interference tables")
    s.add_argument("--format", choices=["csv", "json"], default="json")
    s.set_defaults(fn=cmd_tables)

    s = sub.add_parser("prob", parents=[common], help="exact probability of a sequence expression")
    s.add_argument("expr", help="e.g. 'Face=K; Suit=H & Face=K'")
    s.add_argument("--given", help="prefix sequence to condition on")
    s.add_argument("--format", choices=["csv", "json"])
    s.set_defaults(fn=cmd_prob)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo frequencies for a sequence")
    s.add_argument("expr")
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--variant", choices=["s", "svi", "svd"], default="s")
    s.add_argument("--entropy-device", help="read randomness from this file (default: OS generator)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--streams", type=int, default=1)
    s.add_argument("--workers", type=int)
    s.add_argument("--max-prep", type=int, default=10**6, help="preparation loop iteration cap")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("interfere", parents=[common], help="interference of a coarse-grained outcome")
    s.add_argument("--event", type=lambda t: _pair(t, "--event"), default=("Color", "R"))
    s.add_argument("--against", help="comma-separated member values (default: the class members)")
    s.add_argument("--prep", type=lambda t: _pair(t, "--prep"), default=("Face", "K"))
    s.add_argument("--q", type=lambda t: _pair(t, "--q"), default=("Face", "K"))
    s.add_argument("--format", choices=["csv", "json"])
    s.set_defaults(fn=cmd_interfere)

    s = sub.add_parser("exercises", parents=[common], help="two-card discard game answers")
    s.add_argument("--format", choices=["markdown", "json"], default="markdown")
    s.set_defaults(fn=cmd_exercises)

    s = sub.add_parser("quantum", parents=[common], help="projector commutation fuzz and dephasing check")
    s.add_argument("--dim", type=int, nargs="+", default=[2, 3, 4, 5])
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_quantum)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UndefinedConditional as exc:
        print(f"undefined conditional: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (EntropyUnavailable, PreparationExhausted, AdditivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DeckError as exc:
        print(f"invalid deck: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
