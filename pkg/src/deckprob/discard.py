"""The two-card return-or-discard game.

A card is drawn uniformly from the deck and its value for the observed
variable reported. Each variable has one "return" value: showing it puts the
card back, anything else discards it. Drawing from an empty deck reports
``NO_DRAW``. This system has no equal-marginal requirement and does not use
the subdeck rule of the main engine.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from deckprob import reference_values as ref

NO_DRAW = "no-draw"
DOCS_POINTER = "docs/discrepancies.md#discard-game"


@dataclass(frozen=True)
class DiscardRule:
    """Per variable, the value that sends the card back to the deck."""

    returns: tuple[tuple[str, str], ...]

    def __post_init__(self):
        items = self.returns.items() if isinstance(self.returns, Mapping) else self.returns
        items = tuple((str(k), str(v)) for k, v in items)
        names = [k for k, _ in items]
        if len(set(names)) != len(names):
            raise ValueError("exactly one return value per variable")
        object.__setattr__(self, "returns", items)

    def return_value(self, var: str) -> str:
        for k, v in self.returns:
            if k == var:
                return v
        raise KeyError(f"no return rule for {var!r}")


@dataclass(frozen=True)
class ToyDeck:
    variables: tuple[str, ...]
    cards: tuple[tuple[str, ...], ...]  # one entry per physical card
    rule: DiscardRule

    def __post_init__(self):
        for c in self.cards:
            if len(c) != len(self.variables):
                raise ValueError(f"card {c!r} does not give one value per variable")
        for v in self.variables:
            self.rule.return_value(v)

    def value(self, card, var: str) -> str:
        return card[self.variables.index(var)]

    def keeps(self, card, var: str) -> bool:
        return self.value(card, var) == self.rule.return_value(var)


def two_card_deck() -> ToyDeck:
    return ToyDeck(("Face", "Suit"), (("K", "S"), ("Q", "H")), DiscardRule({"Face": "K", "Suit": "H"}))


def enumerate_outcomes(deck: ToyDeck, steps: Sequence[str]) -> dict[tuple[str, ...], Fraction]:
    """Exact probability of every reported outcome tuple for the observed variables."""
    for v in steps:
        if v not in deck.variables:
            raise KeyError(f"unknown variable {v!r}")
    out: Counter = Counter()

    def walk(cards: tuple, i: int, prefix: tuple, p: Fraction):
        if i == len(steps):
            out[prefix] += p
            return
        var = steps[i]
        if not cards:
            walk(cards, i + 1, prefix + (NO_DRAW,), p)
            return
        share = p / len(cards)
        for k, card in enumerate(cards):
            rest = cards if deck.keeps(card, var) else cards[:k] + cards[k + 1:]
            walk(rest, i + 1, prefix + (deck.value(card, var),), share)

    walk(tuple(deck.cards), 0, (), Fraction(1))
    return dict(out)


def prob(deck: ToyDeck, steps: Sequence[tuple[str, Sequence[str] | str | None]]) -> Fraction:
    """Probability that each step reports one of the allowed values.

    Each step is ``(variable, allowed)`` where ``allowed`` is a value, a
    collection of values, or None for any outcome.
    """
    names = [v for v, _ in steps]
    allowed = []
    for _, a in steps:
        allowed.append(None if a is None else ({a} if isinstance(a, str) else set(a)))
    return sum(
        (p for o, p in enumerate_outcomes(deck, names).items()
         if all(a is None or x in a for a, x in zip(allowed, o))),
        Fraction(0),
    )


def simulate(deck: ToyDeck, steps: Sequence[str], n: int, seed: int = 0) -> Counter:
    """Play the game ``n`` times from the full deck; tallies outcome tuples."""
    rng = np.random.default_rng(seed)
    tally: Counter = Counter()
    for _ in range(n):
        cards = list(deck.cards)
        out = []
        for var in steps:
            if not cards:
                out.append(NO_DRAW)
                continue
            k = int(rng.integers(len(cards)))
            card = cards[k]
            out.append(deck.value(card, var))
            if not deck.keeps(card, var):
                cards.pop(k)
        tally[tuple(out)] += 1
    return tally


def exercise_report(deck: ToyDeck | None = None) -> dict:
    deck = deck or two_card_deck()
    face_vals = sorted({deck.value(c, "Face") for c in deck.cards})
    suit_vals = sorted({deck.value(c, "Suit") for c in deck.cards})

    conflicts = [
        {"card": "".join(c), "Face": "return" if deck.keeps(c, "Face") else "discard",
         "Suit": "return" if deck.keeps(c, "Suit") else "discard"}
        for c in deck.cards
        if deck.keeps(c, "Face") != deck.keeps(c, "Suit")
    ]

    k_then_s = prob(deck, [("Face", "K"), ("Suit", "S")])
    s_then_k = prob(deck, [("Suit", "S"), ("Face", "K")])
    face_any = prob(deck, [("Face", face_vals), ("Face", "K")])
    suit_any = prob(deck, [("Suit", suit_vals), ("Face", "K")])

    def entry(value, printed):
        return {"value": str(value), "float": float(value), "printed": str(printed),
                "paper_discrepancy": value != printed}

    exercise3 = {
        "Face_any_then_K": entry(face_any, ref.DISCARD_FACE_SET_THEN_K),
        "Suit_any_then_K": entry(suit_any, ref.DISCARD_SUIT_SET_THEN_K),
        "ambiguous": face_any != suit_any,
    }
    if exercise3["Suit_any_then_K"]["paper_discrepancy"]:
        exercise3["Suit_any_then_K"]["docs"] = DOCS_POINTER
    return {
        "deck": ["".join(c) for c in deck.cards],
        "exercise1": {
            "witnesses": conflicts,
            "simultaneous_possible": not conflicts,
        },
        "exercise2": {
            "K_then_S": entry(k_then_s, ref.DISCARD_K_THEN_S),
            "S_then_K": entry(s_then_k, ref.DISCARD_S_THEN_K),
            "commute": k_then_s == s_then_k,
        },
        "exercise3": exercise3,
    }


def report_markdown(report: dict) -> str:
    lines = [f"# Discard game, deck {{{', '.join(report['deck'])}}}", ""]
    e1 = report["exercise1"]
    lines.append("## Exercise 1")
    for w in e1["witnesses"]:
        lines.append(f"- card {w['card']}: Face rule says {w['Face']}, Suit rule says {w['Suit']}")
    lines.append(f"- both observations from one draw possible: {e1['simultaneous_possible']}")
    lines += ["", "## Exercise 2"]
    for key in ("K_then_S", "S_then_K"):
        e = report["exercise2"][key]
        lines.append(f"- Pr{{{key.replace('_then_', ' then ')}}} = {e['value']}")
    lines.append(f"- order-independent: {report['exercise2']['commute']}")
    lines += ["", "## Exercise 3"]
    for key, text in (("Face_any_then_K", "(K or Q) then K"), ("Suit_any_then_K", "(S or H) then K")):
        e = report["exercise3"][key]
        flag = f" (printed {e['printed']}; paper_discrepancy, see {e['docs']})" if e["paper_discrepancy"] else ""
        lines.append(f"- Pr{{{text}}} = {e['value']}{flag}")
    lines.append(f"- ambiguous Pr{{K at step 2}}: {report['exercise3']['ambiguous']}")
    return "\n".join(lines) + "\n"
