"""Closed-form probabilities computed directly from card counts.

These never walk the observation tree; they are the counting-side oracle the
engine's branch enumeration is checked against. A "value" here is a
``(target, value)`` pair; ``joint_count`` counts full-deck cards matching both.
"""

from __future__ import annotations

from fractions import Fraction

from deckprob.deck import Deck


def matches(deck: Deck, card, x) -> bool:
    # x=None stands for the unfiltered full deck
    return x is None or deck.label(card, x[0]) == x[1]


def count(deck: Deck, x) -> int:
    return sum(n for c, n in deck.counts.items() if matches(deck, c, x))


def joint_count(deck: Deck, x, y) -> int:
    """Number of cards showing both ``x`` and ``y`` (``N(x . y)``)."""
    return sum(n for c, n in deck.counts.items() if matches(deck, c, x) and matches(deck, c, y))


def given(deck: Deck, y, x) -> Fraction:
    """``Pr(y | x)``: fraction of the x-subdeck that shows y."""
    return Fraction(joint_count(deck, x, y), count(deck, x))


def two_step(deck: Deck, prep, first, second) -> Fraction:
    """``Pr_prep{first & second}`` as a product of two count ratios (Markov)."""
    return given(deck, first, prep) * given(deck, second, first)


def ignored_sum(deck: Deck, prep, P: str, y) -> Fraction:
    """``sum_t Pr_prep{p_t & y}`` summed over the values of P."""
    return sum((two_step(deck, prep, (P, t), y) for t in deck.target(P).values), Fraction(0))


def plain_ignored_sum(deck: Deck, x, P: str, y) -> Fraction:
    """``(1/N^2) sum_t N(p_t . x) N(p_t . y)``; valid when x, y are not values of P."""
    N = deck.N
    return Fraction(
        sum(joint_count(deck, (P, t), x) * joint_count(deck, (P, t), y) for t in deck.target(P).values),
        N * N,
    )


def compatibility_defect(deck: Deck, prep, P: str, Q: str):
    return {
        (j, k): two_step(deck, prep, (P, j), (Q, k)) - two_step(deck, prep, (Q, k), (P, j))
        for j in deck.target(P).values
        for k in deck.target(Q).values
    }


def interference_two_member(deck: Deck, prep, under: str, members, y) -> Fraction:
    """``-1/2 (Pr(y|p1) - Pr(y|p2)) (Pr(p1|x) - Pr(p2|x))`` for a two-member class."""
    if len(members) != 2:
        raise ValueError("closed form covers two-member classes only")
    p1, p2 = ((under, m) for m in members)
    return -Fraction(1, 2) * (given(deck, y, p1) - given(deck, y, p2)) * (
        given(deck, p1, prep) - given(deck, p2, prep)
    )
