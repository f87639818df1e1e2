"""Interference of a coarse-grained outcome relative to its member values.

For a class ``E`` of a degenerate variable over ``P`` and member set ``D``,
the interference at p-state ``s`` and later outcome ``q`` is

    Pr_s{E & q} - sum_{t in D} Pr_s{p_t & q}

which is only meaningful when ``Pr_s{E} = sum_{t in D} Pr_s{p_t}`` holds for
every p-state (additivity).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from deckprob import closed_form
from deckprob.deck import Deck, DegenerateVariable, require_valid
from deckprob.engine import (
    Grid,
    PState,
    first_prob,
    prepare,
    reachable_states,
    seq,
    sequence_prob,
    step,
)
from deckprob.errors import AdditivityError, DeckError


@dataclass(frozen=True)
class InterferenceQuery:
    event: tuple[str, str]  # (degenerate variable, class id)
    against: tuple[str, ...]  # member values of the underlying variable
    prep: PState
    q: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "against", tuple(self.against))
        deck = self.prep.deck
        d = deck.target(self.event[0])
        if not isinstance(d, DegenerateVariable):
            raise DeckError(f"{self.event[0]!r} is not a degenerate variable")
        if sorted(self.against) != sorted(d.members(self.event[1])):
            raise DeckError(
                f"decomposition {self.against} does not match the members of {self.event[0]}={self.event[1]}"
            )


@dataclass(frozen=True)
class AdditivityReport:
    holds: bool
    checked: int
    counterexample: tuple | None = None  # (state provenance, class prob, member sum)

    def __bool__(self):
        return self.holds


def check_additivity(deck: Deck, degenerate: str, class_id: str) -> AdditivityReport:
    """``Pr_s{class} == sum of Pr_s{member}`` on every reachable p-state."""
    require_valid(deck)
    d = deck.target(degenerate)
    members = d.members(class_id)
    states = reachable_states(deck)
    for s in states:
        lhs = first_prob(s, degenerate, class_id)
        rhs = sum((first_prob(s, d.over, m) for m in members), Fraction(0))
        if lhs != rhs:
            return AdditivityReport(False, len(states), (s.provenance, lhs, rhs))
    return AdditivityReport(True, len(states))


def merged_prob(query: InterferenceQuery) -> Fraction:
    """``Pr_s{E & q}`` with E manifested as one coarse-grained event."""
    (D, c), (Y, y) = query.event, query.q
    return sequence_prob(seq(query.prep, step(D, c), step(Y, y)))


def branch_sum(query: InterferenceQuery) -> Fraction:
    """``sum_t Pr_s{p_t & q}``, one sequence per member value."""
    deck = query.prep.deck
    under = deck.target(query.event[0]).over
    Y, y = query.q
    return sum(
        (sequence_prob(seq(query.prep, step(under, t), step(Y, y))) for t in query.against),
        Fraction(0),
    )


def value_set_prob(query: InterferenceQuery) -> Fraction:
    """Same decomposition as ``branch_sum`` but as one value-set sequence."""
    deck = query.prep.deck
    under = deck.target(query.event[0]).over
    Y, y = query.q
    return sequence_prob(seq(query.prep, step(under, query.against), step(Y, y)))


def interference(query: InterferenceQuery) -> Fraction:
    deck = query.prep.deck
    report = check_additivity(deck, *query.event)
    if not report:
        raise AdditivityError(
            f"{query.event[0]}={query.event[1]} is not additive over {query.against}: {report.counterexample}"
        )
    return merged_prob(query) - branch_sum(query)


def interference_closed_form(deck: Deck, prep: tuple[str, str] | None, q: tuple[str, str],
                             degenerate: str, class_id: str) -> Fraction:
    """Count-based closed form; two-member classes only."""
    d = deck.target(degenerate)
    return closed_form.interference_two_member(deck, prep, d.over, d.members(class_id), q)


def interference_grid(deck: Deck, P: str, degenerate: str, class_id: str) -> Grid:
    """Interference of ``degenerate=class_id`` for every (prep ``P=p_j``, later ``P=p_k``)."""
    d = deck.target(degenerate)
    members = d.members(class_id)
    values = deck.target(P).values
    cells = []
    for j in values:
        s = prepare(deck, P, j)
        cells.append(tuple(
            interference(InterferenceQuery((degenerate, class_id), members, s, (P, k))) for k in values
        ))
    return Grid(values, values, tuple(cells), P, P)
