"""Exact probabilities of event sequences under the subdeck observation rule.

Observing a target on a p-state draws the top card of the (shuffled) current
subdeck, reports the card's value for the target, and replaces the subdeck
with *every* card of the full deck sharing that value. Probabilities are
``fractions.Fraction`` throughout; nothing here touches floating point.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from deckprob.deck import CardType, Deck, DegenerateVariable, require_valid
from deckprob.errors import DeckError, SimultaneousManifestation, UndefinedConditional

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class PState:
    """Preparation state: the current subdeck, as a sub-multiset of the deck."""

    deck: Deck
    support: tuple[tuple[CardType, int], ...]
    provenance: tuple[str, str] | None = None

    def __post_init__(self):
        support = self.support
        if isinstance(support, Mapping):
            support = support.items()
        support = tuple((tuple(c), int(n)) for c, n in support if n)
        if not support:
            raise DeckError("p-state support is empty")
        for card, n in support:
            if n < 0 or n > self.deck.counts.get(card, 0):
                raise DeckError(f"p-state holds {n} of {card!r}, deck has {self.deck.counts.get(card, 0)}")
        order = {c: i for i, c in enumerate(self.deck.counts)}
        object.__setattr__(self, "support", tuple(sorted(support, key=lambda cn: order[cn[0]])))
        object.__setattr__(self, "_hash", hash((self.deck, self.support)))

    @property
    def counts(self) -> Counter:
        return Counter(dict(self.support))

    @property
    def size(self) -> int:
        return sum(n for _, n in self.support)

    def __eq__(self, other):
        return self is other or (
            isinstance(other, PState) and self._hash == other._hash
            and self.deck == other.deck and self.support == other.support
        )

    def __hash__(self):
        return self._hash


@dataclass(frozen=True)
class Manifestation:
    target: str


@dataclass(frozen=True)
class SingleValue:
    value: str

    def admits(self, outcome):
        return outcome == self.value

    def members(self):
        return (self.value,)


@dataclass(frozen=True)
class ValueSet:
    values: tuple[str, ...]

    def __post_init__(self):
        values = tuple(dict.fromkeys(self.values))
        if not values:
            raise ValueError("value set must be nonempty")
        object.__setattr__(self, "values", values)

    def admits(self, outcome):
        return outcome in self.values

    def members(self):
        return self.values


@dataclass(frozen=True)
class Ignored:
    def admits(self, outcome):
        return True

    def members(self):
        return None


OutcomePredicate = SingleValue | ValueSet | Ignored


@dataclass(frozen=True)
class EventStep:
    manifestation: Manifestation
    outcome: OutcomePredicate = field(default_factory=Ignored)

    def __post_init__(self):
        m = self.manifestation
        if isinstance(m, (tuple, list, set, frozenset)):
            if len(m) > 1:
                raise SimultaneousManifestation(
                    "one event manifests one variable; "
                    f"{[getattr(x, 'target', x) for x in m]} cannot manifest together"
                )
            (m,) = m
        if isinstance(m, str):
            m = Manifestation(m)
        object.__setattr__(self, "manifestation", m)

    @property
    def target(self) -> str:
        return self.manifestation.target

    def __str__(self):
        o = self.outcome
        if isinstance(o, SingleValue):
            rhs = o.value
        elif isinstance(o, ValueSet):
            rhs = "(" + "|".join(o.values) + ")"
        else:
            rhs = "*"
        return f"{self.target}={rhs}"


def step(target: str, outcome=None) -> EventStep:
    """Shorthand: ``step("Suit", "H")``, ``step("Suit", ["H", "D"])``, ``step("Suit")``."""
    if outcome is None or outcome == "*":
        pred = Ignored()
    elif isinstance(outcome, str):
        pred = SingleValue(outcome)
    else:
        pred = ValueSet(tuple(outcome))
    return EventStep(Manifestation(target), pred)


@dataclass(frozen=True)
class EventSequence:
    prep: PState
    steps: tuple[EventStep, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        deck = self.prep.deck
        for s in steps:
            t = deck.target(s.target)
            members = s.outcome.members()
            if members is None:
                continue
            for v in members:
                if v not in t.values:
                    raise DeckError(f"{v!r} is not a value of {s.target!r}")

    def prefix(self, k: int) -> "EventSequence":
        return EventSequence(self.prep, self.steps[:k])

    def __str__(self):
        prep = "=".join(self.prep.provenance) if self.prep.provenance else "<state>"
        return f"{prep}; " + " & ".join(str(s) for s in self.steps)


# -- primitives ------------------------------------------------------------


def full_state(deck: Deck) -> PState:
    return PState(deck, tuple(deck.counts.items()))


_successors: dict = {}
_observed: dict = {}


def _bounded(cache: dict) -> dict:
    if len(cache) > 1 << 16:
        cache.clear()
    return cache


def successor(deck: Deck, target: str, value: str) -> PState:
    key = (deck, target, value)
    hit = _successors.get(key)
    if hit is None:
        hit = _bounded(_successors)[key] = PState(deck, tuple(deck.filtered(target, value).items()), (target, value))
    return hit


def observe(state: PState, target: str) -> dict[str, tuple[Fraction, PState]]:
    """Outcome distribution of manifesting ``target`` on ``state``.

    Returns ``{outcome: (probability, successor)}`` over every value of the
    target, in declaration order; successors are drawn from the full deck.
    """
    key = (state, target)
    hit = _observed.get(key)
    if hit is None:
        deck = state.deck
        t = deck.target(target)
        lab = deck.labeler(target)
        tally = Counter()
        for card, n in state.support:
            tally[lab(card)] += n
        size = state.size
        hit = {v: (Fraction(tally[v], size), successor(deck, target, v)) for v in t.values}
        _bounded(_observed)[key] = hit
    return dict(hit)


def prepare(deck: Deck, target: str, value: str) -> PState:
    """Fixed point of the repeat-until preparation loop: every card with ``target=value``."""
    require_valid(deck)
    t = deck.target(target)
    if value not in t.values:
        raise DeckError(f"{value!r} is not a value of {target!r}")
    if deck.marginal(target, value) == 0:
        raise DeckError(f"cannot prepare {target}={value}: no such cards in the deck")
    return successor(deck, target, value)


def _walk(state: PState, steps: Sequence[EventStep], memo: dict) -> Fraction:
    if not steps:
        return ONE
    key = (state.support, len(steps))
    hit = memo.get(key)
    if hit is not None:
        return hit
    first, rest = steps[0], steps[1:]
    total = ZERO
    for outcome, (p, nxt) in observe(state, first.target).items():
        if p and first.outcome.admits(outcome):
            total += p * _walk(nxt, rest, memo)
    memo[key] = total
    return total


def sequence_prob(seq: EventSequence) -> Fraction:
    """Probability that every step's outcome satisfies its predicate, in order.

    A value set sums over its members, each branch continuing from its own
    successor; an ignored outcome sums over all branches.
    """
    if not seq.steps:
        raise ValueError("probability query needs at least one step")
    return _walk(seq.prep, seq.steps, {})


def conditional_prob(seq: EventSequence, given: EventSequence) -> Fraction:
    """``Pr(seq | given)`` where ``given`` is a prefix of ``seq`` on the same p-state."""
    if given.prep != seq.prep or seq.steps[: len(given.steps)] != given.steps:
        raise ValueError("condition must be a prefix of the queried sequence")
    denom = sequence_prob(given)
    if denom == 0:
        raise UndefinedConditional(f"condition {given} has probability 0")
    return sequence_prob(seq) / denom


def filtered_state(given: EventSequence) -> PState:
    """The p-state produced by passing ``given.prep`` through the filter ``given``.

    Defined when the final step names a single outcome; the filter then
    leaves exactly that outcome's successor subdeck.
    """
    last = given.steps[-1]
    if not isinstance(last.outcome, SingleValue):
        raise ValueError("filter must end in a single outcome to yield one p-state")
    if sequence_prob(given) == 0:
        raise UndefinedConditional(f"filter {given} passes nothing")
    return successor(given.prep.deck, last.target, last.outcome.value)


def first_prob(state: PState, target: str, value: str) -> Fraction:
    if value not in state.deck.target(target).values:
        raise DeckError(f"{value!r} is not a value of {target!r}")
    lab = state.deck.labeler(target)
    return Fraction(sum(n for card, n in state.support if lab(card) == value), state.size)


def reachable_states(deck: Deck) -> list[PState]:
    """Full deck plus every subdeck an observation can leave behind."""
    out = [full_state(deck)]
    seen = {out[0]}
    for name in deck.target_names:
        for v in deck.target(name).values:
            if deck.marginal(name, v) == 0:
                continue
            s = successor(deck, name, v)
            if s not in seen:
                seen.add(s)
                out.append(s)
    return out


# -- derived statistics ------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Exact matrix with labelled rows and columns."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    cells: tuple[tuple[Fraction, ...], ...]
    row_var: str = ""
    col_var: str = ""

    def __getitem__(self, rc):
        r, c = rc
        return self.cells[self.rows.index(r)][self.cols.index(c)]

    def items(self):
        for r, row in zip(self.rows, self.cells):
            for c, x in zip(self.cols, row):
                yield (r, c), x

    def is_zero(self) -> bool:
        return all(x == 0 for _, x in self.items())

    def __sub__(self, other):
        return Grid(
            self.rows,
            self.cols,
            tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.cells, other.cells)),
            self.row_var,
            self.col_var,
        )


def _grid(rows, cols, fn, row_var="", col_var=""):
    return Grid(
        tuple(rows),
        tuple(cols),
        tuple(tuple(fn(r, c) for c in cols) for r in rows),
        row_var,
        col_var,
    )


def seq(state: PState, *steps: EventStep) -> EventSequence:
    return EventSequence(state, steps)


def compatibility_defect(state: PState, P: str, Q: str) -> Grid:
    """``Pr{p_j & q_k} - Pr{q_k & p_j}`` for every pair of values."""
    deck = state.deck
    return _grid(
        deck.target(P).values,
        deck.target(Q).values,
        lambda j, k: sequence_prob(seq(state, step(P, j), step(Q, k)))
        - sequence_prob(seq(state, step(Q, k), step(P, j))),
        P,
        Q,
    )


def is_compatible(deck: Deck, P: str, Q: str) -> bool:
    """Order-independence of every two-step sequence over all reachable p-states."""
    return all(compatibility_defect(s, P, Q).is_zero() for s in reachable_states(deck))


def conditional_matrix(deck: Deck, P: str, Q: str) -> Grid:
    """``Pr(q_k | p_j)``: distribution of Q right after P showed p_j."""
    require_valid(deck)
    return _grid(
        deck.target(P).values,
        deck.target(Q).values,
        lambda j, k: first_prob(successor(deck, P, j), Q, k),
        P,
        Q,
    )


@dataclass(frozen=True)
class SharpnessReport:
    value: Fraction  # max distance of a conditional from {0, 1}
    witness: tuple[str, str]
    min_gap: Fraction  # min distance; positive means no conditional is dispersion-free
    min_witness: tuple[str, str]
    conditionals: Grid

    @property
    def dispersion_free_pairs(self):
        return [rc for rc, x in self.conditionals.items() if x in (0, 1)]


def sharpness_defect(deck: Deck, P: str, Q: str) -> SharpnessReport:
    if P == Q:
        raise ValueError("sharpness defect compares two different variables")
    grid = conditional_matrix(deck, P, Q)
    dist = {rc: min(x, 1 - x) for rc, x in grid.items()}
    hi = max(dist, key=lambda rc: dist[rc])
    lo = min(dist, key=lambda rc: dist[rc])
    return SharpnessReport(dist[hi], hi, dist[lo], lo, grid)


def marginal_lhs(state: PState, P: str, q: tuple[str, str]) -> Fraction:
    """Sum over the values of P of ``Pr{p_t & q}``, one sequence per value."""
    Y, y = q
    return sum(
        (sequence_prob(seq(state, step(P, t), step(Y, y))) for t in state.deck.target(P).values),
        ZERO,
    )


def marginal_rhs_manifested(state: PState, P: str, q: tuple[str, str]) -> Fraction:
    """``Pr{q | M_P}``: q after a manifestation of P whose outcome is ignored."""
    Y, y = q
    return sequence_prob(seq(state, step(P), step(Y, y)))


def direct_prob(state: PState, q: tuple[str, str]) -> Fraction:
    """``Pr{q}`` as the first event after preparation (no intervening manifestation)."""
    return first_prob(state, *q)


def all_outcomes(deck: Deck, targets: Iterable[str]) -> list[tuple[str, ...]]:
    combos = [()]
    for t in targets:
        combos = [c + (v,) for c in combos for v in deck.target(t).values]
    return combos


def outcome_distribution(state: PState, targets: Sequence[str]) -> dict[tuple[str, ...], Fraction]:
    """Exact probability of every outcome tuple for a manifestation history."""
    return {
        o: sequence_prob(EventSequence(state, tuple(step(t, v) for t, v in zip(targets, o))))
        for o in all_outcomes(state.deck, targets)
    }


def is_degenerate(deck: Deck, target: str) -> bool:
    return isinstance(deck.target(target), DegenerateVariable)
