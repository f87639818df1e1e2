"""Variables, cards and decks.

A deck is a multiset of card types. Every card carries exactly one value of
each plain variable; coarse-grained ("degenerate") variables are functions
of one plain variable and are resolved through it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping

from deckprob.errors import DeckError

CardType = tuple  # one value per plain variable, in deck order


@dataclass(frozen=True)
class Variable:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise DeckError(f"variable {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise DeckError(f"variable {self.name!r} has repeated values")


@dataclass(frozen=True)
class DegenerateVariable:
    """Coarse-graining of ``over``: each class merges a set of its values."""

    name: str
    over: str
    classes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        classes = self.classes
        if isinstance(classes, Mapping):
            classes = classes.items()
        classes = tuple((c, tuple(members)) for c, members in classes)
        object.__setattr__(self, "classes", classes)
        ids = [c for c, _ in classes]
        if len(set(ids)) != len(ids):
            raise DeckError(f"degenerate variable {self.name!r} repeats a class id")
        for c, members in classes:
            if not members:
                raise DeckError(f"class {c!r} of {self.name!r} is empty")

    @property
    def values(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.classes)

    def members(self, class_id: str) -> tuple[str, ...]:
        for c, members in self.classes:
            if c == class_id:
                return members
        raise DeckError(f"{self.name!r} has no class {class_id!r}")

    @cached_property
    def _class_of(self):
        return {v: c for c, members in self.classes for v in members}

    def class_of(self, value: str) -> str:
        return self._class_of[value]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    N: int | None = None
    V: int | None = None
    variable: str | None = None
    value: str | None = None
    message: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class Deck:
    variables: tuple[Variable, ...]
    counts: Mapping[CardType, int]
    degenerate: tuple[DegenerateVariable, ...] = ()
    _key: tuple = field(init=False, repr=False)
    _labels: dict = field(init=False, repr=False)
    _hash: int = field(init=False, repr=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        degenerate = tuple(self.degenerate)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "degenerate", degenerate)
        if not variables:
            raise DeckError("a deck needs at least one variable")
        names = [v.name for v in variables] + [d.name for d in degenerate]
        if len(set(names)) != len(names):
            raise DeckError("variable names must be unique")
        for d in degenerate:
            if d.over not in {v.name for v in variables}:
                raise DeckError(f"{d.name!r} is defined over unknown variable {d.over!r}")
            seen = [v for _, members in d.classes for v in members]
            under = self.variable(d.over).values
            if sorted(seen) != sorted(under) or len(set(seen)) != len(seen):
                raise DeckError(
                    f"classes of {d.name!r} do not partition the values of {d.over!r}"
                )
        clean = {}
        for card, n in dict(self.counts).items():
            card = tuple(card)
            if len(card) != len(variables):
                raise DeckError(f"card {card!r} does not assign one value per variable")
            for var, value in zip(variables, card):
                if value not in var.values:
                    raise DeckError(f"unknown value {value!r} for variable {var.name!r}")
            if int(n) != n or n < 0:
                raise DeckError(f"card count must be a nonnegative integer, got {n!r}")
            if n:
                clean[card] = clean.get(card, 0) + int(n)
        order = {c: i for i, c in enumerate(self.card_types_from(variables))}
        ordered = dict(sorted(clean.items(), key=lambda kv: order[kv[0]]))
        object.__setattr__(self, "counts", ordered)
        object.__setattr__(self, "_key", (variables, degenerate, tuple(ordered.items())))
        object.__setattr__(self, "_labels", {})
        object.__setattr__(self, "_hash", hash(self._key))

    @staticmethod
    def card_types_from(variables):
        types = [()]
        for var in variables:
            types = [t + (v,) for t in types for v in var.values]
        return types

    def __eq__(self, other):
        return self is other or (isinstance(other, Deck) and self._hash == other._hash and self._key == other._key)

    def __hash__(self):
        return self._hash

    # -- lookups ---------------------------------------------------------

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables) + tuple(d.name for d in self.degenerate)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise DeckError(f"unknown variable {name!r}")

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise DeckError(f"unknown variable {name!r}")

    def target(self, name: str) -> Variable | DegenerateVariable:
        for t in self.variables + self.degenerate:
            if t.name == name:
                return t
        raise DeckError(f"unknown variable {name!r}")

    def underlying(self, name: str) -> str:
        """Plain variable a manifestation target reads from the card."""
        t = self.target(name)
        return t.over if isinstance(t, DegenerateVariable) else t.name

    def label(self, card: CardType, target: str) -> str:
        """Value the card shows for ``target`` (a class id for degenerate targets)."""
        return self.labeler(target)(card)

    def labeler(self, target: str):
        fn = self._labels.get(target)
        if fn is None:
            t = self.target(target)
            if isinstance(t, DegenerateVariable):
                i, class_of = self.index(t.over), t.class_of
                fn = lambda card: class_of(card[i])  # noqa: E731
            else:
                i = self.index(t.name)
                fn = lambda card: card[i]  # noqa: E731
            self._labels[target] = fn
        return fn

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def V(self) -> int:
        return len(self.variables[0].values)

    @property
    def N(self) -> int:
        return self.total // self.V

    def marginal(self, target: str, value: str) -> int:
        return sum(n for card, n in self.counts.items() if self.label(card, target) == value)

    def filtered(self, target: str, value: str) -> Counter:
        """All cards of the full deck showing ``value`` for ``target``."""
        return _filtered(self, target, value)

    def expanded(self) -> list[CardType]:
        """One entry per physical card, in canonical order."""
        return [card for card, n in self.counts.items() for _ in range(n)]

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out = {"variables": [{"name": v.name, "values": list(v.values)} for v in self.variables]}
        if self.degenerate:
            out["degenerate"] = [
                {"name": d.name, "over": d.over, "classes": {c: list(m) for c, m in d.classes}}
                for d in self.degenerate
            ]
        out["cards"] = [
            {"values": dict(zip((v.name for v in self.variables), card)), "count": n}
            for card, n in self.counts.items()
        ]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Deck":
        try:
            variables = [Variable(v["name"], tuple(v["values"])) for v in data["variables"]]
            degenerate = [
                DegenerateVariable(d["name"], d["over"], tuple(d["classes"].items()))
                for d in data.get("degenerate", [])
            ]
            names = [v.name for v in variables]
            counts: dict = {}
            for entry in data["cards"]:
                values = entry["values"]
                unknown = set(values) - set(names)
                if unknown:
                    raise DeckError(f"card names unknown variable(s) {sorted(unknown)}")
                missing = [n for n in names if n not in values]
                if missing:
                    raise DeckError(f"card is missing variable(s) {missing}")
                card = tuple(values[n] for n in names)
                counts[card] = counts.get(card, 0) + entry.get("count", 1)
        except (KeyError, TypeError, AttributeError) as exc:
            raise DeckError(f"malformed deck description: {exc!r}") from None
        return cls(tuple(variables), counts, tuple(degenerate))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "Deck":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DeckError(f"deck file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Deck":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _filtered_impl(deck, target, value):
    lab = deck.labeler(target)
    return Counter({c: n for c, n in deck.counts.items() if lab(c) == value})


_filter_cache: dict = {}


def _filtered(deck, target, value):
    key = (deck, target, value)
    hit = _filter_cache.get(key)
    if hit is None:
        if len(_filter_cache) > 4096:
            _filter_cache.clear()
        hit = _filter_cache[key] = _filtered_impl(deck, target, value)
    return Counter(hit)


def validate(deck: Deck) -> ValidationReport:
    """Check the equal a-priori marginal constraint.

    Every value of every variable must appear on the same number ``N`` of
    cards, and all variables must have the same number ``V`` of values.
    """
    if deck.total == 0:
        return ValidationReport(False, message="deck is empty")
    V = len(deck.variables[0].values)
    for var in deck.variables:
        if len(var.values) != V:
            return ValidationReport(
                False,
                variable=var.name,
                message=f"variable {var.name!r} has {len(var.values)} values, expected {V}",
            )
    N = None
    for i, var in enumerate(deck.variables):
        for value in var.values:
            m = sum(n for card, n in deck.counts.items() if card[i] == value)
            if N is None:
                N = m
            if m != N or m == 0:
                return ValidationReport(
                    False,
                    N=N,
                    V=V,
                    variable=var.name,
                    value=value,
                    message=f"marginal of {var.name}={value} is {m}, expected {N}",
                )
    return ValidationReport(True, N=N, V=V, message="ok")


def require_valid(deck: Deck) -> ValidationReport:
    report = validate(deck)
    if not report:
        raise DeckError(report.message)
    return report


def normalized_count(deck: Deck, card: Iterable[str]) -> Fraction:
    """Card count relative to the common per-value marginal N."""
    report = require_valid(deck)
    return Fraction(deck.counts.get(tuple(card), 0), report.N)


def card_fraction(deck: Deck, card: Iterable[str]) -> Fraction:
    """Fraction of the whole deck made up by this card type."""
    return normalized_count(deck, card) / deck.V


def reference_deck() -> Deck:
    """The 3x3 Face/Suit deck with Color over Suit used throughout the tests."""
    text = resources.files("deckprob.data").joinpath("reference_deck.json").read_text(encoding="utf-8")
    return Deck.from_json(text)


def random_valid_deck(rng, V: int, n_vars: int = 2, max_count: int = 6, coarse: bool = True) -> Deck:
    """A random deck satisfying the equal-marginal rule.

    Built as a sum of "blocks": V cards in which every variable takes each of
    its values exactly once. Any sum of blocks has equal marginals. With
    ``coarse`` the second variable (or the only one) gets a random two-class
    partition when V >= 2.
    """
    names = ["Face", "Suit", "Rank", "Mark"][:n_vars] if n_vars <= 4 else [f"X{i}" for i in range(n_vars)]
    variables = tuple(Variable(n, tuple(f"{n[0].lower()}{i}" for i in range(V))) for n in names)
    counts: Counter = Counter()
    for _ in range(rng.randint(1, max_count)):
        perms = [list(range(V))]
        for _ in range(n_vars - 1):
            p = list(range(V))
            rng.shuffle(p)
            perms.append(p)
        trial = Counter(counts)
        for i in range(V):
            trial[tuple(variables[v].values[perms[v][i]] for v in range(n_vars))] += 1
        if max(trial.values()) <= max_count:
            counts = trial
    degenerate = ()
    if coarse and V >= 2:
        over = variables[min(1, n_vars - 1)]
        vals = list(over.values)
        rng.shuffle(vals)
        cut = rng.randint(1, V - 1)
        degenerate = (DegenerateVariable("Color", over.name, (("R", tuple(vals[:cut])), ("B", tuple(vals[cut:])))),)
    return Deck(variables, counts, degenerate)
