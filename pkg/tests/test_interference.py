import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from deckprob.deck import Deck, DegenerateVariable, Variable, random_valid_deck
from deckprob.engine import prepare
from deckprob.errors import AdditivityError, DeckError
from deckprob.interference import (
    InterferenceQuery,
    branch_sum,
    check_additivity,
    interference,
    interference_closed_form,
    interference_grid,
    merged_prob,
    value_set_prob,
)

from conftest import valid_decks

EXPECTED = {
    "K": (F(-1, 200), F(1, 50), F(-3, 200)),
    "Q": (F(1, 50), F(-2, 25), F(3, 50)),
    "J": (F(-3, 200), F(3, 50), F(-9, 200)),
}


def q(deck, prep, later):
    return InterferenceQuery(("Color", "R"), ("H", "D"), prepare(deck, "Face", prep), ("Face", later))


def test_grid(deck):
    g = interference_grid(deck, "Face", "Color", "R")
    assert {r: row for r, row in zip(g.rows, g.cells)} == EXPECTED


def test_single_entries(deck):
    assert interference(q(deck, "K", "K")) == F(-1, 200)
    assert interference(q(deck, "Q", "Q")) == F(-2, 25)


def test_closed_form(deck):
    assert interference_closed_form(deck, ("Face", "K"), ("Face", "K"), "Color", "R") == F(-1, 200)
    assert interference_closed_form(deck, ("Face", "K"), ("Face", "J"), "Color", "R") == F(-3, 200)


def test_symmetric_branches_give_zero(symmetric_deck):
    assert interference_grid(symmetric_deck, "Face", "Color", "R").is_zero()
    for j in "KQJ":
        for k in "KQJ":
            assert interference_closed_form(symmetric_deck, ("Face", j), ("Face", k), "Color", "R") == 0


def test_grid_symmetric(deck):
    g = interference_grid(deck, "Face", "Color", "R")
    for j in g.rows:
        for k in g.cols:
            assert g[j, k] == g[k, j]


def test_paths_disagree_by_interference(deck):
    for j in "KQJ":
        for k in "KQJ":
            qq = q(deck, j, k)
            assert merged_prob(qq) - value_set_prob(qq) == interference(qq)
            assert value_set_prob(qq) == branch_sum(qq)


def test_additivity(deck):
    assert check_additivity(deck, "Color", "R")
    assert check_additivity(deck, "Color", "B")


def test_wrong_decomposition_rejected(deck):
    with pytest.raises(DeckError):
        InterferenceQuery(("Color", "R"), ("H",), prepare(deck, "Face", "K"), ("Face", "K"))
    with pytest.raises(DeckError):
        InterferenceQuery(("Suit", "H"), ("H",), prepare(deck, "Face", "K"), ("Face", "K"))


def test_non_additive_class_refused(deck, monkeypatch):
    import deckprob.interference as mod

    monkeypatch.setattr(mod, "check_additivity", lambda *a: mod.AdditivityReport(False, 1, (None, 1, 0)))
    with pytest.raises(AdditivityError):
        interference(q(deck, "K", "K"))


def test_closed_form_needs_two_members():
    face = Variable("Face", ("K", "Q", "J"))
    suit = Variable("Suit", ("S", "H", "D"))
    counts = {(f, s): 1 for f in "KQJ" for s in "SHD"}
    d = Deck((face, suit), counts, (DegenerateVariable("Any", "Suit", (("T", ("S", "H", "D")),)),))
    with pytest.raises(ValueError):
        interference_closed_form(d, ("Face", "K"), ("Face", "K"), "Any", "T")
    # the definition still works for a three-member class
    assert interference(InterferenceQuery(("Any", "T"), ("S", "H", "D"), prepare(d, "Face", "K"), ("Face", "K"))) == 0


@settings(max_examples=60, deadline=None)
@given(valid_decks(values=(2, 3, 4)))
def test_random_partitions_additive(d):
    for c in d.target("Color").values:
        assert check_additivity(d, "Color", c)


def test_closed_form_matches_definition_sweep():
    rng = random.Random(7)
    checked = 0
    while checked < 60:
        d = random_valid_deck(rng, rng.choice([2, 3, 4]), 2)
        color = d.target("Color")
        for c, members in color.classes:
            if len(members) != 2:
                continue
            for j in d.target("Face").values:
                for k in d.target("Face").values:
                    qq = InterferenceQuery(("Color", c), members, prepare(d, "Face", j), ("Face", k))
                    assert interference(qq) == interference_closed_form(d, ("Face", j), ("Face", k), "Color", c)
            checked += 1
