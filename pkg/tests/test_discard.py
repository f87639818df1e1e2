import math
from fractions import Fraction as F

import pytest

from deckprob.discard import (
    NO_DRAW,
    DiscardRule,
    ToyDeck,
    enumerate_outcomes,
    exercise_report,
    prob,
    simulate,
    two_card_deck,
)


@pytest.fixture
def toy():
    return two_card_deck()


def test_exercise_values(toy):
    assert prob(toy, [("Face", "K"), ("Suit", "S")]) == F(1, 4)
    assert prob(toy, [("Suit", "S"), ("Face", "K")]) == 0
    assert prob(toy, [("Face", ("K", "Q")), ("Face", "K")]) == F(3, 4)
    assert prob(toy, [("Suit", ("S", "H")), ("Face", "K")]) == F(1, 4)


@pytest.mark.parametrize("steps", [["Face"], ["Suit", "Face"], ["Face", "Face", "Suit"], ["Suit"] * 4])
def test_leaves_sum_to_one(toy, steps):
    assert sum(enumerate_outcomes(toy, steps).values()) == 1


def test_empty_deck_reports_no_draw(toy):
    out = enumerate_outcomes(toy, ["Suit", "Face", "Face"])
    # S discarded, then Q discarded: third draw finds nothing
    assert out[("S", "Q", NO_DRAW)] == F(1, 2)


def test_report(toy):
    r = exercise_report(toy)
    assert [w["card"] for w in r["exercise1"]["witnesses"]] == ["KS", "QH"]
    assert r["exercise1"]["witnesses"][0]["Face"] == "return"
    assert r["exercise1"]["witnesses"][0]["Suit"] == "discard"
    assert not r["exercise1"]["simultaneous_possible"]
    assert r["exercise2"]["K_then_S"]["value"] == "1/4"
    assert r["exercise2"]["S_then_K"]["value"] == "0"
    assert not r["exercise2"]["commute"]
    e3 = r["exercise3"]
    assert e3["Face_any_then_K"]["value"] == "3/4"
    assert not e3["Face_any_then_K"]["paper_discrepancy"]
    assert e3["Suit_any_then_K"]["value"] == "1/4"
    assert e3["Suit_any_then_K"]["paper_discrepancy"] is True
    assert e3["ambiguous"]


def test_rule_validation():
    with pytest.raises(ValueError):
        DiscardRule((("Face", "K"), ("Face", "Q")))
    with pytest.raises(KeyError):
        ToyDeck(("Face", "Suit"), (("K", "S"),), DiscardRule({"Face": "K"}))
    with pytest.raises(ValueError):
        ToyDeck(("Face", "Suit"), (("K",),), DiscardRule({"Face": "K", "Suit": "H"}))


def test_monte_carlo_cross_check(toy):
    steps = ["Face", "Suit", "Face"]
    n = 100_000
    exact = enumerate_outcomes(toy, steps)
    counts = simulate(toy, steps, n, seed=11)
    assert set(counts) <= set(exact)
    for o, p in exact.items():
        p = float(p)
        assert abs(counts[o] / n - p) <= 4 * math.sqrt(p * (1 - p) / n)
