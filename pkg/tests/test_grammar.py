from fractions import Fraction as F

import pytest

from deckprob.engine import Ignored, SingleValue, ValueSet, sequence_prob
from deckprob.errors import ParseError
from deckprob.grammar import parse, parse_sequence, tokenize


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Face=K; Suit=H & Face=K", F(4, 25)),
        ("Face=K; Face=K", F(1)),
        ("Face=K; Suit=* & Face=Q", F(29, 100)),
        ("  Face =K;Suit= ( H | D )&Face=K ", F(41, 100)),
        ("Face=K; Color=R & Face=K", F(41, 100) + F(-1, 200)),
        ("Color=R; Face=K", F(9, 20)),
    ],
)
def test_evaluates(deck, text, expected):
    assert sequence_prob(parse_sequence(text, deck)) == expected


def test_structure(deck):
    p = parse("Face=Q; Suit=* & Suit=(S|H) & Color=B", deck)
    assert p.prep == ("Face", "Q")
    kinds = [type(s.outcome) for s in p.steps]
    assert kinds == [Ignored, ValueSet, SingleValue]
    assert str(p) == "Face=Q; Suit=* & Suit=(S|H) & Color=B"


@pytest.mark.parametrize(
    "text, offset, needle",
    [
        ("Face=K; Sit=H", 8, "unknown variable"),
        ("Face=K; Suit=Z", 13, "unknown value"),
        ("Face=K; Suit=H ^ Face=K", 15, "simultaneous"),
        ("Face=K; Suit=H ∧ Face=K", 15, "simultaneous"),
        ("Face=K; Suit,Face=H", 12, "simultaneous"),
        ("Face=K; Suit=(H)", 15, "two values"),
        ("Face=K;", 7, "end of input"),
        ("Face=K Suit=H", 7, "expected ';'"),
        ("Face=K; Suit=H &", 16, "end of input"),
        ("Face=K; Suit=H)", 14, "unexpected"),
        ("Face=*; Suit=H", 5, "a value of Face"),
    ],
)
def test_errors(deck, text, offset, needle):
    with pytest.raises(ParseError, match=needle) as e:
        parse(text, deck)
    assert e.value.offset == offset


def test_offsets_are_bytes(deck):
    # the two-byte "é" shifts the offset of what follows by two
    with pytest.raises(ParseError) as e:
        parse("Face=K; Suité=H", deck)
    assert e.value.offset == 8
    with pytest.raises(ParseError) as e:
        parse("Face=K;é Suit=H", deck)
    assert e.value.offset == 7
    toks = tokenize("é=K")
    assert [t.offset for t in toks] == [0, 2, 3, 4]


def test_zero_marginal_prep(deck):
    from deckprob.deck import Deck, Variable

    d = Deck((Variable("A", ("x", "y")),), {("x",): 1, ("y",): 1})
    assert sequence_prob(parse_sequence("A=x; A=x", d)) == 1
    with pytest.raises(ParseError):
        parse_sequence("A=x; A=x", Deck((Variable("A", ("x", "y")),), {("x",): 1}))
