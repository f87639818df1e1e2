"""Parser for sequence expressions such as ``Face=K; Suit=(H|D) & Face=*``.

    SEQ  := PREP ';' STEP ('&' STEP)*
    PREP := VAR '=' VALUE
    STEP := VAR '=' VALUE | VAR '=' '(' VALUE ('|' VALUE)+ ')' | VAR '=' '*'

Whitespace is insignificant. Errors carry the UTF-8 byte offset of the
offending token so callers can point at it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from deckprob.deck import Deck
from deckprob.engine import EventSequence, EventStep, Ignored, Manifestation, SingleValue, ValueSet, prepare
from deckprob.errors import DeckError, ParseError

_TOKEN = re.compile(r"\s*(?:(?P<ident>[^\s=;&|()*^∧,]+)|(?P<punct>[=;&|()*])|(?P<joint>[\^∧,])|(?P<bad>\S))")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, punct, joint, bad, end
    text: str
    offset: int  # byte offset


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        kind = m.lastgroup
        start = m.start(kind)
        out.append(Token(kind, m.group(kind), len(text[:start].encode("utf-8"))))
        pos = m.end()
    out.append(Token("end", "", len(text.encode("utf-8"))))
    return out


@dataclass(frozen=True)
class ParsedSequence:
    prep: tuple[str, str]
    steps: tuple[EventStep, ...]

    def bind(self, deck: Deck) -> EventSequence:
        return EventSequence(prepare(deck, *self.prep), self.steps)

    def __str__(self):
        return f"{self.prep[0]}={self.prep[1]}; " + " & ".join(str(s) for s in self.steps)


class _Parser:
    def __init__(self, text: str, deck: Deck):
        self.toks = tokenize(text)
        self.i = 0
        self.deck = deck

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.offset)

    def expect(self, text):
        tok = self.tok
        if tok.kind == "joint":
            self.fail(f"simultaneous manifestation is not expressible: unexpected {tok.text!r}")
        if tok.text != text or tok.kind not in ("punct",):
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            self.fail(f"expected {text!r}, found {found}")
        self.i += 1
        return tok

    def ident(self, what):
        tok = self.tok
        if tok.kind == "joint":
            self.fail(f"simultaneous manifestation is not expressible: unexpected {tok.text!r}")
        if tok.kind != "ident":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            self.fail(f"expected {what}, found {found}")
        self.i += 1
        return tok

    def var(self):
        tok = self.ident("variable name")
        if tok.text not in self.deck.target_names:
            self.fail(f"unknown variable {tok.text!r}", tok)
        if self.tok.kind == "joint":
            self.fail(
                f"simultaneous manifestation is not expressible: {tok.text!r} joined with {self.tok.text!r}"
            )
        return tok.text

    def value(self, var):
        tok = self.ident(f"a value of {var}")
        if tok.text not in self.deck.target(var).values:
            self.fail(f"unknown value {tok.text!r} for {var}", tok)
        return tok.text

    def step(self):
        var = self.var()
        self.expect("=")
        tok = self.tok
        if tok.kind == "punct" and tok.text == "*":
            self.i += 1
            outcome = Ignored()
        elif tok.kind == "punct" and tok.text == "(":
            self.i += 1
            values = [self.value(var)]
            if not (self.tok.kind == "punct" and self.tok.text == "|"):
                self.fail("a value set needs at least two values separated by '|'")
            while self.tok.kind == "punct" and self.tok.text == "|":
                self.i += 1
                values.append(self.value(var))
            self.expect(")")
            outcome = ValueSet(tuple(values))
        else:
            outcome = SingleValue(self.value(var))
        if self.tok.kind == "joint":
            self.fail(f"simultaneous manifestation is not expressible: unexpected {self.tok.text!r}")
        return EventStep(Manifestation(var), outcome)

    def sequence(self) -> ParsedSequence:
        var = self.var()
        self.expect("=")
        prep = (var, self.value(var))
        self.expect(";")
        steps = [self.step()]
        while self.tok.kind == "punct" and self.tok.text == "&":
            self.i += 1
            steps.append(self.step())
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r} after sequence")
        return ParsedSequence(prep, tuple(steps))


def parse(text: str, deck: Deck) -> ParsedSequence:
    return _Parser(text, deck).sequence()


def parse_sequence(text: str, deck: Deck) -> EventSequence:
    """Parse and bind to the deck's prepared p-state."""
    parsed = parse(text, deck)
    try:
        return parsed.bind(deck)
    except DeckError as exc:
        raise ParseError(str(exc), 0) from None
