import random

import pytest
from hypothesis import strategies as st

from deckprob.deck import Deck, Variable, random_valid_deck, reference_deck


@pytest.fixture(scope="session")
def deck():
    return reference_deck()


@pytest.fixture(scope="session")
def symmetric_deck():
    # hearts and diamonds carry identical face distributions
    face = Variable("Face", ("K", "Q", "J"))
    suit = Variable("Suit", ("S", "H", "D"))
    counts = {
        ("K", "S"): 4, ("K", "H"): 3, ("K", "D"): 3,
        ("Q", "S"): 2, ("Q", "H"): 4, ("Q", "D"): 4,
        ("J", "S"): 4, ("J", "H"): 3, ("J", "D"): 3,
    }
    from deckprob.deck import DegenerateVariable

    return Deck((face, suit), counts, (DegenerateVariable("Color", "Suit", (("R", ("H", "D")), ("B", ("S",)))),))


@st.composite
def valid_decks(draw, values=(2, 3, 4), n_vars=(2,), coarse=True):
    seed = draw(st.integers(0, 2**32 - 1))
    V = draw(st.sampled_from(values))
    m = draw(st.sampled_from(n_vars))
    return random_valid_deck(random.Random(seed), V, m, coarse=coarse)
