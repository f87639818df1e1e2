"""Exception types shared across the package."""


class DeckError(ValueError):
    """A deck or deck file violates the deck model."""


class ParseError(ValueError):
    """Sequence expression could not be parsed.

    ``offset`` is the byte offset (UTF-8) of the offending token.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SimultaneousManifestation(ValueError):
    """Two variables were asked to manifest in the same event."""


class UndefinedConditional(ZeroDivisionError):
    """Conditioning on an event of probability zero."""


class AdditivityError(ValueError):
    """Coarse-grained class is not additive over its members, so interference is undefined."""


class EntropyUnavailable(RuntimeError):
    """The external randomness device could not be read."""


class PreparationExhausted(RuntimeError):
    """The preparation loop hit its iteration cap without reaching the target value."""
