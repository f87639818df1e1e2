"""Values as printed in the original tables, kept for comparison only.

Where these disagree with what the rules produce, the computed values are
authoritative and the output carries ``paper_discrepancy``; see
docs/discrepancies.md for the analysis.
"""

from fractions import Fraction as F

FACES = ("K", "Q", "J")
SUITS = ("S", "H", "D")

# conditional probabilities Pr(suit | face), exact
CONDITIONALS = {
    "K": (F(1, 10), F(2, 5), F(1, 2)),
    "Q": (F(2, 5), F(1, 2), F(1, 10)),
    "J": (F(1, 2), F(1, 10), F(2, 5)),
}

# compatibility defect grid for preparation Face=K, rows Face, columns Suit (2 decimals)
DEFECT_PREP_K = {
    "K": (0.09, 0.36, 0.45),
    "Q": (-0.16, -0.20, -0.04),
    "J": (-0.25, -0.05, -0.20),
}

# ignored-manifestation marginal differences, rows prep Face, columns later Face (2 decimals)
MARGINAL_GAP = {
    "K": (-0.90, 0.40, 0.50),
    "Q": (0.40, -0.50, 0.10),
    "J": (0.50, 0.10, -0.60),
}

# interference of Color=R over {H, D}, rows prep Face, columns later Face, exact
INTERFERENCE = {
    "K": (F(-1, 200), F(1, 50), F(-3, 200)),
    "Q": (F(1, 50), F(-2, 25), F(3, 50)),
    "J": (F(-3, 200), F(3, 50), F(-9, 200)),
}

# two-card discard game
DISCARD_K_THEN_S = F(1, 4)
DISCARD_S_THEN_K = F(0)
DISCARD_FACE_SET_THEN_K = F(3, 4)
DISCARD_SUIT_SET_THEN_K = F(0)
