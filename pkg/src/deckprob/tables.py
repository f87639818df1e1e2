"""The four summary tables for a deck, computed exactly and cross-checked.

For a deck with plain variables ``P`` (first) and ``Q`` (second) and a
coarse-graining of ``Q``:

* conditionals: ``Pr(q_k | p_j)``
* defect: ``Pr{p_j & q_k} - Pr{q_k & p_j}`` for each preparation ``P=p_i``
* marginal gap: ``sum_t Pr_{p_j}{q_t & p_k} - Pr_{p_j}{p_k}``
* interference of the first multi-member class, prep ``p_j``, later ``p_k``

Each table is computed through the engine's branch enumeration and again
from count formulas; ``oracle_match`` records that the two agree exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

from deckprob import closed_form as cf
from deckprob import reference_values as ref
from deckprob.deck import Deck, DegenerateVariable, require_valid, reference_deck
from deckprob.engine import Grid, compatibility_defect, conditional_matrix, direct_prob, marginal_lhs, prepare
from deckprob.interference import interference_closed_form, interference_grid

DOCS = "docs/discrepancies.md"
PRINTED_ROUNDING = Fraction(1, 200)  # printed grids carry two decimals


def fmt_decimal(x: Fraction) -> str:
    return format(float(x), ".6g")


def fmt_exact(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


@dataclass
class Table:
    name: str
    title: str
    grid: Grid
    oracle_match: bool
    prep: tuple[str, str] | None = None
    printed: dict | None = None  # row -> tuple of printed values
    notes: dict = field(default_factory=dict)

    def cell_discrepancy(self, r, c) -> bool | None:
        if self.printed is None:
            return None
        value = self.printed[r][self.grid.cols.index(c)]
        x = self.grid[r, c]
        if isinstance(value, Fraction):
            return x != value
        return abs(x - Fraction(str(value))) > PRINTED_ROUNDING

    @property
    def paper_discrepancy(self) -> bool | None:
        if self.printed is None:
            return None
        return any(self.cell_discrepancy(r, c) for (r, c), _ in self.grid.items())

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "title": self.title,
            "rows": {"variable": self.grid.row_var, "values": list(self.grid.rows)},
            "cols": {"variable": self.grid.col_var, "values": list(self.grid.cols)},
            "cells": [
                [{"exact": fmt_exact(x), "decimal": fmt_decimal(x)} for x in row] for row in self.grid.cells
            ],
            "oracle_match": self.oracle_match,
        }
        if self.prep is not None:
            out["prep"] = f"{self.prep[0]}={self.prep[1]}"
        if self.printed is not None:
            out["paper_discrepancy"] = self.paper_discrepancy
            if self.paper_discrepancy:
                out["discrepant_cells"] = [
                    [r, c] for (r, c), _ in self.grid.items() if self.cell_discrepancy(r, c)
                ]
                out["docs"] = f"{DOCS}#{self.name}"
        out.update(self.notes)
        return out


def _grid_of(rows, cols, fn, rv, cv) -> Grid:
    return Grid(tuple(rows), tuple(cols), tuple(tuple(fn(r, c) for c in cols) for r in rows), rv, cv)


def _roles(deck: Deck):
    plain = [v.name for v in deck.variables]
    P = plain[0]
    Q = plain[1] if len(plain) > 1 else None
    coarse = None
    for d in deck.degenerate:
        for c, members in d.classes:
            if len(members) > 1:
                coarse = (d.name, c)
                break
        if coarse:
            break
    return P, Q, coarse


def conditionals_table(deck: Deck, P: str, Q: str) -> Table:
    grid = conditional_matrix(deck, P, Q)
    oracle = _grid_of(grid.rows, grid.cols, lambda j, k: cf.given(deck, (Q, k), (P, j)), P, Q)
    return Table("conditionals", f"Pr({Q} | {P})", grid, grid == oracle)


def defect_table(deck: Deck, P: str, Q: str, prep_value: str) -> Table:
    state = prepare(deck, P, prep_value)
    grid = compatibility_defect(state, P, Q)
    closed = cf.compatibility_defect(deck, (P, prep_value), P, Q)
    oracle = _grid_of(grid.rows, grid.cols, lambda j, k: closed[(j, k)], P, Q)
    return Table("defect", f"Pr{{{P} & {Q}}} - Pr{{{Q} & {P}}}", grid, grid == oracle, (P, prep_value))


def marginal_gap_table(deck: Deck, P: str, Q: str) -> Table:
    values = deck.target(P).values

    def engine(j, k):
        s = prepare(deck, P, j)
        return marginal_lhs(s, Q, (P, k)) - direct_prob(s, (P, k))

    def closed(j, k):
        return cf.ignored_sum(deck, (P, j), Q, (P, k)) - cf.given(deck, (P, k), (P, j))

    grid = _grid_of(values, values, engine, P, P)
    oracle = _grid_of(values, values, closed, P, P)
    return Table("marginal_gap", f"sum over {Q} of Pr{{{Q} & {P}}} - Pr{{{P}}}", grid, grid == oracle)


def interference_table(deck: Deck, P: str, coarse: tuple[str, str]) -> Table:
    name, c = coarse
    grid = interference_grid(deck, P, name, c)
    members = deck.target(name).members(c)
    notes = {"class": f"{name}={c}", "members": list(members)}
    if len(members) == 2:
        oracle = _grid_of(
            grid.rows, grid.cols, lambda j, k: interference_closed_form(deck, (P, j), (P, k), name, c), P, P
        )
        match = grid == oracle
    else:
        match = True
        notes["oracle"] = "closed form covers two-member classes only"
    return Table("interference", f"interference of {name}={c}", grid, match, notes=notes)


def _is_reference_deck(deck: Deck) -> bool:
    try:
        return deck == reference_deck()
    except Exception:
        return False


def build_tables(deck: Deck) -> list[Table]:
    require_valid(deck)
    P, Q, coarse = _roles(deck)
    reference = _is_reference_deck(deck)
    tables = []
    if Q is None:
        return tables
    t1 = conditionals_table(deck, P, Q)
    if reference:
        t1.printed = ref.CONDITIONALS
    tables.append(t1)
    for v in deck.target(P).values:
        t2 = defect_table(deck, P, Q, v)
        if reference and v == "K":
            t2.printed = ref.DEFECT_PREP_K
        tables.append(t2)
    t3 = marginal_gap_table(deck, P, Q)
    if reference:
        t3.printed = ref.MARGINAL_GAP
    tables.append(t3)
    if coarse is not None and deck.underlying(coarse[0]) == Q:
        t4 = interference_table(deck, P, coarse)
        if reference:
            t4.printed = ref.INTERFERENCE
        tables.append(t4)
    return tables


def tables_json(tables: list[Table], **kw) -> str:
    return json.dumps({"tables": [t.to_dict() for t in tables]}, **kw)


def tables_csv(tables: list[Table]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "prep", "row", "col", "exact", "decimal", "oracle_match", "paper_discrepancy"])
    for t in tables:
        prep = f"{t.prep[0]}={t.prep[1]}" if t.prep else ""
        for (r, c), x in t.grid.items():
            flag = t.cell_discrepancy(r, c)
            w.writerow([t.name, prep, r, c, fmt_exact(x), fmt_decimal(x), t.oracle_match,
                        "" if flag is None else flag])
    return buf.getvalue()
