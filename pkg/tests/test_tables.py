from fractions import Fraction as F

from deckprob.deck import Deck, Variable
from deckprob.tables import build_tables, fmt_decimal, tables_csv, tables_json


def by_name(tables):
    out = {}
    for t in tables:
        out.setdefault(t.name, []).append(t)
    return out


def test_reference_tables(deck):
    t = by_name(build_tables(deck))
    assert all(x.oracle_match for ts in t.values() for x in ts)
    cond = t["conditionals"][0]
    assert cond.grid["K", "H"] == F(2, 5) and cond.paper_discrepancy is False
    k_defect = t["defect"][0]
    assert k_defect.prep == ("Face", "K")
    assert [k_defect.grid["K", s] for s in "SHD"] == [F(9, 100), F(6, 25), F(1, 4)]
    assert [k_defect.grid["Q", s] for s in "SHD"] == [F(-1, 25), F(-1, 5), F(-1, 20)]
    assert [k_defect.grid["J", s] for s in "SHD"] == [F(-1, 20), F(-1, 25), F(-1, 5)]
    assert k_defect.paper_discrepancy is True
    agree = {rc for rc, _ in k_defect.grid.items() if not k_defect.cell_discrepancy(*rc)}
    assert agree == {("K", "S"), ("Q", "H"), ("J", "D")}
    gap = t["marginal_gap"][0]
    for (j, k), x in gap.grid.items():
        assert x == (F(-29, 50) if j == k else F(29, 100))
    assert gap.paper_discrepancy is True
    inter = t["interference"][0]
    assert inter.paper_discrepancy is False
    assert inter.grid["Q", "Q"] == F(-2, 25)


def test_discrepancy_only_for_reference_deck(symmetric_deck):
    t = by_name(build_tables(symmetric_deck))
    assert all(x.printed is None for ts in t.values() for x in ts)
    assert t["interference"][0].grid.is_zero()


def test_output_formats(deck):
    tables = build_tables(deck)
    import json

    data = json.loads(tables_json(tables))
    defect = next(x for x in data["tables"] if x["name"] == "defect")
    assert defect["paper_discrepancy"] is True
    assert defect["docs"].startswith("docs/discrepancies.md")
    assert defect["cells"][0][0] == {"exact": "9/100", "decimal": "0.09"}
    csv_text = tables_csv(tables)
    assert "interference,,Q,Q,-2/25,-0.08,True,False" in csv_text


def test_decimal_format():
    assert fmt_decimal(F(1, 3)) == "0.333333"
    assert fmt_decimal(F(-1, 200)) == "-0.005"


def test_one_variable_deck_has_no_tables():
    d = Deck((Variable("A", ("x", "y")),), {("x",): 1, ("y",): 1})
    assert build_tables(d) == []
