import json
import subprocess
import sys

import pytest

from deckprob.cli import main
from deckprob.deck import Deck
from deckprob.mc.simulate import FrequencyTable


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "expr, want",
    [
        ("Face=K; Suit=H & Face=K", "4/25\t0.16"),
        ("Face=K; Face=K", "1\t1"),
        ("Face=K; Suit=* & Face=Q", "29/100\t0.29"),
    ],
)
def test_prob(capsys, expr, want):
    code, out, _ = run(capsys, "prob", expr)
    assert code == 0 and out.strip() == want


def test_prob_json_and_given(capsys):
    code, out, _ = run(capsys, "prob", "Face=K; Suit=H & Face=K", "--given", "Face=K; Suit=H", "--format", "json")
    assert code == 0 and json.loads(out)["exact"] == "2/5"


def test_prob_errors(capsys):
    code, _, err = run(capsys, "prob", "Face=K; Sit=H")
    assert code == 3 and "byte 8" in err
    code, _, err = run(capsys, "prob", "Face=K; Face=Q & Suit=S", "--given", "Face=K; Face=Q")
    assert code == 4 and "undefined conditional" in err


def test_tables(capsys, tmp_path):
    code, out, _ = run(capsys, "tables")
    data = json.loads(out)
    names = [t["name"] for t in data["tables"]]
    assert names[0] == "conditionals" and names[-1] == "interference"
    inter = data["tables"][-1]
    assert [c["exact"] for c in inter["cells"][1]] == ["1/50", "-2/25", "3/50"]
    target = tmp_path / "t.csv"
    assert run(capsys, "tables", "--format", "csv", "--out", str(target))[0] == 0
    assert target.read_text().startswith("table,prep,row,col")


def test_invalid_deck(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "variables": [{"name": "A", "values": ["x", "y"]}],
        "cards": [{"values": {"A": "x"}, "count": 2}, {"values": {"A": "y"}, "count": 1}],
    }))
    code, out, _ = run(capsys, "validate", "--deck", str(bad))
    assert code == 2 and json.loads(out)["value"] == "y"
    assert run(capsys, "tables", "--deck", str(bad))[0] == 2
    assert run(capsys, "prob", "A=x; A=x", "--deck", str(tmp_path / "missing.json"))[0] == 2


def test_custom_deck_round_trip(capsys, tmp_path, deck):
    path = tmp_path / "deck.json"
    path.write_text(deck.to_json())
    assert Deck.load(path) == deck
    code, out, _ = run(capsys, "prob", "Color=R; Face=K", "--deck", str(path))
    assert out.startswith("9/20")


def test_simulate_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(capsys, "simulate", "Face=K; Suit=H", "--variant", "s", "--seed", "7",
                   "--n", "100000", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_json(capsys, tmp_path):
    p = tmp_path / "f.json"
    run(capsys, "simulate", "Face=K; Color=R & Face=K", "--variant", "svd", "--n", "100000",
        "--format", "json", "--out", str(p))
    t = FrequencyTable.from_json(p.read_text())
    assert FrequencyTable.from_json(t.to_json()) == t
    assert t.variant == "svd" and t.within()


def test_simulate_svi(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "Face=K; Suit=*", "--variant", "svi", "--n", "1000")
    assert code == 0 and "Face=K; Suit=*" in out
    code, _, err = run(capsys, "simulate", "Face=K; Suit=*", "--variant", "svi",
                       "--entropy-device", str(tmp_path / "none"))
    assert code == 4 and "entropy" in err


def test_interfere(capsys):
    code, out, _ = run(capsys, "interfere", "--prep", "Face=Q", "--q", "Face=Q")
    assert out.strip() == "-2/25\t-0.08"
    code, out, _ = run(capsys, "interfere", "--format", "json")
    assert json.loads(out)["exact"] == "-1/200"
    code, _, err = run(capsys, "interfere", "--against", "H")
    assert code == 2


def test_exercises(capsys):
    code, out, _ = run(capsys, "exercises")
    assert code == 0 and "paper_discrepancy" in out
    code, out, _ = run(capsys, "exercises", "--format", "json")
    assert json.loads(out)["exercise3"]["Suit_any_then_K"]["value"] == "1/4"


def test_quantum(capsys):
    code, out, _ = run(capsys, "quantum", "--dim", "2", "3", "--trials", "20", "--seed", "3")
    data = json.loads(out)
    assert code == 0 and data["fuzz"]["failures"] == 0
    assert data["margenau"]["direct"] == pytest.approx(1.0)


def test_entry_point():
    r = subprocess.run([sys.executable, "-m", "deckprob.cli", "prob", "Face=K; Face=K"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("1\t")
