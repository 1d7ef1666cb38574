"""Smoke test for the accord extension module.

Build and install first, e.g. `maturin develop` or
`pip install --no-build-isolation crates/python`, then run this script from
the repository root.
"""

import pathlib
import sys

import accord

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "core" / "fixtures"


def main():
    lexicon = accord.Lexicon.load(str(FIXTURES / "fr.lex"))
    assert len(lexicon) > 50
    cyclistes = (FIXTURES / "cyclistes.tsv").read_text()

    profile = accord.Profile()
    assert profile.weights == (2.0, 2.0, 2.0, 1.0)
    assert profile.strategy == "proportional"

    diagnoses = accord.check(cyclistes, lexicon)
    errors = diagnoses[0]["evaluations"]
    assert [e["group"]["variable"] for e in errors] == ["number", "gender"]
    assert errors[0]["verdict"]["kind"] == "ask_user"

    reports = accord.correct(cyclistes, lexicon)
    final = reports[0]["final_tree"]
    assert reports[0]["converged"]
    words = [n["surface"] for n in final["nodes"]]
    assert "cyclistes" in words and "rencontrés" in words and "bonne" in words

    run = accord.Correction(cyclistes, lexicon)
    question = run.advance()
    assert question is not None
    options = [o["text"] for o in question["options"]]
    assert options == ["un cycliste (singular)", "des cyclistes (plural)"], options
    update = run.answer(question["id"], "sin")
    assert update["after"]["a"] > update["before"]["a"]
    while (q := run.advance()) is not None:
        run.answer(q["id"], q["options"][0]["value"])
    assert run.state == "converged", run.state
    assert run.text.startswith("le jeune cycliste"), run.text
    assert run.profile.threshold == 4.75

    ranked = accord.rank_forest((FIXTURES / "forest_vue.tsv").read_text(), lexicon)
    assert ranked[0]["tree"]["sentence_id"] == "vue_house"

    try:
        accord.check("# sent_id = x\n1\tbad\n", lexicon)
    except ValueError as e:
        assert "line" in str(e)
    else:
        raise AssertionError("malformed treebank accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    sys.exit(main())
