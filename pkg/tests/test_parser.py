"""Response parsing: canonical examples, the audited fixture corpus, invariants."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from icl_xray.dataset import ClassLabel
from icl_xray.parser import (ParseStatus, Prediction, default_synonyms,
                             parse_labels)

from reference_matcher import default_alias_table, reference_parse

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "parser"
TASK = (ClassLabel("COVID"), ClassLabel("Normal"))


def fixture_names() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.txt"))


def load_fixture(name: str):
    raw = (FIXTURE_DIR / f"{name}.txt").read_text(encoding="utf-8")
    sidecar = json.loads(
        (FIXTURE_DIR / f"{name}.expected.json").read_text(encoding="utf-8"))
    return raw, sidecar


def synonyms_from(sidecar) -> dict[str, ClassLabel] | None:
    if not sidecar["synonyms"]:
        return None
    by_name = {label.name: label for label in TASK}
    return {alias: by_name[class_name]
            for alias, class_name in sidecar["synonyms"].items()}


def test_corpus_is_large_enough():
    assert len(fixture_names()) >= 30


@pytest.mark.parametrize("name", fixture_names())
def test_fixture_parses_to_annotated_statuses(name):
    raw, sidecar = load_fixture(name)
    expected = [(int(i), item_id) for i, item_id in sidecar["expected"]]
    predictions = parse_labels(raw, expected, TASK, synonyms_from(sidecar))
    assert len(predictions) == len(sidecar["predictions"])
    for got, annotated in zip(predictions, sidecar["predictions"]):
        assert got.item_id == annotated["item_id"]
        assert got.status.value == annotated["status"], name
        if annotated["predicted"] is None:
            assert got.predicted is None
        else:
            assert got.predicted == ClassLabel(annotated["predicted"])
        if annotated["status"] == "parsed":
            assert got.matched_line == annotated["matched_line"]


@pytest.mark.parametrize("name", fixture_names())
def test_reference_matcher_agrees_with_annotations(name):
    # guards the corpus against silent drift in either route
    raw, sidecar = load_fixture(name)
    expected = [(int(i), item_id) for i, item_id in sidecar["expected"]]
    if sidecar["synonyms"]:
        aliases = {"COVID": "COVID", "Normal": "Normal", **sidecar["synonyms"]}
    else:
        aliases = default_alias_table("COVID", "Normal")
    assert reference_parse(raw, expected, aliases) == sidecar["predictions"]


@pytest.mark.parametrize("name", fixture_names())
def test_soundness_matched_line_contains_an_alias(name):
    raw, sidecar = load_fixture(name)
    expected = [(int(i), item_id) for i, item_id in sidecar["expected"]]
    table = synonyms_from(sidecar) or default_synonyms(TASK)
    for pred in parse_labels(raw, expected, TASK, synonyms_from(sidecar)):
        if pred.status is ParseStatus.PARSED:
            assert pred.matched_line is not None
            assert pred.matched_line in raw  # exact substring of the response
            aliases = [alias for alias, label in table.items()
                       if label == pred.predicted] + [pred.predicted.name]
            line = pred.matched_line.casefold()
            assert any(alias.casefold() in line for alias in aliases)


def test_naive_example_with_explanation_capture():
    raw = "COVID\nThis radiograph shows bilateral opacities."
    (pred,) = parse_labels(raw, [(1, "t01")], TASK)
    assert pred.status is ParseStatus.PARSED
    assert pred.predicted == ClassLabel("COVID")
    assert pred.explanation == "This radiograph shows bilateral opacities."
    assert pred.matched_line == "COVID"


def test_icl4_example_three_indices():
    raw = "Image 7: Normal\nImage 8: COVID\nImage 9: COVID\nExplanation: ..."
    preds = parse_labels(raw, [(7, "a"), (8, "b"), (9, "c")], TASK)
    assert [p.predicted.name for p in preds] == ["Normal", "COVID", "COVID"]
    assert all(p.status is ParseStatus.PARSED for p in preds)


def test_empty_response_is_unparseable():
    preds = parse_labels("", [(7, "a"), (8, "b")], TASK)
    assert all(p.status is ParseStatus.UNPARSEABLE for p in preds)


def test_both_classes_on_one_line_is_ambiguous():
    raw = "Image 3: could be COVID or Normal"
    (pred,) = parse_labels(raw, [(3, "t05")], TASK)
    assert pred.status is ParseStatus.AMBIGUOUS
    assert pred.predicted is None
    assert pred.matched_line == raw


def test_parsing_is_pure():
    raw = "Image 7: COVID\nImage 8: Normal\nImage 9: COVID"
    expected = [(7, "a"), (8, "b"), (9, "c")]
    assert parse_labels(raw, expected, TASK) == parse_labels(raw, expected, TASK)


def test_lines_are_consumed_at_most_once():
    raw = "Image 3: COVID"
    preds = parse_labels(raw, [(3, "g1"), (3, "g2")], TASK)
    assert preds[0].status is ParseStatus.PARSED
    assert preds[1].status is ParseStatus.UNPARSEABLE


def test_two_aliases_of_the_same_class_are_not_ambiguous():
    raw = "Normal (healthy) lung fields.\nNo findings."
    (pred,) = parse_labels(raw, [(1, "q")], TASK)
    assert pred.status is ParseStatus.PARSED
    assert pred.predicted == ClassLabel("Normal")


def test_overlapping_synonyms_rejected():
    table = {"positive": ClassLabel("COVID"), "POSITIVE ": ClassLabel("Normal")}
    with pytest.raises(ValueError, match="both classes"):
        parse_labels("x", [(1, "q")], TASK, table)


def test_empty_expected_rejected():
    with pytest.raises(ValueError):
        parse_labels("COVID", [], TASK)


def test_prediction_invariant_enforced():
    with pytest.raises(ValueError):
        Prediction(item_id="x", predicted=ClassLabel("COVID"),
                   status=ParseStatus.UNPARSEABLE, explanation="",
                   matched_line=None)


def test_default_synonyms_cover_common_aliases():
    table = default_synonyms(TASK)
    assert table["covid-19"] == ClassLabel("COVID")
    assert table["positive"] == ClassLabel("COVID")
    assert table["healthy"] == ClassLabel("Normal")
    assert table["negative"] == ClassLabel("Normal")
