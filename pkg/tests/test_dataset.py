import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from likertkit import (DataError, ItemCatalog, LikertSpec, RatingMatrix, RawSurvey, SurveyRow,
                       build_matrix, composite_score, read_survey_csv, reverse_score,
                       screen_respondents, write_survey_csv)
from likertkit.dataset import respondent_covariate, survey_from_matrices

ITEMS = ("a", "b", "c")


def row(rid, sid="img1", values=(4, 4, 4), checks=(True, True, True), age="30"):
    return SurveyRow(rid, sid, dict(zip(ITEMS, values)),
                     {f"check{j}": ok for j, ok in enumerate(checks)}, {"age": age})


def survey(rows):
    return RawSurvey(tuple(rows), ITEMS, ("check0", "check1", "check2"), ("age",))


# reverse scoring

@pytest.mark.parametrize("value,spec,expected", [
    (2, LikertSpec(1, 7), 6),
    (4, LikertSpec(1, 7), 4),
    (1, LikertSpec(0, 10), 9),
])
def test_reverse_score_examples(value, spec, expected):
    assert reverse_score(value, spec) == expected


def test_reverse_score_rejects_out_of_range():
    with pytest.raises(DataError):
        reverse_score(8)


@given(st.integers(-5, 5), st.integers(1, 10), st.data())
def test_reverse_score_is_involution(lo, width, data):
    spec = LikertSpec(lo, lo + width)
    v = data.draw(st.integers(spec.min, spec.max))
    assert reverse_score(reverse_score(v, spec), spec) == v


def test_likert_spec_validation():
    assert LikertSpec().n_categories == 7
    assert LikertSpec().midpoint == 4
    with pytest.raises(DataError):
        LikertSpec(3, 3)


# screening

def test_screening_identity_when_nobody_fails():
    raw = survey([row("r1"), row("r2"), row("r3")])
    kept, report = screen_respondents(raw, max_failed_checks=1)
    assert kept.rows == raw.rows
    assert report.exclusions == ()
    assert report.respondents_after == 3


def test_screening_five_respondents_two_fail_two_of_three():
    rows = [row("r1"), row("r2", checks=(False, False, True)), row("r3"),
            row("r4", checks=(True, False, False)), row("r5", checks=(False, True, True))]
    kept, report = screen_respondents(survey(rows), max_failed_checks=2)
    assert kept.respondents == ("r1", "r3", "r5")
    assert {e.respondent_id for e in report.exclusions} == {"r2", "r4"}


def test_screening_drops_every_row_of_duplicated_respondent():
    rows = [row("r1"), row("r1"), row("r1", sid="img2"), row("r2")]
    kept, report = screen_respondents(survey(rows))
    assert kept.respondents == ("r2",)
    assert report.exclusions[0].rows == 3
    assert "duplicate" in report.exclusions[0].reason


def test_screening_counts_failures_across_stimuli():
    rows = [row("r1", checks=(False, True, True)),
            row("r1", sid="img2", checks=(False, True, True)),
            row("r2")]
    kept, _ = screen_respondents(survey(rows), max_failed_checks=2)
    assert kept.respondents == ("r2",)


def test_screening_1001_respondents_to_989():
    # 1001 ids, 2 of them submitted twice, 10 failing checks
    rows = [row(f"r{i:04d}") for i in range(1001)]
    rows += [row("r0001"), row("r0002")]
    for i in range(10, 20):
        rows[i] = row(f"r{i:04d}", checks=(False, False, False))
    _, report = screen_respondents(survey(rows))
    assert (report.respondents_before, report.respondents_after) == (1001, 989)


def test_screening_rejects_empty_result():
    with pytest.raises(DataError, match="no usable respondents"):
        screen_respondents(survey([row("r1", checks=(False, False, False))]))


@given(st.lists(st.tuples(st.integers(0, 3), st.lists(st.booleans(), min_size=3, max_size=3)),
                min_size=1, max_size=12))
def test_screening_only_removes_rows(spec):
    rows = [row(f"r{i}", values=(1 + i % 7, 2, 3), checks=tuple(c))
            for i, (_, c) in enumerate(spec)]
    rows += [row("r0", sid="img2")]
    raw = survey(rows)
    try:
        kept, _ = screen_respondents(raw, 2)
    except DataError:
        return
    for r in kept.rows:
        assert r in raw.rows


# matrices

def test_build_matrix_listwise_drop_and_ordering():
    rows = [row("r3", values=(1, 2, 3)), row("r1", values=(4, None, 4)),
            row("r2", values=(5, 6, 7)), row("r0", values=(2, 2, 2))]
    cat = ItemCatalog.from_items(("c", "a", "b"), reversed_items=("c",))
    m = build_matrix(survey(rows), "img1", cat)
    assert m.respondents == ("r0", "r2", "r3")
    assert m.items == ("a", "b", "c")
    assert m.values.tolist() == [[2, 2, 6], [5, 6, 1], [1, 2, 5]]


def test_build_matrix_independent_of_row_order():
    rows = [row(f"r{i}", values=(1 + i % 7, 1 + (i * 3) % 7, 1 + (i * 5) % 7)) for i in range(20)]
    cat = ItemCatalog.from_items(ITEMS)
    a = build_matrix(survey(rows), "img1", cat)
    b = build_matrix(survey(rows[::-1]), "img1", cat)
    assert a.respondents == b.respondents
    assert np.array_equal(a.values, b.values)


def test_single_complete_respondent_is_rejected_downstream():
    from likertkit import pearson_matrix

    m = build_matrix(survey([row("r1"), row("r2", values=(None, 1, 1))]), "img1",
                     ItemCatalog.from_items(ITEMS))
    assert m.values.shape == (1, 3)
    with pytest.raises(DataError):
        pearson_matrix(m)


def test_build_matrix_errors():
    raw = survey([row("r1")])
    with pytest.raises(DataError, match="unknown stimulus"):
        build_matrix(raw, "nope", ItemCatalog.from_items(ITEMS))
    with pytest.raises(DataError, match="no column"):
        build_matrix(raw, "img1", ItemCatalog.from_items(("a", "z")))


def test_rating_matrix_is_read_only(small_matrix):
    with pytest.raises(ValueError):
        small_matrix.values[0, 0] = 9


@pytest.mark.parametrize("values,expected", [((4, 4, 4, 4, 4), 4.0), ((7, 7, 7, 7, 7), 7.0),
                                             ((1, 2, 3, 4, 5), 3.0)])
def test_composite_score_rows(values, expected):
    m = RatingMatrix.from_array(np.array([values]), items=tuple("vwxyz"))
    assert composite_score(m, "vwxyz")[0] == expected


@given(st.lists(st.integers(1, 7), min_size=1, max_size=30))
def test_single_item_composite_equals_item(vals):
    m = RatingMatrix.from_array(np.array([vals, vals]).T, items=("p", "q"))
    assert np.array_equal(composite_score(m, ["p"]), np.array(vals, dtype=float))


# catalogs and CSV

def test_bundled_catalogs():
    cat = ItemCatalog.bundled("exploratory")
    assert len(cat.item_ids) == 31
    assert cat.reversed_items == frozenset({"cluttered"})
    assert cat.scale("final5") == ("enjoyable", "likable", "pleasing", "nice", "appealing")
    val = ItemCatalog.bundled("validation")
    assert len(val.scale("classic_aesthetics")) == 5
    with pytest.raises(DataError):
        ItemCatalog.bundled("nope")
    with pytest.raises(DataError, match="unknown scale"):
        cat.scale("nope")


def test_catalog_load_and_validation(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[items]\nx = "positive"\ny = "reversed"\nz = "positive"\n'
                    '[scales]\nall = ["x", "y", "z"]\n')
    cat = ItemCatalog.load(path)
    assert cat.polarity("y") == "reversed"
    with pytest.raises(DataError):
        ItemCatalog.from_mapping({"items": {"x": "sideways"}})
    with pytest.raises(DataError):
        ItemCatalog.from_mapping({"items": ["x"], "scales": {"s": ["q"]}})
    with pytest.raises(DataError, match="not found"):
        ItemCatalog.load(tmp_path / "missing.toml")


CSV = """respondent_id,stimulus_id,age,gender,a,b,c,check_1,check_2
r1,img1,30,f,1,2,3,1,pass
r2,img1,41,m,7,,5,0,1
r1,img2,30,f,2,2,2,true,
"""


def test_read_survey_csv_infers_items():
    raw = read_survey_csv(io.StringIO(CSV))
    assert raw.item_ids == ITEMS
    assert raw.check_ids == ("check_1", "check_2")
    assert raw.rows[1].responses["b"] is None
    assert raw.rows[1].failed_checks == 1
    assert raw.rows[2].failed_checks == 1  # empty check counts as a failure
    assert raw.demographic("age") == {"r1": "30", "r2": "41"}


@pytest.mark.parametrize("text,match", [
    ("respondent_id,a\nr1,1\n", "required columns"),
    ("respondent_id,stimulus_id,a\nr1,s,8\n", "outside"),
    ("respondent_id,stimulus_id,a\nr1,s,x\n", "not a number"),
    ("respondent_id,stimulus_id,a\nr1,s,2.5\n", "integer"),
    ("respondent_id,stimulus_id,a\nr1,s\n", "expected 3 fields"),
    ("respondent_id,stimulus_id,a,check\nr1,s,1,maybe\n", "attention check"),
    ("", "empty"),
])
def test_read_survey_csv_errors(text, match):
    with pytest.raises(DataError, match=match):
        read_survey_csv(io.StringIO(text))


def test_read_missing_file_names_path(tmp_path):
    with pytest.raises(DataError, match="nope.csv"):
        read_survey_csv(tmp_path / "nope.csv")


def test_csv_round_trip():
    raw = read_survey_csv(io.StringIO(CSV))
    buf = io.StringIO()
    write_survey_csv(raw, buf)
    again = read_survey_csv(io.StringIO(buf.getvalue()))
    assert [r.responses for r in again.rows] == [r.responses for r in raw.rows]
    assert [r.failed_checks for r in again.rows] == [r.failed_checks for r in raw.rows]


def test_survey_from_matrices_and_covariate(small_matrix):
    demo = {rid: {"age": 20 + i} for i, rid in enumerate(small_matrix.respondents)}
    raw = survey_from_matrices([small_matrix], demographics=demo)
    m = build_matrix(raw, "x", ItemCatalog.from_items(small_matrix.items))
    assert np.array_equal(m.values, small_matrix.values)
    assert respondent_covariate(raw, m, "age").tolist() == [20, 21, 22, 23, 24]
