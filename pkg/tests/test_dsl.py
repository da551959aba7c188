import random
import re
import string

import pytest

from goossdm import SourceError, compile_source, format_tree, lower, parse
from goossdm.instances import random_schema_source
from goossdm.model import ConstraintTuple, Participation


def codes_of(exc: SourceError) -> list[str]:
    return [d.code for d in exc.diagnostics]


def test_minimal_schema_defaults():
    tree = parse("schema S { esg a; csg C @layer 1 { contains a; } }")
    schema = lower(tree)
    assert len(schema.esgs) == 1
    assert len(schema.csgs) == 1
    edge = schema.containments[0]
    assert edge.constraint == ConstraintTuple(Participation.ONE, 0)


def test_invalid_participation_is_e102():
    with pytest.raises(SourceError) as err:
        parse("schema S { esg a; csg C @layer 1 { contains a <2:1,0>; } }")
    (diag,) = err.value.diagnostics
    assert diag.code == "E102"
    assert diag.span.start_line == 1
    assert "2:1" in diag.message


def test_invalid_theta_is_e103():
    with pytest.raises(SourceError) as err:
        parse("schema S { esg a; csg C @layer 1 { contains a <1:1,7>; } }")
    assert "E103" in codes_of(err.value)


def test_duplicate_name_is_e104():
    with pytest.raises(SourceError) as err:
        parse("schema S { esg a; esg a; }")
    assert codes_of(err.value) == ["E104"]


def test_recovery_reports_multiple_errors():
    src = "schema S { esg a; csg C @layer 1 { contains a <9:9,0>; contains a <1:1,5>; } }"
    with pytest.raises(SourceError) as err:
        parse(src)
    assert codes_of(err.value) == ["E102", "E103"]


def test_unexpected_token_is_e101():
    with pytest.raises(SourceError) as err:
        parse("schema S { banana; }")
    assert "E101" in codes_of(err.value)


def test_case_study_declaration_counts(case_study_source, case_study_schema):
    # independent oracle: count declarations in the fixture text itself
    assert len(case_study_schema.esgs) == len(
        re.findall(r"^\s*esg\s", case_study_source, re.M)
    ) == 7
    assert len(case_study_schema.csgs) == len(
        re.findall(r"^\s*csg\s", case_study_source, re.M)
    ) == 6
    assert len(case_study_schema.connectors) == 1
    assert len(case_study_schema.associations) == 1


def test_unresolved_name_is_e105():
    with pytest.raises(SourceError) as err:
        lower(parse("schema S { csg C @layer 1 { contains xyz; } }"))
    assert codes_of(err.value) == ["E105"]


def test_reference_kind_mismatch_is_e106():
    src = "schema S { esg name; csg Doctor @layer 1 { contains name; } ref Doctor -> name; }"
    with pytest.raises(SourceError) as err:
        lower(parse(src))
    assert codes_of(err.value) == ["E106"]


def test_case_study_roots(case_study_schema):
    assert [c.name for c in case_study_schema.roots()] == ["Patient"]


def test_format_makes_defaults_explicit():
    text = format_tree(parse("schema S { esg a; csg C @layer 1 { contains a; } }"))
    assert "contains a <1:1,0>;" in text


def test_format_idempotent_on_fixture(case_study_source):
    assert format_tree(parse(case_study_source)) == case_study_source


def test_format_normalizes_whitespace(case_study_source):
    shuffled = case_study_source.replace("\n", " \n\n  ").replace(";", " ;")
    assert format_tree(parse(shuffled)) == case_study_source


def test_comments_are_skipped():
    src = "schema S { // a comment\n esg a; csg C @layer 1 { contains a; } }"
    schema = compile_source(src)
    assert len(schema.esgs) == 1


@pytest.mark.parametrize("seed", range(0, 100))
def test_round_trip_random_sources(seed):
    source = random_schema_source(seed, budget=3 + seed % 5)
    tree = parse(source)
    formatted = format_tree(tree)
    assert format_tree(parse(formatted)) == formatted
    assert lower(parse(formatted)) == lower(tree)


def test_diagnostic_spans_inside_input():
    src = "schema S { esg a; csg C @layer 1 { contains a <9:9,0>; } }"
    lines = src.splitlines()
    with pytest.raises(SourceError) as err:
        parse(src)
    for diag in err.value.diagnostics:
        assert 1 <= diag.span.start_line <= len(lines)
        assert diag.span.start_col <= len(lines[diag.span.start_line - 1]) + 1


@pytest.mark.parametrize("seed", range(60))
def test_parser_never_crashes_on_junk(seed):
    rng = random.Random(seed)
    alphabet = string.printable + "øλ€"
    source = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 300)))
    try:
        parse(source)
    except SourceError:
        pass  # diagnostics are the only acceptable failure mode
