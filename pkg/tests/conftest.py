from pathlib import Path

import pytest

from goossdm import compile_source, read, transform

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def case_study_source() -> str:
    return (FIXTURES / "visit_records.goossdm").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def case_study_schema(case_study_source):
    return compile_source(case_study_source, "visit_records.goossdm")


@pytest.fixture(scope="session")
def golden_xsd_text() -> str:
    return (FIXTURES / "visit_records.golden.xsd").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def case_study_doc(case_study_schema):
    return transform(case_study_schema).document


@pytest.fixture(scope="session")
def golden_doc(golden_xsd_text):
    return read(golden_xsd_text)


@pytest.fixture(scope="session")
def fig9_text() -> str:
    return (FIXTURES / "visit_records_fig9.xml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def extended_schema():
    text = (FIXTURES / "visit_records_extended.goossdm").read_text(encoding="utf-8")
    return compile_source(text, "visit_records_extended.goossdm")


@pytest.fixture(scope="session")
def link_pair_schema():
    text = (FIXTURES / "link_pair.goossdm").read_text(encoding="utf-8")
    return compile_source(text, "link_pair.goossdm")
