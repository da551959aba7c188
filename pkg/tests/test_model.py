import random

import pytest

from goossdm import (
    ConstraintTuple,
    CsgNode,
    EsgNode,
    ModelError,
    Participation,
    SchemaGraph,
    compile_source,
)
from goossdm.model import ContainmentEdge, exclusive_runs
from goossdm.instances import random_schema


def tiny(src: str) -> SchemaGraph:
    return compile_source(src)


def test_layer_of_esg_is_zero(case_study_schema):
    assert case_study_schema.layer_of("name") == 0
    assert case_study_schema.layer_of("Date") == 0


def test_layer_of_case_study_csgs(case_study_schema):
    assert case_study_schema.layer_of("Doctor") == 1
    assert case_study_schema.layer_of("Patient") == 3


def test_layer_of_unknown_node(case_study_schema):
    with pytest.raises(ModelError):
        case_study_schema.layer_of("nope")


def test_roots_case_study(case_study_schema):
    assert [c.name for c in case_study_schema.roots()] == ["Patient"]


def test_roots_two_topmost():
    schema = tiny(
        "schema S { esg x; esg y;"
        " csg A @layer 2 { contains x; } csg B @layer 2 { contains y; } }"
    )
    assert [c.name for c in schema.roots()] == ["A", "B"]


def test_roots_single_csg():
    schema = tiny("schema S { esg x; csg X @layer 1 { contains x; } }")
    assert [c.name for c in schema.roots()] == ["X"]


def test_roots_requires_a_csg():
    schema = SchemaGraph("empty", esgs=(EsgNode("a"),))
    with pytest.raises(ModelError):
        schema.roots()


def test_exclusive_groups_connector_participants(case_study_schema):
    conn = case_study_schema.connectors[0]
    remaining = [m for m in conn.members if m.csg != "Patient"]
    groups = exclusive_runs(remaining, lambda m: m.constraint)
    assert [[m.csg for m in g] for g in groups] == [["Dept", "Clinic"]]


def test_single_exclusive_member_degrades():
    schema = tiny("schema S { esg a; csg C @layer 1 { contains a <0:X,1>; } }")
    assert schema.exclusive_groups("C") == []


def test_no_exclusive_members_no_groups():
    schema = tiny(
        "schema S { esg a; esg b; csg C @layer 1 { contains a; contains b; } }"
    )
    assert schema.exclusive_groups("C") == []


def test_exclusive_groups_of_members():
    schema = tiny(
        "schema S { esg a; esg b; esg c;"
        " csg C @layer 1 { contains a; contains b <0:X,0>; contains c <0:X,0>; } }"
    )
    groups = schema.exclusive_groups("C")
    assert [[e.child for e in g] for g in groups] == [["b", "c"]]


def test_containment_adjacency_invariant(case_study_schema, extended_schema):
    for schema in (case_study_schema, extended_schema):
        for edge in schema.containments:
            if not edge.is_reference and schema.kind_of(edge.child) == "csg":
                assert schema.layer_of(edge.child) + 1 == schema.layer_of(edge.parent)


def test_link_layer_invariant(extended_schema):
    for link in extended_schema.links:
        assert extended_schema.layer_of(link.derived) == extended_schema.layer_of(link.base) + 1


def test_annotation_containment_is_one_one():
    schema = tiny(
        "schema S { esg a; annotation N;"
        " csg C @layer 1 { contains a; contains N <1:1,0>; } }"
    )
    for edge in schema.containments:
        if schema.kind_of(edge.child) == "annotation":
            assert edge.constraint.p is Participation.ONE


def test_containment_dag_brute_force_matches_layers():
    # layer-consistent random schemas can never contain a containment cycle
    from goossdm.validator import _containment_cycle

    for seed in range(25):
        schema = random_schema(seed, budget=3 + seed % 5)
        assert _containment_cycle(schema) is None


def test_programmatic_cycle_detected():
    from goossdm.validator import _containment_cycle

    schema = SchemaGraph(
        "cyclic",
        csgs=(CsgNode("A", 1), CsgNode("B", 1)),
        containments=(
            ContainmentEdge("A", "B", position=0),
            ContainmentEdge("B", "A", position=0),
        ),
    )
    cycle = _containment_cycle(schema)
    assert cycle is not None
    assert set(cycle) >= {"A", "B"}


def test_roots_stable_under_edge_permutation(case_study_schema):
    rng = random.Random(7)
    edges = list(case_study_schema.containments)
    for _ in range(5):
        rng.shuffle(edges)
        shuffled = SchemaGraph(
            name=case_study_schema.name,
            esgs=case_study_schema.esgs,
            csgs=case_study_schema.csgs,
            annotations=case_study_schema.annotations,
            containments=tuple(edges),
            associations=case_study_schema.associations,
            connectors=case_study_schema.connectors,
            links=case_study_schema.links,
            references=case_study_schema.references,
        )
        assert [c.name for c in shuffled.roots()] == ["Patient"]


def test_is_shared(case_study_schema):
    assert case_study_schema.is_shared("Name")  # Hospital and Clinic
    assert not case_study_schema.is_shared("Date")


def test_duplicate_names_rejected():
    with pytest.raises(ModelError):
        SchemaGraph("dup", esgs=(EsgNode("a"), EsgNode("a")))


def test_unknown_edge_endpoint_rejected():
    with pytest.raises(ModelError):
        SchemaGraph(
            "bad",
            csgs=(CsgNode("C", 1),),
            containments=(ContainmentEdge("C", "ghost"),),
        )


def test_layer_must_be_positive():
    with pytest.raises(ModelError):
        CsgNode("C", 0)


def test_theta_values():
    with pytest.raises(ModelError):
        ConstraintTuple(Participation.ONE, 2)
