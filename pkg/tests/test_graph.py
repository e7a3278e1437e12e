import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from dtbm.graph import (
    AccessDenied,
    AmbiguousInheritance,
    CycleDetected,
    DuplicateId,
    EmptyTypes,
    Graph,
    HasDependents,
    InvalidValue,
    Permission,
    UnknownConcept,
    UnknownElement,
    UnknownParent,
    UnknownPredicate,
    UnknownPropertyType,
)
from dtbm.generator import build_ontology

from oracles import (
    dangling_references,
    index_consistent,
    oracle_all_instances,
    random_graph,
    random_mutation,
)


@pytest.fixture
def g():
    graph = Graph()
    build_ontology(graph)
    return graph


# -- concepts ------------------------------------------------------------------

def test_add_concept_with_parent(g):
    c = g.add_concept("f:Crane", {"dt:Asset"})
    assert c.parents == frozenset({"dt:Asset"})
    assert "f:Crane" in g.children_of("dt:Asset")


def test_root_concept_has_no_parents():
    g = Graph()
    assert g.add_concept("dt:Asset").parents == frozenset()


def test_concept_errors(g):
    with pytest.raises(DuplicateId):
        g.add_concept("f:Robot", ["dt:Asset"])
    with pytest.raises(UnknownParent) as err:
        g.add_concept("f:X", ["f:Nope"])
    assert err.value.element_id == "f:Nope"


def test_subsumption_cycle_rejected(g):
    g.add_concept("f:X", [])
    g.add_concept("f:Y", ["f:X"])
    with pytest.raises(CycleDetected):
        g.add_parent("f:X", "f:Y")
    with pytest.raises(CycleDetected):
        g.add_parent("f:X", "f:X")
    assert g.parents_of("f:X") == frozenset()


def test_children_and_parents_are_inverse(g):
    for c in g.concepts():
        for p in g.parents_of(c):
            assert c in g.children_of(p)
        for ch in g.children_of(c):
            assert c in g.parents_of(ch)


def test_descendants(g):
    assert {"f:Data_Weather", "f:Data_Power", "dt:Data_Series"} <= g.descendants("dt:Data")
    assert g.descendants("f:Data_Power") == set()
    with pytest.raises(UnknownElement):
        g.descendants("f:Ghost")


# -- instances -----------------------------------------------------------------

def test_instance_subsumption(g):
    g.add_instance("f:r1", ["f:Robot_Type1"])
    assert g.is_instance_of("f:r1", "dt:Asset")
    assert g.is_instance_of("f:r1", "f:Robot_Type1")
    assert not g.is_instance_of("f:r1", "dt:Data")
    with pytest.raises(UnknownElement):
        g.is_instance_of("f:ghost", "dt:Asset")


def test_instance_errors(g):
    with pytest.raises(EmptyTypes):
        g.add_instance("f:i", [])
    with pytest.raises(UnknownConcept):
        g.add_instance("f:i", ["f:Nope"])
    g.add_instance("f:i", ["f:Robot"])
    with pytest.raises(DuplicateId):
        g.add_instance("f:i", ["f:Robot"])
    with pytest.raises(DuplicateId):
        g.add_instance("f:Robot", ["f:Robot"])


def test_ids_unique_across_kinds(g):
    with pytest.raises(DuplicateId):
        g.add_predicate("f:Robot")
    with pytest.raises(DuplicateId):
        g.add_property_type("dt:hasPart")
    with pytest.raises(InvalidValue):
        g.add_concept("", [])


# -- edges ---------------------------------------------------------------------

def test_edges_have_set_semantics(g):
    g.add_instance("f:l", ["f:Line"])
    g.add_instance("f:r", ["f:Robot"])
    e1 = g.add_edge("f:l", "dt:hasPart", "f:r")
    assert g.add_edge("f:l", "dt:hasPart", "f:r") == e1
    assert g.counts()["edges"] == 1
    assert g.objects("f:l", "dt:hasPart") == {"f:r"}
    assert g.subjects("f:r", "dt:hasPart") == {"f:l"}


def test_edge_errors(g):
    g.add_instance("f:r", ["f:Robot"])
    with pytest.raises(UnknownElement) as err:
        g.add_edge("f:r", "dt:hasPart", "ghost")
    assert err.value.element_id == "ghost"
    with pytest.raises(UnknownPredicate):
        g.add_edge("f:r", "dt:owns", "f:r")
    assert g.counts()["edges"] == 0


def test_remove_edge_updates_stats(g):
    g.add_instance("f:a", ["f:Robot"])
    g.add_instance("f:b", ["f:Belt"])
    eid = g.add_edge("f:a", "dt:connectsTo", "f:b")
    assert g.predicate_stats("dt:connectsTo") == (1, 1, 1)
    g.remove_edge(eid)
    assert g.predicate_stats("dt:connectsTo") == (0, 0, 0)
    with pytest.raises(UnknownElement):
        g.remove_edge(eid)


# -- properties ----------------------------------------------------------------

def test_property_overwrite_and_errors(g):
    g.add_instance("f:p", ["f:Data_Power"])
    g.set_property("f:p", "dt:hasDataKeySeries", "TBD")
    assert g.get_property("f:p", "dt:hasDataKeySeries") == "TBD"
    g.set_property("f:p", "dt:hasDataKeySeries", "key://timeseries/p")
    assert g.get_property("f:p", "dt:hasDataKeySeries") == "key://timeseries/p"
    assert g.owners_with("dt:hasDataKeySeries", "TBD") == frozenset()
    with pytest.raises(UnknownPropertyType):
        g.set_property("f:p", "unit", "kW")
    with pytest.raises(InvalidValue):
        g.set_property("f:p", "dt:assetId", [1, 2])
    g.delete_element("f:p")
    with pytest.raises(UnknownElement):
        g.set_property("f:p", "dt:hasDataKeySeries", "x")


def test_property_subkeys(g):
    assert set(g.property_subkeys("dt:hasDataKey")) == {
        "dt:hasDataKey", "dt:hasDataKeySeries", "dt:hasDataKeyFile"}
    assert g.property_subkeys("nope") == []


# -- inheritance ---------------------------------------------------------------

def test_inherited_property(g):
    g.add_property_type("unit")
    g.set_property("f:Data_Power", "unit", "kW")
    g.add_instance("f:p1", ["f:Data_Power"])
    assert g.get_property("f:p1", "unit") is None
    assert g.get_property("f:p1", "unit", inherit=True) == "kW"
    g.set_property("f:p1", "unit", "W")
    assert g.get_property("f:p1", "unit", inherit=True) == "W"


def test_inheritance_nearest_wins(g):
    g.add_property_type("unit")
    g.set_property("dt:Data", "unit", "any")
    g.set_property("dt:Data_Series_Numeric", "unit", "num")
    g.add_instance("f:w", ["f:Data_Weather"])
    assert g.get_property("f:w", "unit", inherit=True) == "num"


def test_inheritance_diamond():
    g = Graph()
    g.add_property_type("unit")
    g.add_concept("A")
    g.add_concept("B", ["A"])
    g.add_concept("C", ["A"])
    g.add_concept("D", ["B", "C"])
    g.add_instance("i", ["D"])
    g.set_property("B", "unit", "kW")
    g.set_property("C", "unit", "kW")
    assert g.get_property("i", "unit", inherit=True) == "kW"
    g.set_property("C", "unit", "W")
    with pytest.raises(AmbiguousInheritance) as err:
        g.get_property("i", "unit", inherit=True)
    assert err.value.candidates == {"B": "kW", "C": "W"}


def test_inheritance_more_specific_definer_wins():
    g = Graph()
    g.add_property_type("unit")
    g.add_concept("A")
    g.add_concept("B", ["A"])
    g.add_instance("i", ["A", "B"])
    g.set_property("A", "unit", "generic")
    g.set_property("B", "unit", "specific")
    assert g.get_property("i", "unit", inherit=True) == "specific"


# -- deletion ------------------------------------------------------------------

def test_delete_isolated_instance(g):
    g.add_instance("f:x", ["f:Robot"])
    report = g.delete_element("f:x")
    assert report.elements == {"f:x"}
    assert not g.is_node("f:x")


def test_delete_blocked_then_cascade(mini):
    before = mini.structure()
    with pytest.raises(HasDependents) as err:
        mini.delete_element("f:Robot")
    assert "f:robot" in err.value.dependents
    assert mini.structure() == before
    report = mini.delete_element("dt:Asset", cascade=True)
    assert {"f:Robot", "f:Robot_Type1", "f:robot", "f:belt", "f:robot_joint_1"} <= report.elements
    assert not mini.is_node("f:robot")
    assert mini.objects("f:line", "dt:hasPart") == frozenset()
    assert dangling_references(mini) == []
    # data series survive; their owners are gone
    assert mini.is_instance("f:robot_power")


def test_delete_predicate_and_property_type(mini):
    with pytest.raises(HasDependents):
        mini.delete_element("dt:connectsTo")
    mini.delete_element("dt:connectsTo", cascade=True)
    assert mini.objects("f:robot", "dt:connectsTo") == frozenset()
    with pytest.raises(HasDependents):
        mini.delete_element("dt:hasDataKey")
    report = mini.delete_element("dt:hasDataKey", cascade=True)
    assert report.properties == 5
    assert mini.properties_of("f:robot_power") == {}
    assert dangling_references(mini) == []


def test_delete_unknown(g):
    with pytest.raises(UnknownElement):
        g.delete_element("ghost")


# -- access control ------------------------------------------------------------

def test_acl(g):
    g.add_instance("e", ["f:Robot"])
    assert g.check_access("e", "anyone", Permission.WRITE)
    g.set_acl("e", "alice", Permission.READ)
    assert g.check_access("e", "alice", Permission.READ)
    assert not g.check_access("e", "alice", Permission.WRITE)
    assert not g.check_access("e", "bob", Permission.READ)
    assert g.check_access("e", "root", Permission.WRITE)
    g.set_acl("e", "carol", Permission.WRITE)
    assert g.check_access("e", "carol", Permission.READ)
    g.revoke_acl("e", "alice")
    g.revoke_acl("e", "carol")
    # an emptied entry stays closed rather than reverting to open
    assert not g.check_access("e", "alice", Permission.READ)
    g.clear_acl("e")
    assert g.check_access("e", "alice", Permission.READ)
    with pytest.raises(UnknownElement):
        g.set_acl("ghost", "alice", Permission.READ)


def test_access_denied_error_fields():
    err = AccessDenied("e", "bob", Permission.WRITE)
    assert (err.element_id, err.principal, err.permission) == ("e", "bob", Permission.WRITE)


# -- events, copies, snapshots -------------------------------------------------

def test_listener_and_batch(g):
    seen = []
    g.add_listener(seen.append)
    g.add_instance("a", ["f:Robot"])
    assert seen == ["a"]
    with g.batch():
        g.add_instance("b", ["f:Robot"])
        with g.batch():
            g.add_instance("c", ["f:Robot"])
        assert seen == ["a"]
    assert seen == ["a", "b", "c"]


def test_clone_is_independent(mini):
    c = mini.clone()
    assert c.structure() == mini.structure()
    c.add_instance("f:new", ["f:Robot"])
    c.add_edge("f:line", "dt:hasPart", "f:new")
    assert not mini.is_node("f:new")
    assert mini.objects("f:line", "dt:hasPart") == {"f:robot", "f:belt"}


def test_snapshot_round_trip(mini):
    mini.set_acl("f:robot", "p", Permission.READ)
    again = Graph.from_snapshot(mini.snapshot())
    assert again.snapshot()["acl"] == mini.snapshot()["acl"]
    assert again.structure() == mini.structure()


def test_concurrent_readers_and_writer(mini):
    errors = []

    def reader():
        try:
            for _ in range(200):
                with mini.lock.read():
                    for part in mini.objects("f:line", "dt:hasPart"):
                        assert mini.is_instance(part)
                        assert "f:line" in mini.subjects(part, "dt:hasPart")
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    def writer():
        for i in range(200):
            with mini.lock.write():
                mini.add_instance(f"f:w{i}", ["f:Robot"])
                mini.add_edge("f:line", "dt:hasPart", f"f:w{i}")

    threads = [threading.Thread(target=reader) for _ in range(4)] + [threading.Thread(target=writer)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert len(mini.objects("f:line", "dt:hasPart")) == 202


# -- randomized invariants -----------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_all_instances_matches_materialization(seed):
    rng = random.Random(seed)
    g = random_graph(rng, max_elements=rng.randint(5, 300))
    snap = g.snapshot()
    for c in g.concepts():
        assert g.all_instances(c) == oracle_all_instances(snap, c)
        assert g.all_instances(c) == {i for i in g.instances() if g.is_instance_of(i, c)}


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_mutations_keep_integrity(seed):
    rng = random.Random(seed)
    g = random_graph(rng, max_elements=120)
    for _ in range(100):
        random_mutation(rng, g)
    assert dangling_references(g) == []
    assert index_consistent(g)


def test_non_cascading_delete_is_atomic():
    rng = random.Random(7)
    g = random_graph(rng, max_elements=200)
    failures = 0
    for c in g.concepts():
        before = g.structure()
        try:
            g.delete_element(c, cascade=False)
        except HasDependents:
            failures += 1
            assert g.structure() == before
    assert failures > 0
