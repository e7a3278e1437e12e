import random

import pytest
from hypothesis import given, settings, strategies as st

from dtbm.graph import Graph, UnknownConcept, UnknownElement, DuplicateId
from dtbm.query import parse_query
from dtbm.reasoner import (
    CascadeDepthExceeded,
    Direction,
    EventRule,
    Reasoner,
    TransitiveQueryPlan,
    reach,
    reaches,
    transitive_reach,
    type_closure,
)

from oracles import fixpoint_reach, materialized_types, random_graph

PREDICTION_RULE = {
    "kind": "insert",
    "where": [
        ["?asset", "dt:hasSeries", "?input"],
        ["?asset", "rdf:type", "dt:Asset"],
        ["?loc", "dt:hasPart+", "?asset"],
        ["?loc", "rdf:type", "dt:Location"],
        ["?loc", "dt:hasSeries", "?weather"],
        ["?weather", "rdf:type", "f:Data_Weather"],
    ],
    "bind": [
        {"as": "?newout", "iri_concat": ["?asset", "_Pred"]},
        {"as": "?newfunc", "iri_concat": ["?asset", "_Func"]},
    ],
    "template": [
        ["?newfunc", "rdf:type", "dt:Function"],
        ["?newfunc", "dt:hasInputData", "?weather"],
        ["?newfunc", "dt:hasInputData", "?input"],
        ["?newfunc", "dt:hasOutputData", "?newout"],
        ["?newout", "rdf:type", "f:Data_Power_Pred"],
        ["?newout", "dt:hasDataKeySeries", {"lit": "TBD"}],
    ],
}


def prediction_rule(rule_id="predict", trigger="f:Data_Power"):
    return EventRule(rule_id, trigger, parse_query(PREDICTION_RULE), "?input")


def add_robot(g, rid, line="f:line"):
    with g.batch():
        g.add_instance(rid, ["f:Robot_Type2"])
        g.add_instance(f"{rid}_power", ["f:Data_Power"])
        g.add_edge(line, "dt:hasPart", rid)
        g.add_edge(rid, "dt:hasSeries", f"{rid}_power")


# -- transitive reach ----------------------------------------------------------

def test_reach_on_mini(mini):
    assert reach(mini, "f:fac", "dt:hasPart") == {
        "f:line", "f:robot", "f:belt", "f:robot_joint_1", "f:robot_joint_2"}
    assert reach(mini, "f:robot_joint_1", "dt:hasPart", forward=False) == {"f:robot", "f:line", "f:fac"}
    assert reach(mini, "f:fac", "dt:hasPart", max_hops=1) == {"f:line"}
    assert reaches(mini, "f:fac", "dt:hasPart", "f:robot_joint_2")
    assert not reaches(mini, "f:robot", "dt:hasPart", "f:belt")


def test_reach_respects_visibility(mini):
    hidden = {"f:robot"}
    got = reach(mini, "f:fac", "dt:hasPart", visible=lambda n: n not in hidden)
    # hidden nodes are not walked through either
    assert got == {"f:line", "f:belt"}


def test_reach_terminates_on_cycles():
    g = Graph()
    g.add_predicate("e:next", transitive=True)
    g.add_concept("C")
    for n in "abc":
        g.add_instance(n, ["C"])
    g.add_edge("a", "e:next", "b")
    g.add_edge("b", "e:next", "c")
    g.add_edge("c", "e:next", "a")
    assert reach(g, "a", "e:next") == {"a", "b", "c"}
    assert reaches(g, "a", "e:next", "a")


def test_transitive_reach_plan(mini):
    plan = TransitiveQueryPlan({"f:robot_joint_1", "f:belt"}, "dt:hasPart", Direction.REVERSE)
    assert transitive_reach(mini, plan) == {"f:robot", "f:line", "f:fac"}
    with pytest.raises(UnknownElement):
        transitive_reach(mini, TransitiveQueryPlan({"ghost"}, "dt:hasPart"))
    with pytest.raises(UnknownElement):
        transitive_reach(mini, TransitiveQueryPlan({"f:fac"}, "dt:owns"))
    with pytest.raises(ValueError):
        TransitiveQueryPlan({"f:fac"}, "dt:hasPart", max_hops=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_reach_matches_fixpoint(seed):
    rng = random.Random(seed)
    g = random_graph(rng, max_elements=rng.randint(5, 120))
    snap = g.snapshot()
    for pred in ("e:part", "e:next"):
        pairs = {(e["subject"], e["object"]) for e in snap["edges"] if e["predicate"] == pred}
        for node in g.instances()[:15]:
            assert reach(g, node, pred) == fixpoint_reach(pairs, node)
            assert reach(g, node, pred, forward=False) == fixpoint_reach(pairs, node, forward=False)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_type_closure_matches_materialization(seed):
    g = random_graph(random.Random(seed), max_elements=150)
    expected = materialized_types(g.snapshot())
    got = {(i, c) for i in g.instances() for c in type_closure(g, i)}
    assert got == expected


def test_type_closure_follows_taxonomy_edits(mini):
    assert "dt:Asset" in type_closure(mini, "f:robot")
    mini.add_concept("f:Maintained", [])
    mini.add_parent("f:Robot", "f:Maintained")
    assert "f:Maintained" in type_closure(mini, "f:robot")
    mini.delete_element("f:Maintained", cascade=True)
    assert "f:Maintained" not in type_closure(mini, "f:belt")


# -- event rules ---------------------------------------------------------------

def test_no_rules_no_firings(mini):
    r = Reasoner(mini)
    mini.add_instance("f:x", ["f:Robot"])
    assert r.firings == []
    assert r.on_instance_added("f:x") == []


def test_prediction_rule_creates_function_for_new_robot_only(mini):
    r = Reasoner(mini)
    r.register_event_rule(prediction_rule())
    add_robot(mini, "f:robot9")
    assert [(f.rule_id, f.instance, f.ok) for f in r.firings] == [("predict", "f:robot9_power", True)]
    assert mini.is_instance_of("f:robot9_Func", "dt:Function")
    assert mini.objects("f:robot9_Func", "dt:hasInputData") == {"f:robot9_power", "f:fac_weather"}
    assert mini.get_property("f:robot9_Pred", "dt:hasDataKeySeries") == "TBD"
    assert mini.all_instances("dt:Function") == {"f:robot9_Func"}


def test_trigger_is_subsumption_aware(mini):
    r = Reasoner(mini)
    r.register_event_rule(prediction_rule(trigger="dt:Data"))
    add_robot(mini, "f:robot9")
    # the rule's own output is dt:Data as well, so it fires again (matching nothing)
    assert [(f.instance, f.depth) for f in r.firings] == [("f:robot9_power", 0), ("f:robot9_Pred", 1)]
    assert r.firings[1].report.solutions == 0


def test_firing_order_and_exactly_once(mini):
    r = Reasoner(mini)
    r.register_event_rule(prediction_rule("b"))
    r.register_event_rule(prediction_rule("a"))
    add_robot(mini, "f:robot9")
    assert [f.rule_id for f in r.firings] == ["b", "a"]
    with pytest.raises(DuplicateId):
        mini.add_instance("f:robot9_power", ["f:Data_Power"])
    assert len(r.firings) == 2


def test_disable_rule_keeps_past_effects(mini):
    r = Reasoner(mini)
    r.register_event_rule(prediction_rule())
    add_robot(mini, "f:robot8")
    r.set_enabled("predict", False)
    add_robot(mini, "f:robot9")
    assert mini.is_instance("f:robot8_Func")
    assert not mini.is_node("f:robot9_Func")


def test_register_validation(mini):
    r = Reasoner(mini)
    with pytest.raises(UnknownConcept):
        r.register_event_rule(prediction_rule(trigger="f:Nope"))
    select = parse_query({"kind": "select", "where": [["?x", "rdf:type", "dt:Asset"]]})
    with pytest.raises(ValueError):
        r.register_event_rule(EventRule("s", "dt:Asset", select, "?x"))
    with pytest.raises(ValueError):
        r.register_event_rule(EventRule("v", "f:Data_Power", parse_query(PREDICTION_RULE), "?zz"))
    r.register_event_rule(prediction_rule())
    with pytest.raises(ValueError):
        r.register_event_rule(prediction_rule())


def test_failing_action_is_recorded_not_raised(mini):
    r = Reasoner(mini)
    broken = parse_query({
        "kind": "insert",
        "where": [["?x", "rdf:type", "f:Data_Power"]],
        "template": [["?x", "dt:noSuchPredicate", "?x"]],
    })
    r.register_event_rule(EventRule("broken", "f:Data_Power", broken, "?x"))
    r.register_event_rule(prediction_rule())
    add_robot(mini, "f:robot9")
    assert mini.is_instance("f:robot9")
    assert [f.ok for f in r.firings] == [False, True]
    assert r.firings[0].error is not None


def test_cascade_depth_limit():
    g = Graph()
    g.add_concept("C")
    g.add_instance("seed", ["C"])
    r = Reasoner(g, cascade_limit=5)
    grow = parse_query({
        "kind": "insert",
        "where": [["?x", "rdf:type", "C"]],
        "bind": [{"as": "?y", "iri_concat": ["?x", "+"]}],
        "template": [["?y", "rdf:type", "C"]],
    })
    r.register_event_rule(EventRule("grow", "C", grow, "?x"))
    with pytest.raises(CascadeDepthExceeded) as err:
        g.add_instance("x", ["C"])
    assert err.value.limit == 5
    assert len(err.value.firings) == 5
    assert g.is_instance("x+++++")


def test_rule_is_a_dependent_of_its_trigger(mini):
    r = Reasoner(mini)
    r.register_event_rule(prediction_rule(trigger="f:Data_Weather"))
    mini.delete_element("f:fac_weather", cascade=True)
    with pytest.raises(Exception) as err:
        mini.delete_element("f:Data_Weather")
    assert "rule:predict" in err.value.dependents
    mini.delete_element("f:Data_Weather", cascade=True)
    assert r.rules == {}
