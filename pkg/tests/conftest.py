import pytest

from dtbm.generator import GeneratorConfig, build, build_ontology
from dtbm.graph import Graph


@pytest.fixture(scope="session")
def s1():
    """Seeded scale-1 DTBM graph. Shared: tests must clone before mutating."""
    return build(GeneratorConfig(scale=1, seed=42))


@pytest.fixture
def s1_copy(s1):
    return s1.clone()


@pytest.fixture
def mini():
    """Hand-built factory: one line holding a robot (two joints) and a belt."""
    g = Graph()
    build_ontology(g)
    g.add_instance("f:fac", ["f:Factory"])
    g.add_instance("f:fac_weather", ["f:Data_Weather"])
    g.add_instance("f:line", ["f:Line"])
    g.add_instance("f:robot", ["f:Robot_Type1"])
    g.add_instance("f:robot_power", ["f:Data_Power"])
    g.add_instance("f:belt", ["f:Belt"])
    g.add_instance("f:belt_power", ["f:Data_Power"])
    for k in (1, 2):
        g.add_instance(f"f:robot_joint_{k}", ["f:Joint"])
        g.add_instance(f"f:robot_joint_{k}_angle", ["f:Data_Angle"])
        g.add_edge("f:robot", "dt:hasPart", f"f:robot_joint_{k}")
        g.add_edge(f"f:robot_joint_{k}", "dt:hasSeries", f"f:robot_joint_{k}_angle")
        g.set_property(f"f:robot_joint_{k}_angle", "dt:hasDataKeySeries", f"key://timeseries/robot_joint_{k}_angle")
    g.add_edge("f:fac", "dt:hasPart", "f:line")
    g.add_edge("f:fac", "dt:hasSeries", "f:fac_weather")
    g.add_edge("f:line", "dt:hasPart", "f:robot")
    g.add_edge("f:line", "dt:hasPart", "f:belt")
    g.add_edge("f:robot", "dt:hasSeries", "f:robot_power")
    g.add_edge("f:belt", "dt:hasSeries", "f:belt_power")
    g.add_edge("f:robot", "dt:connectsTo", "f:belt")
    g.set_property("f:fac_weather", "dt:hasDataKeySeries", "key://timeseries/fac_weather")
    g.set_property("f:robot_power", "dt:hasDataKeySeries", "key://timeseries/robot_power")
    g.set_property("f:belt_power", "dt:hasDataKeySeries", "key://timeseries/belt_power")
    return g
