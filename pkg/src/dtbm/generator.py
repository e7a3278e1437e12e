"""Digital Twin Benchmark Model generator.

Builds the ``dt:`` core ontology and the ``f:`` factory taxonomy, then a
seeded Industry 4.0 production site: one factory, production lines nested
1-3 levels deep, robots made of joint/arm segments, belts chaining the robots
of each line, and the data series, handbooks and work orders attached to all
of them.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, GraphError
from .rdf import triple_count

# Calibrated with `dtbm calibrate` (scale 2, seed 0) against 35,702 nodes.
DEFAULT_ROBOTS_PER_SCALE_UNIT = 896

REFERENCE_SIZES = {
    2: {"triples": 114_177, "nodes": 35_702, "edges": 41_698, "props": 35_601},
    5: {"triples": 283_785, "nodes": 88_895, "edges": 103_874, "props": 88_713},
    10: {"triples": 570_232, "nodes": 178_118, "edges": 208_224, "props": 177_801},
    20: {"triples": 1_136_634, "nodes": 356_087, "edges": 416_285, "props": 355_500},
    50: {"triples": 2_844_499, "nodes": 890_624, "edges": 1_041_300, "props": 889_227},
    100: {"triples": 5_693_601, "nodes": 1_781_866, "edges": 2_083_488, "props": 1_779_119},
}

CORE_CONCEPTS = [
    ("dt:Location", []),
    ("dt:Asset", []),
    ("dt:Data", []),
    ("dt:Function", []),
    ("dt:Data_Series", ["dt:Data"]),
    ("dt:Data_Series_Numeric", ["dt:Data_Series"]),
    ("dt:Data_Series_Categoric", ["dt:Data_Series"]),
    ("dt:Data_File", ["dt:Data"]),
    ("dt:Json", ["dt:Data"]),
]

DOMAIN_CONCEPTS = [
    ("f:Factory", ["dt:Location"]),
    ("f:Line", ["dt:Location"]),
    ("f:Robot", ["dt:Asset"]),
    ("f:Joint", ["dt:Asset"]),
    ("f:Arm", ["dt:Asset"]),
    ("f:Belt", ["dt:Asset"]),
    ("f:Data_Weather", ["dt:Data_Series_Numeric"]),
    ("f:Data_Power", ["dt:Data_Series_Numeric"]),
    ("f:Data_Power_Pred", ["dt:Data_Series_Numeric"]),
    ("f:Data_Angle", ["dt:Data_Series_Numeric"]),
    ("f:Data_Position", ["dt:Data_Series_Numeric"]),
    ("f:Data_State", ["dt:Data_Series_Categoric"]),
    ("f:Data_Handbook", ["dt:Data_File"]),
    ("f:Data_Workorder", ["dt:Json"]),
]

PREDICATES = [
    ("dt:hasPart", True),
    ("dt:hasSeries", False),
    ("dt:connectsTo", True),
    ("dt:hasInputData", False),
    ("dt:hasOutputData", False),
]

# Every data-key property is a sub-key of dt:hasDataKey, so one query pattern
# on dt:hasDataKey reaches series, file and document keys alike.
PROPERTY_TYPES = [
    ("dt:assetId", None),
    ("dt:hasDataKey", None),
    ("dt:hasDataKeySeries", "dt:hasDataKey"),
    ("dt:hasDataKeyFile", "dt:hasDataKey"),
]

# data concept -> (property key, resolver kind)
DATA_KEYS = {
    "f:Data_Weather": ("dt:hasDataKeySeries", "timeseries"),
    "f:Data_Power": ("dt:hasDataKeySeries", "timeseries"),
    "f:Data_State": ("dt:hasDataKeySeries", "timeseries"),
    "f:Data_Angle": ("dt:hasDataKeySeries", "timeseries"),
    "f:Data_Position": ("dt:hasDataKeySeries", "timeseries"),
    "f:Data_Handbook": ("dt:hasDataKeyFile", "file"),
    "f:Data_Workorder": ("dt:hasDataKey", "document"),
}


class GraphNotEmpty(GraphError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    scale: int = 1
    seed: int = 0
    robots_per_scale_unit: int = DEFAULT_ROBOTS_PER_SCALE_UNIT
    line_depth_range: tuple = (1, 3)
    joints_per_robot_range: tuple = (2, 4)
    robot_type_count: int = 5
    robots_per_line: int = 10

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.robots_per_scale_unit < 1 or self.robots_per_line < 1:
            raise ValueError("robot counts must be positive")
        if self.robot_type_count < 1:
            raise ValueError("robot_type_count must be >= 1")
        if not -(2 ** 63) <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        for name in ("line_depth_range", "joints_per_robot_range"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name} must satisfy 1 <= lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (int(lo), int(hi)))

    @property
    def robots(self) -> int:
        return self.scale * self.robots_per_scale_unit


@dataclass(frozen=True)
class DatasetStats:
    triples: int = 0
    nodes: int = 0
    edges: int = 0
    props: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    def ratios(self) -> dict:
        n = max(1, self.nodes)
        return {"edges/nodes": self.edges / n, "props/nodes": self.props / n}


def robot_type(i: int) -> str:
    return f"f:Robot_Type{i}"


def data_key(element_id: str, kind: str) -> str:
    path = element_id.split(":", 1)[1] if ":" in element_id else element_id
    return f"key://{kind}/{path}"


def build_ontology(graph: Graph, robot_type_count: int = 5):
    with graph.lock.write():
        if graph._concepts or graph._types or graph._predicates or graph._ptypes:
            raise GraphNotEmpty(None, "build_ontology needs an empty graph")
        for cid, parents in CORE_CONCEPTS + DOMAIN_CONCEPTS:
            graph.add_concept(cid, parents)
        for i in range(1, robot_type_count + 1):
            graph.add_concept(robot_type(i), ["f:Robot"])
        for pid, transitive in PREDICATES:
            graph.add_predicate(pid, transitive)
        for key, parent in PROPERTY_TYPES:
            graph.add_property_type(key, parent)


class _Builder:
    def __init__(self, graph):
        self.g = graph

    def asset(self, id, concept, parent=None):
        self.g.add_instance(id, (concept,))
        self.g.set_property(id, "dt:assetId", id.split(":", 1)[1])
        if parent is not None:
            self.g.add_edge(parent, "dt:hasPart", id)

    def data(self, owner, suffix, concept):
        id = f"{owner}_{suffix}"
        key, kind = DATA_KEYS[concept]
        self.g.add_instance(id, (concept,))
        self.g.set_property(id, key, data_key(id, kind))
        self.g.add_edge(owner, "dt:hasSeries", id)
        return id


def line_layout(config: GeneratorConfig) -> list:
    """Robot count per production line."""
    total = config.robots
    n_lines = math.ceil(total / config.robots_per_line)
    sizes = [config.robots_per_line] * n_lines
    sizes[-1] = total - config.robots_per_line * (n_lines - 1)
    return sizes


def generate(config: GeneratorConfig, graph: Graph) -> DatasetStats:
    """Populate an ontology-bearing graph with one seeded factory; returns its stats."""
    rng = np.random.default_rng(config.seed)
    sizes = line_layout(config)
    d_lo, d_hi = config.line_depth_range
    j_lo, j_hi = config.joints_per_robot_range
    depths = rng.integers(d_lo, d_hi + 1, size=len(sizes))
    types = rng.integers(1, config.robot_type_count + 1, size=config.robots)
    joints = rng.integers(j_lo, j_hi + 1, size=config.robots)

    with graph.lock.write():
        for i in range(1, config.robot_type_count + 1):
            if not graph.is_concept(robot_type(i)):
                raise GraphError(robot_type(i), "ontology lacks robot type variants; build it first")
        b = _Builder(graph)
        factory = "f:factory1"
        b.asset(factory, "f:Factory")
        b.data(factory, "weather", "f:Data_Weather")

        r = 0
        for li, n_robots in enumerate(sizes):
            line = f"{factory}_line_{li + 1}"
            b.asset(line, "f:Line", factory)
            host = line
            for level in range(2, int(depths[li]) + 1):
                sub = f"{line}_level{level}"
                b.asset(sub, "f:Line", host)
                host = sub
            prev = None
            for j in range(1, n_robots + 1):
                robot = f"{line}_robot_{j}"
                b.asset(robot, robot_type(int(types[r])), host)
                b.data(robot, "handbook", "f:Data_Handbook")
                b.data(robot, "workorder", "f:Data_Workorder")
                b.data(robot, "power", "f:Data_Power")
                b.data(robot, "state", "f:Data_State")
                arm_prev = None
                for k in range(1, int(joints[r]) + 1):
                    joint = f"{robot}_joint_{k}"
                    arm = f"{robot}_arm_{k}"
                    b.asset(joint, "f:Joint", robot)
                    b.asset(arm, "f:Arm", robot)
                    b.data(joint, "angle", "f:Data_Angle")
                    b.data(arm, "position", "f:Data_Position")
                    # kinematic chain: each arm segment carries the next joint
                    if arm_prev is not None:
                        graph.add_edge(arm_prev, "dt:connectsTo", joint)
                    arm_prev = arm
                if prev is not None:
                    belt = f"{line}_belt_{j - 1}"
                    b.asset(belt, "f:Belt", host)
                    b.data(belt, "power", "f:Data_Power")
                    b.data(belt, "state", "f:Data_State")
                    graph.add_edge(prev, "dt:connectsTo", belt)
                    graph.add_edge(belt, "dt:connectsTo", robot)
                prev = robot
                r += 1
    return stats(graph)


def stats(graph: Graph) -> DatasetStats:
    with graph.lock.read():
        c = graph.counts()
        return DatasetStats(
            triples=triple_count(graph),
            nodes=c["concepts"] + c["instances"],
            edges=c["edges"],
            props=c["properties"],
        )


def build(config: GeneratorConfig) -> Graph:
    """Fresh graph holding the ontology plus one generated factory."""
    g = Graph()
    build_ontology(g, config.robot_type_count)
    generate(config, g)
    return g


def relative_errors(actual: DatasetStats, target: dict) -> dict:
    """Relative error per statistic against a Table-1 style target row."""
    got = actual.to_json()
    return {k: (got[k] - v) / v for k, v in target.items()}


def calibrate(target_nodes: int = REFERENCE_SIZES[2]["nodes"], scale: int = 2, seed: int = 0,
              lo: int = 1, hi: int = 4096, log=None) -> int:
    """Binary-search robots_per_scale_unit so the generated node count brackets the target.

    Returns the constant whose node count is closest to ``target_nodes``.
    """
    def nodes(k):
        t0 = time.perf_counter()
        n = build(GeneratorConfig(scale=scale, seed=seed, robots_per_scale_unit=k)).counts()
        total = n["concepts"] + n["instances"]
        if log:
            log(f"robots_per_scale_unit={k}: nodes={total} ({time.perf_counter() - t0:.1f}s)")
        return total

    cache = {}

    def f(k):
        if k not in cache:
            cache[k] = nodes(k)
        return cache[k]

    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if f(mid) < target_nodes:
            lo = mid
        else:
            hi = mid
    return min((lo, hi), key=lambda k: abs(f(k) - target_nodes))
