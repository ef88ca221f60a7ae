"""Shared domain types: trainers, cluster state, node events."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable

from .scalability import ScalabilityCurve

NodeId = str


class ObjectiveMetric(enum.Enum):
    THROUGHPUT = "throughput"
    SCALING_EFFICIENCY = "scaling-efficiency"


@dataclass(frozen=True)
class TrainerSpec:
    """An elastic job: size bounds, rescale costs, curve and work total."""

    name: str
    n_min: int
    n_max: int
    r_up_s: float
    r_dw_s: float
    total_samples: float
    curve: ScalabilityCurve
    arrival_s: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise ValueError("trainer name must be non-empty")
        if self.n_min < 1 or self.n_max < 1:
            raise ValueError(f"{self.name}: node bounds must be positive")
        if self.n_min > self.n_max:
            raise ValueError(f"{self.name}: n_min > n_max")
        # every admissible size must lie inside the curve's domain
        if self.n_min < self.curve.min_nodes:
            raise ValueError(f"{self.name}: n_min below first curve grid point")
        if self.n_max > self.curve.max_nodes:
            raise ValueError(f"{self.name}: n_max above last curve grid point")
        if self.r_up_s < 0 or self.r_dw_s < 0:
            raise ValueError(f"{self.name}: rescale costs must be non-negative")
        if not self.total_samples > 0:
            raise ValueError(f"{self.name}: total_samples must be positive")
        if self.arrival_s < 0:
            raise ValueError(f"{self.name}: arrival_s must be non-negative")

    def admissible(self, n: int) -> bool:
        return n == 0 or self.n_min <= n <= self.n_max

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "r_up_s": self.r_up_s,
            "r_dw_s": self.r_dw_s,
            "total_samples": self.total_samples,
            "curve": self.curve.to_pairs(),
            "arrival_s": self.arrival_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerSpec":
        expected = {"name", "n_min", "n_max", "r_up_s", "r_dw_s",
                    "total_samples", "curve", "arrival_s"}
        missing = expected - d.keys()
        extra = d.keys() - expected
        if missing or extra:
            raise ValueError(
                f"trainer fields mismatch: missing={sorted(missing)} extra={sorted(extra)}"
            )
        return cls(
            name=str(d["name"]),
            n_min=int(d["n_min"]),
            n_max=int(d["n_max"]),
            r_up_s=float(d["r_up_s"]),
            r_dw_s=float(d["r_dw_s"]),
            total_samples=float(d["total_samples"]),
            curve=ScalabilityCurve.from_pairs(d["curve"]),
            arrival_s=float(d["arrival_s"]),
        )


@dataclass(frozen=True)
class JobSlot:
    """A running trainer and the nodes it currently holds."""

    spec: TrainerSpec
    nodes: frozenset[NodeId] = frozenset()

    @property
    def count(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class ClusterState:
    """Idle-node pool and the jobs (arrival order) currently mapped onto it.

    ``idle_nodes`` is the whole harvestable pool, including nodes already
    held by jobs.
    """

    idle_nodes: frozenset[NodeId]
    jobs: tuple[JobSlot, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "idle_nodes", frozenset(self.idle_nodes))
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if any(not n for n in self.idle_nodes):
            raise ValueError("node ids must be non-empty")
        names = [j.spec.name for j in self.jobs]
        if len(set(names)) != len(names):
            raise ValueError("job names must be unique within a state")
        for j in self.jobs:
            stray = j.nodes - self.idle_nodes
            if stray:
                raise ValueError(f"{j.spec.name} holds nodes outside the pool: {sorted(stray)}")

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(j.count for j in self.jobs)

    @property
    def n_nodes(self) -> int:
        return len(self.idle_nodes)

    def free_nodes(self) -> frozenset[NodeId]:
        held = frozenset().union(*(j.nodes for j in self.jobs)) if self.jobs else frozenset()
        return self.idle_nodes - held

    def with_assignment(self, assignment: dict[str, Iterable[NodeId]]) -> "ClusterState":
        return ClusterState(
            self.idle_nodes,
            tuple(JobSlot(j.spec, frozenset(assignment[j.spec.name])) for j in self.jobs),
        )


@dataclass(frozen=True)
class Event:
    t_s: float
    joins: tuple[NodeId, ...] = ()
    leaves: tuple[NodeId, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "joins", tuple(self.joins))
        object.__setattr__(self, "leaves", tuple(self.leaves))
        if self.t_s < 0:
            raise ValueError("event time must be non-negative")
        if not self.joins and not self.leaves:
            raise ValueError("an event needs at least one join or leave")
        if set(self.joins) & set(self.leaves):
            raise ValueError("a node cannot join and leave in the same event")


@dataclass(frozen=True)
class Fragment:
    node: NodeId
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValueError("fragment must have positive length")

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


def validate_state(state: ClusterState) -> list[str]:
    """Return the list of constraint violations; empty means ok."""
    violations = []
    owner: dict[NodeId, str] = {}
    for job in state.jobs:
        for n in sorted(job.nodes):
            if n in owner:
                violations.append(
                    f"node double-assigned: {n} held by {owner[n]} and {job.spec.name}"
                )
            else:
                owner[n] = job.spec.name
    for job in state.jobs:
        c, spec = job.count, job.spec
        if 0 < c < spec.n_min:
            violations.append(f"count below minimum: {spec.name} holds {c} < {spec.n_min}")
        elif c > spec.n_max:
            violations.append(f"count above maximum: {spec.name} holds {c} > {spec.n_max}")
    return violations


# -- serialization -----------------------------------------------------------

def load_trainers(path) -> list[TrainerSpec]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("trainer file must hold a JSON array")
    return [TrainerSpec.from_dict(d) for d in data]


def dump_trainers(trainers: Iterable[TrainerSpec], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([t.to_dict() for t in trainers], fh, indent=1)
        fh.write("\n")


def state_to_dict(state: ClusterState) -> dict:
    return {
        "idle_nodes": sorted(state.idle_nodes),
        "jobs": [
            {"trainer": j.spec.to_dict(), "nodes": sorted(j.nodes)} for j in state.jobs
        ],
    }


def state_from_dict(d: dict) -> ClusterState:
    return ClusterState(
        frozenset(d["idle_nodes"]),
        tuple(
            JobSlot(TrainerSpec.from_dict(j["trainer"]), frozenset(j["nodes"]))
            for j in d["jobs"]
        ),
    )


def serialize_state(state: ClusterState) -> str:
    return json.dumps(state_to_dict(state), sort_keys=True)


def parse_state(text: str) -> ClusterState:
    return state_from_dict(json.loads(text))


__all__ = [
    "NodeId", "ObjectiveMetric", "TrainerSpec", "JobSlot", "ClusterState",
    "Event", "Fragment", "validate_state", "load_trainers", "dump_trainers",
    "serialize_state", "parse_state", "state_to_dict", "state_from_dict",
]
