"""Simulator data types: locations, objects, agents, tasks, actions and state."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .layout import Cell, RoomGraph

AGENT_NAMES = ("Alice", "Bob", "Charlie", "David", "Eve", "Frank")


# -- locations ---------------------------------------------------------------

@dataclass(frozen=True)
class InRoom:
    room: str
    cell: Cell


@dataclass(frozen=True)
class OnSurface:
    surface: int


@dataclass(frozen=True)
class InContainer:
    container: int


@dataclass(frozen=True)
class Held:
    agent: int
    hand: int


Location = Union[InRoom, OnSurface, InContainer, Held]


def location_to_dict(loc: Optional[Location]) -> Optional[dict]:
    if loc is None:
        return None
    if isinstance(loc, InRoom):
        return {"kind": "room", "room": loc.room, "cell": list(loc.cell)}
    if isinstance(loc, OnSurface):
        return {"kind": "on", "id": loc.surface}
    if isinstance(loc, InContainer):
        return {"kind": "in", "id": loc.container}
    return {"kind": "held", "agent": loc.agent, "hand": loc.hand}


def location_from_dict(d: Optional[dict]) -> Optional[Location]:
    if d is None:
        return None
    kind = d["kind"]
    if kind == "room":
        return InRoom(d["room"], tuple(d["cell"]))
    if kind == "on":
        return OnSurface(d["id"])
    if kind == "in":
        return InContainer(d["id"])
    if kind == "held":
        return Held(d["agent"], d["hand"])
    raise ValueError(f"unknown location kind {kind!r}")


# -- objects, agents, goals --------------------------------------------------

@dataclass(frozen=True)
class ObjectInstance:
    id: int
    cls: str
    location: Location
    is_container: bool = False
    is_surface: bool = False
    is_openable: bool = False
    open: bool = False
    movable: bool = True
    # None means unbounded (fixed receptacles such as a fridge)
    capacity: Optional[int] = None

    @property
    def receives(self) -> bool:
        """True when things can currently be put inside."""
        return self.is_container and (self.open or not self.is_openable)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class": self.cls,
            "location": location_to_dict(self.location),
            "is_container": self.is_container,
            "is_surface": self.is_surface,
            "is_openable": self.is_openable,
            "open": self.open,
            "movable": self.movable,
            "capacity": self.capacity,
        }


@dataclass(frozen=True)
class AgentBody:
    agent_id: int
    name: str
    room: str
    cell: Cell
    hands: tuple[Optional[int], Optional[int]] = (None, None)

    @property
    def held(self) -> list[int]:
        return [h for h in self.hands if h is not None]

    @property
    def free_hand(self) -> Optional[int]:
        for i, h in enumerate(self.hands):
            if h is None:
                return i
        return None

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "name": self.name,
            "room": self.room,
            "cell": list(self.cell),
            "hands": list(self.hands),
        }


@dataclass(frozen=True)
class GoalPredicate:
    relation: str  # "ON" | "IN"
    cls: str
    target: int
    count: int = 1

    def to_dict(self) -> dict:
        return {"relation": self.relation, "class": self.cls, "target": self.target, "count": self.count}


@dataclass(frozen=True)
class Task:
    id: str
    layout: RoomGraph
    objects: tuple[ObjectInstance, ...]
    goal: tuple[GoalPredicate, ...]
    horizon: int = 250
    n_agents: int = 2
    kind: str = "household"  # or "transport"
    title: str = ""

    def names(self) -> dict[int, str]:
        return {o.id: o.cls for o in self.objects}

    def with_agents(self, n_agents: int) -> "Task":
        from dataclasses import replace

        return replace(self, n_agents=n_agents)


# -- actions ------------------------------------------------------------------

ACTION_KINDS = ("walk", "grasp", "open", "close", "put_on", "put_in", "drop", "noop")


@dataclass(frozen=True)
class EnvAction:
    """One environment action.

    `target` is an object id, or a room id for walks; `dest` is the surface or
    container of a put; `hand` is the hand emptied by a drop (whose `target`
    names the object held there).
    """

    kind: str
    target: Union[int, str, None] = None
    dest: Optional[int] = None
    hand: Optional[int] = None

    @classmethod
    def walk(cls, target: Union[int, str]) -> "EnvAction":
        return cls("walk", target)

    @classmethod
    def grasp(cls, obj: int) -> "EnvAction":
        return cls("grasp", obj)

    @classmethod
    def open_(cls, obj: int) -> "EnvAction":
        return cls("open", obj)

    @classmethod
    def close(cls, obj: int) -> "EnvAction":
        return cls("close", obj)

    @classmethod
    def put_on(cls, obj: int, surface: int) -> "EnvAction":
        return cls("put_on", obj, surface)

    @classmethod
    def put_in(cls, obj: int, container: int) -> "EnvAction":
        return cls("put_in", obj, container)

    @classmethod
    def drop(cls, hand: int, obj: int) -> "EnvAction":
        return cls("drop", obj, None, hand)

    @classmethod
    def noop(cls) -> "EnvAction":
        return cls("noop")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "dest": self.dest, "hand": self.hand}

    @classmethod
    def from_dict(cls, d: dict) -> "EnvAction":
        return cls(d["kind"], d.get("target"), d.get("dest"), d.get("hand"))


NOOP = EnvAction.noop()


# -- observations -------------------------------------------------------------

@dataclass(frozen=True)
class VisibleObject:
    id: int
    cls: str
    location: Location
    room: str
    cell: Cell
    is_container: bool = False
    is_surface: bool = False
    is_openable: bool = False
    open: bool = False


@dataclass(frozen=True)
class Observation:
    agent_id: int
    tick: int
    room: str
    cell: Cell
    held: tuple[Optional[int], Optional[int]]
    visible: tuple[VisibleObject, ...]
    progress: tuple[tuple[int, int], ...]
    inbox: tuple = ()
    failure: Optional[str] = None
    # classes of the objects in `held`
    held_cls: tuple[Optional[str], Optional[str]] = (None, None)
    # objects inside this agent's held containers: (id, class, container id)
    carried: tuple[tuple[int, str, int], ...] = ()


# -- full state ---------------------------------------------------------------

@dataclass
class WorldState:
    task: Task
    seed: int
    tick: int
    objects: dict[int, ObjectInstance]
    agents: list[AgentBody]
    # per agent: object id -> last observed location (None once seen to be gone)
    seen: list[dict[int, Optional[Location]]] = field(default_factory=list)
    failures: list[Optional[str]] = field(default_factory=list)

    @property
    def layout(self) -> RoomGraph:
        return self.task.layout

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def clone(self) -> "WorldState":
        return WorldState(
            task=self.task,
            seed=self.seed,
            tick=self.tick,
            objects=dict(self.objects),
            agents=list(self.agents),
            seen=[dict(s) for s in self.seen],
            failures=list(self.failures),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task.id,
            "layout": self.task.layout.id,
            "seed": self.seed,
            "tick": self.tick,
            "objects": [self.objects[k].to_dict() for k in sorted(self.objects)],
            "agents": [a.to_dict() for a in self.agents],
            "seen": [
                [[k, location_to_dict(s[k])] for k in sorted(s)] for s in self.seen
            ],
            "failures": list(self.failures),
        }

    def serialize(self) -> str:
        """Canonical, field-ordered snapshot used for replay equality checks."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
