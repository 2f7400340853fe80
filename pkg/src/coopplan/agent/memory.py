"""Per-agent memory: what the agent has seen, done and heard."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..world.state import AGENT_NAMES, EnvAction, GoalPredicate, Held, InContainer, Location, Observation, OnSurface


@dataclass(frozen=True)
class KnownObject:
    id: int
    cls: str
    location: Optional[Location]  # None once observed to be gone
    room: Optional[str]
    is_container: bool = False
    is_surface: bool = False
    is_openable: bool = False
    open: bool = False

    @property
    def portable_container(self) -> bool:
        return self.is_container and not self.is_openable


@dataclass
class ActionRecord:
    tick: int
    action: EnvAction
    text: str
    succeeded: Optional[bool] = None


@dataclass
class StepResult:
    """What the agent did last macro-step, fed back into `update_memory`."""

    action: Optional[EnvAction] = None
    sent: object = None  # the Message broadcast by this agent, if any


@dataclass
class AgentMemory:
    agent_id: int
    n_agents: int
    goal: tuple[GoalPredicate, ...]
    names: dict[int, str]
    rooms: tuple[str, ...]
    task_kind: str = "household"
    tick: int = 0
    room: str = ""
    cell: tuple[int, int] = (0, 0)
    held: tuple[Optional[int], Optional[int]] = (None, None)
    carried: tuple[tuple[int, str, int], ...] = ()
    action_history: list[ActionRecord] = field(default_factory=list)
    dialogue: list = field(default_factory=list)
    known_objects: dict[int, KnownObject] = field(default_factory=dict)
    progress_view: tuple[tuple[int, int], ...] = ()
    prev_progress: tuple[tuple[int, int], ...] = ()
    first_seen: set[int] = field(default_factory=set)
    newly_discovered: tuple[int, ...] = ()
    explored: list[str] = field(default_factory=list)
    last_failure: Optional[str] = None
    observations: int = 0
    messages_sent: int = 0
    last_comm_tick: Optional[int] = None
    receptions: int = 0

    @property
    def name(self) -> str:
        return AGENT_NAMES[self.agent_id]

    @property
    def team(self) -> list[str]:
        return list(AGENT_NAMES[: self.n_agents])

    @property
    def goal_classes(self) -> set[str]:
        return {p.cls for p in self.goal}


def new_memory(agent_id: int, task, n_agents: Optional[int] = None) -> AgentMemory:
    return AgentMemory(
        agent_id=agent_id,
        n_agents=n_agents or task.n_agents,
        goal=tuple(task.goal),
        names=task.names(),
        rooms=tuple(task.layout.room_ids),
        task_kind=task.kind,
        progress_view=tuple((0, p.count) for p in task.goal),
    )


def update_memory(memory: AgentMemory, obs: Observation, last_result: Optional[StepResult] = None) -> AgentMemory:
    """Fold one observation (and the outcome of the previous action) into memory.

    Updates in place and returns the same object.
    """
    if obs.agent_id != memory.agent_id:
        raise ValueError("observation belongs to another agent")
    memory.tick = obs.tick
    memory.room, memory.cell = obs.room, obs.cell
    memory.held, memory.carried = obs.held, obs.carried
    memory.last_failure = obs.failure
    if last_result is not None and last_result.action is not None and memory.action_history:
        memory.action_history[-1].succeeded = obs.failure is None

    goal_cls = memory.goal_classes
    discovered = []
    visible_ids = set()
    for v in obs.visible:
        visible_ids.add(v.id)
        memory.known_objects[v.id] = KnownObject(
            v.id, v.cls, v.location, v.room, v.is_container, v.is_surface, v.is_openable, v.open,
        )
        if v.cls in goal_cls and v.id not in memory.first_seen:
            memory.first_seen.add(v.id)
            discovered.append(v.id)
    for hand, oid in enumerate(obs.held):
        if oid is not None:
            _mark(memory, oid, obs.held_cls[hand], Held(memory.agent_id, hand), obs.room)
    for oid, cls, cid in obs.carried:
        _mark(memory, oid, cls, InContainer(cid), obs.room)
    # objects we believed to be here but no longer see are marked unknown
    for oid, k in list(memory.known_objects.items()):
        if oid in visible_ids or k.location is None or k.room != obs.room:
            continue
        if oid in obs.held or any(oid == c[0] for c in obs.carried):
            continue
        if isinstance(k.location, Held):
            continue
        if isinstance(k.location, (OnSurface, InContainer)):
            parent = memory.known_objects.get(k.location.container if isinstance(k.location, InContainer)
                                              else k.location.surface)
            if parent is None or parent.id not in visible_ids:
                continue
            if isinstance(k.location, InContainer) and parent.is_openable and not parent.open:
                continue
        memory.known_objects[oid] = KnownObject(
            k.id, k.cls, None, None, k.is_container, k.is_surface, k.is_openable, k.open,
        )
    memory.newly_discovered = tuple(discovered)
    if obs.room not in memory.explored:
        memory.explored.append(obs.room)
    memory.prev_progress = memory.progress_view if memory.observations else obs.progress
    memory.progress_view = obs.progress
    memory.observations += 1

    incoming = list(obs.inbox)
    if last_result is not None and last_result.sent is not None:
        incoming.append(last_result.sent)
    for m in sorted(incoming, key=lambda m: (m.tick, m.sender)):
        memory.dialogue.append(m)
    memory.receptions += len(obs.inbox)
    return memory


def _mark(memory: AgentMemory, oid: int, cls: Optional[str], loc: Location, room: str) -> None:
    prev = memory.known_objects.get(oid)
    if prev is None:
        memory.known_objects[oid] = KnownObject(oid, cls or memory.names.get(oid, "object"), loc, room)
    else:
        memory.known_objects[oid] = KnownObject(
            oid, prev.cls, loc, room, prev.is_container, prev.is_surface, prev.is_openable, prev.open,
        )


def record_action(memory: AgentMemory, action: EnvAction, text: str) -> None:
    memory.action_history.append(ActionRecord(memory.tick, action, text))


def record_sent(memory: AgentMemory, tick: int) -> None:
    memory.messages_sent += 1
    memory.last_comm_tick = tick
