"""Deterministic symbolic household simulator.

All operations are pure functions of their inputs: `step` returns a fresh
`WorldState` and never mutates the one it was given.
"""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Callable, Collection, Optional, Sequence

from .layout import InvalidLayout, Node, distances_from, nearest
from .state import (
    AGENT_NAMES,
    AgentBody,
    EnvAction,
    GoalPredicate,
    Held,
    InContainer,
    InRoom,
    Location,
    Observation,
    OnSurface,
    Task,
    VisibleObject,
    WorldState,
)

MANIPULATION_COST = 1


class InvalidTask(ValueError):
    pass


class MalformedJointAction(ValueError):
    pass


class UnreachableTarget(RuntimeError):
    pass


# -- geometry and containment -------------------------------------------------

def parent_of(loc: Location) -> Optional[int]:
    if isinstance(loc, OnSurface):
        return loc.surface
    if isinstance(loc, InContainer):
        return loc.container
    return None


def position(state: WorldState, oid: int) -> Node:
    """(room, cell) where an object physically is, following its location chain."""
    loc = state.objects[oid].location
    for _ in range(len(state.objects) + 1):
        if isinstance(loc, InRoom):
            return loc.room, loc.cell
        if isinstance(loc, Held):
            body = state.agents[loc.agent]
            return body.room, body.cell
        loc = state.objects[parent_of(loc)].location
    raise InvalidTask(f"cyclic location chain at object {oid}")


def carrier(state: WorldState, oid: int) -> Optional[int]:
    """Agent holding the object directly or through a held container."""
    loc = state.objects[oid].location
    while True:
        if isinstance(loc, Held):
            return loc.agent
        p = parent_of(loc)
        if p is None:
            return None
        loc = state.objects[p].location


def hidden(state: WorldState, oid: int) -> bool:
    """Inside some closed openable container."""
    loc = state.objects[oid].location
    while True:
        p = parent_of(loc)
        if p is None:
            return False
        parent = state.objects[p]
        if isinstance(loc, InContainer) and parent.is_openable and not parent.open:
            return True
        loc = parent.location


def approach_cells(state: WorldState, node: Node) -> list[Node]:
    """Walkable cells from which something at `node` is within reach."""
    room_id, (x, y) = node
    room = state.layout.room(room_id)
    cand = [(x, y), (x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)]
    return [(room_id, c) for c in cand if room.walkable(c)]


def walk_goal(state: WorldState, target) -> list[Node]:
    if isinstance(target, str):
        return [(target, state.layout.room(target).anchor)]
    return approach_cells(state, position(state, target))


def is_near(state: WorldState, agent: int, oid: int) -> bool:
    body = state.agents[agent]
    return (body.room, body.cell) in approach_cells(state, position(state, oid))


def visible_ids(state: WorldState, agent: int) -> list[int]:
    body = state.agents[agent]
    out = []
    for oid in sorted(state.objects):
        if carrier(state, oid) == agent:
            continue
        if position(state, oid)[0] == body.room and not hidden(state, oid):
            out.append(oid)
    return out


def contents(state: WorldState, cid: int) -> list[int]:
    return sorted(
        o.id for o in state.objects.values()
        if isinstance(o.location, InContainer) and o.location.container == cid
    )


# -- goal accounting ----------------------------------------------------------

def satisfies(loc_of: Callable[[int], Optional[Location]], oid: int, pred: GoalPredicate) -> bool:
    """Whether an object counts towards ON/IN(pred.cls, pred.target).

    An object counts when some link of its location chain puts it on (or in)
    the target, e.g. fruit in a basket that stands on the bed counts as ON bed.
    Held objects never count.
    """
    loc = loc_of(oid)
    for _ in range(64):
        if loc is None or isinstance(loc, (InRoom, Held)):
            return False
        if pred.relation == "ON" and isinstance(loc, OnSurface) and loc.surface == pred.target:
            return True
        if pred.relation == "IN" and isinstance(loc, InContainer) and loc.container == pred.target:
            return True
        loc = loc_of(parent_of(loc))
    return False


def satisfied_counts(classes: dict[int, str], loc_of, goal: Sequence[GoalPredicate]) -> list[int]:
    counts = []
    for pred in goal:
        n = sum(1 for oid, c in classes.items() if c == pred.cls and satisfies(loc_of, oid, pred))
        counts.append(n)
    return counts


def goal_progress(state: WorldState, goal: Sequence[GoalPredicate]) -> float:
    if not goal:
        raise ValueError("goal must be nonempty")
    classes = {oid: o.cls for oid, o in state.objects.items()}
    counts = satisfied_counts(classes, lambda i: state.objects[i].location, goal)
    total = sum(p.count for p in goal)
    return sum(min(n, p.count) for n, p in zip(counts, goal)) / total


def delivered(state: WorldState) -> tuple[int, int]:
    """(satisfied goal instances, total goal instances) for the task goal."""
    goal = state.task.goal
    classes = {oid: o.cls for oid, o in state.objects.items()}
    counts = satisfied_counts(classes, lambda i: state.objects[i].location, goal)
    return sum(min(n, p.count) for n, p in zip(counts, goal)), sum(p.count for p in goal)


# -- task validation and reset -------------------------------------------------

def validate_task(task: Task) -> None:
    try:
        task.layout.validate()
    except InvalidLayout as exc:
        raise InvalidTask(str(exc)) from exc
    if task.horizon <= 0:
        raise InvalidTask("horizon must be positive")
    if task.n_agents < 1 or task.n_agents > len(AGENT_NAMES):
        raise InvalidTask(f"n_agents must be in [1, {len(AGENT_NAMES)}]")
    objs = {o.id: o for o in task.objects}
    if len(objs) != len(task.objects):
        raise InvalidTask("duplicate object ids")
    for o in task.objects:
        loc = o.location
        if isinstance(loc, Held):
            raise InvalidTask(f"object {o.id} cannot start held")
        if isinstance(loc, InRoom):
            if loc.room not in task.layout.room_ids or not task.layout.room(loc.room).walkable(loc.cell):
                raise InvalidTask(f"object {o.id} placed on a non-walkable cell")
        else:
            p = objs.get(parent_of(loc))
            if p is None:
                raise InvalidTask(f"object {o.id} references a missing parent")
            if isinstance(loc, OnSurface) and not p.is_surface:
                raise InvalidTask(f"object {o.id} placed on non-surface {p.id}")
            if isinstance(loc, InContainer) and not p.is_container:
                raise InvalidTask(f"object {o.id} placed in non-container {p.id}")
    # acyclic chains
    for o in task.objects:
        seen, loc = {o.id}, o.location
        while (p := parent_of(loc)) is not None:
            if p in seen:
                raise InvalidTask(f"cyclic location chain through {p}")
            seen.add(p)
            loc = objs[p].location
    for c in task.objects:
        if c.capacity is not None:
            inside = [o for o in task.objects if o.location == InContainer(c.id) and not o.is_container]
            if len(inside) > c.capacity:
                raise InvalidTask(f"container {c.id} over capacity")
    if not task.goal:
        raise InvalidTask("goal must be nonempty")
    for pred in task.goal:
        if pred.relation not in ("ON", "IN") or pred.count < 1:
            raise InvalidTask(f"bad predicate {pred}")
        target = objs.get(pred.target)
        if target is None:
            raise InvalidTask(f"goal target {pred.target} does not exist")
        if pred.relation == "ON" and not target.is_surface:
            raise InvalidTask(f"ON target {pred.target} is not a surface")
        if pred.relation == "IN" and not target.is_container:
            raise InvalidTask(f"IN target {pred.target} is not a container")
        have = sum(1 for o in task.objects if o.cls == pred.cls)
        if have < pred.count:
            raise InvalidTask(f"goal needs {pred.count} {pred.cls!r} but only {have} exist")


def reset(task: Task, seed: int) -> tuple[WorldState, list[Observation]]:
    validate_task(task)
    rng = random.Random(seed)
    nodes = task.layout.nodes()
    agents = []
    for i in range(task.n_agents):
        room, cell = rng.choice(nodes)
        agents.append(AgentBody(i, AGENT_NAMES[i], room, cell))
    state = WorldState(
        task=task,
        seed=seed,
        tick=0,
        objects={o.id: o for o in task.objects},
        agents=agents,
        seen=[{} for _ in agents],
        failures=[None] * len(agents),
    )
    obs = [_observe(state, i) for i in range(len(agents))]
    return state, obs


# -- actions --------------------------------------------------------------------

def check(state: WorldState, agent: int, action: EnvAction, visible: Optional[Collection[int]] = None) -> Optional[str]:
    """Reason the action is ill-situated, or None when it can execute.

    `visible` may pass in a precomputed ``visible_ids(state, agent)``.
    """
    body = state.agents[agent]
    vis = visible if visible is None or isinstance(visible, (set, frozenset)) else set(visible)

    def seen(oid) -> bool:
        nonlocal vis
        if vis is None:
            vis = set(visible_ids(state, agent))
        return oid in vis

    kind, objs = action.kind, state.objects
    if kind == "noop":
        return None
    if kind == "walk":
        if isinstance(action.target, str):
            return None if action.target in state.layout.room_ids else "unknown room"
        if action.target not in objs:
            return "unknown object"
        if not seen(action.target):
            return "target not visible"
        if carrier(state, action.target) is not None:
            return "target is being carried"
        return None
    if kind == "drop":
        if action.hand not in (0, 1) or body.hands[action.hand] is None:
            return "hand is empty"
        if body.hands[action.hand] != action.target:
            return "object not in that hand"
        return None
    if action.target not in objs:
        return "unknown object"
    obj = objs[action.target]
    if kind == "grasp":
        if not obj.movable:
            return "object cannot be moved"
        if body.free_hand is None:
            return "both hands are full"
        if not seen(action.target) or carrier(state, obj.id) is not None:
            return "object not reachable"
        if not is_near(state, agent, obj.id):
            return "object too far"
        return None
    if kind in ("open", "close"):
        if not obj.is_openable:
            return "object cannot be opened"
        if obj.open == (kind == "open"):
            return f"already {'open' if obj.open else 'closed'}"
        if not seen(action.target) or carrier(state, obj.id) is not None:
            return "object not reachable"
        if not is_near(state, agent, obj.id):
            return "object too far"
        return None
    if kind in ("put_on", "put_in"):
        if action.target not in body.held:
            return "not holding the object"
        if action.dest not in objs or action.dest == action.target:
            return "unknown destination"
        dest = objs[action.dest]
        own_hand = dest.id in body.held
        if not own_hand:
            if not seen(action.dest) or carrier(state, dest.id) is not None:
                return "destination not reachable"
            if not is_near(state, agent, dest.id):
                return "destination too far"
        if kind == "put_on":
            if not dest.is_surface:
                return "destination is not a surface"
            if own_hand:
                return "destination is being carried"
            return None
        if not dest.is_container:
            return "destination is not a container"
        if obj.is_container:
            return "containers do not nest"
        if not dest.receives:
            return "container is closed"
        if dest.capacity is not None:
            inside = [o for o in contents(state, dest.id) if not objs[o].is_container]
            if len(inside) >= dest.capacity:
                return "container is full"
        return None
    return f"unknown action kind {kind!r}"


def available_actions(state: WorldState, agent: int) -> list[EnvAction]:
    from .render import render_action_text

    if not 0 <= agent < state.n_agents:
        raise KeyError(agent)
    body = state.agents[agent]
    vis = visible_ids(state, agent)
    cand: list[EnvAction] = [EnvAction.noop()]
    cand += [EnvAction.walk(r) for r in state.layout.room_ids]
    for oid in vis:
        cand.append(EnvAction.walk(oid))
        cand.append(EnvAction.grasp(oid))
        cand.append(EnvAction.open_(oid))
        cand.append(EnvAction.close(oid))
    for hand, held in enumerate(body.hands):
        if held is None:
            continue
        cand.append(EnvAction.drop(hand, held))
        for dest in vis + body.held:
            cand.append(EnvAction.put_on(held, dest))
            cand.append(EnvAction.put_in(held, dest))
    names = state.task.names()
    vis_set = set(vis)
    ok = {a for a in cand if check(state, agent, a, vis_set) is None}
    return sorted(ok, key=lambda a: render_action_text(a, names))


def true_cost(state: WorldState, agent: int, action: EnvAction) -> int:
    """Ground-truth duration of an action in ticks (the utility-model label)."""
    if action.kind != "walk":
        return MANIPULATION_COST
    body = state.agents[agent]
    found = nearest(state.layout, (body.room, body.cell), walk_goal(state, action.target))
    if found is None:
        raise UnreachableTarget(f"no path to {action.target!r}")
    return max(1, found[1])


def _apply(state: WorldState, agent: int, action: EnvAction) -> None:
    body = state.agents[agent]
    objs = state.objects
    kind = action.kind
    if kind == "walk":
        node, _ = nearest(state.layout, (body.room, body.cell), walk_goal(state, action.target))
        state.agents[agent] = replace(body, room=node[0], cell=node[1])
    elif kind == "grasp":
        hand = body.free_hand
        objs[action.target] = replace(objs[action.target], location=Held(agent, hand))
        hands = list(body.hands)
        hands[hand] = action.target
        state.agents[agent] = replace(body, hands=tuple(hands))
    elif kind in ("open", "close"):
        objs[action.target] = replace(objs[action.target], open=(kind == "open"))
    elif kind in ("put_on", "put_in", "drop"):
        if kind == "put_on":
            loc: Location = OnSurface(action.dest)
        elif kind == "put_in":
            loc = InContainer(action.dest)
        else:
            loc = InRoom(body.room, body.cell)
        objs[action.target] = replace(objs[action.target], location=loc)
        hands = tuple(None if h == action.target else h for h in body.hands)
        state.agents[agent] = replace(body, hands=hands)


def step(state: WorldState, joint_action: Sequence[EnvAction]):
    """Advance one macro-step.

    Returns (new_state, observations, reward, done, costs). Actions resolve in
    ascending agent id; an ill-situated action leaves the world untouched and
    flags the failure in that agent's next observation.
    """
    if len(joint_action) != state.n_agents:
        raise MalformedJointAction(f"expected {state.n_agents} actions, got {len(joint_action)}")
    for a in joint_action:
        if not isinstance(a, EnvAction):
            raise MalformedJointAction(f"not an EnvAction: {a!r}")
    new = state.clone()
    horizon = state.task.horizon
    costs: list[int] = []
    for i, action in enumerate(joint_action):
        reason = check(new, i, action)
        if reason is None:
            cost = true_cost(new, i, action)
            if state.tick + cost > horizon:
                reason, cost = "out of time", 1
            else:
                _apply(new, i, action)
        else:
            cost = 1
        new.failures[i] = reason
        costs.append(cost)
    new.tick = min(state.tick + max(costs), horizon)
    obs = [_observe(new, i) for i in range(new.n_agents)]
    reward = goal_progress(new, state.task.goal)
    done = reward >= 1.0 or new.tick >= horizon
    return new, obs, reward, done, costs


def is_done(state: WorldState) -> bool:
    return goal_progress(state, state.task.goal) >= 1.0 or state.tick >= state.task.horizon


# -- observations --------------------------------------------------------------

def _observe(state: WorldState, agent: int) -> Observation:
    """Build an observation and fold what the agent sees into its `seen` map."""
    body = state.agents[agent]
    objs = state.objects
    vis = visible_ids(state, agent)
    seen = state.seen[agent]
    visible = []
    for oid in vis:
        o = objs[oid]
        room, cell = position(state, oid)
        visible.append(VisibleObject(
            oid, o.cls, o.location, room, cell, o.is_container, o.is_surface, o.is_openable, o.open,
        ))
        seen[oid] = o.location
    carried = []
    for oid in sorted(objs):
        if carrier(state, oid) == agent:
            seen[oid] = objs[oid].location
            if isinstance(objs[oid].location, InContainer):
                carried.append((oid, objs[oid].cls, objs[oid].location.container))
    vis_set = set(vis)
    for oid in sorted(seen):
        loc = seen[oid]
        if loc is None or oid in vis_set or carrier(state, oid) == agent:
            continue
        if isinstance(loc, InRoom):
            gone = loc.room == body.room
        elif isinstance(loc, (OnSurface, InContainer)):
            p = parent_of(loc)
            gone = p in vis_set and not (isinstance(loc, InContainer) and hidden_inside(state, p))
        else:
            gone = False
        if gone:
            seen[oid] = None
    classes = {oid: o.cls for oid, o in objs.items()}
    counts = satisfied_counts(classes, lambda i: seen.get(i), state.task.goal)
    progress = tuple((min(n, p.count), p.count) for n, p in zip(counts, state.task.goal))
    return Observation(
        agent_id=agent,
        tick=state.tick,
        room=body.room,
        cell=body.cell,
        held=body.hands,
        held_cls=tuple(None if h is None else objs[h].cls for h in body.hands),
        visible=tuple(visible),
        progress=progress,
        failure=state.failures[agent],
        carried=tuple(carried),
    )


def hidden_inside(state: WorldState, cid: int) -> bool:
    """Whether the contents of container `cid` are currently hidden."""
    c = state.objects[cid]
    return (c.is_openable and not c.open) or hidden(state, cid)


def observe(state: WorldState, agent: int) -> Observation:
    """Observation for `agent` without touching the caller's state."""
    return _observe(state.clone(), agent)


def distance_between(state: WorldState, a: Node, b: Node) -> int:
    return distances_from(state.layout, a)[b]
