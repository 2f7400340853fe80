"""Text forms of actions and observations.

Objects are written as ``<name> (id)`` and rooms as ``<room>``. These strings
are what planners see and what the utility model consumes.
"""

from __future__ import annotations

from typing import Mapping, Optional

from .state import EnvAction, Held, InContainer, InRoom, Location, Observation, OnSurface


def obj_ref(oid: int, names: Mapping[int, str]) -> str:
    return f"<{names[oid]}> ({oid})"


def render_action_text(action: EnvAction, names: Mapping[int, str]) -> str:
    k = action.kind
    if k == "noop":
        return "wait"
    if k == "walk":
        if isinstance(action.target, str):
            return f"walk towards <{action.target}>"
        return f"walk towards {obj_ref(action.target, names)}"
    if k == "grasp":
        return f"grasp {obj_ref(action.target, names)}"
    if k == "open":
        return f"open {obj_ref(action.target, names)}"
    if k == "close":
        return f"close {obj_ref(action.target, names)}"
    if k == "put_on":
        return f"put {obj_ref(action.target, names)} on {obj_ref(action.dest, names)}"
    if k == "put_in":
        return f"put {obj_ref(action.target, names)} in {obj_ref(action.dest, names)}"
    if k == "drop":
        return f"drop {obj_ref(action.target, names)}"
    raise ValueError(f"unknown action kind {k!r}")


def render_location(loc: Optional[Location], names: Mapping[int, str], agent_names=None) -> str:
    if loc is None:
        return "unknown"
    if isinstance(loc, InRoom):
        return f"in <{loc.room}>"
    if isinstance(loc, OnSurface):
        return f"on {obj_ref(loc.surface, names)}"
    if isinstance(loc, InContainer):
        return f"in {obj_ref(loc.container, names)}"
    if isinstance(loc, Held):
        who = agent_names[loc.agent] if agent_names else f"agent {loc.agent}"
        return f"held by {who}"
    raise TypeError(loc)


def render_observation_text(obs: Observation) -> str:
    """Environment part of an observation as text.

    Positions are written as ``xN yM`` tokens so a bag-of-ngrams model can
    pick them up. Messages and goal progress are left out: the cost model is
    goal-agnostic and must not see dialogue.
    """
    names = {v.id: v.cls for v in obs.visible}
    lines = [f"I am at <{obs.room}> x{obs.cell[0]} y{obs.cell[1]}."]
    held = []
    for hand, oid in enumerate(obs.held):
        if oid is None:
            held.append(f"hand {hand} empty")
        else:
            held.append(f"hand {hand} <{obs.held_cls[hand]}> ({oid})")
    lines.append("Holding: " + ", ".join(held) + ".")
    if obs.carried:
        lines.append("Carrying: " + ", ".join(f"<{cls}> ({oid}) in ({cid})" for oid, cls, cid in obs.carried) + ".")
    parts = []
    for v in sorted(obs.visible, key=lambda v: v.id):
        where = render_location(v.location, names)
        text = f"<{v.cls}> ({v.id}) at x{v.cell[0]} y{v.cell[1]} {where}"
        if v.is_openable:
            text += " open" if v.open else " closed"
        parts.append(text)
    lines.append("Visible: " + ("; ".join(parts) if parts else "nothing") + ".")
    if obs.failure:
        lines.append(f"Last action failed: {obs.failure}.")
    return "\n".join(lines)
