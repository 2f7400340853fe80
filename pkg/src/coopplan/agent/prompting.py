"""Text for the $GOAL$, $PROGRESS$, ... placeholders, built from agent memory.

The layout of these strings is also what the scripted backend reads back, so
keep `coopplan.llm.scripted` in step with any change here.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Iterable, Optional, Sequence

from ..comm.messages import PrivilegedInfo
from ..world.state import AGENT_NAMES, GoalPredicate, Held, InContainer, InRoom, OnSurface
from .memory import AgentMemory

PROMPTED_COST_SENTENCE = "Also estimate how many steps each action takes before choosing."


def ref(oid: int, cls: str) -> str:
    return f"<{cls}> ({oid})"


def predicate_text(pred: GoalPredicate, names) -> str:
    return f"{pred.relation}(<{pred.cls}>, {ref(pred.target, names[pred.target])})"


def goal_text(goal: Sequence[GoalPredicate], names) -> str:
    groups: "OrderedDict[tuple[str, int], list[GoalPredicate]]" = OrderedDict()
    for p in goal:
        groups.setdefault((p.relation, p.target), []).append(p)
    parts = []
    for (rel, target), preds in groups.items():
        items = ", ".join(f"{p.count} <{p.cls}>" for p in preds)
        where = "onto" if rel == "ON" else "into"
        parts.append(f"Find and put {items} {where} the {ref(target, names[target])}.")
    return " ".join(parts)


def progress_lines(goal: Sequence[GoalPredicate], progress, names) -> str:
    return "; ".join(f"{k}/{m} of {predicate_text(p, names)}" for p, (k, m) in zip(goal, progress)) + "."


def _held_text(memory: AgentMemory) -> str:
    parts = []
    for oid in memory.held:
        if oid is None:
            parts.append("nothing")
            continue
        k = memory.known_objects.get(oid)
        cls = k.cls if k else memory.names.get(oid, "object")
        text = ref(oid, cls)
        if k is not None and k.portable_container:
            inside = [ref(i, c) for i, c, cid in memory.carried if cid == oid]
            text += " containing " + (", ".join(inside) if inside else "nothing")
        parts.append(text)
    return " and ".join(parts)


def _known_entry(memory: AgentMemory, k) -> Optional[str]:
    loc = k.location
    if loc is None or k.room is None:
        return f"{ref(k.id, k.cls)} location unknown"
    if isinstance(loc, Held):
        if loc.agent == memory.agent_id:
            return None
        where = f"held by {AGENT_NAMES[loc.agent]} in <{k.room}>"
    elif isinstance(loc, InRoom):
        where = f"in <{k.room}>"
    else:
        pid = loc.surface if isinstance(loc, OnSurface) else loc.container
        # contents of my own held containers are listed with what I hold
        if isinstance(loc, InContainer) and pid in memory.held:
            return None
        rel = "on" if isinstance(loc, OnSurface) else "in"
        pcls = memory.known_objects[pid].cls if pid in memory.known_objects else memory.names.get(pid, "object")
        where = f"{rel} {ref(pid, pcls)} in <{k.room}>"
    flags = []
    if k.portable_container:
        flags.append("container")
    if k.is_openable:
        flags.append("open" if k.open else "closed")
    return f"{ref(k.id, k.cls)} {where}" + "".join(f", {f}" for f in flags)


def progress_text(memory: AgentMemory) -> str:
    lines = [progress_lines(memory.goal, memory.progress_view, memory.names)]
    lines.append(f"I'm in the <{memory.room}>. I'm holding {_held_text(memory)}.")
    explored = ", ".join(f"<{r}>" for r in memory.explored) or "none"
    lines.append(f"Rooms: {', '.join(f'<{r}>' for r in sorted(memory.rooms))}. Explored: {explored}.")
    entries = [e for k in sorted(memory.known_objects) if (e := _known_entry(memory, memory.known_objects[k]))]
    lines.append("Known objects: " + ("; ".join(entries) if entries else "none") + ".")
    return "\n".join(lines)


def dialogue_text(messages: Iterable) -> str:
    return "\n".join(f'{AGENT_NAMES[m.sender]}: "{m.text}"' for m in messages)


def action_history_text(memory: AgentMemory) -> str:
    if not memory.action_history:
        return "None"
    return ", ".join(r.text + (" (failed)" if r.succeeded is False else "") for r in memory.action_history)


def opponents(memory: AgentMemory) -> str:
    others = [n for i, n in enumerate(memory.team) if i != memory.agent_id]
    if len(others) <= 1:
        return others[0] if others else ""
    return ", ".join(others[:-1]) + " and " + others[-1]


def annotated_line(text: str, cost: Optional[float]) -> str:
    if cost is None:
        return text
    return f"{text} (est. cost: {int(round(cost))} steps)"


def available_actions_text(lines: Sequence[str], prompted_cost: bool = False) -> str:
    out = "\n" + "\n".join(lines)
    if prompted_cost:
        out += "\n" + PROMPTED_COST_SENTENCE
    return out


def base_bindings(memory: AgentMemory) -> dict[str, str]:
    return {
        "AGENT_NAME": memory.name,
        "OPPO_NAME": opponents(memory),
        "GOAL": goal_text(memory.goal, memory.names),
        "PROGRESS": progress_text(memory),
        "DIALOGUE_HISTORY": dialogue_text(memory.dialogue),
        "ACTION_HISTORY": action_history_text(memory),
    }


def privileged_info(memory: AgentMemory) -> PrivilegedInfo:
    """The sender's current plan and latest actions, shown only to reflectors."""
    remaining = [
        f"{m - k} more <{p.cls}>" for p, (k, m) in zip(memory.goal, memory.progress_view) if k < m
    ]
    held = _held_text(memory)
    plan = f"{memory.name} is in the <{memory.room}> holding {held}"
    plan += "; still needed: " + (", ".join(remaining) if remaining else "nothing") + "."
    recent = [r.text for r in memory.action_history[-3:]]
    return PrivilegedInfo(plan, ", ".join(recent) if recent else "None")
