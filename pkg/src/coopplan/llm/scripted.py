"""Deterministic rule-based stand-in for a chat model.

The backend reads the rendered prompt back (goal, progress, known objects,
dialogue, candidate actions) and answers the way a sensible teammate would.
It is a pure function of the prompt text, which makes whole episodes
reproducible offline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..comm.messages import GREETINGS, trim_message
from .backends import CompletionRequest

RULESETS = ("default",)

PLANNER_MARKER = "choose the best available action"
MESSAGE_MARKER = "generate a short message"
REFLECTOR_MARKER = "update the knowledge list"
PROMPTED_COST_MARKER = "Also estimate how many steps each action takes"

LOCATION_TIP = "- Always include object locations when reporting discoveries."
ASSIGN_TIP = "- Assign tasks clearly and say which objects you will take."
PROGRESS_TIP = "- Share progress on finished subgoals."

DASHES = "-------------------------"
CONTAINER_CAPACITY = 3

OBJ = re.compile(r"<(\w+)> \((\d+)\)")
ROOM = re.compile(r"<(\w+)>")
PRED = re.compile(r"(\d+)/(\d+) of (ON|IN)\(<(\w+)>, <(\w+)> \((\d+)\)\)")
COST = re.compile(r"^(.*?) \(est\. cost: (\d+) steps\)$")
DIALOGUE_LINE = re.compile(r'^(\w+): "(.*)"$')
GREETING_LINES = {f'{n}: "{t}"' for n, t in GREETINGS}


@dataclass
class Pred:
    relation: str
    cls: str
    target_cls: str
    target: int
    done: int
    total: int

    @property
    def key(self) -> tuple:
        return (self.relation, self.cls, self.target)


@dataclass
class Entry:
    id: int
    cls: str
    room: Optional[str] = None
    rel: Optional[str] = None  # "on" / "in" relative to `parent`
    parent: Optional[int] = None
    holder: Optional[str] = None
    container: bool = False
    openable: bool = False
    open: bool = False


@dataclass
class View:
    """Everything the rules need, recovered from prompt text."""

    me: str = ""
    team: list[str] = field(default_factory=list)
    preds: list[Pred] = field(default_factory=list)
    room: str = ""
    hands: list[Optional[tuple[str, int]]] = field(default_factory=list)
    contents: dict[int, list[tuple[str, int]]] = field(default_factory=dict)
    rooms: list[str] = field(default_factory=list)
    explored: list[str] = field(default_factory=list)
    known: dict[int, Entry] = field(default_factory=dict)
    dialogue: list[tuple[str, str]] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)
    candidates: dict[str, Optional[int]] = field(default_factory=dict)
    prompted_cost: bool = False
    tips: list[str] = field(default_factory=list)


# -- prompt parsing ----------------------------------------------------------------

def _after(line: str, prefix: str) -> Optional[str]:
    return line[len(prefix):] if line.startswith(prefix) else None


def _parse_hands(text: str, view: View) -> None:
    for part in text.rstrip(".").split(" and "):
        part = part.strip()
        m = OBJ.match(part)
        if not m:
            view.hands.append(None)
            continue
        oid = int(m.group(2))
        view.hands.append((m.group(1), oid))
        if " containing " in part:
            inner = part.split(" containing ", 1)[1]
            view.contents[oid] = [(c, int(i)) for c, i in OBJ.findall(inner)]


def _parse_known(text: str, view: View) -> None:
    text = text.rstrip(".")
    if text == "none":
        return
    for item in text.split("; "):
        m = OBJ.match(item)
        if not m:
            continue
        e = Entry(int(m.group(2)), m.group(1))
        rest = item[m.end():].strip()
        parts = rest.split(", ")
        where, flags = parts[0], parts[1:]
        e.container = "container" in flags
        e.openable = "open" in flags or "closed" in flags
        e.open = "open" in flags
        if where != "location unknown":
            rooms = ROOM.findall(where)
            e.room = rooms[-1] if rooms else None
            if where.startswith("held by "):
                e.holder = where.split()[2]
            elif where.startswith(("on ", "in ")) and OBJ.search(where):
                e.rel = where[:2]
                e.parent = int(OBJ.search(where).group(2))
        view.known[e.id] = e


def parse_prompt(prompt: str) -> View:
    view = View()
    m = re.match(r"I'm (\w+)\.", prompt)
    view.me = m.group(1) if m else ""
    m = re.search(r"with my (?:teammate|friend) (.+?) together", prompt)
    others = re.split(r", | and ", m.group(1)) if m else []
    view.team = sorted({view.me, *others} - {""})
    view.prompted_cost = PROMPTED_COST_MARKER in prompt

    lines = prompt.split("\n")
    section = None
    for line in lines:
        if (rest := _after(line, "Progress: ")) is not None:
            for g in PRED.findall(rest):
                view.preds.append(Pred(g[2], g[3], g[4], int(g[5]), int(g[0]), int(g[1])))
            section = None
        elif (rest := _after(line, "I'm in the ")) is not None:
            view.room = ROOM.match(rest).group(1)
            _parse_hands(rest.split("I'm holding ", 1)[1], view)
        elif (rest := _after(line, "Rooms: ")) is not None:
            listed, _, explored = rest.partition("Explored: ")
            view.rooms = ROOM.findall(listed)
            view.explored = ROOM.findall(explored)
        elif (rest := _after(line, "Known objects: ")) is not None:
            _parse_known(rest, view)
        elif line == "Dialogue history:":
            section = "dialogue"
        elif (rest := _after(line, "Previous actions: ")) is not None:
            view.actions = [] if rest == "None" else rest.split(", ")
            section = None
        elif (rest := _after(line, "Available actions:")) is not None:
            section = "actions"
        elif line.startswith("Here are some hints"):
            section = "hints"
        elif line == DASHES:
            section = "tips" if section != "tips" else None
        elif line.startswith(("Answer:", "Note:", "Message:", "Current plans:")):
            section = None
        elif section == "dialogue":
            if line in GREETING_LINES:
                continue
            if (d := DIALOGUE_LINE.match(line)):
                view.dialogue.append((d.group(1), d.group(2)))
        elif section == "actions":
            line = line.strip()
            if not line or line.startswith(PROMPTED_COST_MARKER):
                continue
            c = COST.match(line)
            if c:
                view.candidates[c.group(1)] = int(c.group(2))
            else:
                view.candidates[line] = None
        elif section in ("hints", "tips"):
            if line.strip():
                view.tips.append(line.strip())
    return view


# -- what teammates said ----------------------------------------------------------

def _section(text: str, label: str) -> Optional[str]:
    m = re.search(re.escape(label) + r" ([^.]*)\.", text)
    return m.group(1) if m else None


def room_split(view: View) -> list[str]:
    for _, text in view.dialogue:
        part = _section(text, "Room split:")
        if part is None:
            continue
        m = re.search(rf"\b{view.me}: ((?:<\w+>(?:, )?)+)", part)
        return ROOM.findall(m.group(1)) if m else []
    return []


def reported_found(view: View) -> dict[int, tuple[str, str]]:
    """id -> (class, room) for objects teammates said they found."""
    out: dict[int, tuple[str, str]] = {}
    for sender, text in view.dialogue:
        if sender == view.me:
            continue
        part = _section(text, "Found:")
        if part:
            for cls, oid, room in re.findall(r"<(\w+)> \((\d+)\) in <(\w+)>", part):
                out[int(oid)] = (cls, room)
    return out


def claimed_by_others(view: View) -> set[int]:
    latest: dict[str, str] = {}
    for sender, text in view.dialogue:
        if sender != view.me:
            latest[sender] = text
    out: set[int] = set()
    for text in latest.values():
        part = _section(text, "I'll take")
        if part:
            out.update(int(i) for _, i in OBJ.findall(part))
    return out


def merged_progress(view: View) -> list[Pred]:
    best = {p.key: p.done for p in view.preds}
    for sender, text in view.dialogue:
        part = _section(text, "Done:")
        if not part:
            continue
        for g in PRED.findall(part):
            key = (g[2], g[3], int(g[5]))
            if key in best:
                best[key] = max(best[key], int(g[0]))
    return [Pred(p.relation, p.cls, p.target_cls, p.target, best[p.key], p.total) for p in view.preds]


# -- planner rules ----------------------------------------------------------------

class Planner:
    def __init__(self, view: View, respect_claims: bool = True):
        self.v = view
        self.preds = merged_progress(view)
        self.claims = claimed_by_others(view) if respect_claims else set()
        self.found = reported_found(view)
        self.held_direct = [h for h in view.hands if h is not None]
        self.held_ids = {oid for _, oid in self.held_direct}
        for items in view.contents.values():
            self.held_ids.update(oid for _, oid in items)

    # bookkeeping
    def pred_for(self, cls: str) -> Optional[Pred]:
        for p in self.preds:
            if p.cls == cls and p.done < p.total:
                return p
        return None

    def at_target(self, e: Entry) -> bool:
        for p in self.preds:
            if p.cls != e.cls:
                continue
            rel = "on" if p.relation == "ON" else "in"
            if e.parent == p.target and e.rel == rel:
                return True
            parent = self.v.known.get(e.parent) if e.parent is not None else None
            if parent is not None and parent.parent == p.target and parent.rel == rel:
                return True
        return False

    def my_goal_items(self) -> list[tuple[str, int]]:
        items = [h for h in self.held_direct if h[1] not in self.v.contents]
        for c in self.v.contents.values():
            items.extend(c)
        return [(c, i) for c, i in items if self.pred_for(c) is not None]

    def need(self) -> dict[str, int]:
        remaining: dict[str, int] = {}
        for p in self.preds:
            remaining[p.cls] = remaining.get(p.cls, 0) + max(0, p.total - p.done)
        for c, _ in self.my_goal_items():
            remaining[c] = remaining.get(c, 0) - 1
        busy = set(self.claims)
        busy.update(e.id for e in self.v.known.values() if e.holder and e.holder != self.v.me)
        for oid in busy - self.held_ids:
            e = self.v.known.get(oid)
            cls = e.cls if e else self.found.get(oid, (None,))[0]
            if cls in remaining and not (e and self.at_target(e)):
                remaining[cls] -= 1
        return {c: n for c, n in remaining.items() if n > 0}

    def wanted(self) -> dict[int, tuple[str, Optional[str]]]:
        """Objects worth fetching: id -> (class, room)."""
        need = self.need()
        out = {}
        for e in self.v.known.values():
            if e.cls not in need or e.id in self.held_ids or e.id in self.claims:
                continue
            if e.room is None or e.holder is not None or self.at_target(e):
                continue
            out[e.id] = (e.cls, e.room)
        for oid, (cls, room) in self.found.items():
            if oid in self.v.known or cls not in need or oid in self.claims or oid in self.held_ids:
                continue
            out[oid] = (cls, room)
        return out

    # choice among candidate texts
    def cost(self, text: str) -> int:
        c = self.v.candidates.get(text)
        if c is not None:
            return c
        if not self.v.prompted_cost:
            return 0
        if text.startswith("walk towards "):
            rest = text[len("walk towards "):]
            if OBJ.fullmatch(rest):
                return 3
            return 2 if rest == f"<{self.v.room}>" else 10
        return 1

    def pick(self, texts) -> Optional[str]:
        last = self.v.actions[-1] if self.v.actions else ""
        options = [t for t in set(texts) if t in self.v.candidates and not (t == last and t.startswith("walk "))]
        if not options:
            return None
        return min(options, key=lambda t: (self.cost(t), t))

    def target_of(self, cls: str) -> Optional[Pred]:
        return self.pred_for(cls)

    def decide(self) -> Optional[str]:
        v = self.v
        goal_items = self.my_goal_items()
        free_hands = sum(1 for h in v.hands if h is None)
        held_containers = [oid for _, oid in self.held_direct if oid in v.contents]

        # deliver what is in hand
        puts = []
        for cls, oid in self.held_direct:
            if oid in v.contents:
                if v.contents[oid]:
                    for c, _ in v.contents[oid]:
                        p = self.target_of(c)
                        if p and p.relation == "ON":
                            puts.append(f"put <{cls}> ({oid}) on <{p.target_cls}> ({p.target})")
                continue
            p = self.target_of(cls)
            if p:
                rel = "on" if p.relation == "ON" else "in"
                puts.append(f"put <{cls}> ({oid}) {rel} <{p.target_cls}> ({p.target})")
        if (a := self.pick(puts)):
            return a

        # stow a loose goal item in a held container with room
        stow = []
        for cid in held_containers:
            if len(v.contents[cid]) < CONTAINER_CAPACITY:
                ccls = next(c for c, i in self.held_direct if i == cid)
                for cls, oid in self.held_direct:
                    if oid not in v.contents and self.pred_for(cls):
                        stow.append(f"put <{cls}> ({oid}) in <{ccls}> ({cid})")
        if (a := self.pick(stow)):
            return a

        # open a closed receptacle we are about to fill
        opens = []
        for cls, _ in goal_items:
            p = self.target_of(cls)
            t = v.known.get(p.target) if p else None
            if p and p.relation == "IN" and t is not None and t.openable and not t.open:
                opens.append(f"open <{p.target_cls}> ({p.target})")
        if (a := self.pick(opens)):
            return a

        wanted = self.wanted()
        need = self.need()

        # pick things up; in transport tasks a container first
        if need and free_hands == 2 and not held_containers:
            baskets = [f"grasp <{e.cls}> ({e.id})" for e in v.known.values()
                       if e.container and not e.openable and e.holder is None and not self._placed_on_target(e)]
            if (a := self.pick(baskets)):
                return a
        grasps = [f"grasp <{cls}> ({oid})" for oid, (cls, _) in wanted.items()]
        if (a := self.pick(grasps)):
            return a

        if goal_items and (free_hands == 0 or not wanted):
            if (a := self.deliver(goal_items)):
                return a
        if free_hands == 0:
            return self.explore(room_split(v)) if goal_items else None

        approach = [f"walk towards <{cls}> ({oid})" for oid, (cls, room) in wanted.items() if room == v.room]
        if (a := self.pick(approach)):
            return a

        # look inside closed storage while something is still missing
        missing = sum(need.values()) > len(wanted)
        closed_here = [e for e in v.known.values()
                       if e.openable and not e.open and e.room == v.room and not self._is_target(e.id)]
        if missing and closed_here:
            texts = [f"open <{e.cls}> ({e.id})" for e in closed_here]
            if (a := self.pick(texts)):
                return a
            if (a := self.pick(f"walk towards <{e.cls}> ({e.id})" for e in closed_here)):
                return a

        if (a := self.pick(f"walk towards <{room}>" for _, room in wanted.values() if room and room != v.room)):
            return a

        if missing:
            if (a := self.explore(room_split(v))):
                return a
            closed_rooms = {e.room for e in v.known.values()
                            if e.openable and not e.open and e.room and not self._is_target(e.id)}
            if (a := self.pick(f"walk towards <{r}>" for r in closed_rooms)):
                return a

        if goal_items:
            return self.deliver(goal_items) or self.explore([])
        return None

    def explore(self, preferred) -> Optional[str]:
        unexplored = [r for r in self.v.rooms if r not in self.v.explored]
        mine = [r for r in preferred if r in unexplored]
        for group in (mine, unexplored):
            if (a := self.pick(f"walk towards <{r}>" for r in group)):
                return a
        return None

    def _is_target(self, oid: int) -> bool:
        return any(p.target == oid for p in self.preds)

    def _placed_on_target(self, e: Entry) -> bool:
        return e.parent is not None and self._is_target(e.parent)

    def deliver(self, goal_items) -> Optional[str]:
        texts = []
        for cls, _ in goal_items:
            p = self.target_of(cls)
            if p is None:
                continue
            texts.append(f"walk towards <{p.target_cls}> ({p.target})")
            t = self.v.known.get(p.target)
            if t is not None and t.room and t.room != self.v.room:
                texts.append(f"walk towards <{t.room}>")
        # the object walk only exists once the target is in view
        near = self.pick(t for t in texts if OBJ.search(t.split("towards ", 1)[1]))
        return near or self.pick(texts)


def plan_reply(view: View) -> str:
    choice = Planner(view).decide() or Planner(view, respect_claims=False).decide()
    if choice is None:
        choice = "wait" if "wait" in view.candidates else min(view.candidates, default="wait")
    return choice


# -- message generator ------------------------------------------------------------

def _has_tip(view: View, word: str) -> bool:
    return any(word in t.lower() for t in view.tips)


def message_reply(view: View) -> str:
    planner = Planner(view)
    spoke = any(sender == view.me for sender, _ in view.dialogue)
    parts = []
    if not spoke:
        rooms = sorted(view.rooms)
        split = {name: rooms[i::len(view.team)] for i, name in enumerate(view.team)}
        parts.append("Room split: " + "; ".join(
            f"{name}: " + ", ".join(f"<{r}>" for r in split[name]) for name in view.team if split[name]
        ) + ".")
    else:
        held = " and ".join("nothing" if h is None else f"<{h[0]}> ({h[1]})" for h in view.hands)
        parts.append(f"I'm in <{view.room}> holding {held}.")
    if _has_tip(view, "location"):
        spotted = [f"<{cls}> ({oid}) in <{room}>" for oid, (cls, room) in sorted(planner.wanted().items())
                   if oid in view.known]
        if spotted:
            parts.append("Found: " + ", ".join(spotted[:6]) + ".")
    if _has_tip(view, "take"):
        mine = [f"<{c}> ({i})" for c, i in planner.my_goal_items()]
        free = sum(1 for h in view.hands if h is None)
        here = [f"<{cls}> ({oid})" for oid, (cls, room) in sorted(planner.wanted().items()) if room == view.room]
        mine.extend(here[:free])
        if mine:
            parts.append("I'll take " + ", ".join(mine) + ".")
    if _has_tip(view, "progress") and view.preds:
        done = "; ".join(f"{p.done}/{p.total} of {p.relation}(<{p.cls}>, <{p.target_cls}> ({p.target}))"
                         for p in merged_progress(view))
        parts.append(f"Done: {done}.")
    return trim_message(" ".join(parts))


# -- reflector --------------------------------------------------------------------

def reflect_reply(view: View) -> str:
    received = ""
    for sender, text in reversed(view.dialogue):
        if sender != view.me:
            received = text
            break
    tips = list(view.tips)
    if "Found:" not in received and LOCATION_TIP not in tips:
        tips.append(LOCATION_TIP)
    if "I'll take" not in received and ASSIGN_TIP not in tips:
        tips.append(ASSIGN_TIP)
    if "Done:" not in received and PROGRESS_TIP not in tips:
        tips.append(PROGRESS_TIP)
    return "\n".join([DASHES, *tips, DASHES])


class ScriptedBackend:
    """Answers planner, message and reflector prompts by fixed rules."""

    def __init__(self, ruleset: str = "default"):
        if ruleset not in RULESETS:
            raise ValueError(f"unknown scripted ruleset {ruleset!r}")
        self.ruleset = ruleset
        self.last_retries = 0

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.prompt
        if PLANNER_MARKER in prompt:
            return plan_reply(parse_prompt(prompt))
        if MESSAGE_MARKER in prompt:
            return message_reply(parse_prompt(prompt))
        if REFLECTOR_MARKER in prompt:
            return reflect_reply(parse_prompt(prompt))
        return ""
