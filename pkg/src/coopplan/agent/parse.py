"""Map a free-text model reply onto one of the candidate actions."""

from __future__ import annotations

import re
from typing import Sequence

from ..world.state import EnvAction

VERBS = {
    "walk": ("walk", "go", "goto", "move", "head", "navigate"),
    "grasp": ("grasp", "grab", "pick", "take", "get"),
    "open": ("open",),
    "close": ("close", "shut"),
    "put_on": ("put", "place"),
    "put_in": ("put", "place"),
    "drop": ("drop",),
    "noop": ("wait", "noop", "idle"),
}

_ID = re.compile(r"\((\d+)\)")
_WORD = re.compile(r"[a-z_]+")


class ParseFailure(ValueError):
    """The reply names no candidate, or more than one."""


def _ids(action: EnvAction) -> list[int]:
    out = []
    if isinstance(action.target, int):
        out.append(action.target)
    if action.dest is not None:
        out.append(action.dest)
    return out


def _names(rendered: str) -> list[str]:
    """Class or room names an action mentions, e.g. ``["plate", "dishwasher"]``."""
    return re.findall(r"<(\w+)>", rendered.lower())


def _one(matches: list[int], stage: str) -> int | None:
    if len(matches) == 1:
        return matches[0]
    if len(matches) > 1:
        raise ParseFailure(f"ambiguous reply ({stage}: {len(matches)} candidates)")
    return None


def parse_action(reply: str, candidates: Sequence) -> EnvAction:
    """Match in three stages, case-insensitively.

    1. a rendered candidate appears verbatim in the reply;
    2. a verb plus every object id the candidate mentions;
    3. a verb plus every class or room name the candidate mentions.

    `candidates` holds objects with ``.action`` and ``.rendered``. More than
    one match at the first stage that finds any is a ParseFailure.
    """
    if not candidates:
        raise ValueError("no candidates")
    text = reply.lower()
    rendered = [c.rendered.lower() for c in candidates]

    hits = [i for i, r in enumerate(rendered) if r in text]
    # "walk towards <kitchen>" inside "walk towards <kitchen> now" is fine, but
    # drop hits that are only part of a longer hit
    hits = [i for i in hits if not any(j != i and rendered[i] in rendered[j] and rendered[i] != rendered[j]
                                       for j in hits)]
    if (i := _one(hits, "exact")) is not None:
        return candidates[i].action

    words = set(_WORD.findall(text))
    ids = {int(x) for x in _ID.findall(text)}
    verb_ok = [any(v in words for v in VERBS[c.action.kind]) for c in candidates]

    hits = [i for i, c in enumerate(candidates)
            if verb_ok[i] and _ids(c.action) and set(_ids(c.action)) <= ids]
    if (i := _one(hits, "id")) is not None:
        return candidates[i].action

    hits = []
    for i, c in enumerate(candidates):
        if not verb_ok[i]:
            continue
        names = _names(c.rendered)
        if all(re.search(rf"\b{re.escape(n)}\b", text) for n in names):
            hits.append(i)
    if (i := _one(hits, "class")) is not None:
        return candidates[i].action
    raise ParseFailure("reply names no candidate action")
