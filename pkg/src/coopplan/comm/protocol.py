"""When to talk, what to say, and how a receiver rewrites the shared tip list."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from ..llm.backends import Backend, CompletionRequest
from ..llm.prompts import render_template, template_for
from .messages import KnowledgeList, Message, PrivilegedInfo, trim_message

log = logging.getLogger(__name__)

TRIGGER_ORDER = ("EpisodeStart", "SubgoalCompleted", "GoalObjectDiscovered", "ActionFailed", "Heartbeat")

# reflect on this many received messages per agent, then only after failures
DEFAULT_REFLECT_FIRST = 5


@dataclass(frozen=True)
class CommTrigger:
    reason: str
    period: Optional[int] = None  # only for Heartbeat

    def __post_init__(self):
        if self.reason not in TRIGGER_ORDER:
            raise ValueError(f"unknown trigger {self.reason!r}")
        if self.reason == "Heartbeat" and (self.period is None or self.period < 1):
            raise ValueError("heartbeat period must be >= 1")

    def __str__(self) -> str:
        return f"Heartbeat({self.period})" if self.reason == "Heartbeat" else self.reason


def should_communicate(memory, last_obs=None, heartbeat: Optional[int] = None) -> Optional[CommTrigger]:
    """Highest-priority reason to speak this macro-step, or None.

    Pure: reads memory (already updated with `last_obs`) and changes nothing.
    """
    if heartbeat is not None and heartbeat < 1:
        raise ValueError("heartbeat period must be >= 1")
    if memory.messages_sent == 0 and memory.tick == 0:
        return CommTrigger("EpisodeStart")
    done_now = sum(k for k, _ in memory.progress_view)
    done_before = sum(k for k, _ in memory.prev_progress)
    if done_now > done_before:
        return CommTrigger("SubgoalCompleted")
    if memory.newly_discovered:
        return CommTrigger("GoalObjectDiscovered")
    failure = last_obs.failure if last_obs is not None else memory.last_failure
    if failure:
        return CommTrigger("ActionFailed")
    if heartbeat is not None:
        last = memory.last_comm_tick if memory.last_comm_tick is not None else 0
        if memory.tick - last >= heartbeat:
            return CommTrigger("Heartbeat", heartbeat)
    return None


@dataclass(frozen=True)
class LocalInfo:
    """The sender-side text that fills a message or reflection prompt."""

    agent_name: str
    oppo_name: str
    progress: str
    action_history: str
    dialogue_history: str
    task_kind: str = "household"


def message_prompt(goal: str, info: LocalInfo, knowledge: KnowledgeList) -> str:
    return render_template(template_for("message_generator", info.task_kind), {
        "AGENT_NAME": info.agent_name,
        "OPPO_NAME": info.oppo_name,
        "GOAL": goal,
        "PROGRESS": info.progress,
        "ACTION_HISTORY": info.action_history,
        "DIALOGUE_HISTORY": info.dialogue_history,
        "KNOWLEDGE_LIST": knowledge.tips_text,
    })


def generate_message(backend: Backend, goal: str, local_info: LocalInfo, knowledge_list: KnowledgeList,
                     sender: int, tick: int, trigger: Optional[CommTrigger] = None,
                     seed: Optional[int] = None) -> Message:
    prompt = message_prompt(goal, local_info, knowledge_list)
    reply = backend.complete(CompletionRequest(prompt, seed=seed))
    text = trim_message(_strip_quotes(reply))
    return Message(sender, tick, text, str(trigger) if trigger else None)


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if text.lower().startswith("message:"):
        text = text[len("message:"):].strip()
    if len(text) >= 2 and text[0] == text[-1] == '"':
        text = text[1:-1]
    return text


def reflection_prompt(goal: str, info: LocalInfo, privileged: PrivilegedInfo, received: Message,
                      knowledge: KnowledgeList, sender_name: str) -> str:
    dialogue = info.dialogue_history
    line = f'{sender_name}: "{received.text}"'
    if line not in dialogue.split("\n"):
        dialogue = f"{dialogue}\n{line}" if dialogue else line
    return render_template(template_for("reflector", info.task_kind), {
        "AGENT_NAME": info.agent_name,
        "OPPO_NAME": info.oppo_name,
        "GOAL": goal,
        "PROGRESS": info.progress,
        "DIALOGUE_HISTORY": dialogue,
        "ACTION_HISTORY": info.action_history,
        "CURRENT_PLANS": privileged.render(),
        "KNOWLEDGE_LIST": knowledge.tips_text,
    })


_DASH_LINE = re.compile(r"^\s*-{3,}\s*$")
_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+\S")


def extract_list(reply: str) -> Optional[str]:
    """The tip list inside the dashed delimiters, else the bullet lines, else None."""
    lines = reply.split("\n")
    marks = [i for i, l in enumerate(lines) if _DASH_LINE.match(l)]
    if len(marks) >= 2:
        body = lines[marks[0] + 1: marks[1]]
        return "\n".join(l.rstrip() for l in body).strip()
    bullets = [l.strip() for l in lines if _BULLET.match(l)]
    if bullets:
        return "\n".join(bullets)
    return None


def reflect_and_update(backend: Backend, goal: str, local_info: LocalInfo, privileged: PrivilegedInfo,
                       received: Message, knowledge_list: KnowledgeList, receiver: int,
                       sender_name: str, seed: Optional[int] = None) -> KnowledgeList:
    prompt = reflection_prompt(goal, local_info, privileged, received, knowledge_list, sender_name)
    reply = backend.complete(CompletionRequest(prompt, seed=seed))
    text = extract_list(reply)
    if text is None:
        log.warning("reflector reply had no recognisable tip list; keeping version %d", knowledge_list.version)
        return knowledge_list
    return knowledge_list.updated(text, receiver)


@dataclass
class KnowledgeBoard:
    """The one shared list of an episode plus its audit trail, one row per version."""

    current: KnowledgeList = field(default_factory=KnowledgeList)
    audit: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.audit:
            self.audit.append(self._row(self.current, 0))

    @staticmethod
    def _row(k: KnowledgeList, tick: int) -> dict:
        return {"version": k.version, "tick": tick, "editor": k.last_editor, "text": k.tips_text}

    def apply(self, new: KnowledgeList, tick: int) -> bool:
        """Record `new` if it is the next version; returns whether it was accepted."""
        if new.version == self.current.version:
            return False
        if new.version != self.current.version + 1:
            raise ValueError(f"version gap: {self.current.version} -> {new.version}")
        self.current = new
        self.audit.append(self._row(new, tick))
        return True


def wants_reflection(receptions_before: int, trigger: Optional[str], reflect_first: int = DEFAULT_REFLECT_FIRST) -> bool:
    """Reflect on each of the first `reflect_first` receptions, then only on failure reports."""
    return receptions_before < reflect_first or trigger == "ActionFailed"
