"""Messages, dialogue histories, the shared tip list and the broadcast bus."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

MAX_MESSAGE_CHARS = 500
MAX_LIST_WORDS = 100

GREETINGS = (
    ("Alice", "Hi, I'll let you know if I find any goal objects and finish any subgoals, "
              "and ask for your help when necessary."),
    ("Bob", "Thanks! I'll let you know if I find any goal objects and finish any subgoals, "
            "and ask for your help when necessary."),
)


@dataclass(frozen=True)
class Message:
    sender: int
    tick: int
    text: str
    trigger: Optional[str] = None

    def __post_init__(self):
        if len(self.text) > MAX_MESSAGE_CHARS:
            raise ValueError(f"message longer than {MAX_MESSAGE_CHARS} characters")

    def to_dict(self) -> dict:
        return {"sender": self.sender, "tick": self.tick, "text": self.text, "trigger": self.trigger}

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(d["sender"], d["tick"], d["text"], d.get("trigger"))


def trim_message(text: str, limit: int = MAX_MESSAGE_CHARS) -> str:
    """Cut to at most `limit` characters, ending on a word boundary."""
    text = text.strip()
    if len(text) <= limit:
        return text
    cut = text[: limit + 1]
    space = cut.rfind(" ")
    if space <= 0:
        return text[:limit]
    return cut[:space].rstrip()


class DialogueHistory:
    """Append-only message log with non-decreasing ticks."""

    def __init__(self, messages=()):
        self._messages: list[Message] = []
        for m in messages:
            self.append(m)

    def append(self, message: Message) -> None:
        if self._messages and message.tick < self._messages[-1].tick:
            raise ValueError("dialogue history ticks must be non-decreasing")
        self._messages.append(message)

    def extend(self, messages) -> None:
        for m in messages:
            self.append(m)

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def __len__(self) -> int:
        return len(self._messages)

    def __iter__(self):
        return iter(self._messages)

    def __eq__(self, other) -> bool:
        return isinstance(other, DialogueHistory) and self._messages == other._messages


def word_count(text: str) -> int:
    return len(text.split())


def cap_words(text: str, limit: int = MAX_LIST_WORDS) -> str:
    """Keep at most `limit` words, cutting after the last full sentence that fits.

    Sentence ends are ``.``, ``!``, ``?`` or a line break. With no sentence end
    inside the cap the text is cut at the word limit.
    """
    text = text.strip()
    if word_count(text) <= limit:
        return text
    # character offset just past the limit-th word
    words_seen, end, i, n = 0, 0, 0, len(text)
    while i < n and words_seen < limit:
        while i < n and text[i].isspace():
            i += 1
        while i < n and not text[i].isspace():
            i += 1
        words_seen += 1
        end = i
    head = text[:end]
    best = -1
    for j, ch in enumerate(head):
        if ch in ".!?" and (j + 1 == len(head) or head[j + 1].isspace()):
            best = j + 1
        elif ch == "\n":
            best = j
    if best > 0:
        return head[:best].rstrip()
    return head.rstrip()


@dataclass(frozen=True)
class KnowledgeList:
    version: int = 0
    tips_text: str = ""
    last_editor: Optional[int] = None

    def __post_init__(self):
        if word_count(self.tips_text) > MAX_LIST_WORDS:
            raise ValueError(f"knowledge list exceeds {MAX_LIST_WORDS} words")

    def updated(self, text: str, editor: int) -> "KnowledgeList":
        return replace(self, version=self.version + 1, tips_text=cap_words(text), last_editor=editor)

    def to_dict(self) -> dict:
        return {"version": self.version, "tips_text": self.tips_text, "last_editor": self.last_editor}


@dataclass(frozen=True)
class PrivilegedInfo:
    """Sender-side details shown to a reflecting receiver, never to planners."""

    plan: str
    recent_actions: str

    def render(self) -> str:
        return f"{self.plan} Recent actions: {self.recent_actions}"


@dataclass
class MessageBus:
    """Broadcast channel: a message sent during macro-step t reaches every other
    agent's inbox exactly once, at macro-step t+1."""

    n_agents: int
    _pending: list[Message] = field(default_factory=list)
    sent: list[Message] = field(default_factory=list)

    def post(self, message: Message) -> list[int]:
        self._pending.append(message)
        self.sent.append(message)
        return [i for i in range(self.n_agents) if i != message.sender]

    def deliver(self) -> tuple[list[tuple[Message, ...]], list[Message]]:
        """Per-agent inboxes plus every message of the step, ordered by (tick, sender)."""
        batch = sorted(self._pending, key=lambda m: (m.tick, m.sender))
        self._pending = []
        inboxes = [tuple(m for m in batch if m.sender != i) for i in range(self.n_agents)]
        return inboxes, batch


def broadcast(message: Message, bus: MessageBus, n_agents: Optional[int] = None) -> list[int]:
    """Queue a message for every agent but the sender; returns the receiver ids."""
    if n_agents is not None and n_agents != bus.n_agents:
        raise ValueError("bus size does not match n_agents")
    return bus.post(message)
