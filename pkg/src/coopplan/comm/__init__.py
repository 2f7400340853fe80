"""Broadcast messaging, receiver-side reflection and the shared tip list."""

from .messages import (
    GREETINGS,
    MAX_LIST_WORDS,
    MAX_MESSAGE_CHARS,
    DialogueHistory,
    KnowledgeList,
    Message,
    MessageBus,
    PrivilegedInfo,
    broadcast,
    cap_words,
    trim_message,
    word_count,
)
from .protocol import (
    CommTrigger,
    KnowledgeBoard,
    LocalInfo,
    extract_list,
    generate_message,
    message_prompt,
    reflect_and_update,
    reflection_prompt,
    should_communicate,
    wants_reflection,
)
