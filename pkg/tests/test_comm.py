import logging
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopplan.agent import new_memory, update_memory
from coopplan.agent.prompting import goal_text
from coopplan.comm import (
    CommTrigger,
    DialogueHistory,
    KnowledgeBoard,
    KnowledgeList,
    LocalInfo,
    Message,
    MessageBus,
    PrivilegedInfo,
    broadcast,
    cap_words,
    extract_list,
    generate_message,
    message_prompt,
    reflect_and_update,
    should_communicate,
    trim_message,
    wants_reflection,
    word_count,
)
from coopplan.harness.episode import local_info
from coopplan.llm import ScriptedBackend
from coopplan.world import reset
from helpers import task_by_id


class Fixed:
    def __init__(self, reply):
        self.reply = reply
        self.prompts = []

    def complete(self, request):
        self.prompts.append(request.prompt)
        return self.reply


def fresh(task_id="wash_dishes", agent=0):
    task = task_by_id(task_id)
    _, obs = reset(task, 0)
    mem = new_memory(agent, task)
    update_memory(mem, obs[agent])
    return task, mem


def quiet_memory(**kw):
    base = dict(messages_sent=1, tick=12, progress_view=((1, 2),), prev_progress=((1, 2),), newly_discovered=(),
                last_failure=None, last_comm_tick=3)
    base.update(kw)
    return SimpleNamespace(**base)


INFO = LocalInfo("Alice", "Bob", "I'm in the <kitchen>.", "[goexplore] <kitchen>", "")
GOAL = "Find and put 2 <plate> into the <dishwasher> (101)."


def test_episode_start_trigger():
    _, mem = fresh()
    assert should_communicate(mem) == CommTrigger("EpisodeStart")


def test_trigger_priority():
    m = quiet_memory(progress_view=((2, 2),), newly_discovered=(141,), last_failure="object too far")
    assert should_communicate(m).reason == "SubgoalCompleted"
    m = quiet_memory(newly_discovered=(141,), last_failure="object too far")
    assert should_communicate(m).reason == "GoalObjectDiscovered"
    m = quiet_memory(last_failure="object too far")
    assert should_communicate(m).reason == "ActionFailed"


def test_quiescent_state_stays_silent():
    assert should_communicate(quiet_memory()) is None


def test_heartbeat():
    m = quiet_memory(tick=13, last_comm_tick=3)
    assert str(should_communicate(m, heartbeat=10)) == "Heartbeat(10)"
    assert should_communicate(quiet_memory(tick=12, last_comm_tick=3), heartbeat=10) is None
    with pytest.raises(ValueError):
        CommTrigger("Heartbeat", 0)


def test_discovery_trigger_from_observation():
    task, mem = fresh()
    mem.messages_sent = 1
    mem.newly_discovered = ()
    from dataclasses import replace

    from coopplan.world import VisibleObject, InRoom

    _, obs = reset(task, 0)
    plate = VisibleObject(999, "plate", InRoom(mem.room, mem.cell), mem.room, mem.cell, False, False, False, False)
    update_memory(mem, replace(obs[0], visible=obs[0].visible + (plate,), tick=5))
    assert should_communicate(mem).reason == "GoalObjectDiscovered"


def test_scripted_opener_declares_room_split():
    task, mem = fresh()
    msg = generate_message(ScriptedBackend(), goal_text(task.goal, task.names()), local_info(mem),
                           KnowledgeList(), 0, 0)
    assert msg.text == "Room split: Alice: <bedroom>, <livingroom>; Bob: <kitchen>, <office>."


def test_long_reply_trimmed_at_word_boundary():
    reply = ("word " * 120).strip()  # 599 characters
    msg = generate_message(Fixed(reply), GOAL, INFO, KnowledgeList(), 0, 0)
    assert len(msg.text) <= 500
    assert reply.startswith(msg.text) and reply[len(msg.text)] == " "


def test_message_prompt_carries_tips_and_greetings():
    tips = "- Say where objects are.\n- Split rooms early."
    prompt = message_prompt(GOAL, INFO, KnowledgeList(1, tips, 1))
    assert tips in prompt
    assert 'Alice: "Hi, I\'ll let you know' in prompt and 'Bob: "Thanks! I\'ll let you know' in prompt
    assert "Here are some hints to help you generate more useful messages" in prompt


def test_reflect_echo_increments_version():
    k = KnowledgeList(3, "- Keep it short.", 0)
    backend = Fixed("-------------------------\n- Keep it short.\n-------------------------")
    new = reflect_and_update(backend, GOAL, INFO, PrivilegedInfo("plan", "none"), Message(1, 0, "hi"), k, 0, "Bob")
    assert new.tips_text == k.tips_text and new.version == 4 and new.last_editor == 0


def test_reflect_caps_long_list_at_sentence():
    body = " ".join(f"Tip number {i} is here." for i in range(30))  # 150 words
    backend = Fixed(f"-------------------------\n{body}\n-------------------------")
    new = reflect_and_update(backend, GOAL, INFO, PrivilegedInfo("p", "a"), Message(1, 0, "hi"), KnowledgeList(), 1, "Bob")
    assert word_count(new.tips_text) <= 100
    assert new.tips_text.endswith(".")
    assert body.startswith(new.tips_text)


def test_unparseable_reflection_keeps_list(caplog):
    k = KnowledgeList(2, "- a tip", 1)
    with caplog.at_level(logging.WARNING):
        new = reflect_and_update(Fixed("no idea"), GOAL, INFO, PrivilegedInfo("p", "a"), Message(1, 0, "hi"), k, 0, "Bob")
    assert new is k
    assert "keeping version 2" in caplog.text


def test_scripted_reflector_adds_location_tip():
    task, mem = fresh(agent=1)
    sender_task, sender = fresh(agent=0)
    from coopplan.agent.prompting import privileged_info

    msg = Message(0, 0, "I'm in <kitchen> holding nothing.")
    new = reflect_and_update(ScriptedBackend(), goal_text(task.goal, task.names()), local_info(mem),
                             privileged_info(sender), msg, KnowledgeList(), 1, "Alice")
    assert "- Always include object locations when reporting discoveries." in new.tips_text.split("\n")
    assert new.version == 1


def test_reflection_prompt_shows_privileged_plan_and_list():
    backend = Fixed("- x")
    reflect_and_update(backend, GOAL, INFO, PrivilegedInfo("Alice plans to open <cabinet> (102).", "none"),
                       Message(1, 0, "hello"), KnowledgeList(1, "- tip one", 1), 0, "Bob")
    prompt = backend.prompts[0]
    assert "Current plans: Alice plans to open <cabinet> (102)." in prompt
    assert "-------------------------\n- tip one\n-------------------------" in prompt
    assert 'Bob: "hello"' in prompt


def test_extract_list_forms():
    assert extract_list("junk\n-----\n- a\n- b\n-----\nmore") == "- a\n- b"
    assert extract_list("Sure:\n1. first\n2. second") == "1. first\n2. second"
    assert extract_list("nothing here") is None


def test_board_versioning():
    board = KnowledgeBoard()
    k1 = board.current.updated("- a", 0)
    assert board.apply(k1, 1)
    assert not board.apply(k1, 1)
    with pytest.raises(ValueError):
        board.apply(KnowledgeList(5, "- z", 1), 2)
    assert [r["version"] for r in board.audit] == [0, 1]


def test_reflection_schedule():
    assert all(wants_reflection(k, None, 5) for k in range(5))
    assert not wants_reflection(5, "GoalObjectDiscovered", 5)
    assert wants_reflection(9, "ActionFailed", 5)


def test_broadcast_two_agents():
    bus = MessageBus(2)
    m = Message(0, 4, "hi")
    assert broadcast(m, bus, 2) == [1]
    inboxes, _ = bus.deliver()
    assert inboxes == [(), (m,)]
    assert bus.deliver()[0] == [(), ()]


def test_broadcast_four_agents():
    bus = MessageBus(4)
    assert broadcast(Message(2, 0, "x"), bus, 4) == [0, 1, 3]
    inboxes, _ = bus.deliver()
    assert inboxes[2] == ()
    assert all(len(inboxes[i]) == 1 for i in (0, 1, 3))


def test_simultaneous_senders_ordered_by_tick_then_sender():
    bus = MessageBus(3)
    a, b = Message(1, 6, "from bob"), Message(0, 6, "from alice")
    bus.post(a)
    bus.post(b)
    inboxes, batch = bus.deliver()
    assert batch == [b, a]
    assert inboxes[2] == (b, a)
    assert inboxes[0] == (a,) and inboxes[1] == (b,)


def test_message_limits():
    with pytest.raises(ValueError):
        Message(0, 0, "x" * 501)
    with pytest.raises(ValueError):
        KnowledgeList(0, "w " * 101)
    with pytest.raises(ValueError):
        DialogueHistory([Message(0, 5, "a"), Message(1, 4, "b")])


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="ab .\n", max_size=1200))
def test_trim_and_cap_properties(text):
    t = trim_message(text)
    assert len(t) <= 500
    c = cap_words(text)
    assert word_count(c) <= 100
    assert text.strip().startswith(c)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.text(alphabet="abc ", min_size=1, max_size=20)), max_size=12))
def test_exactly_once_delivery(sends):
    bus = MessageBus(4)
    posted = [Message(s, 0, t) for s, t in sends]
    for m in posted:
        bus.post(m)
    inboxes, _ = bus.deliver()
    for k, m in enumerate(posted):
        copies = sum(sum(1 for x in box if x is m) for box in inboxes)
        assert copies == 3
