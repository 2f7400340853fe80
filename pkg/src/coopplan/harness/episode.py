"""One cooperative episode: deliver, remember, reflect, talk or act, step."""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable, Optional

from ..agent.memory import StepResult, new_memory, record_action, record_sent, update_memory
from ..agent.planner import plan_next_action
from ..agent.prompting import base_bindings, goal_text, opponents, privileged_info
from ..comm.messages import KnowledgeList, MessageBus
from ..comm.protocol import (
    KnowledgeBoard,
    LocalInfo,
    generate_message,
    reflect_and_update,
    should_communicate,
    wants_reflection,
)
from ..llm.backends import Backend, BackendFailure, CallRecord, TranscriptTap, make_backend
from ..utility.model import OracleUtility, load_model
from ..world import available_actions, delivered, goal_progress, render_observation_text, reset, step
from ..world.state import AGENT_NAMES, NOOP, Task
from ..world.tasks import task_to_dict
from .config import ConfigError, RunConfig
from .records import RECORD_SCHEMA_VERSION, EpisodeRecord, digest

log = logging.getLogger(__name__)


def resolve_utility(config: RunConfig, utility=None):
    """The cost model an episode uses: an explicit object, "oracle", or a model file."""
    if not config.flags.use_utility:
        return None
    if utility is not None:
        return utility
    if config.utility is None:
        raise ConfigError("use_utility is set but no utility model is configured")
    if config.utility == "oracle":
        return "oracle"
    try:
        return load_model(config.utility)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load utility model {config.utility}: {exc}") from exc


def local_info(memory) -> LocalInfo:
    b = base_bindings(memory)
    return LocalInfo(b["AGENT_NAME"], b["OPPO_NAME"], b["PROGRESS"], b["ACTION_HISTORY"],
                     b["DIALOGUE_HISTORY"], memory.task_kind)


def run_episode(config: RunConfig, task: Task, seed: int, backend: Optional[Backend] = None,
                utility=None, knowledge: Optional[KnowledgeList] = None,
                calls_sink: Optional[Callable[[list[CallRecord]], None]] = None,
                on_step: Optional[Callable] = None) -> EpisodeRecord:
    """Play `task` from `seed` until the goal holds or the horizon is reached.

    Backend failures never abort the episode: the affected agent waits that
    macro-step and the failure is counted in the record.

    `on_step(tick, inboxes, memories, knowledge)` is called once memories are
    updated at every macro-step, and once more after the last step when the
    final messages have been delivered.
    """
    task = task.with_agents(config.n_agents)
    model = resolve_utility(config, utility)
    inner = backend if backend is not None else make_backend(config.backend)
    tap = inner if isinstance(inner, TranscriptTap) else TranscriptTap(inner)
    n = task.n_agents
    flags = config.flags
    mode = config.digest

    state, obs = reset(task, seed)
    memories = [new_memory(i, task, n) for i in range(n)]
    bus = MessageBus(n)
    board = KnowledgeBoard(knowledge if (knowledge is not None and config.comm.persist_knowledge)
                           else KnowledgeList())
    goal = goal_text(task.goal, task.names())
    results: list[Optional[StepResult]] = [None] * n
    record = EpisodeRecord(header={
        "schema_version": RECORD_SCHEMA_VERSION,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "seed": seed,
        "task_id": task.id,
        "task_kind": task.kind,
        "horizon": task.horizon,
        "task": task_to_dict(task),
        "initial_knowledge": board.current.to_dict(),
    })
    failures_total = 0
    fallbacks_total = 0

    while goal_progress(state, task.goal) < 1.0 and state.tick < task.horizon:
        tick = state.tick
        inboxes, _ = bus.deliver()
        event = {"tick": tick, "observations": [], "prompts": [], "replies": [], "actions": [],
                 "failures": [], "messages": [], "reflections": [], "fallbacks": [], "backend_failures": 0}
        tap.drain()

        for i in range(n):
            o = dataclasses.replace(obs[i], inbox=inboxes[i])
            obs[i] = o
            update_memory(memories[i], o, results[i])
            event["observations"].append(digest(render_observation_text(o), mode))
            event["failures"].append(o.failure)
        if on_step is not None:
            on_step(tick, inboxes, memories, board.current)

        # receivers reflect in ascending id order, each on its inbox in (tick, sender) order;
        # the first accepted update ends reflection for this macro-step
        updated = not flags.use_reflection
        for i in range(n):
            if updated:
                break
            mem = memories[i]
            before = mem.receptions - len(inboxes[i])
            for k, msg in enumerate(inboxes[i]):
                if updated:
                    break
                if not wants_reflection(before + k, msg.trigger, config.comm.reflect_first):
                    continue
                sender = memories[msg.sender]
                try:
                    new = reflect_and_update(tap, goal, local_info(mem), privileged_info(sender), msg,
                                             board.current, i, AGENT_NAMES[msg.sender], seed=seed)
                except BackendFailure as exc:
                    event["backend_failures"] += 1
                    log.warning("reflection by agent %d failed: %s", i, exc.cause)
                    continue
                accepted = board.apply(new, tick)
                updated = accepted
                event["reflections"].append({"editor": i, "message_from": msg.sender, "accepted": accepted,
                                             "version": board.current.version})

        joint = []
        for i in range(n):
            mem = memories[i]
            sent = None
            action = NOOP
            trigger = should_communicate(mem, obs[i], config.comm.heartbeat)
            if trigger is not None:
                try:
                    sent = generate_message(tap, goal, local_info(mem), board.current, i, tick, trigger, seed=seed)
                except BackendFailure as exc:
                    event["backend_failures"] += 1
                    log.warning("message generation by agent %d failed: %s", i, exc.cause)
                else:
                    bus.post(sent)
                    record_sent(mem, tick)
                    event["messages"].append(sent.to_dict())
                event["actions"].append({"agent": i, "kind": "comm", "text": "wait"})
                event["fallbacks"].append(False)
            else:
                cands = available_actions(state, i)
                agent_model = OracleUtility.from_state(state, i, obs[i]) if model == "oracle" else model
                try:
                    decision = plan_next_action(tap, mem, obs[i], cands, flags, agent_model, seed=seed)
                except BackendFailure as exc:
                    event["backend_failures"] += 1
                    log.warning("planning by agent %d failed: %s", i, exc.cause)
                    event["actions"].append({"agent": i, "kind": "noop_substituted", "text": "wait"})
                    event["fallbacks"].append(False)
                else:
                    action = decision.action
                    record_action(mem, action, decision.rendered)
                    event["actions"].append({"agent": i, "kind": "env", "text": decision.rendered})
                    event["fallbacks"].append(decision.fallback)
                    fallbacks_total += decision.fallback
            joint.append(action)
            results[i] = StepResult(action if trigger is None else None, sent)

        calls = tap.drain()
        event["prompts"] = [digest(c.prompt, mode) for c in calls]
        event["replies"] = [c.reply for c in calls]
        event["retries"] = sum(c.retries for c in calls)
        event["knowledge_version"] = board.current.version
        failures_total += event["backend_failures"]
        if calls_sink is not None:
            calls_sink(calls)

        state, obs, _, _, _ = step(state, joint)
        record.events.append(event)

    if on_step is not None:
        inboxes, _ = bus.deliver()
        for i in range(n):
            update_memory(memories[i], dataclasses.replace(obs[i], inbox=inboxes[i]), results[i])
        on_step(state.tick, inboxes, memories, board.current)

    sat, total = delivered(state)
    progress = goal_progress(state, task.goal)
    record.footer = {
        "completed": progress >= 1.0,
        "steps_used": state.tick,
        "goal_progress": progress,
        "delivered": sat,
        "total": total,
        "macro_steps": len(record.events),
        "messages": len(bus.sent),
        "backend_failures": failures_total,
        "fallbacks": fallbacks_total,
        "knowledge_version": board.current.version,
        "knowledge_audit": board.audit,
        "final_state": state.to_dict(),
    }
    record.validate()
    return record
