"""Symbolic multi-room household simulator with partial observability."""

from .layout import APARTMENT, HOUSE, LAYOUTS, Door, InvalidLayout, Room, RoomGraph, distances_from, get_layout
from .render import render_action_text, render_observation_text
from .sim import (
    InvalidTask,
    MalformedJointAction,
    UnreachableTarget,
    available_actions,
    delivered,
    goal_progress,
    observe,
    reset,
    step,
    true_cost,
)
from .state import (
    AGENT_NAMES,
    NOOP,
    AgentBody,
    EnvAction,
    GoalPredicate,
    Held,
    InContainer,
    InRoom,
    ObjectInstance,
    Observation,
    OnSurface,
    Task,
    VisibleObject,
    WorldState,
)
from .tasks import load_task, save_task, suite, task_from_dict, task_to_dict

__all__ = [
    "APARTMENT", "HOUSE", "LAYOUTS", "Door", "InvalidLayout", "Room", "RoomGraph", "distances_from", "get_layout",
    "render_action_text", "render_observation_text",
    "InvalidTask", "MalformedJointAction", "UnreachableTarget", "available_actions", "delivered",
    "goal_progress", "observe", "reset", "step", "true_cost",
    "AGENT_NAMES", "NOOP", "AgentBody", "EnvAction", "GoalPredicate", "Held", "InContainer", "InRoom",
    "ObjectInstance", "Observation", "OnSurface", "Task", "VisibleObject", "WorldState",
    "load_task", "save_task", "suite", "task_from_dict", "task_to_dict",
]
