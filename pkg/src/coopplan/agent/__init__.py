"""Per-agent decision loop: memory, cost annotation, planning and parsing."""

from .memory import ActionRecord, AgentMemory, KnownObject, StepResult, new_memory, record_action, record_sent, update_memory
from .parse import ParseFailure, parse_action
from .planner import (
    ABLATIONS,
    FULL,
    NO_REFLECTION,
    NO_UTILITY,
    PROMPTED_COST,
    AblationFlags,
    CostAnnotatedAction,
    PlanDecision,
    annotate_costs,
    fallback_choice,
    plan_next_action,
    plain_candidates,
)
from .prompting import base_bindings, goal_text, privileged_info, progress_text
