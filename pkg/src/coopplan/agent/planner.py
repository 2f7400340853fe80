"""Choose the next environment action: annotate, prompt, parse, fall back."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..llm.backends import Backend, CompletionRequest
from ..llm.prompts import render_template, template_for
from ..utility.model import predict_cost
from ..world.render import render_action_text, render_observation_text
from ..world.state import EnvAction, Observation
from .memory import AgentMemory
from .parse import ParseFailure, parse_action
from .prompting import annotated_line, available_actions_text, base_bindings

log = logging.getLogger(__name__)

PARSE_RETRIES = 1


@dataclass(frozen=True)
class AblationFlags:
    use_utility: bool = True
    prompted_cost_estimation: bool = False
    use_reflection: bool = True

    def __post_init__(self):
        if self.prompted_cost_estimation and self.use_utility:
            raise ValueError("prompted cost estimation replaces the utility; disable use_utility")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


FULL = AblationFlags()
NO_UTILITY = AblationFlags(use_utility=False)
PROMPTED_COST = AblationFlags(use_utility=False, prompted_cost_estimation=True)
NO_REFLECTION = AblationFlags(use_reflection=False)

# row order of the ablation table
ABLATIONS = (
    ("full", FULL),
    ("no_utility", NO_UTILITY),
    ("prompted_cost", PROMPTED_COST),
    ("no_reflection", NO_REFLECTION),
)


@dataclass(frozen=True)
class CostAnnotatedAction:
    action: EnvAction
    rendered: str
    cost: Optional[float] = None

    @property
    def line(self) -> str:
        return annotated_line(self.rendered, self.cost)


def plain_candidates(candidates: Sequence[EnvAction], names) -> list[CostAnnotatedAction]:
    return [CostAnnotatedAction(a, render_action_text(a, names)) for a in candidates]


def annotate_costs(utility_model, obs_text: str, candidates: Sequence[EnvAction], names) -> list[CostAnnotatedAction]:
    """One cost estimate per candidate, all from the same observation text."""
    if not candidates:
        raise ValueError("no candidates to annotate")
    out = []
    for a in candidates:
        text = render_action_text(a, names)
        out.append(CostAnnotatedAction(a, text, predict_cost(utility_model, obs_text, text)))
    return out


def fallback_choice(annotated: Sequence[CostAnnotatedAction]) -> CostAnnotatedAction:
    """Cheapest annotated candidate; lexicographically first when there are no costs."""
    if all(c.cost is not None for c in annotated):
        return min(annotated, key=lambda c: (c.cost, c.rendered))
    return min(annotated, key=lambda c: c.rendered)


@dataclass
class PlanDecision:
    action: EnvAction
    rendered: str
    prompt: str
    replies: list[str] = field(default_factory=list)
    fallback: bool = False
    costs: Optional[list[float]] = None


def planner_prompt(memory: AgentMemory, annotated: Sequence[CostAnnotatedAction], flags: AblationFlags) -> str:
    bindings = base_bindings(memory)
    bindings["AVAILABLE_ACTIONS"] = available_actions_text([c.line for c in annotated],
                                                           flags.prompted_cost_estimation)
    return render_template(template_for("planner", memory.task_kind), bindings)


def plan_next_action(backend: Backend, memory: AgentMemory, obs: Observation, candidates: Sequence[EnvAction],
                     flags: AblationFlags = FULL, utility_model=None, seed: Optional[int] = None) -> PlanDecision:
    """Ask the backend for one of `candidates`; the result is always a member.

    BackendFailure propagates to the caller.
    """
    if not candidates:
        raise ValueError("no candidates")
    if flags.use_utility:
        if utility_model is None:
            raise ValueError("use_utility is set but no utility model was given")
        annotated = annotate_costs(utility_model, render_observation_text(obs), candidates, memory.names)
    else:
        annotated = plain_candidates(candidates, memory.names)
    prompt = planner_prompt(memory, annotated, flags)
    decision = PlanDecision(annotated[0].action, annotated[0].rendered, prompt,
                            costs=[c.cost for c in annotated] if flags.use_utility else None)
    for attempt in range(1 + PARSE_RETRIES):
        reply = backend.complete(CompletionRequest(prompt, seed=seed))
        decision.replies.append(reply)
        try:
            action = parse_action(reply, annotated)
        except ParseFailure as exc:
            log.debug("agent %d: unparseable plan reply (attempt %d): %s", memory.agent_id, attempt + 1, exc)
            continue
        chosen = next(c for c in annotated if c.action == action)
        decision.action, decision.rendered = chosen.action, chosen.rendered
        return decision
    chosen = fallback_choice(annotated)
    decision.action, decision.rendered, decision.fallback = chosen.action, chosen.rendered, True
    return decision
