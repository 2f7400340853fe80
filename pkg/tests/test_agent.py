from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopplan.agent import (
    FULL,
    NO_UTILITY,
    PROMPTED_COST,
    AblationFlags,
    CostAnnotatedAction,
    ParseFailure,
    annotate_costs,
    fallback_choice,
    parse_action,
    plain_candidates,
    plan_next_action,
    update_memory,
)
from coopplan.agent.planner import planner_prompt
from coopplan.agent.prompting import PROMPTED_COST_SENTENCE
from coopplan.llm import CompletionRequest, ScriptedBackend
from coopplan.utility import OracleUtility
from coopplan.world import EnvAction, available_actions, observe, render_observation_text, step
from helpers import CountingModel, FixedBackend, fresh_memory

NAMES = {12: "plate", 31: "apple", 103: "kitchentable", 104: "dinnertable", 101: "dishwasher"}


def cands(*actions):
    return plain_candidates(list(actions), NAMES)


def test_parse_exact_rendering():
    c = cands(EnvAction.grasp(12), EnvAction.walk("kitchen"))
    assert parse_action("walk towards <kitchen>", c) == EnvAction.walk("kitchen")


def test_parse_free_text_with_id():
    c = cands(EnvAction.grasp(12), EnvAction.grasp(31), EnvAction.walk(12))
    assert parse_action("I think I should grab the <plate> (12) first.", c) == EnvAction.grasp(12)
    assert parse_action("I will grasp the apple (31)", c) == EnvAction.grasp(31)


def test_parse_class_name_when_unique():
    c = cands(EnvAction.grasp(12), EnvAction.open_(101))
    assert parse_action("Let's open the dishwasher.", c) == EnvAction.open_(101)


def test_parse_ambiguous_tables_fail():
    c = cands(EnvAction.put_on(12, 103), EnvAction.put_on(12, 104))
    with pytest.raises(ParseFailure):
        parse_action("put it on the table", c)
    with pytest.raises(ParseFailure):
        parse_action("put the plate (12) down", c)


def test_parse_is_case_insensitive_and_rejects_nonsense():
    c = cands(EnvAction.grasp(12), EnvAction.noop())
    assert parse_action("GRASP <PLATE> (12)", c) == EnvAction.grasp(12)
    assert parse_action("Answer: wait", c) == EnvAction.noop()
    with pytest.raises(ParseFailure):
        parse_action("bananas", c)


def test_parse_prefers_longer_exact_match():
    c = cands(EnvAction.put_in(12, 101), EnvAction.walk("kitchen"))
    assert parse_action("put <plate> (12) in <dishwasher> (101)", c) == EnvAction.put_in(12, 101)


def test_flags_conflict():
    with pytest.raises(ValueError):
        AblationFlags(use_utility=True, prompted_cost_estimation=True)


def test_single_candidate_is_chosen():
    _, _, obs, mem = fresh_memory()
    d = plan_next_action(ScriptedBackend(), mem, obs[0], [EnvAction.noop()], NO_UTILITY)
    assert d.action == EnvAction.noop()


def test_gibberish_falls_back_to_cheapest():
    _, state, obs, mem = fresh_memory()
    acts = available_actions(state, 0)
    model = OracleUtility.from_state(state, 0, obs[0])
    backend = FixedBackend("blah", "still blah")
    d = plan_next_action(backend, mem, obs[0], acts, FULL, model)
    assert d.fallback and len(backend.prompts) == 2
    assert d.action in acts
    assert d.costs[acts.index(d.action)] == min(d.costs)


def test_gibberish_without_costs_falls_back_lexicographically():
    _, state, obs, mem = fresh_memory()
    acts = available_actions(state, 0)
    d = plan_next_action(FixedBackend("??"), mem, obs[0], acts, NO_UTILITY)
    assert d.fallback and d.rendered == min(c.rendered for c in plain_candidates(acts, mem.names))


def test_retry_then_success():
    _, state, obs, mem = fresh_memory()
    acts = available_actions(state, 0)
    d = plan_next_action(FixedBackend("hmm", "wait"), mem, obs[0], acts, NO_UTILITY)
    assert d.action == EnvAction.noop() and not d.fallback and len(d.replies) == 2


def test_annotations_in_prompt_and_prompted_cost_sentence():
    _, state, obs, mem = fresh_memory()
    acts = available_actions(state, 0)
    model = OracleUtility.from_state(state, 0, obs[0])
    d = plan_next_action(ScriptedBackend(), mem, obs[0], acts, FULL, model)
    assert "(est. cost: " in d.prompt
    d = plan_next_action(ScriptedBackend(), mem, obs[0], acts, PROMPTED_COST)
    assert "(est. cost: " not in d.prompt and PROMPTED_COST_SENTENCE in d.prompt


def test_no_cost_queries_without_utility():
    _, state, obs, mem = fresh_memory()
    model = CountingModel(OracleUtility.from_state(state, 0, obs[0]))
    plan_next_action(ScriptedBackend(), mem, obs[0], available_actions(state, 0), NO_UTILITY, model)
    assert model.calls == 0
    plan_next_action(ScriptedBackend(), mem, obs[0], available_actions(state, 0), FULL, model)
    assert model.calls == len(available_actions(state, 0))


def test_annotation_floor_purity_and_order():
    _, state, obs, mem = fresh_memory()
    lo = render_observation_text(obs[0])
    model = OracleUtility.from_state(state, 0, obs[0])
    one = annotate_costs(model, lo, [EnvAction.noop()], mem.names)
    assert len(one) == 1 and one[0].cost >= 1
    acts = available_actions(state, 0)
    a, b = annotate_costs(model, lo, acts, mem.names), annotate_costs(model, lo, acts, mem.names)
    assert a == b and [c.action for c in a] == acts


def test_oracle_far_room_costs_more_than_adjacent_grasp():
    task, state, obs, mem = fresh_memory()
    state.agents[0] = replace(state.agents[0], room="kitchen", cell=(1, 4))  # next to the kitchentable
    o = observe(state, 0)
    model = OracleUtility.from_state(state, 0, o)
    lo = render_observation_text(o)
    ann = {c.action: c.cost for c in annotate_costs(model, lo, available_actions(state, 0), mem.names)}
    assert ann[EnvAction.walk("bedroom")] > ann[EnvAction.grasp(141)]


def test_scripted_planner_prefers_cheap_goal_grasp():
    _, state, _, mem = fresh_memory()
    state.agents[0] = replace(state.agents[0], room="kitchen", cell=(1, 4))
    update_memory(mem, observe(state, 0))
    c = [CostAnnotatedAction(EnvAction.walk("office"), "walk towards <office>", 7.0),
         CostAnnotatedAction(EnvAction.grasp(141), "grasp <plate> (141)", 1.0)]
    reply = ScriptedBackend().complete(CompletionRequest(planner_prompt(mem, c, FULL)))
    assert parse_action(reply, c) == EnvAction.grasp(141)


costs = st.lists(st.floats(1.0, 50.0), min_size=1, max_size=8)


@settings(max_examples=100, deadline=None)
@given(costs, st.floats(0.01, 100.0))
def test_fallback_argmin_is_scale_invariant(values, k):
    acts = [EnvAction.walk(f"room{i}") for i in range(len(values))]
    a = [CostAnnotatedAction(x, f"walk towards <room{i}>", v) for i, (x, v) in enumerate(zip(acts, values))]
    b = [replace(c, cost=c.cost * k) for c in a]
    assert fallback_choice(a).action == fallback_choice(b).action


@settings(max_examples=60, deadline=None)
@given(st.lists(st.text(max_size=80), min_size=2, max_size=2), st.integers(0, 5))
def test_closed_choice_with_adversarial_replies(replies, seed):
    _, state, obs, mem = fresh_memory(seed=seed)
    acts = available_actions(state, 0)
    d = plan_next_action(FixedBackend(*replies), mem, obs[0], acts, NO_UTILITY)
    assert d.action in acts


def test_memory_merges_observations_and_inbox():
    _, state, obs, mem = fresh_memory()
    before = set(mem.known_objects)
    n = len(mem.dialogue)
    state, obs, *_ = step(state, [EnvAction.walk("kitchen"), EnvAction.noop()])
    update_memory(mem, obs[0])
    assert before <= set(mem.known_objects)
    assert len(mem.dialogue) == n
    assert 103 in mem.known_objects and mem.known_objects[103].room == "kitchen"
