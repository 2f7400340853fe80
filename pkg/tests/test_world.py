import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopplan.world import (
    APARTMENT,
    EnvAction,
    InContainer,
    InvalidTask,
    MalformedJointAction,
    NOOP,
    OnSurface,
    available_actions,
    goal_progress,
    load_task,
    observe,
    reset,
    save_task,
    step,
    suite,
    true_cost,
)
from helpers import brute_force_progress, check_invariants, flood_fill, oracle_walk_cost, random_state, task_by_id


def test_goal_progress_matches_brute_force_on_random_states():
    rng = random.Random(0)
    for _ in range(300):
        state = random_state(rng)
        assert goal_progress(state, state.task.goal) == brute_force_progress(state, state.task.goal)


def test_goal_progress_counts_nested_placement():
    task = task_by_id("transport_food")
    state, _ = reset(task, 0)
    from dataclasses import replace

    state.objects[230] = replace(state.objects[230], location=OnSurface(204))
    state.objects[210] = replace(state.objects[210], location=InContainer(230))
    assert goal_progress(state, task.goal) == pytest.approx(1 / 10)


def test_initial_progress_is_zero_for_every_task():
    for task in suite("default"):
        state, _ = reset(task, 0)
        assert goal_progress(state, task.goal) == 0.0


def test_walk_cost_matches_flood_fill():
    rng = random.Random(1)
    for _ in range(200):
        state = random_state(rng)
        agent = rng.randrange(state.n_agents)
        walks = [a for a in available_actions(state, agent) if a.kind == "walk"]
        a = rng.choice(walks)
        assert true_cost(state, agent, a) == oracle_walk_cost(state, agent, a)


def test_manipulation_costs_one_tick():
    rng = random.Random(2)
    state = random_state(rng, "wash_dishes")
    for a in available_actions(state, 0):
        if a.kind not in ("walk",):
            assert true_cost(state, 0, a) == 1


def test_conservation_and_capacity_over_random_steps():
    rng = random.Random(3)
    for ep in range(20):
        task = rng.choice(suite("default"))
        state, _ = reset(task, ep)
        for _ in range(100):
            joint = []
            for i in range(state.n_agents):
                acts = available_actions(state, i)
                joint.append(rng.choice(acts) if rng.random() < 0.9 else EnvAction.grasp(rng.choice(list(state.objects))))
            new, _, _, done, costs = step(state, joint)
            check_invariants(state, new)
            assert new.tick == min(state.tick + max(costs), task.horizon)
            state = new
            if done:
                break


def test_failed_action_leaves_world_untouched():
    task = task_by_id("wash_dishes")
    state, _ = reset(task, 0)
    far = EnvAction.grasp(999)
    new, obs, _, _, costs = step(state, [far, NOOP])
    assert costs[0] == 1
    assert obs[0].failure == "unknown object"
    assert new.objects == state.objects


def test_step_rejects_wrong_arity():
    state, _ = reset(task_by_id("wash_dishes"), 0)
    with pytest.raises(MalformedJointAction):
        step(state, [NOOP])
    with pytest.raises(MalformedJointAction):
        step(state, [NOOP, "walk"])


def test_reset_is_deterministic_and_validates():
    task = task_by_id("afternoon_tea")
    a, _ = reset(task, 7)
    b, _ = reset(task, 7)
    assert a.serialize() == b.serialize()
    from dataclasses import replace

    with pytest.raises(InvalidTask):
        reset(replace(task, horizon=0), 0)
    with pytest.raises(InvalidTask):
        reset(replace(task, goal=()), 0)


def test_observation_hides_closed_container_contents():
    task = task_by_id("wash_dishes")
    state, _ = reset(task, 0)
    from dataclasses import replace

    state.agents[0] = replace(state.agents[0], room="kitchen")
    obs = observe(state, 0)
    ids = {v.id for v in obs.visible}
    assert 102 in ids and 140 not in ids  # plate 140 sits in the closed cabinet


def test_apartment_distances_differ_from_manhattan():
    d = flood_fill(APARTMENT, ("kitchen", (2, 2)))
    assert d[("kitchen", (4, 2))] > 2


def test_task_file_round_trip(tmp_path):
    for task in suite("default"):
        path = tmp_path / f"{task.id}.json"
        save_task(task, path)
        assert load_task(path) == task


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 30))
def test_random_rollouts_keep_progress_in_unit_interval(seed, n):
    rng = random.Random(seed)
    task = rng.choice(suite("default"))
    state, _ = reset(task, seed)
    for _ in range(n):
        joint = [rng.choice(available_actions(state, i)) for i in range(state.n_agents)]
        new, _, reward, _, _ = step(state, joint)
        check_invariants(state, new)
        assert 0.0 <= reward <= 1.0
        state = new
