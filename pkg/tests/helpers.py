"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import replace

from coopplan.world import Held, InContainer, InRoom, OnSurface, reset, suite
from coopplan.world.state import WorldState


def task_by_id(task_id):
    return suite(task_id)[0]


def random_state(rng: random.Random, task_id=None) -> WorldState:
    """Scatter every movable object over rooms, surfaces, containers and hands."""
    tasks = suite("default")
    task = rng.choice(tasks) if task_id is None else task_by_id(task_id)
    state, _ = reset(task, rng.randrange(10_000))
    objs = state.objects
    surfaces = [o.id for o in objs.values() if o.is_surface]
    fixed_containers = [o.id for o in objs.values() if o.is_container and not o.movable]
    baskets = [o.id for o in objs.values() if o.is_container and o.movable]
    hands = [(a.agent_id, h) for a in state.agents for h in (0, 1)]
    rng.shuffle(hands)
    fill = {c: 0 for c in baskets}
    for oid in sorted(objs):
        o = objs[oid]
        if not o.movable:
            if o.is_openable:
                objs[oid] = replace(o, open=rng.random() < 0.5)
            continue
        choices = ["room", "surface"]
        if not o.is_container:
            choices.append("container")
            if any(fill[c] < objs[c].capacity for c in baskets):
                choices.append("basket")
        if hands:
            choices.append("hand")
        kind = rng.choice(choices)
        if kind == "room":
            room = rng.choice(state.layout.rooms)
            loc = InRoom(room.id, rng.choice(room.cells()))
        elif kind == "surface":
            loc = OnSurface(rng.choice(surfaces))
        elif kind == "container":
            loc = InContainer(rng.choice(fixed_containers))
        elif kind == "basket":
            c = rng.choice([c for c in baskets if fill[c] < objs[c].capacity])
            fill[c] += 1
            loc = InContainer(c)
        else:
            loc = Held(*hands.pop())
        objs[oid] = replace(o, location=loc)
    for i, body in enumerate(state.agents):
        h = [None, None]
        for oid, o in objs.items():
            if isinstance(o.location, Held) and o.location.agent == i:
                h[o.location.hand] = oid
        state.agents[i] = replace(body, hands=tuple(h))
    return state


def facts(objs, oid):
    """Every (relation, target) an object is placed under, through any chain of
    containers and surfaces. Anything whose chain ends in a hand is placed nowhere."""
    if _ends_in_hand(objs, oid):
        return set()
    loc = objs[oid].location
    if isinstance(loc, InRoom):
        return set()
    if isinstance(loc, OnSurface):
        return {("ON", loc.surface)} | facts(objs, loc.surface)
    return {("IN", loc.container)} | facts(objs, loc.container)


def _ends_in_hand(objs, oid):
    loc = objs[oid].location
    while not isinstance(loc, (InRoom, Held)):
        oid = loc.surface if isinstance(loc, OnSurface) else loc.container
        loc = objs[oid].location
    return isinstance(loc, Held)


def brute_force_progress(state: WorldState, goal) -> float:
    objs = state.objects
    got = 0
    for pred in goal:
        n = sum(1 for oid, o in objs.items() if o.cls == pred.cls and (pred.relation, pred.target) in facts(objs, oid))
        got += min(n, pred.count)
    return got / sum(p.count for p in goal)


def flood_fill(layout, start):
    """Distances over the cell grid, built from room sizes, walls and doors only."""
    walk = {}
    for room in layout.rooms:
        for x in range(room.width):
            for y in range(room.height):
                if (x, y) not in room.blocked:
                    walk[(room.id, (x, y))] = []
    for (rid, (x, y)), nbrs in walk.items():
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (rid, (x + dx, y + dy))
            if n in walk:
                nbrs.append(n)
    for d in layout.doors:
        walk[(d.room_a, d.cell_a)].append((d.room_b, d.cell_b))
        walk[(d.room_b, d.cell_b)].append((d.room_a, d.cell_a))
    dist = {start: 0}
    q = deque([start])
    while q:
        cur = q.popleft()
        for n in walk[cur]:
            if n not in dist:
                dist[n] = dist[cur] + 1
                q.append(n)
    return dist


def centre_cell(room):
    cx, cy = room.width // 2, room.height // 2
    best = None
    for y in range(room.height):
        for x in range(room.width):
            if (x, y) in room.blocked:
                continue
            key = (abs(x - cx) + abs(y - cy), y, x)
            if best is None or key < best:
                best = key
    return best[2], best[1]


def gradient_check(rng, dim=16, n=8, hidden=8, eps=1e-6):
    """Worst relative error between analytic and central-difference gradients."""
    import numpy as np

    from coopplan.utility import init_params, mse_loss_and_grad

    p = init_params(dim, hidden, rng)
    p.b1 = rng.normal(0, 0.1, hidden)
    p.b2 = rng.normal(0, 0.1, hidden)
    p.b3 = np.array(rng.normal())
    X = rng.normal(0, 1 / np.sqrt(dim), (n, dim))
    y = rng.normal(0, 1, n)
    _, g = mse_loss_and_grad(p, X, y)
    worst = 0.0
    for name, value in p.items():
        num = np.zeros_like(value, dtype=float)
        flat = value.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + eps
            up, _ = mse_loss_and_grad(p, X, y)
            flat[k] = old - eps
            down, _ = mse_loss_and_grad(p, X, y)
            flat[k] = old
            num.reshape(-1)[k] = (up - down) / (2 * eps)
        ana = np.asarray(getattr(g, name), dtype=float)
        denom = max(np.linalg.norm(ana) + np.linalg.norm(num), 1e-12)
        worst = max(worst, float(np.linalg.norm(ana - num) / denom))
    return worst


def fresh_memory(task_id="wash_dishes", agent=0, seed=0):
    """Task, world state, observations and an up-to-date memory for `agent` at tick 0."""
    from coopplan.agent import new_memory, update_memory

    task = task_by_id(task_id)
    state, obs = reset(task, seed)
    mem = new_memory(agent, task)
    update_memory(mem, obs[agent])
    return task, state, obs, mem


class FixedBackend:
    """Replies with the given texts in turn (the last one repeats) and counts calls."""

    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, request):
        self.prompts.append(request.prompt)
        return self.replies[min(len(self.prompts), len(self.replies)) - 1]


class CountingModel:
    """Wraps a cost model and counts predict calls."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def predict(self, obs_text, action_text):
        self.calls += 1
        return self.inner.predict(obs_text, action_text)


GOLDEN_BINDINGS = {
    "AGENT_NAME": "Alice",
    "OPPO_NAME": "Bob",
    "GOAL": "Find and put 2 <plate>, 1 <fork> into the <dishwasher> (101).",
    "PROGRESS": "I'm in the <kitchen>. I'm holding nothing.",
    "DIALOGUE_HISTORY": 'Bob: "I found <plate> (141) on the <kitchentable> (103)."',
    "ACTION_HISTORY": "walk towards <kitchen>",
    "AVAILABLE_ACTIONS": "\ngrasp <plate> (141) (est. cost: 1 steps)\nwalk towards <livingroom> (est. cost: 7 steps)",
    "KNOWLEDGE_LIST": "- Share progress on finished subgoals.",
    "CURRENT_PLANS": "Bob plans to grasp <plate> (141).",
}


def golden_mismatches(golden_dir):
    """Names of household templates whose rendering differs from the golden file."""
    from coopplan.llm import load_template, render_template

    bad = []
    for name in ("planner", "message_generator", "reflector"):
        t = load_template(name)
        bindings = {k: v for k, v in GOLDEN_BINDINGS.items() if k in t.required}
        if render_template(t, bindings, strict=True) + "\n" != (golden_dir / f"{name}.txt").read_text():
            bad.append(name)
    return bad


class StubServer:
    """Local chat-completions stub. Each request pops the next scripted
    (status, body) pair; when the script runs out, `default(prompt)` answers."""

    def __init__(self, default=None):
        import json
        import threading
        from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

        self.script = []
        self.bodies = []
        self.headers = []
        self.default = default or (lambda prompt: "wait")
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                n = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(n))
                stub.bodies.append(body)
                stub.headers.append(dict(self.headers))
                if stub.script:
                    status, payload = stub.script.pop(0)
                else:
                    status = 200
                    payload = {"choices": [{"message": {"content": stub.default(body["messages"][0]["content"])}}]}
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


def scripted_reply(prompt):
    from coopplan.llm import CompletionRequest, ScriptedBackend

    return ScriptedBackend().complete(CompletionRequest(prompt))


def physical_node(state, oid):
    loc = state.objects[oid].location
    while True:
        if isinstance(loc, InRoom):
            return loc.room, loc.cell
        if isinstance(loc, Held):
            body = state.agents[loc.agent]
            return body.room, body.cell
        oid = loc.surface if isinstance(loc, OnSurface) else loc.container
        loc = state.objects[oid].location


def reach_cells(state, node):
    room_id, (x, y) = node
    room = state.layout.room(room_id)
    out = []
    for c in ((x, y), (x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
        if room.in_bounds(c) and c not in room.blocked:
            out.append((room_id, c))
    return out


def oracle_walk_cost(state, agent, action):
    body = state.agents[agent]
    dist = flood_fill(state.layout, (body.room, body.cell))
    if isinstance(action.target, str):
        goals = [(action.target, centre_cell(state.layout.room(action.target)))]
    else:
        goals = reach_cells(state, physical_node(state, action.target))
    return max(1, min(dist[g] for g in goals))


def check_invariants(before, after):
    assert set(before.objects) == set(after.objects)
    for oid, o in after.objects.items():
        b = before.objects[oid]
        assert o.cls == b.cls
        if not b.movable:
            assert o.location == b.location
        physical_node(after, oid)  # chain resolves, no cycles
        if isinstance(o.location, Held):
            assert after.agents[o.location.agent].hands[o.location.hand] == oid
    for body in after.agents:
        for hand, oid in enumerate(body.hands):
            if oid is not None:
                assert after.objects[oid].location == Held(body.agent_id, hand)
    for c in after.objects.values():
        inside = [o for o in after.objects.values() if o.location == InContainer(c.id)]
        if c.capacity is not None:
            assert sum(not o.is_container for o in inside) <= c.capacity
        assert all(not o.is_container for o in inside if c.movable)
    assert before.tick <= after.tick <= after.task.horizon


# criterion number -> one summary line, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(n, name, ok, detail, elapsed, limit=None):
    """Store the criterion's line; passing also requires the runtime bound."""
    in_time = limit is None or elapsed < limit
    verdict = "PASS" if ok and in_time else "FAIL"
    bound = f" (limit {limit:.0f} s)" if limit is not None else ""
    ACCEPTANCE[n] = f"criterion {n} {name}: {verdict} | {detail} | {elapsed:.1f} s{bound}"
    return ok and in_time
