"""Built-in task suites and the YAML task-definition format.

Task file layout::

    schema_version: 1
    id: wash_dishes
    kind: household          # or transport
    layout: apartment
    horizon: 250
    n_agents: 2
    objects:
      - {id: 101, class: dishwasher, room: kitchen, cell: [0, 5], container: true, openable: true, movable: false}
      - {id: 140, class: plate, in: 102}
      - {id: 141, class: plate, on: 103}
    goal:
      - {relation: IN, class: plate, target: 101, count: 2}
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import yaml

from .layout import get_layout
from .state import GoalPredicate, InContainer, InRoom, ObjectInstance, OnSurface, Task

TASK_SCHEMA_VERSION = 1

HOUSEHOLD_HORIZON = 250
TRANSPORT_HORIZON = 3000
CONTAINER_CAPACITY = 3


def _fixture(oid, cls, room, cell, *, surface=False, container=False, openable=False):
    return ObjectInstance(
        oid, cls, InRoom(room, cell),
        is_container=container, is_surface=surface, is_openable=openable, open=False, movable=False,
    )


def _item(oid, cls, where):
    if where[0] not in ("on", "in"):
        loc = InRoom(*where)
    elif where[0] == "on":
        loc = OnSurface(where[1])
    else:
        loc = InContainer(where[1])
    return ObjectInstance(oid, cls, loc)


def _on(i):
    return ("on", i)


def _in(i):
    return ("in", i)


def apartment_objects() -> tuple[ObjectInstance, ...]:
    """The shared apartment inventory used by every household task."""
    fixtures = [
        _fixture(100, "fridge", "kitchen", (0, 0), container=True, openable=True),
        _fixture(101, "dishwasher", "kitchen", (0, 5), container=True, openable=True),
        _fixture(102, "cabinet", "kitchen", (5, 0), container=True, openable=True),
        _fixture(103, "kitchentable", "kitchen", (1, 3), surface=True),
        _fixture(104, "dinnertable", "kitchen", (4, 2), surface=True),
        _fixture(110, "coffeetable", "livingroom", (2, 2), surface=True),
        _fixture(111, "sofa", "livingroom", (4, 4), surface=True),
        _fixture(112, "tvstand", "livingroom", (5, 0), surface=True),
        _fixture(120, "bed", "bedroom", (4, 4), surface=True),
        _fixture(121, "dresser", "bedroom", (0, 5), container=True, openable=True),
        _fixture(122, "nightstand", "bedroom", (5, 2), surface=True),
        _fixture(130, "desk", "office", (3, 3), surface=True),
        _fixture(131, "bookshelf", "office", (5, 5), surface=True),
        _fixture(132, "drawer", "office", (0, 5), container=True, openable=True),
    ]
    items = [
        _item(140, "plate", _in(102)),
        _item(141, "plate", _on(103)),
        _item(142, "plate", _on(130)),
        _item(143, "fork", _on(103)),
        _item(144, "fork", _in(102)),
        _item(145, "fork", _on(111)),
        _item(150, "cupcake", _on(103)),
        _item(151, "cupcake", _in(121)),
        _item(152, "cupcake", _on(122)),
        _item(153, "pudding", _in(102)),
        _item(154, "pudding", _on(130)),
        _item(155, "apple", _on(103)),
        _item(156, "apple", _on(131)),
        _item(157, "juice", ("kitchen", (4, 4))),
        _item(158, "juice", _on(112)),
        _item(159, "wine", _on(111)),
        _item(160, "wine", _in(132)),
        _item(161, "coffeepot", _on(103)),
        _item(162, "pancake", _in(102)),
        _item(163, "poundcake", _on(122)),
        _item(170, "book", _on(130)),
        _item(171, "pillow", _on(120)),
        _item(172, "milk", _in(100)),
        _item(173, "remote", _on(110)),
    ]
    return tuple(fixtures + items)


def _household(task_id: str, title: str, relation: str, target: int, counts: Iterable[tuple[str, int]]) -> Task:
    goal = tuple(GoalPredicate(relation, cls, target, n) for cls, n in counts)
    return Task(task_id, get_layout("apartment"), apartment_objects(), goal, HOUSEHOLD_HORIZON, 2, "household", title)


def household_tasks() -> list[Task]:
    return [
        _household("afternoon_tea", "Prepare afternoon tea", "ON", 110,
                   [("cupcake", 2), ("pudding", 1), ("apple", 1), ("juice", 1), ("wine", 1)]),
        _household("wash_dishes", "Wash dishes", "IN", 101, [("plate", 2), ("fork", 2)]),
        _household("prepare_meal", "Prepare a meal", "ON", 104,
                   [("coffeepot", 1), ("cupcake", 1), ("pancake", 1), ("poundcake", 1),
                    ("pudding", 1), ("apple", 1), ("juice", 1), ("wine", 1)]),
        _household("put_groceries", "Put groceries", "IN", 100,
                   [("cupcake", 1), ("pancake", 1), ("poundcake", 1), ("pudding", 1),
                    ("apple", 1), ("juice", 1), ("wine", 1)]),
        _household("dinner_table", "Set up a dinner table", "ON", 104, [("plate", 2), ("fork", 2)]),
    ]


def _basket(oid, cls, where):
    o = _item(oid, cls, where)
    return ObjectInstance(o.id, o.cls, o.location, is_container=True, capacity=CONTAINER_CAPACITY)


def transport_tasks() -> list[Task]:
    layout = get_layout("house")
    fixtures = [
        _fixture(200, "counter", "kitchen", (4, 0), surface=True),
        _fixture(201, "fridge", "kitchen", (0, 0), container=True, openable=True),
        _fixture(202, "sofa", "livingroom", (1, 4), surface=True),
        _fixture(203, "desk", "office", (3, 2), surface=True),
        _fixture(204, "bed", "bedroom", (2, 4), surface=True),
        _fixture(205, "sink", "bathroom", (4, 1), surface=True),
        _fixture(206, "shelf", "office", (5, 0), surface=True),
    ]
    food = [
        _item(210, "apple", _on(200)), _item(211, "apple", ("kitchen", (1, 4))),
        _item(212, "banana", _on(200)), _item(213, "banana", _in(201)),
        _item(214, "orange", ("livingroom", (4, 1))), _item(215, "orange", _on(202)),
        _item(216, "bread", ("kitchen", (3, 5))), _item(217, "bread", _on(203)),
        _item(218, "loafbread", _in(201)), _item(219, "burger", ("bathroom", (2, 2))),
        _basket(230, "bowl", ("kitchen", (5, 5))), _basket(231, "plate", _on(202)),
        _basket(232, "teatray", ("office", (1, 1))),
    ]
    stuff = [
        _item(210, "calculator", _on(203)), _item(211, "calculator", ("office", (4, 4))),
        _item(212, "mouse", _on(206)), _item(213, "mouse", ("livingroom", (3, 0))),
        _item(214, "pen", _on(203)), _item(215, "pen", _on(205)),
        _item(216, "lighter", _on(200)), _item(217, "lighter", ("bathroom", (3, 4))),
        _item(218, "purse", _on(202)), _item(219, "iphone", ("kitchen", (2, 5))),
        _basket(230, "plasticbasket", ("office", (0, 0))), _basket(231, "woodbasket", ("livingroom", (5, 5))),
        _basket(232, "wickerbasket", ("kitchen", (5, 4))), _basket(233, "plasticbasket", ("bathroom", (0, 0))),
    ]

    def goal(items):
        counts: dict[str, int] = {}
        for o in items:
            if not o.is_container:
                counts[o.cls] = counts.get(o.cls, 0) + 1
        return tuple(GoalPredicate("ON", c, 204, n) for c, n in counts.items())

    return [
        Task("transport_food", layout, tuple(fixtures + food), goal(food), TRANSPORT_HORIZON, 2, "transport",
             "Transport food to the bed"),
        Task("transport_stuff", layout, tuple(fixtures + stuff), goal(stuff), TRANSPORT_HORIZON, 2, "transport",
             "Transport stuff to the bed"),
    ]


ABLATION_TASK_IDS = ("wash_dishes", "dinner_table", "afternoon_tea")


def suite(suite_id: str) -> list[Task]:
    """Named task suites: household, transport, default (both), ablation."""
    if suite_id == "household":
        return household_tasks()
    if suite_id == "transport":
        return transport_tasks()
    if suite_id == "default":
        return household_tasks() + transport_tasks()
    if suite_id == "ablation":
        by_id = {t.id: t for t in household_tasks()}
        return [by_id[i] for i in ABLATION_TASK_IDS]
    by_id = {t.id: t for t in household_tasks() + transport_tasks()}
    if suite_id in by_id:
        return [by_id[suite_id]]
    raise KeyError(f"unknown task suite {suite_id!r}")


# -- file format -------------------------------------------------------------

def task_to_dict(task: Task) -> dict:
    objects = []
    for o in task.objects:
        d: dict = {"id": o.id, "class": o.cls}
        loc = o.location
        if isinstance(loc, InRoom):
            d["room"], d["cell"] = loc.room, list(loc.cell)
        elif isinstance(loc, OnSurface):
            d["on"] = loc.surface
        elif isinstance(loc, InContainer):
            d["in"] = loc.container
        for key, attr in (("container", "is_container"), ("surface", "is_surface"),
                          ("openable", "is_openable"), ("open", "open")):
            if getattr(o, attr):
                d[key] = True
        if not o.movable:
            d["movable"] = False
        if o.capacity is not None:
            d["capacity"] = o.capacity
        objects.append(d)
    return {
        "schema_version": TASK_SCHEMA_VERSION,
        "id": task.id,
        "title": task.title,
        "kind": task.kind,
        "layout": task.layout.id,
        "horizon": task.horizon,
        "n_agents": task.n_agents,
        "objects": objects,
        "goal": [p.to_dict() for p in task.goal],
    }


def task_from_dict(d: dict) -> Task:
    version = d.get("schema_version", TASK_SCHEMA_VERSION)
    if version != TASK_SCHEMA_VERSION:
        raise ValueError(f"unsupported task schema version {version}")
    objects = []
    for o in d["objects"]:
        if "room" in o:
            loc = InRoom(o["room"], tuple(o["cell"]))
        elif "on" in o:
            loc = OnSurface(o["on"])
        else:
            loc = InContainer(o["in"])
        objects.append(ObjectInstance(
            int(o["id"]), o["class"], loc,
            is_container=bool(o.get("container", False)),
            is_surface=bool(o.get("surface", False)),
            is_openable=bool(o.get("openable", False)),
            open=bool(o.get("open", False)),
            movable=bool(o.get("movable", True)),
            capacity=o.get("capacity"),
        ))
    goal = tuple(GoalPredicate(g["relation"], g["class"], int(g["target"]), int(g.get("count", 1)))
                 for g in d["goal"])
    return Task(
        d["id"], get_layout(d["layout"]), tuple(objects), goal,
        int(d.get("horizon", HOUSEHOLD_HORIZON)), int(d.get("n_agents", 2)),
        d.get("kind", "household"), d.get("title", ""),
    )


def load_task(path) -> Task:
    with open(path) as f:
        return task_from_dict(yaml.safe_load(f))


def save_task(task: Task, path) -> None:
    Path(path).write_text(yaml.safe_dump(task_to_dict(task), sort_keys=False))
