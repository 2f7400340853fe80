"""Room grids, door links and shortest-path distances over the cell graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

ROOM_KINDS = ("kitchen", "livingroom", "bedroom", "office", "bathroom")

Cell = tuple[int, int]
Node = tuple[str, Cell]


class InvalidLayout(ValueError):
    pass


@dataclass(frozen=True)
class Room:
    id: str
    kind: str
    width: int = 6
    height: int = 6
    blocked: frozenset[Cell] = field(default_factory=frozenset)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def walkable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def cells(self) -> list[Cell]:
        return [(x, y) for y in range(self.height) for x in range(self.width) if (x, y) not in self.blocked]

    @property
    def anchor(self) -> Cell:
        """Walkable cell nearest the room centre; the destination of a room walk."""
        cx, cy = self.width // 2, self.height // 2
        return min(self.cells(), key=lambda c: (abs(c[0] - cx) + abs(c[1] - cy), c[1], c[0]))


@dataclass(frozen=True)
class Door:
    room_a: str
    cell_a: Cell
    room_b: str
    cell_b: Cell


@dataclass(frozen=True)
class RoomGraph:
    id: str
    rooms: tuple[Room, ...]
    doors: tuple[Door, ...]

    def room(self, room_id: str) -> Room:
        for r in self.rooms:
            if r.id == room_id:
                return r
        raise KeyError(room_id)

    @property
    def room_ids(self) -> list[str]:
        return [r.id for r in self.rooms]

    def nodes(self) -> list[Node]:
        return [(r.id, c) for r in self.rooms for c in r.cells()]

    def neighbors(self, node: Node) -> list[Node]:
        return _adjacency(self)[node]

    def validate(self) -> None:
        ids = [r.id for r in self.rooms]
        if len(set(ids)) != len(ids):
            raise InvalidLayout(f"duplicate room ids in layout {self.id!r}")
        for r in self.rooms:
            if r.kind not in ROOM_KINDS:
                raise InvalidLayout(f"unknown room kind {r.kind!r}")
        for d in self.doors:
            for rid, cell in ((d.room_a, d.cell_a), (d.room_b, d.cell_b)):
                if rid not in ids:
                    raise InvalidLayout(f"door references unknown room {rid!r}")
                if not self.room(rid).walkable(cell):
                    raise InvalidLayout(f"door cell {cell} in {rid!r} is not walkable")
        nodes = self.nodes()
        if not nodes:
            raise InvalidLayout("layout has no walkable cells")
        if len(distances_from(self, nodes[0])) != len(nodes):
            raise InvalidLayout(f"layout {self.id!r} is not connected")


@lru_cache(maxsize=None)
def _adjacency(graph: RoomGraph) -> dict[Node, list[Node]]:
    adj: dict[Node, list[Node]] = {}
    for r in graph.rooms:
        for (x, y) in r.cells():
            adj[(r.id, (x, y))] = [
                (r.id, c) for c in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)) if r.walkable(c)
            ]
    for d in graph.doors:
        a, b = (d.room_a, d.cell_a), (d.room_b, d.cell_b)
        if a in adj and b in adj:
            adj[a].append(b)
            adj[b].append(a)
    return adj


@lru_cache(maxsize=4096)
def distances_from(graph: RoomGraph, source: Node) -> dict[Node, int]:
    """BFS distances (in cells) from `source` to every reachable node."""
    adj = _adjacency(graph)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def nearest(graph: RoomGraph, source: Node, goals: Iterable[Node]) -> tuple[Node, int] | None:
    """Closest goal node and its distance; ties broken by (room, y, x)."""
    dist = distances_from(graph, source)
    best = None
    for g in goals:
        if g in dist:
            key = (dist[g], g[0], g[1][1], g[1][0])
            if best is None or key < best[0]:
                best = (key, g)
    if best is None:
        return None
    return best[1], best[0][0]


def _room(rid: str, kind: str, blocked: Iterable[Cell] = ()) -> Room:
    return Room(rid, kind, 6, 6, frozenset(blocked))


# kitchen - livingroom - bedroom, livingroom - office; a short counter wall in
# three rooms keeps BFS distance different from Manhattan distance.
APARTMENT = RoomGraph(
    "apartment",
    rooms=(
        _room("kitchen", "kitchen", [(3, 1), (3, 2), (3, 3)]),
        _room("livingroom", "livingroom", [(2, 3), (3, 3)]),
        _room("bedroom", "bedroom", [(1, 2), (2, 2)]),
        _room("office", "office"),
    ),
    doors=(
        Door("kitchen", (5, 4), "livingroom", (0, 4)),
        Door("livingroom", (3, 5), "bedroom", (3, 0)),
        Door("livingroom", (5, 1), "office", (0, 1)),
    ),
)

HOUSE = RoomGraph(
    "house",
    rooms=(
        _room("kitchen", "kitchen", [(2, 2), (2, 3)]),
        _room("livingroom", "livingroom", [(3, 2), (3, 3)]),
        _room("office", "office", [(1, 4), (2, 4)]),
        _room("bedroom", "bedroom", [(4, 1), (4, 2)]),
        _room("bathroom", "bathroom"),
    ),
    doors=(
        Door("kitchen", (5, 2), "livingroom", (0, 2)),
        Door("livingroom", (5, 4), "office", (0, 4)),
        Door("livingroom", (2, 5), "bedroom", (2, 0)),
        Door("bedroom", (5, 3), "bathroom", (0, 3)),
    ),
)

LAYOUTS: dict[str, RoomGraph] = {g.id: g for g in (APARTMENT, HOUSE)}


def get_layout(layout_id: str) -> RoomGraph:
    try:
        return LAYOUTS[layout_id]
    except KeyError:
        raise InvalidLayout(f"unknown layout {layout_id!r}") from None
