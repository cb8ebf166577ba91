"""Delta-rooted subtrees of K_N: reduction to (shape, extension) and contour paths.

Vertices are the integers ``1..N``; the cemetery is ``DELTA = 0``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, Mapping, Optional

from .combinatorics import BinaryShape, BouquetConfig, PartitionOfL

DELTA = 0


class TreeStructureError(ValueError):
    pass


@dataclass(frozen=True)
class RootedSpanningSubtree:
    """Parent map of an embedded tree rooted at DELTA, plus the marked list."""

    parent: Mapping[int, int]
    marked: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.parent)

    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = defaultdict(list)
        for v, p in self.parent.items():
            ch[p].append(v)
        return ch


def _order_and_leafsets(tree: RootedSpanningSubtree, marked: frozenset[int]):
    """BFS order from DELTA, children map, and the marked labels above each vertex."""
    ch = tree.children()
    order = [DELTA]
    i = 0
    while i < len(order):
        order.extend(ch.get(order[i], ()))
        i += 1
    if len(order) != len(tree.parent) + 1:
        raise TreeStructureError("parent map contains a cycle or a vertex not connected to DELTA")
    above: dict[int, frozenset[int]] = {}
    for v in reversed(order):
        s = frozenset((v,)) if v in marked else frozenset()
        for c in ch.get(v, ()):
            s |= above[c]
        above[v] = s
    return order, ch, above


def _sorted_children(ch, above, v):
    # plane order: siblings by smallest marked label above them
    return sorted(ch.get(v, ()), key=lambda c: min(above[c]))


@dataclass(frozen=True)
class ReducedObservation:
    """Equivalence class of a marked subtree under relabelling of unmarked vertices.

    ``nodes`` lists the reduced vertices (marked vertices and branch points)
    in first-visit contour order as ``(leafset, label, parent_index)``;
    ``label`` is 0 for an unmarked branch point and ``parent_index`` is -1
    for a child of DELTA.  ``u[i]`` counts the unmarked degree-two vertices
    between ``nodes[i]`` and its reduced parent.
    """

    shape_key: str
    u: tuple[int, ...]
    r: int
    l: int
    d: int
    binary: bool
    blocks: PartitionOfL
    nodes: tuple[tuple[tuple[int, ...], int, int], ...] = field(repr=False)
    bouquet: Optional[BouquetConfig] = field(default=None, repr=False, compare=False)

    @property
    def inner_count(self) -> int:
        return self.d - self.l

    @property
    def classification(self) -> str:
        return "binary" if self.binary else "degenerate"

    @property
    def key(self) -> str:
        return f"{self.shape_key}#{','.join(map(str, self.u))}"

    @classmethod
    def from_bouquet(cls, config: BouquetConfig, u: Iterable[int]) -> "ReducedObservation":
        u = tuple(int(x) for x in u)
        nodes: list[tuple[tuple[int, ...], int, int]] = []

        def visit(t, parent_idx):
            leafset = BinaryShape(t).leaf_set
            nodes.append((leafset, t if isinstance(t, int) else 0, parent_idx))
            me = len(nodes) - 1
            if not isinstance(t, int):
                for c in t:
                    visit(c, me)

        for s in config.shapes:
            visit(s.tree, -1)
        if len(u) != len(nodes):
            raise ValueError(f"extension vector needs {len(nodes)} entries, got {len(u)}")
        if any(x < 0 for x in u):
            raise ValueError("extension entries must be nonnegative")
        l = config.l
        return cls(
            shape_key=str(config),
            u=u,
            r=config.r,
            l=l,
            d=l + sum(u) + (l - config.r),
            binary=True,
            blocks=config.blocks,
            nodes=tuple(nodes),
            bouquet=config,
        )


def _encode(x, rch, marked, top):
    kids = [_encode(c, rch, marked, False) for c in rch.get(x, ())]
    if x in marked:
        body = f"{x}[{','.join(kids)}]" if kids else str(x)
        return f"({body})" if top else body
    body = ",".join(kids)
    return f"({body})"


def reduce_observation(tree: RootedSpanningSubtree, L: Optional[Iterable[int]] = None) -> ReducedObservation:
    """Collapse unmarked single-child vertices of ``tree`` and record their counts."""
    labels = tuple(sorted(L if L is not None else tree.marked))
    marked = frozenset(labels)
    missing = [x for x in labels if x not in tree.parent]
    if missing:
        raise TreeStructureError(f"marked vertices {missing} are not in the tree")
    order, ch, above = _order_and_leafsets(tree, marked)
    for v in order[1:]:
        if v not in marked and not ch.get(v):
            raise TreeStructureError(f"leaf {v} is not marked")

    reduced = {v for v in order[1:] if v in marked or len(ch.get(v, ())) >= 2}
    u_of: dict[int, int] = {}
    rparent: dict[int, int] = {}
    for x in reduced:
        y, k = tree.parent[x], 0
        while y != DELTA and y not in reduced:
            k += 1
            y = tree.parent[y]
        u_of[x], rparent[x] = k, y

    rch: dict[int, list[int]] = defaultdict(list)
    for x, p in rparent.items():
        rch[p].append(x)
    for p in rch:
        rch[p].sort(key=lambda c: min(above[c]))

    contour: list[int] = []
    stack = list(reversed(rch[DELTA]))
    while stack:
        x = stack.pop()
        contour.append(x)
        stack.extend(reversed(rch.get(x, ())))
    index = {x: i for i, x in enumerate(contour)}
    nodes = tuple(
        (tuple(sorted(above[x])), x if x in marked else 0, index.get(rparent[x], -1))
        for x in contour
    )

    binary = all(not ch.get(x) for x in labels) and all(
        len(ch[x]) == 2 for x in reduced if x not in marked
    )
    tops = rch[DELTA]
    bouquet = None
    if binary:
        def nest(x):
            kids = rch.get(x)
            return x if not kids else tuple(nest(c) for c in kids)

        bouquet = BouquetConfig(tuple(BinaryShape(nest(x)) for x in tops))

    return ReducedObservation(
        shape_key="|".join(f"({_encode(x, rch, marked, True)})" for x in tops),
        u=tuple(u_of[x] for x in contour),
        r=len(tops),
        l=len(labels),
        d=tree.size,
        binary=binary,
        blocks=tuple(tuple(sorted(above[x])) for x in tops),
        nodes=nodes,
        bouquet=bouquet,
    )


def subtree_spanned(parent: Mapping[int, int], L: Iterable[int]) -> RootedSpanningSubtree:
    """Smallest DELTA-rooted subtree of a full parent map containing ``L``."""
    labels = tuple(sorted(L))
    sub: dict[int, int] = {}
    for x in labels:
        while x != DELTA and x not in sub:
            sub[x] = parent[x]
            x = parent[x]
    return RootedSpanningSubtree(sub, labels)


@dataclass(frozen=True)
class DyckPath:
    steps: tuple[int, ...]
    leaf_marks: tuple[tuple[int, int], ...]  # (label, first-visit time), sorted by label

    @property
    def heights(self) -> list[int]:
        return [0, *accumulate(self.steps)]

    def validate(self) -> None:
        h = self.heights
        if any(s not in (1, -1) for s in self.steps):
            raise TreeStructureError("steps must be +1 or -1")
        if min(h) < 0 or h[-1] != 0:
            raise TreeStructureError("not a Dyck path")
        for _, k in self.leaf_marks:
            if not 0 < k <= len(self.steps) or self.steps[k - 1] != 1:
                raise TreeStructureError(f"mark at {k} is not a first visit")


def contour_encode(tree: RootedSpanningSubtree, L: Optional[Iterable[int]] = None) -> DyckPath:
    """Depth-first contour of ``tree`` from DELTA with children in plane order."""
    marked = frozenset(L if L is not None else tree.marked)
    _, ch, above = _order_and_leafsets(tree, marked)
    steps: list[int] = []
    marks: dict[int, int] = {}
    stack = [iter(_sorted_children(ch, above, DELTA))]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if stack:
                steps.append(-1)
            continue
        steps.append(1)
        if nxt in marked:
            marks[nxt] = len(steps)
        stack.append(iter(_sorted_children(ch, above, nxt)))
    return DyckPath(tuple(steps), tuple(sorted(marks.items())))


def contour_decode(path: DyckPath) -> RootedSpanningSubtree:
    """Rebuild a tree from its contour; unmarked vertices get fresh ids above the labels."""
    path.validate()
    at_time = {k: lab for lab, k in path.leaf_marks}
    fresh = max(at_time.values(), default=0) + 1
    parent: dict[int, int] = {}
    stack = [DELTA]
    for t, s in enumerate(path.steps, start=1):
        if s == 1:
            v = at_time.get(t)
            if v is None:
                v, fresh = fresh, fresh + 1
            parent[v] = stack[-1]
            stack.append(v)
        else:
            stack.pop()
    return RootedSpanningSubtree(parent, tuple(sorted(at_time.values())))


def plane_shape(tree: RootedSpanningSubtree, L: Optional[Iterable[int]] = None) -> tuple[tuple[int, int], ...]:
    """Preorder ``(depth, label)`` list, label 0 for unmarked vertices."""
    marked = frozenset(L if L is not None else tree.marked)
    _, ch, above = _order_and_leafsets(tree, marked)
    out = []
    stack = [(c, 1) for c in reversed(_sorted_children(ch, above, DELTA))]
    while stack:
        v, depth = stack.pop()
        out.append((depth, v if v in marked else 0))
        stack.extend((c, depth + 1) for c in reversed(_sorted_children(ch, above, v)))
    return tuple(out)


def excursion_partition(path: DyckPath) -> PartitionOfL:
    """Group marked labels by the excursion of the contour height above zero."""
    excursion_of_time = []
    h, e = 0, -1
    for s in path.steps:
        if h == 0:
            e += 1
        h += s
        excursion_of_time.append(e)
    blocks: dict[int, list[int]] = defaultdict(list)
    for lab, k in path.leaf_marks:
        blocks[excursion_of_time[k - 1]].append(lab)
    return tuple(sorted(tuple(sorted(b)) for b in blocks.values()))


def excursion_count(path: DyckPath) -> int:
    return sum(1 for h in path.heights[:-1] if h == 0) if path.steps else 0
