"""Binary leaf-labelled shapes, set partitions and bouquets.

Shapes are stored as nested tuples: a leaf is an ``int`` label and an
internal vertex is a pair ``(left, right)``.  Children are always ordered
so that the left subtree holds the smaller minimum label, which makes the
tuple itself a canonical key for the shape class.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Union

Tree = Union[int, tuple]
PartitionOfL = tuple[tuple[int, ...], ...]


def _min_leaf(tree: Tree) -> int:
    while not isinstance(tree, int):
        tree = tree[0]
    return tree


def _canonical(tree: Tree) -> Tree:
    if isinstance(tree, int):
        return tree
    a, b = (_canonical(t) for t in tree)
    if _min_leaf(b) < _min_leaf(a):
        a, b = b, a
    return (a, b)


def _leaves(tree: Tree) -> list[int]:
    out, stack = [], [tree]
    while stack:
        t = stack.pop()
        if isinstance(t, int):
            out.append(t)
        else:
            stack.extend(t)
    return sorted(out)


def _body(tree: Tree) -> str:
    if isinstance(tree, int):
        return str(tree)
    return ",".join(str(t) if isinstance(t, int) else f"({_body(t)})" for t in tree)


@dataclass(frozen=True)
class BinaryShape:
    """A rooted binary tree class with labelled leaves.

    ``BinaryShape(((2, 3), 1))`` and ``BinaryShape((1, (2, 3)))`` compare
    equal: the constructor reorders children by minimum leaf label.
    """

    tree: Tree

    def __post_init__(self):
        leaves = _leaves(self.tree)
        if not leaves:
            raise ValueError("a shape needs at least one leaf")
        if len(set(leaves)) != len(leaves):
            raise ValueError(f"repeated leaf label in {self.tree!r}")
        if any(x < 1 for x in leaves):
            raise ValueError("leaf labels must be positive integers")
        object.__setattr__(self, "tree", _canonical(self.tree))

    @property
    def leaf_set(self) -> tuple[int, ...]:
        return tuple(_leaves(self.tree))

    @property
    def internal_count(self) -> int:
        return len(self.leaf_set) - 1

    def __str__(self) -> str:
        return canonical_string(self)


@dataclass(frozen=True)
class BouquetConfig:
    """``r`` binary shapes whose leaf sets partition ``L``, ordered by minimum element."""

    shapes: tuple[BinaryShape, ...]

    def __post_init__(self):
        shapes = tuple(s if isinstance(s, BinaryShape) else BinaryShape(s) for s in self.shapes)
        if not shapes:
            raise ValueError("a bouquet has at least one tree")
        labels = [x for s in shapes for x in s.leaf_set]
        if len(set(labels)) != len(labels):
            raise ValueError("bouquet blocks must be disjoint")
        object.__setattr__(self, "shapes", tuple(sorted(shapes, key=lambda s: s.leaf_set[0])))

    @property
    def blocks(self) -> PartitionOfL:
        return tuple(s.leaf_set for s in self.shapes)

    @property
    def r(self) -> int:
        return len(self.shapes)

    @property
    def l(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __str__(self) -> str:
        return canonical_string(self)


def canonical_string(obj: BinaryShape | BouquetConfig) -> str:
    """Stable text key: ``"(1,(2,3))"`` for a shape, ``"((1,3))|((2))"`` for a bouquet."""
    if isinstance(obj, BinaryShape):
        return f"({_body(obj.tree)})"
    if isinstance(obj, BouquetConfig):
        return "|".join(f"({canonical_string(s)})" for s in obj.shapes)
    raise TypeError(f"cannot canonicalise {type(obj).__name__}")


def double_factorial_odd(l: int) -> int:
    """prod_{i=1}^{l-1} (2i-1), i.e. (2l-3)!! with the l=1 value 1."""
    out = 1
    for i in range(1, l):
        out *= 2 * i - 1
    return out


def count_binary_shapes(l: int) -> int:
    """Number of binary shape classes on ``l`` labelled leaves."""
    if l < 1:
        raise ValueError(f"marked-set size must be positive, got {l}")
    return double_factorial_odd(l)


def graft(tree: Tree, leaf: int) -> list[Tree]:
    """All trees obtained by hanging ``leaf`` just above one vertex of ``tree``.

    A tree on m leaves has 2m-1 vertices, hence 2m-1 results.  ``leaf`` must
    exceed every existing label for the output to stay canonical.
    """
    out: list[Tree] = [(tree, leaf)]
    if not isinstance(tree, int):
        a, b = tree
        out.extend((x, b) for x in graft(a, leaf))
        out.extend((a, y) for y in graft(b, leaf))
    return out


def enumerate_binary_shapes(leaf_set: Iterable[int]) -> list[BinaryShape]:
    labels = sorted(set(leaf_set))
    if not labels:
        raise ValueError("leaf set must be nonempty")
    trees: list[Tree] = [labels[0]]
    for x in labels[1:]:
        trees = [g for t in trees for g in graft(t, x)]
    return [BinaryShape(t) for t in trees]


@lru_cache(maxsize=None)
def count_bouquets(l: int, r: int) -> int:
    """C_{l,r} from C_{l,r} = (2l-r-2) C_{l-1,r} + C_{l-1,r-1}, C_{1,1} = 1."""
    if l < 1:
        raise ValueError(f"marked-set size must be positive, got {l}")
    if r < 1 or r > l:
        return 0
    if l == 1:
        return 1
    return (2 * l - r - 2) * count_bouquets(l - 1, r) + count_bouquets(l - 1, r - 1)


def set_partitions(items: Iterable[int], r: int | None = None) -> Iterator[PartitionOfL]:
    """Set partitions of ``items`` (optionally with exactly ``r`` blocks).

    Blocks are sorted tuples, listed in order of their minimum element.
    """
    items = sorted(items)

    def rec(i: int, blocks: list[list[int]]):
        if i == len(items):
            if r is None or len(blocks) == r:
                yield tuple(tuple(b) for b in blocks)
            return
        if r is not None and len(blocks) + (len(items) - i) < r:
            return
        x = items[i]
        for b in blocks:
            b.append(x)
            yield from rec(i + 1, blocks)
            b.pop()
        if r is None or len(blocks) < r:
            blocks.append([x])
            yield from rec(i + 1, blocks)
            blocks.pop()

    yield from rec(0, [])


def enumerate_bouquets(L: Iterable[int], r: int) -> list[BouquetConfig]:
    labels = sorted(set(L))
    if not 1 <= r <= len(labels):
        raise ValueError(f"block count r={r} outside 1..{len(labels)}")
    out = []
    for blocks in set_partitions(labels, r):
        for shapes in product(*(enumerate_binary_shapes(b) for b in blocks)):
            out.append(BouquetConfig(tuple(shapes)))
    return out


def bouquet_weight_sum(l: int, r: int) -> int:
    """C_{l,r} straight from its definition: sum over partitions of prod c_|B|."""
    total = 0
    for blocks in set_partitions(range(1, l + 1), r):
        w = 1
        for b in blocks:
            w *= count_binary_shapes(len(b))
        total += w
    return total
