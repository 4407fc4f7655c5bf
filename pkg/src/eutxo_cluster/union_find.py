"""Disjoint-set forest over dense integer ordinals.

Union by size with full path compression. Sizes double as the cluster sizes
the analytics need, so no separate rank array is kept.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Union


class OutOfRange(IndexError):
    pass


class DisjointSetForest:
    """Union-find over elements ``0 .. n-1``.

    >>> f = DisjointSetForest(4)
    >>> f.union(0, 1), f.union(2, 3), f.union(1, 3)
    (0, 2, 0)
    >>> f.components()
    [(0, 4)]
    """

    __slots__ = ("parent", "size")

    def __init__(self, n: int = 0) -> None:
        if n < 0:
            raise ValueError("element count must be non-negative")
        self.parent = list(range(n))
        self.size = [1] * n

    def __len__(self) -> int:
        return len(self.parent)

    def grow(self, count: int = 1) -> None:
        """Append ``count`` new singleton elements."""
        n = len(self.parent)
        self.parent.extend(range(n, n + count))
        self.size.extend([1] * count)

    def _check(self, x: int) -> None:
        if not 0 <= x < len(self.parent):
            raise OutOfRange(f"element {x} not in forest of {len(self.parent)}")

    def find(self, x: int) -> int:
        self._check(x)
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        """Merge the sets of ``a`` and ``b`` and return the surviving root.

        The larger set's root survives; on equal sizes the smaller ordinal wins,
        so root labels depend only on the union sequence.
        """
        ra = self.find(a)
        rb = self.find(b)
        if ra == rb:
            return ra
        size = self.size
        if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        size[ra] += size[rb]
        return ra

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def set_size(self, x: int) -> int:
        return self.size[self.find(x)]

    def finalize(self) -> list[int]:
        """Compress every path so each element points straight at its root.

        Returns the parent array, which is then a root label per element and
        safe for concurrent readers.
        """
        parent = self.parent
        for x in range(len(parent)):
            p = parent[x]
            if parent[p] != p:
                self.find(x)
        return parent

    def roots(self) -> list[int]:
        parent = self.parent
        return [x for x in range(len(parent)) if parent[x] == x]

    def components(self) -> list[tuple[int, int]]:
        """(root, member count) per set, ascending by root."""
        size = self.size
        return [(r, size[r]) for r in self.roots()]

    def component_count(self) -> int:
        parent = self.parent
        return sum(1 for x in range(len(parent)) if parent[x] == x)

    def labels(self) -> list[int]:
        """Root label per element (finalizes the forest)."""
        return list(self.finalize())

    # snapshot persistence: CSV of ``ordinal,root_ordinal``

    def save_snapshot(self, path: Union[str, Path]) -> None:
        labels = self.finalize()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ordinal", "root_ordinal"])
            w.writerows(enumerate(labels))

    @classmethod
    def load_snapshot(cls, path: Union[str, Path]) -> "DisjointSetForest":
        with open(path, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows, None)
            if header != ["ordinal", "root_ordinal"]:
                raise ValueError(f"{path}: bad snapshot header {header!r}")
            roots = []
            for i, (ordinal, root) in enumerate(rows):
                if int(ordinal) != i:
                    raise ValueError(f"{path}: ordinals must be dense, got {ordinal} at row {i}")
                roots.append(int(root))
        forest = cls(len(roots))
        for x, r in enumerate(roots):
            if roots[r] != r:
                raise ValueError(f"{path}: root {r} of element {x} is not self-rooted")
            forest.parent[x] = r
        size = forest.size
        for x, r in enumerate(roots):
            if x != r:
                size[r] += 1
        return forest
