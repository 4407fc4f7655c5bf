"""The two EUTXO address-clustering heuristics over one shared forest.

H1 (modified multi-input): Byron and key-payment Shelley addresses spent
together in one transaction belong to one entity. Script-locked inputs are
skipped, since anyone may spend a script whose conditions they satisfy.

H2 (staking): Shelley addresses, key or script, whose delegation part names
the same stake key belong to one entity.

Running both over a single forest yields the join of the two partitions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .address_model import AddressInfo, AddressKind, InternTable
from .ingestion import TransactionRecord
from .union_find import DisjointSetForest

_SCRIPT = AddressKind.SHELLEY_SCRIPT


@dataclass(frozen=True)
class HeuristicSet:
    h1_enabled: bool = True
    h2_enabled: bool = True

    def __post_init__(self) -> None:
        if not (self.h1_enabled or self.h2_enabled):
            raise ValueError("at least one heuristic must be enabled")

    @classmethod
    def parse(cls, text: str) -> "HeuristicSet":
        """Parse a comma list such as ``"h1,h2"``."""
        names = {t.strip().lower() for t in text.split(",") if t.strip()}
        unknown = names - {"h1", "h2"}
        if unknown or not names:
            raise ValueError(f"unknown heuristics {sorted(unknown) or text!r}; expected h1 and/or h2")
        return cls("h1" in names, "h2" in names)

    @property
    def label(self) -> str:
        return ",".join(n for n, on in (("h1", self.h1_enabled), ("h2", self.h2_enabled)) if on)


H1_ONLY = HeuristicSet(True, False)
H2_ONLY = HeuristicSet(False, True)
BOTH = HeuristicSet(True, True)


class StakeIndex(dict):
    """StakeKeyId -> representative AddressId, fixed at first sight."""


def apply_h1(tx: TransactionRecord, forest: DisjointSetForest) -> int:
    """Chain-union every non-script input to the first one. Returns unions done."""
    first = -1
    unions = 0
    for info in tx.inputs:
        if info.kind is _SCRIPT:
            continue
        if first < 0:
            first = info.id
        elif forest.find(info.id) != forest.find(first):
            forest.union(first, info.id)
            unions += 1
    return unions


def apply_h2(addr: AddressInfo, index: StakeIndex, forest: DisjointSetForest) -> bool:
    key = addr.stake_key
    if key is None:
        return False
    rep = index.setdefault(key, addr.id)
    if rep == addr.id:
        return False
    if forest.find(rep) == forest.find(addr.id):
        return False
    forest.union(rep, addr.id)
    return True


@dataclass
class ClusterRunStats:
    tx_count: int = 0
    addresses: int = 0
    h1_unions: int = 0
    h2_unions: int = 0


class Clusterer:
    """Single-pass incremental clustering state.

    Feed records with ``add``; addresses get forest slots and H2 treatment on
    first appearance regardless of their ordinal order, so a permuted stream
    yields the same partition.
    """

    def __init__(self, heuristics: HeuristicSet = BOTH,
                 forest: Optional[DisjointSetForest] = None) -> None:
        self.heuristics = heuristics
        self.forest = forest if forest is not None else DisjointSetForest()
        self.stake_index = StakeIndex()
        self.stats = ClusterRunStats()
        self._seen = bytearray(len(self.forest))

    def _first_sight(self, info: AddressInfo) -> None:
        forest = self.forest
        if info.id >= len(forest):
            grow = info.id + 1 - len(forest)
            forest.grow(grow)
            self._seen.extend(bytes(grow))
        self._seen[info.id] = 1
        self.stats.addresses += 1
        if self.heuristics.h2_enabled and apply_h2(info, self.stake_index, forest):
            self.stats.h2_unions += 1

    def add(self, tx: TransactionRecord) -> None:
        seen = self._seen
        n = len(seen)
        for info in tx.inputs:
            if info.id >= n or not seen[info.id]:
                self._first_sight(info)
                n = len(seen)
        for info, _ in tx.outputs:
            if info.id >= n or not seen[info.id]:
                self._first_sight(info)
                n = len(seen)
        if self.heuristics.h1_enabled and len(tx.inputs) > 1:
            self.stats.h1_unions += apply_h1(tx, self.forest)
        self.stats.tx_count += 1


def cluster_stream(txs: Iterable[TransactionRecord], heuristics: HeuristicSet = BOTH,
                   forest: Optional[DisjointSetForest] = None
                   ) -> tuple[DisjointSetForest, ClusterRunStats]:
    c = Clusterer(heuristics, forest)
    for tx in txs:
        c.add(tx)
    return c.forest, c.stats


def cluster_by_stake_groups(table: InternTable, forest: DisjointSetForest) -> int:
    """Post-hoc H2: group every interned address by stake key and chain-union.

    Equivalent to the streaming H2 pass; kept as an independent route.
    """
    groups: dict[int, int] = {}
    unions = 0
    for ordinal in range(len(table)):
        key = table.info(ordinal).stake_key
        if key is None:
            continue
        rep = groups.setdefault(key, ordinal)
        if rep != ordinal and not forest.connected(rep, ordinal):
            forest.union(rep, ordinal)
            unions += 1
    return unions


def write_assignments(path: Union[str, Path], forest: DisjointSetForest,
                      table: InternTable) -> None:
    """CSV ``address,cluster_id``; one row per address in ordinal order."""
    if len(forest) < len(table):
        forest.grow(len(table) - len(forest))
    labels = forest.finalize()
    addrs = table.addresses()
    with open(path, "w", newline="") as fh:
        fh.write("address,cluster_id\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(zip(addrs, labels))


def read_assignments(path: Union[str, Path]) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["address", "cluster_id"]:
            raise ValueError(f"{path}: expected header 'address,cluster_id', got {header!r}")
        for n, row in enumerate(rows, 2):
            if len(row) != 2:
                raise ValueError(f"{path}:{n}: expected 2 columns")
            if row[0] in out:
                raise ValueError(f"{path}:{n}: duplicate address {row[0]!r}")
            out[row[0]] = int(row[1])
    return out
