"""Synthetic EUTXO chains with entity ground truth, and pairwise scoring.

Each entity owns a wallet whose addresses are revealed on-chain as it receives
payments and change. Ordinary transactions spend from one entity, so both
heuristics are sound by construction; two knobs inject the known failure modes:

* ``multi_party_tx_rate``: a transaction spends key-payment inputs of two
  entities (a multi-signature transaction built by hand), a false H1 link.
* ``franken_rate``: a Shelley address delegates to another entity's stake
  key, a false H2 link.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence, Union

from .address_model import AddressInfo, AddressKind, InternTable
from .ingestion import TransactionRecord, dump_tx_line
from .union_find import DisjointSetForest


class InvalidParams(ValueError):
    pass


class MissingAddress(KeyError):
    pass


@dataclass
class SimParams:
    # defaults are modelling assumptions, not calibrated against mainnet
    n_entities: int = 1000
    # "geometric:<mean>" or "fixed:<k>"
    addresses_per_entity: str = "geometric:9.67"
    stake_key_probability: float = 0.7
    byron_fraction: float = 0.2
    n_transactions: int = 10_000
    multi_party_tx_rate: float = 0.0
    franken_rate: float = 0.0
    script_fraction: float = 0.05
    rng_seed: int = 0
    max_inputs: int = 4
    max_recipients: int = 2
    mean_slot_gap: int = 20

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for name in ("stake_key_probability", "byron_fraction", "multi_party_tx_rate",
                     "franken_rate", "script_fraction"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                raise InvalidParams(f"{name} must be in [0, 1], got {v!r}")
        for name in ("n_entities", "n_transactions", "max_inputs", "max_recipients"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidParams(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.mean_slot_gap, int) or self.mean_slot_gap < 0:
            raise InvalidParams("mean_slot_gap must be a non-negative integer")
        if not isinstance(self.rng_seed, int):
            raise InvalidParams("rng_seed must be an integer")
        if self.multi_party_tx_rate > 0 and self.n_entities < 2:
            raise InvalidParams("multi-party transactions need at least 2 entities")
        self.wallet_sampler()

    def wallet_sampler(self):
        name, _, arg = self.addresses_per_entity.partition(":")
        try:
            value = float(arg)
        except ValueError:
            raise InvalidParams(f"bad distribution spec {self.addresses_per_entity!r}") from None
        if name == "geometric":
            if value < 1:
                raise InvalidParams("geometric mean must be >= 1")
            p = 1.0 / value
            if p >= 1.0:
                return lambda rng: 1
            log_q = math.log1p(-p)
            # inverse CDF of the geometric distribution on {1, 2, ...}
            return lambda rng: 1 + int(math.log(1.0 - rng.random()) / log_q)
        if name == "fixed":
            if value < 1 or value != int(value):
                raise InvalidParams("fixed wallet size must be a positive integer")
            k = int(value)
            return lambda rng: k
        raise InvalidParams(f"unknown distribution {name!r}")

    @classmethod
    def from_dict(cls, obj: Mapping) -> "SimParams":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidParams(f"unknown simulation parameters: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SimParams":
        try:
            obj = json.loads(Path(path).read_text())
        except ValueError as e:
            raise InvalidParams(f"{path}: {e}") from None
        if not isinstance(obj, dict):
            raise InvalidParams(f"{path}: expected a JSON object")
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return asdict(self)


class GroundTruth(list):
    """Entity id per address ordinal."""

    def entity_sizes(self) -> Counter:
        return Counter(self)


def _digest(*parts) -> str:
    return hashlib.blake2b(":".join(map(str, parts)).encode(), digest_size=20).hexdigest()


class _Entity:
    __slots__ = ("wallet_size", "byron", "stake", "revealed", "keys")

    def __init__(self, wallet_size: int, byron: bool, stake: Optional[str]) -> None:
        self.wallet_size = wallet_size
        self.byron = byron
        self.stake = stake
        self.revealed: list[AddressInfo] = []
        self.keys: list[AddressInfo] = []  # revealed key-payment addresses


class ChainGenerator:
    """Deterministic stream of TransactionRecords for one SimParams.

    Iterate once. Addresses are interned into ``table`` as they first appear,
    and ``truth`` grows alongside, so after iteration ``truth[ordinal]`` is the
    owning entity of every address in the stream. Entities are numbered
    ``0..n_entities-1``; shared script contracts follow.
    """

    def __init__(self, params: SimParams) -> None:
        params.validate()
        self.params = params
        self.table = InternTable()
        self.truth = GroundTruth()
        rng = self.rng = random.Random(params.rng_seed)
        seed = params.rng_seed
        wallet = params.wallet_sampler()

        self.entities: list[_Entity] = []
        for e in range(params.n_entities):
            size = wallet(rng)
            byron = rng.random() < params.byron_fraction
            stake = None
            if not byron and rng.random() < params.stake_key_probability:
                stake = "stake1u" + _digest(seed, "stake", e)
            self.entities.append(_Entity(size, byron, stake))
        self._staking = [e for e, ent in enumerate(self.entities) if ent.stake]

        # shared script contracts, each its own truth entity; interned on first use
        self.n_contracts = math.ceil(params.script_fraction * params.n_entities)
        self._contracts: dict[int, AddressInfo] = {}

    def _intern(self, addr: str, kind: AddressKind, stake: Optional[str],
                owner: int) -> AddressInfo:
        info = self.table.intern(addr, kind, stake)
        if info.id == len(self.truth):
            self.truth.append(owner)
        return info

    def _reveal(self, e: int) -> Optional[AddressInfo]:
        """Put the entity's next unused wallet address on-chain, if any is left."""
        ent = self.entities[e]
        i = len(ent.revealed)
        if i >= ent.wallet_size:
            return None
        p = self.params
        rng = self.rng
        h = _digest(p.rng_seed, e, i)
        if ent.byron:
            info = self._intern("DdzFF" + h, AddressKind.BYRON, None, e)
        else:
            # slot 0 is always a key address so every entity can sign
            script = i > 0 and rng.random() < p.script_fraction
            stake = ent.stake
            if p.franken_rate and rng.random() < p.franken_rate and self._staking:
                other = rng.choice(self._staking)
                if other != e:
                    stake = self.entities[other].stake
            kind = AddressKind.SHELLEY_SCRIPT if script else AddressKind.SHELLEY_KEY
            prefix = ("addr1z" if script else "addr1q") if stake else ("addr1w" if script else "addr1v")
            info = self._intern(prefix + h, kind, stake, e)
        ent.revealed.append(info)
        if info.kind is not AddressKind.SHELLEY_SCRIPT:
            ent.keys.append(info)
        return info

    def _some_address(self, e: int, fresh: bool) -> AddressInfo:
        ent = self.entities[e]
        if fresh or not ent.revealed:
            info = self._reveal(e)
            if info is not None:
                return info
        return self.rng.choice(ent.revealed)

    def _spend(self, e: int, pool_keys_only: bool) -> list[AddressInfo]:
        ent = self.entities[e]
        if not ent.revealed:
            self._reveal(e)
        pool = ent.keys if pool_keys_only else ent.revealed
        k = self.rng.randint(1, min(self.params.max_inputs, len(pool)))
        return self.rng.sample(pool, k)

    def _contract(self) -> AddressInfo:
        c = self.rng.randrange(self.n_contracts)
        info = self._contracts.get(c)
        if info is None:
            addr = "addr1w" + _digest(self.params.rng_seed, "contract", c)
            info = self._contracts[c] = self._intern(
                addr, AddressKind.SHELLEY_SCRIPT, None, self.params.n_entities + c)
        return info

    # stream

    def __iter__(self) -> Iterator[TransactionRecord]:
        p = self.params
        rng = self.rng
        n_ent = p.n_entities
        slot = 0
        for t in range(p.n_transactions):
            slot += rng.randint(0, 2 * p.mean_slot_gap)
            sender = rng.randrange(n_ent)
            if p.multi_party_tx_rate and rng.random() < p.multi_party_tx_rate:
                other = rng.randrange(n_ent - 1)
                other += other >= sender
                inputs = self._spend(sender, True) + self._spend(other, True)
            else:
                inputs = self._spend(sender, False)
            if self.n_contracts and rng.random() < p.script_fraction:
                inputs.append(self._contract())
            outputs = []
            for _ in range(rng.randint(1, p.max_recipients)):
                payee = rng.randrange(n_ent)
                outputs.append((self._some_address(payee, rng.random() < 0.5),
                                rng.randint(1_000_000, 100_000_000)))
            outputs.append((self._some_address(sender, True), rng.randint(1_000_000, 50_000_000)))
            yield TransactionRecord("tx" + _digest(p.rng_seed, "tx", t)[:32], slot, inputs, outputs)


def generate_chain(params: SimParams) -> tuple[list[TransactionRecord], GroundTruth, InternTable]:
    gen = ChainGenerator(params)
    txs = list(gen)
    return txs, gen.truth, gen.table


def write_chain(params: SimParams, txs_path: Union[str, Path],
                truth_path: Union[str, Path]) -> tuple[int, int]:
    """Stream a generated chain to JSONL plus ``address,entity_id`` CSV.

    Returns (transactions, addresses) written.
    """
    gen = ChainGenerator(params)
    n = 0
    with open(txs_path, "w") as fh:
        for tx in gen:
            fh.write(dump_tx_line(tx, gen.table))
            fh.write("\n")
            n += 1
    write_truth(truth_path, gen.truth, gen.table)
    return n, len(gen.truth)


def write_truth(path: Union[str, Path], truth: Sequence[int], table: InternTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address", "entity_id"])
        for ordinal, entity in enumerate(truth):
            w.writerow([table.address(ordinal), entity])


def read_truth(path: Union[str, Path]) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["address", "entity_id"]:
            raise ValueError(f"{path}: expected header 'address,entity_id', got {header!r}")
        for addr, entity in rows:
            out[addr] = int(entity)
    return out


# evaluation ---------------------------------------------------------------

@dataclass
class EvalReport:
    pairwise_precision: float
    pairwise_recall: float
    f1: float
    merged_entity_clusters: int
    largest_cluster_entity_span: int
    addresses: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


def score_pairs(cells: Counter) -> EvalReport:
    """Pairwise scores from (cluster, entity) -> address-count cells.

    Pair counts come from size aggregates: co-clustered pairs are
    sum C(|cluster|, 2), co-owned pairs sum C(|entity|, 2), and true links
    sum C(|cell|, 2). A side with no pairs scores 1.0 (nothing to get wrong).
    """
    by_cluster: Counter = Counter()
    by_entity: Counter = Counter()
    span: Counter = Counter()
    both = 0
    for (cluster, entity), n in cells.items():
        by_cluster[cluster] += n
        by_entity[entity] += n
        span[cluster] += 1
        both += _pairs(n)
    clustered = sum(_pairs(n) for n in by_cluster.values())
    owned = sum(_pairs(n) for n in by_entity.values())
    precision = both / clustered if clustered else 1.0
    recall = both / owned if owned else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        pairwise_precision=precision,
        pairwise_recall=recall,
        f1=f1,
        merged_entity_clusters=sum(1 for s in span.values() if s >= 2),
        largest_cluster_entity_span=max(span.values(), default=0),
        addresses=sum(by_cluster.values()),
    )


def evaluate(forest: DisjointSetForest, truth: Sequence[int]) -> EvalReport:
    if len(truth) > len(forest):
        raise MissingAddress(f"truth covers {len(truth)} addresses, forest only {len(forest)}")
    labels = forest.finalize()
    return score_pairs(Counter(zip(labels, truth)))


def evaluate_labels(clusters: Mapping[str, int], truth: Mapping[str, int]) -> EvalReport:
    """Score an ``address -> cluster`` assignment against ``address -> entity``."""
    cells: Counter = Counter()
    for addr, entity in truth.items():
        try:
            cells[clusters[addr], entity] += 1
        except KeyError:
            raise MissingAddress(f"address {addr!r} has no cluster assignment") from None
    return score_pairs(cells)
