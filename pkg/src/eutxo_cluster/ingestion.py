"""Line-delimited JSON transaction ingestion.

One transaction per line::

    {"tx_id": "t1", "slot": 5,
     "inputs":  [{"addr": "A", "kind": "byron"}],
     "outputs": [{"addr": "B", "kind": "shelley_key", "stake": "S1", "value": 7}]}

``kind`` is one of ``byron``, ``shelley_key``, ``shelley_script``; ``stake`` is
optional (null or absent means no delegation part). A record flagged
``"withdrawal_only": true`` may have an empty input list. Unknown fields are
ignored. Only regular inputs are carried; collateral and reference inputs are
not part of the format.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import IO, Iterator, Optional, Union

from .address_model import AddressInfo, AddressKind, InternTable

log = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


class MalformedLine(IngestError):
    def __init__(self, message: str, line_no: Optional[int] = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SchemaViolation(MalformedLine):
    pass


class IoFailure(IngestError):
    pass


@dataclass(slots=True)
class TransactionRecord:
    tx_id: str
    slot: int
    inputs: list[AddressInfo]
    outputs: list[tuple[AddressInfo, int]]
    withdrawal_only: bool = False

    def addresses(self) -> Iterator[AddressInfo]:
        yield from self.inputs
        for info, _ in self.outputs:
            yield info


@dataclass
class IngestStats:
    tx_count: int = 0
    distinct_payment_addresses: int = 0
    distinct_byron: int = 0
    distinct_shelley: int = 0
    distinct_stake_keys: int = 0
    skipped: int = 0
    out_of_order: int = 0

    @classmethod
    def from_table(cls, table: InternTable, **kw) -> "IngestStats":
        byron = table.kind_count(AddressKind.BYRON)
        return cls(
            distinct_payment_addresses=len(table),
            distinct_byron=byron,
            distinct_shelley=len(table) - byron,
            distinct_stake_keys=table.n_stake_keys,
            **kw,
        )


_KINDS = {
    "byron": AddressKind.BYRON,
    "shelley_key": AddressKind.SHELLEY_KEY,
    "shelley_script": AddressKind.SHELLEY_SCRIPT,
}


def _is_uint(v) -> bool:
    return type(v) is int and v >= 0


def _entry(e, where: str, with_value: bool):
    if not isinstance(e, dict):
        raise SchemaViolation(f"{where}: entry must be an object")
    addr = e.get("addr")
    if not isinstance(addr, str) or not addr:
        raise SchemaViolation(f"{where}: 'addr' must be a non-empty string")
    kind = _KINDS.get(e.get("kind"))
    if kind is None:
        raise SchemaViolation(f"{where}: bad kind {e.get('kind')!r}")
    stake = e.get("stake")
    if stake is not None:
        if not isinstance(stake, str) or not stake:
            raise SchemaViolation(f"{where}: 'stake' must be a non-empty string or null")
        if kind is AddressKind.BYRON:
            raise SchemaViolation(f"{where}: Byron address {addr!r} cannot carry a stake key")
    if with_value:
        value = e.get("value")
        if not _is_uint(value):
            raise SchemaViolation(f"{where}: 'value' must be a non-negative integer")
        return addr, kind, stake, value
    return addr, kind, stake, None


def parse_tx_obj(obj, table: InternTable) -> TransactionRecord:
    """Validate a decoded JSON object and intern its addresses.

    Validation (including classification conflicts) completes before any
    address is interned, so a rejected record leaves the table untouched.
    """
    if not isinstance(obj, dict):
        raise SchemaViolation("record must be a JSON object")
    try:
        tx_id = obj["tx_id"]
        slot = obj["slot"]
        raw_in = obj["inputs"]
        raw_out = obj["outputs"]
    except KeyError as e:
        raise SchemaViolation(f"missing required field {e.args[0]!r}") from None
    if not isinstance(tx_id, str) or not tx_id:
        raise SchemaViolation("'tx_id' must be a non-empty string")
    if not _is_uint(slot):
        raise SchemaViolation("'slot' must be a non-negative integer")
    if not isinstance(raw_in, list) or not isinstance(raw_out, list):
        raise SchemaViolation("'inputs' and 'outputs' must be lists")
    withdrawal_only = obj.get("withdrawal_only", False) is True
    if not raw_out:
        raise SchemaViolation("'outputs' must be non-empty")
    if not raw_in and not withdrawal_only:
        raise SchemaViolation("'inputs' must be non-empty unless withdrawal_only")

    ins = [_entry(e, f"inputs[{i}]", False) for i, e in enumerate(raw_in)]
    outs = [_entry(e, f"outputs[{i}]", True) for i, e in enumerate(raw_out)]

    seen: dict[str, tuple] = {}
    for addr, kind, stake, _ in ins + outs:
        prev = seen.setdefault(addr, (kind, stake))
        if prev != (kind, stake):
            raise SchemaViolation(f"address {addr!r} classified inconsistently within record")
        try:
            table.check(addr, kind, stake)
        except ValueError as e:
            raise SchemaViolation(str(e)) from None

    intern = table.intern
    return TransactionRecord(
        tx_id,
        slot,
        [intern(a, k, s) for a, k, s, _ in ins],
        [(intern(a, k, s), v) for a, k, s, v in outs],
        withdrawal_only,
    )


def parse_tx_line(line: Union[str, bytes], table: InternTable) -> TransactionRecord:
    try:
        obj = json.loads(line)
    except ValueError as e:
        raise MalformedLine(f"invalid JSON: {e}") from None
    return parse_tx_obj(obj, table)


def record_to_obj(tx: TransactionRecord, table: InternTable) -> dict:
    """Inverse of parse_tx_obj (field order fixed for byte-stable output)."""
    def entry(info: AddressInfo) -> dict:
        return {
            "addr": table.address(info.id),
            "kind": info.kind.label,
            "stake": None if info.stake_key is None else table.stake(info.stake_key),
        }

    obj = {
        "tx_id": tx.tx_id,
        "slot": tx.slot,
        "inputs": [entry(i) for i in tx.inputs],
        "outputs": [{**entry(i), "value": v} for i, v in tx.outputs],
    }
    if tx.withdrawal_only:
        obj["withdrawal_only"] = True
    return obj


def dump_tx_line(tx: TransactionRecord, table: InternTable) -> str:
    return json.dumps(record_to_obj(tx, table), separators=(",", ":"))


Source = Union[str, os.PathLike, IO[bytes], IO[str]]


class TransactionStream:
    """Lazily parses a line-delimited transaction source.

    Iterate once; ``stats`` is complete after exhaustion. In lenient mode bad
    lines are logged and counted in ``stats.skipped``; in strict mode the
    first bad line raises MalformedLine carrying its line number.
    """

    def __init__(self, source: Source, table: Optional[InternTable] = None,
                 strict: bool = False) -> None:
        self.source = source
        self.table = table if table is not None else InternTable()
        self.strict = strict
        self._tx_count = 0
        self._skipped = 0
        self._out_of_order = 0

    @property
    def stats(self) -> IngestStats:
        return IngestStats.from_table(self.table, tx_count=self._tx_count,
                                      skipped=self._skipped,
                                      out_of_order=self._out_of_order)

    def _lines(self) -> Iterator[Union[str, bytes]]:
        if isinstance(self.source, (str, os.PathLike)):
            try:
                fh = open(self.source, "rb")
            except OSError as e:
                raise IoFailure(f"cannot read {self.source}: {e}") from e
            with fh:
                yield from fh
        else:
            yield from self.source

    def __iter__(self) -> Iterator[TransactionRecord]:
        table = self.table
        last_slot = -1
        for line_no, line in enumerate(self._lines(), 1):
            if not line.strip():
                continue
            try:
                tx = parse_tx_line(line, table)
            except MalformedLine as e:
                if self.strict:
                    raise type(e)(str(e), line_no) from None
                self._skipped += 1
                log.warning("skipping line %d: %s", line_no, e)
                continue
            if tx.slot < last_slot:
                self._out_of_order += 1
                if self._out_of_order == 1:
                    log.warning("line %d: slot %d precedes previous slot %d",
                                line_no, tx.slot, last_slot)
            else:
                last_slot = tx.slot
            self._tx_count += 1
            yield tx


def stream_transactions(source: Source, table: Optional[InternTable] = None,
                        strict: bool = False) -> TransactionStream:
    return TransactionStream(source, table, strict)
