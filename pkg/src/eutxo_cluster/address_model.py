"""Payment address identity, classification and dense interning."""
from __future__ import annotations

import enum
from typing import NamedTuple, Optional


class AddressKind(enum.IntEnum):
    BYRON = 0
    SHELLEY_KEY = 1
    SHELLEY_SCRIPT = 2

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "AddressKind":
        try:
            return _LABEL_KINDS[label]
        except (KeyError, TypeError):
            raise ValueError(f"unknown address kind {label!r}") from None


_KIND_LABELS = {
    AddressKind.BYRON: "byron",
    AddressKind.SHELLEY_KEY: "shelley_key",
    AddressKind.SHELLEY_SCRIPT: "shelley_script",
}
_LABEL_KINDS = {v: k for k, v in _KIND_LABELS.items()}


class AddressInfo(NamedTuple):
    id: int
    kind: AddressKind
    stake_key: Optional[int] = None


class ConflictingClassification(ValueError):
    """An address string was seen again with a different kind or stake key."""


class UnsupportedHeaderType(ValueError):
    pass


class StakeAddressNotPayment(ValueError):
    pass


class InternTable:
    """Maps address and stake-key strings to dense ordinals in first-seen order.

    Python's dict is an open-addressing table keyed on the string hash with a
    full equality check on probe, which is exactly the lookup discipline needed
    here, so both directions are a dict plus a list.
    """

    def __init__(self) -> None:
        self._addr_index: dict[str, AddressInfo] = {}
        self._addr_strings: list[str] = []
        self._stake_index: dict[str, int] = {}
        self._stake_strings: list[str] = []
        self._kind_counts = [0, 0, 0]

    def __len__(self) -> int:
        return len(self._addr_strings)

    @property
    def n_stake_keys(self) -> int:
        return len(self._stake_strings)

    def kind_count(self, kind: AddressKind) -> int:
        return self._kind_counts[kind]

    def get(self, addr: str) -> Optional[AddressInfo]:
        return self._addr_index.get(addr)

    def address(self, ordinal: int) -> str:
        return self._addr_strings[ordinal]

    def stake(self, ordinal: int) -> str:
        return self._stake_strings[ordinal]

    def stake_id(self, stake: str) -> Optional[int]:
        return self._stake_index.get(stake)

    def info(self, ordinal: int) -> AddressInfo:
        return self._addr_index[self._addr_strings[ordinal]]

    def addresses(self) -> list[str]:
        """Address strings in ordinal order (a view; do not mutate)."""
        return self._addr_strings

    def check(self, addr: str, kind: AddressKind, stake: Optional[str]) -> None:
        """Raise ConflictingClassification if interning would conflict."""
        known = self._addr_index.get(addr)
        if known is None:
            return
        if known.kind != kind or not self._same_stake(known.stake_key, stake):
            raise ConflictingClassification(
                f"address {addr!r} already recorded as {known.kind.label}"
                f" with stake {self._stake_label(known.stake_key)!r}")

    def _same_stake(self, stake_id: Optional[int], stake: Optional[str]) -> bool:
        if stake_id is None or stake is None:
            return stake_id is None and stake is None
        return self._stake_strings[stake_id] == stake

    def _stake_label(self, stake_id: Optional[int]) -> Optional[str]:
        return None if stake_id is None else self._stake_strings[stake_id]

    def intern(self, addr: str, kind: AddressKind, stake: Optional[str] = None) -> AddressInfo:
        known = self._addr_index.get(addr)
        if known is not None:
            if known.kind != kind or not self._same_stake(known.stake_key, stake):
                self.check(addr, kind, stake)
            return known
        if not addr:
            raise ValueError("address string must be non-empty")
        if kind == AddressKind.BYRON and stake is not None:
            raise ConflictingClassification(f"Byron address {addr!r} cannot carry a stake key")
        stake_id = None
        if stake is not None:
            stake_id = self._stake_index.get(stake)
            if stake_id is None:
                stake_id = len(self._stake_strings)
                self._stake_index[stake] = stake_id
                self._stake_strings.append(stake)
        info = AddressInfo(len(self._addr_strings), kind, stake_id)
        self._addr_index[addr] = info
        self._addr_strings.append(addr)
        self._kind_counts[kind] += 1
        return info


def intern_address(addr: str, kind: AddressKind, stake: Optional[str],
                   table: InternTable) -> AddressInfo:
    return table.intern(addr, kind, stake)


# CIP-19 header type nibble -> (kind, has usable stake part)
_HEADER_TYPES = {
    0: (AddressKind.SHELLEY_KEY, True),
    1: (AddressKind.SHELLEY_SCRIPT, True),
    2: (AddressKind.SHELLEY_KEY, True),
    3: (AddressKind.SHELLEY_SCRIPT, True),
    # pointer addresses: resolving the pointer needs chain state we don't hold
    4: (AddressKind.SHELLEY_KEY, False),
    5: (AddressKind.SHELLEY_SCRIPT, False),
    6: (AddressKind.SHELLEY_KEY, False),
    7: (AddressKind.SHELLEY_SCRIPT, False),
    8: (AddressKind.BYRON, False),
}


def classify_header(header_byte: int) -> tuple[AddressKind, bool]:
    """Classify a raw address by its first byte (type nibble = bits 7..4)."""
    if not 0 <= header_byte <= 0xFF:
        raise ValueError(f"header byte out of range: {header_byte}")
    addr_type = header_byte >> 4
    if addr_type in (14, 15):
        raise StakeAddressNotPayment(f"header type {addr_type} is a stake/reward address")
    try:
        return _HEADER_TYPES[addr_type]
    except KeyError:
        raise UnsupportedHeaderType(f"unsupported header type {addr_type}") from None
