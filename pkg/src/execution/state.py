"""
Execution state shared by the source interpreter and the bytecode VM
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from model.words import MASK

StorageKey = Union[int, Tuple[int, int]]
Storage = Dict[StorageKey, int]
Event = Tuple[str, Tuple[int, ...]]

RETURNED = "returned"
REVERTED = "reverted"

DEFAULT_SENDER = 0xA11CE

# live activations of recursive functions, the transaction entry included
CALL_DEPTH_LIMIT = 1024

_KEYED = re.compile(r"^(?P<name>[\w.]+)\[(?P<key>\w+)\]$")


@dataclass
class TxInput:
    """
    One transaction of a suite

    Attributes:
        function: `name`, `name/arity` or the full `Contract.name/arity` key
        args: argument words
        sender: address word returned by msg.sender
        storage: storage entries (by display name) to set before running
        expect: expected outcome, checked by `check_expectation`
    """
    function: str
    args: List[int] = field(default_factory=list)
    sender: int = DEFAULT_SENDER
    storage: Optional[Dict[str, int]] = None
    expect: Optional[dict] = None

    def __post_init__(self):
        for word in list(self.args) + [self.sender]:
            if word < 0 or word > MASK:
                raise ValueError(f"Transaction word {word} does not fit in 64 bits")


@dataclass
class ExecResult:
    """
    Outcome of one transaction; both engines must produce equal results

    Attributes:
        status: "returned" or "reverted"
        value: returned word, None for functions without a result
        revert_message: revert string, when reverted
        storage: final storage by display name, zero entries omitted
        events: emitted (name, args) pairs, empty after a revert
        revert_index: string-table index, known only to the VM
    """
    status: str
    value: Optional[int] = None
    revert_message: Optional[str] = None
    storage: Dict[str, int] = field(default_factory=dict)
    events: List[Event] = field(default_factory=list)
    revert_index: Optional[int] = field(default=None, compare=False)

    @property
    def reverted(self) -> bool:
        return self.status == REVERTED

    def to_dict(self) -> dict:
        data = {"status": self.status, "value": self.value, "storage": dict(self.storage),
                "events": [[name, list(args)] for name, args in self.events]}
        if self.reverted:
            data["revert"] = self.revert_message
        return data


def display_key(key: StorageKey, slot_names: Dict[int, str]) -> str:
    if isinstance(key, tuple):
        slot, inner = key
        return f"{slot_names.get(slot, slot)}[{inner}]"
    return slot_names.get(key, str(key))


def snapshot(storage: Storage, slot_names: Dict[int, str]) -> Dict[str, int]:
    named = {display_key(k, slot_names): v for k, v in storage.items() if v}
    return dict(sorted(named.items()))


def parse_storage_name(name: str, layout: Dict[str, int]) -> StorageKey:
    """`count` -> slot, `hasVoted[42]` -> (slot, 42)"""
    match = _KEYED.match(name.strip())
    if match:
        base = match.group("name")
        if base not in layout:
            raise KeyError(f"unknown storage variable '{base}'")
        return layout[base], int(match.group("key"), 0)
    if name not in layout:
        raise KeyError(f"unknown storage variable '{name}'")
    return layout[name]


def initial_state(initial: Dict[int, int]) -> Storage:
    return {slot: value for slot, value in initial.items() if value}


def apply_overrides(storage: Storage, overrides: Optional[Dict[str, int]], layout: Dict[str, int]) -> Storage:
    out = dict(storage)
    for name, value in (overrides or {}).items():
        out[parse_storage_name(name, layout)] = int(value) & MASK
    return out


def resolve_function_key(keys, name: str, arity: Optional[int] = None) -> str:
    """Pick the one key matching `name`, `name/arity` or `Contract.name/arity`"""
    keys = list(keys)
    if name in keys:
        return name
    candidates = []
    for key in keys:
        qualified, _, key_arity = key.rpartition("/")
        short = qualified.rsplit(".", 1)[-1]
        if name in (short, f"{short}/{key_arity}", qualified) and \
                (arity is None or int(key_arity) == arity):
            candidates.append(key)
    if len(candidates) != 1:
        found = ", ".join(candidates) or "none"
        raise KeyError(f"function '{name}' does not name exactly one entry point (matches: {found})")
    return candidates[0]
