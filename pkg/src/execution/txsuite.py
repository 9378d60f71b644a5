"""
Transaction suites (`<fixture>.txs.json`)

    [{"function": "submitVote", "args": [1], "sender": "0xA11CE",
      "expect": {"status": "reverted", "revert": "Invalid proof"}}, ...]

Words may be written as integers or as hex/decimal strings.
"""

import json
from pathlib import Path
from typing import Dict, List, Union

from execution.state import DEFAULT_SENDER, ExecResult, TxInput
from model.errors import MalformedField


def _word(value, where: str) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            pass
    raise MalformedField(f"{where}: {value!r} is not a word")


def tx_from_dict(data: dict, index: int = 0) -> TxInput:
    if "function" not in data:
        raise MalformedField(f"tx {index}: missing 'function'")
    storage = data.get("storage")
    return TxInput(
        function=str(data["function"]),
        args=[_word(a, f"tx {index} args") for a in data.get("args", [])],
        sender=_word(data.get("sender", DEFAULT_SENDER), f"tx {index} sender"),
        storage={str(k): _word(v, f"tx {index} storage") for k, v in storage.items()} if storage else None,
        expect=data.get("expect"),
    )


def load_suite(path: Union[str, Path]) -> List[TxInput]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MalformedField(f"{path}: not valid JSON: {e}")
    if not isinstance(document, list):
        raise MalformedField(f"{path}: a transaction suite is a list")
    return [tx_from_dict(d, i) for i, d in enumerate(document)]


def check_expectation(result: ExecResult, expect: Union[Dict, None]) -> List[str]:
    """Differences between a result and a tx's `expect` block; empty when it holds"""
    if not expect:
        return []
    problems = []
    if "status" in expect and expect["status"] != result.status:
        problems.append(f"status {result.status}, expected {expect['status']}")
    if "value" in expect and expect["value"] is not None and _word(expect["value"], "value") != result.value:
        problems.append(f"value {result.value}, expected {expect['value']}")
    if "revert" in expect and expect["revert"] != result.revert_message:
        problems.append(f"revert {result.revert_message!r}, expected {expect['revert']!r}")
    for name, value in (expect.get("storage") or {}).items():
        actual = result.storage.get(name, 0)
        if actual != _word(value, "storage"):
            problems.append(f"storage {name} = {actual}, expected {value}")
    if "events" in expect:
        wanted = [(e[0], tuple(_word(a, "event") for a in e[1])) for e in expect["events"]]
        if wanted != list(result.events):
            problems.append(f"events {result.events}, expected {wanted}")
    return problems
