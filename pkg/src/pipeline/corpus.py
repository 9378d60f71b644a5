"""
Bundled corpus - `<name>.msol` fixtures with `<name>.txs.json` suites
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

from execution.state import TxInput
from execution.txsuite import load_suite

CATEGORY_LINE = re.compile(r"^//\s*category:\s*(?P<category>.+?)\s*$")


@dataclass(frozen=True)
class Fixture:
    name: str
    category: str
    source: Path
    suite: Path

    @property
    def files(self) -> List[Tuple[str, str]]:
        return [(self.source.name, self.source.read_text(encoding="utf-8"))]

    def txs(self) -> List[TxInput]:
        return load_suite(self.suite) if self.suite.exists() else []


def category_of(text: str) -> str:
    first = text.splitlines()[0] if text else ""
    match = CATEGORY_LINE.match(first)
    return match.group("category") if match else ""


def load_corpus(directory: Union[str, Path]) -> List[Fixture]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory {directory} does not exist")
    fixtures = []
    for source in sorted(directory.glob("*.msol")):
        name = source.stem
        fixtures.append(Fixture(name, category_of(source.read_text(encoding="utf-8")), source,
                                source.with_name(f"{name}.txs.json")))
    return fixtures
