"""
Compiled artifact container (`.zkb.json`)

Written with a fixed key order and no timing data, so two compiles of the
same sources give byte-identical files.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

from backend.emitter import BytecodeProgram
from mapgen.export import export_table, rich_document, table_from_document
from model.errors import MalformedField
from model.table import MappingTable
from optimizer.config import PassConfig
from pipeline.compiler import Compilation, compile_sources

ARTIFACT_VERSION = 1
REQUIRED = ("version", "source_files", "bytecode_hex", "function_table", "string_table",
            "event_table", "sourcemap", "sourcemap_compressed")


@dataclass
class CompiledArtifact:
    program: BytecodeProgram
    table: MappingTable
    source_files: List[str] = field(default_factory=list)
    sources: List[str] = field(default_factory=list)
    compiler: Dict = field(default_factory=dict)
    version: int = ARTIFACT_VERSION

    @classmethod
    def from_compilation(cls, compilation: Compilation) -> "CompiledArtifact":
        return cls(program=compilation.program, table=compilation.table,
                   source_files=compilation.unit.file_names, sources=compilation.unit.file_texts,
                   compiler=compilation.config.to_dict())

    @property
    def config(self) -> PassConfig:
        return PassConfig.from_dict(self.compiler)

    def to_document(self) -> dict:
        program = self.program
        return {
            "version": self.version,
            "source_files": list(self.source_files),
            "bytecode_hex": program.code.hex(),
            "function_table": dict(program.function_table),
            "string_table": list(program.string_table),
            "event_table": list(program.event_table),
            "sourcemap": rich_document(self.table),
            "sourcemap_compressed": export_table(self.table, "compressed"),
            "compiler": dict(self.compiler),
            "storage_layout": dict(program.storage_layout),
            "initial_storage": {str(slot): value for slot, value in sorted(program.initial_storage.items())},
            "body_offsets": dict(program.body_offsets),
            "recursive": list(program.recursive),
            "sources": list(self.sources),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"

    def write(self, path: Union[str, Path]):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_document(cls, document: dict) -> "CompiledArtifact":
        missing = [name for name in REQUIRED if name not in document]
        if missing:
            raise MalformedField(f"artifact lacks {', '.join(missing)}")
        try:
            code = bytes.fromhex(document["bytecode_hex"])
        except ValueError as e:
            raise MalformedField(f"bytecode_hex: {e}")
        program = BytecodeProgram(
            code=code,
            function_table={k: int(v) for k, v in document["function_table"].items()},
            string_table=list(document["string_table"]),
            event_table=list(document["event_table"]),
            storage_layout={k: int(v) for k, v in document.get("storage_layout", {}).items()},
            initial_storage={int(k): int(v) for k, v in document.get("initial_storage", {}).items()},
            body_offsets={k: int(v) for k, v in document.get("body_offsets", {}).items()},
            recursive=list(document.get("recursive", [])),
        )
        table = table_from_document(document["sourcemap"])
        if not table.files:
            table.files = list(document["source_files"])
        return cls(program=program, table=table, source_files=list(document["source_files"]),
                   sources=list(document.get("sources", [])), compiler=dict(document.get("compiler", {})),
                   version=int(document["version"]))

    @classmethod
    def loads(cls, text: str) -> "CompiledArtifact":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise MalformedField(f"artifact is not valid JSON: {e}")
        return cls.from_document(document)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "CompiledArtifact":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def rebuild(self) -> Compilation:
        """Recompile the embedded sources with the recorded settings"""
        if len(self.sources) != len(self.source_files):
            raise MalformedField("artifact does not embed its sources")
        return compile_sources(list(zip(self.source_files, self.sources)), self.config)
