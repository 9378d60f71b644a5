"""
Mapping table construction - join the backend offset log with IR provenance
"""

import logging
from typing import Sequence

from backend.emitter import OffsetLog
from lowering.ir import IrModule
from model.errors import DanglingIrId
from model.table import MappingEntry, MappingTable

logger = logging.getLogger(__name__)


def build_table(log: OffsetLog, module: IrModule, files: Sequence[str] = ()) -> MappingTable:
    """
    One entry per logged instruction whose IR instruction has a usable span

    Dispatch stubs and Synthetic or span-less instructions are counted in
    `synthetic_excluded` instead.
    """
    index = module.instruction_index()
    table = MappingTable(files=list(files))
    for record in log:
        if record.ir_id is None:
            table.synthetic_excluded += 1
            continue
        instr = index.get(record.ir_id)
        if instr is None:
            raise DanglingIrId(f"offset 0x{record.offset:04x} refers to %{record.ir_id}, "
                               f"which is not in the final IR")
        prov = instr.provenance
        if not prov.is_mappable:
            table.synthetic_excluded += 1
            continue
        table.entries.append(MappingEntry(
            span=prov.primary_span,
            ir_id=record.ir_id,
            offset=record.offset,
            jump=record.jump,
            modifier_depth=instr.modifier_depth,
            zk_constraint=prov.zk_constraint,
            confidence=prov.confidence,
        ))
    table.sort()
    logger.info("[MAPGEN] %d entr%s, %d excluded", len(table), "y" if len(table) == 1 else "ies",
                table.synthetic_excluded)
    return table
