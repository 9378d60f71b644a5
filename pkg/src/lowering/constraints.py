"""
Constraint numbering for require-derived branches
"""

import logging
from dataclasses import replace

from lowering.ir import IrModule

logger = logging.getLogger(__name__)


def assign_constraint_indices(module: IrModule, mapping_enabled: bool = True) -> IrModule:
    """
    Number require branches 1..n per contract in lowering order

    The index lands in `attrs["constraint"]` and in the provenance; running
    twice gives the same numbering.
    """
    counters = {}
    for fn in module.functions.values():
        for instr in fn.instructions():
            if instr.opcode == "branch" and instr.attrs.get("origin") == "require":
                index = counters.get(fn.contract, 0) + 1
                counters[fn.contract] = index
                instr.attrs["constraint"] = index
                if mapping_enabled:
                    instr.provenance = replace(instr.provenance, zk_constraint=index)
    logger.debug("[LOWERING] constraints per contract: %s", counters)
    return module
