"""
Textual IR dump, one instruction per line:

    %id = opcode operands  ; s:l:f conf=E|A|S md=N zk=K
"""

from typing import List

from lowering.ir import IrInstr, IrModule


def format_operands(instr: IrInstr) -> str:
    parts: List[str] = []
    attrs = instr.attrs
    if instr.opcode == "const":
        parts.append(str(attrs["value"]))
    elif instr.opcode in ("binop", "cmp"):
        parts.append(attrs["op"])
    elif instr.opcode in ("load_state", "store_state", "load_key", "store_key"):
        parts.append(attrs.get("name", f"slot{attrs['slot']}"))
    elif instr.opcode == "param":
        parts.append(attrs.get("name", ""))
    elif instr.opcode == "call":
        parts.append("@" + attrs["callee"])
    elif instr.opcode == "emit_event":
        parts.append(attrs["event"])
    elif instr.opcode == "revert":
        parts.append(repr(attrs.get("message", "")))
    elif instr.opcode == "zk_constraint":
        parts.append(f"#{attrs['constraint']} {attrs.get('kind', '')}".strip())
    parts.extend(f"%{a}" for a in instr.args)
    parts.extend(instr.targets)
    parts.extend(f"[{label}: %{value}]" for label, value in instr.incoming)
    return " ".join(p for p in parts if p)


def format_instr(instr: IrInstr) -> str:
    prov = instr.provenance
    head = f"%{instr.ir_id} = {instr.opcode}"
    operands = format_operands(instr)
    if operands:
        head += " " + operands
    span = prov.primary_span.to_triple() if prov.primary_span is not None else "-"
    zk = prov.zk_constraint if prov.zk_constraint is not None else "-"
    return f"{head}  ; {span} conf={prov.confidence.letter} md={instr.modifier_depth} zk={zk}"


def dump_module(module: IrModule) -> str:
    lines: List[str] = []
    for fn in module.functions.values():
        returns = " returns" if fn.returns else ""
        lines.append(f"function {fn.key} {fn.visibility}{returns} {{")
        for block in fn.blocks:
            lines.append(f"{block.label}:")
            lines.extend("  " + format_instr(i) for i in block.instrs)
        lines.append("}")
    return "\n".join(lines) + "\n"
