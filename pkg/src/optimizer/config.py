"""
Pass configuration and per-pass reports
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List

from model.errors import ConfigError

PASS_NAMES = ("const_fold", "dce", "inline", "unroll", "reorder", "cfg_restructure", "zk_instrument")
DEFAULT_ORDER = ["inline", "const_fold", "unroll", "dce", "cfg_restructure", "reorder", "zk_instrument"]


@dataclass
class PassConfig:
    """
    Attributes:
        passes: enabled passes, in run order
        unroll_max_trips: largest trip count that is fully unrolled
        inline_max_instrs: largest callee (in instructions) that is inlined
        mapping_enabled: when off, passes skip every provenance update
        verify: run the SSA checker after every pass
    """
    passes: List[str] = field(default_factory=lambda: list(DEFAULT_ORDER))
    unroll_max_trips: int = 8
    inline_max_instrs: int = 40
    mapping_enabled: bool = True
    verify: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in self.passes:
            if name not in PASS_NAMES:
                raise ConfigError(f"Unknown pass '{name}' (known: {', '.join(PASS_NAMES)})")
        if len(set(self.passes)) != len(self.passes):
            raise ConfigError(f"Pass listed twice in {self.passes}")
        if "zk_instrument" in self.passes and self.passes[-1] != "zk_instrument":
            raise ConfigError("zk_instrument must be the last pass")
        if self.unroll_max_trips < 0 or self.inline_max_instrs < 0:
            raise ConfigError("Pass thresholds must be non-negative")

    @classmethod
    def default(cls, **overrides) -> "PassConfig":
        return cls(**overrides)

    @classmethod
    def none(cls, **overrides) -> "PassConfig":
        return cls(passes=[], **overrides)

    @staticmethod
    def parse_passes(text: str) -> List[str]:
        """Comma list from the command line; empty or `none` means no passes"""
        text = text.strip()
        if text in ("", "none"):
            return []
        return [p.strip() for p in text.split(",") if p.strip()]

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop("verify")
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "PassConfig":
        return cls(passes=list(data.get("passes", DEFAULT_ORDER)),
                   unroll_max_trips=int(data.get("unroll_max_trips", 8)),
                   inline_max_instrs=int(data.get("inline_max_instrs", 40)),
                   mapping_enabled=bool(data.get("mapping_enabled", True)))


@dataclass
class PassStats:
    """
    Counts for one pass run

    Attributes:
        created / deleted: instructions whose ids appeared / disappeared
        moved: instructions that changed position within their block
        downgraded: provenance that dropped from Exact to Approximate
        no_mapping: ids that will have no mapping entry (deleted or synthetic)
    """
    name: str
    created: int = 0
    deleted: int = 0
    moved: int = 0
    downgraded: int = 0
    no_mapping: List[int] = field(default_factory=list)
    instrs_before: int = 0
    instrs_after: int = 0
    seconds: float = 0.0


@dataclass
class PassReport:
    passes: List[PassStats] = field(default_factory=list)

    def totals(self) -> Dict[str, int]:
        return {
            "created": sum(p.created for p in self.passes),
            "deleted": sum(p.deleted for p in self.passes),
            "moved": sum(p.moved for p in self.passes),
            "downgraded": sum(p.downgraded for p in self.passes),
            "no_mapping": sum(len(p.no_mapping) for p in self.passes),
        }

    def stats(self, name: str) -> PassStats:
        for p in self.passes:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> Dict:
        return {"passes": [{k: v for k, v in asdict(p).items() if k != "seconds"} for p in self.passes],
                "totals": self.totals()}
