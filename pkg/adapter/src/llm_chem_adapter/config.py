"""Adapter configuration: model, prompts, chemistry, and docking settings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class DockingSettings:
    """Pose search knobs forwarded to the docking binary."""

    exhaustiveness: int = 32
    box_padding: float = 1.0  # autobox_add, in Angstrom
    pose_count: int = 9
    seed: int = 1
    binary: str = "smina"

    def __post_init__(self):
        if self.exhaustiveness < 1 or self.pose_count < 1:
            raise ValueError("exhaustiveness and pose_count must be >= 1")
        if self.box_padding < 0:
            raise ValueError("box_padding must be >= 0")


@dataclass(frozen=True)
class AdapterConfig:
    """Everything the serving loop needs.

    `model` is a HuggingFace identifier, or "hash:<d>" to select the
    deterministic table backend (no model weights required; used for
    protocol tests and dry runs).
    """

    model: str = "hash:16"
    device: str = "cpu"
    temperature: float = 0.4
    l_max: int = 80
    prompt_dir: Optional[str] = None  # None -> packaged prompt files
    docking: DockingSettings = field(default_factory=DockingSettings)
    receptor_path: Optional[str] = None
    reference_ligand_path: Optional[str] = None
    scorer: str = "auto"  # "auto" | "smina" | "fallback"
    chem: str = "auto"  # "auto" | "rdkit" | "basic"
    score_cache_path: Optional[str] = None
    generation_seed: int = 1

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.scorer not in ("auto", "smina", "fallback"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.chem not in ("auto", "rdkit", "basic"):
            raise ValueError(f"unknown chem backend {self.chem!r}")


def load_adapter_config(path: str) -> AdapterConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    docking = DockingSettings(**raw.pop("docking", {}))
    return AdapterConfig(docking=docking, **raw)
