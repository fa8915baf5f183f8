"""Repair-prompt payloads, shipped verbatim and pinned by checksum."""

from __future__ import annotations

import hashlib
import os
from importlib import resources

PROMPT_IDS = ("repair", "no_knowledge", "no_role")

# sha256 over the exact bytes served; must match the optimizer side.
PROMPT_CHECKSUMS = {
    "repair": "b1fc807101b1227069e942a0b65894cbe167d1115fcd8b66112396c448233ad2",
    "no_knowledge": "c5f4e099156b4001e0807e25665447c4cdeca73314b667adefd0c2f2e25f9e98",
    "no_role": "bebe9413e8fbfaaa17564f2b8beebe51272cab7a85c186024158e24f7b9eefed",
}


def prompt_bytes(prompt_id: str, prompt_dir: str | None = None) -> bytes:
    if prompt_id not in PROMPT_IDS:
        raise ValueError(f"unknown prompt_id {prompt_id!r}, expected one of {PROMPT_IDS}")
    if prompt_dir is not None:
        with open(os.path.join(prompt_dir, f"{prompt_id}.txt"), "rb") as fh:
            return fh.read()
    return resources.files("llm_chem_adapter.prompts").joinpath(f"{prompt_id}.txt").read_bytes()


def prompt_text(prompt_id: str, prompt_dir: str | None = None) -> str:
    return prompt_bytes(prompt_id, prompt_dir).decode("utf-8")


def verify_prompt_checksums(prompt_dir: str | None = None) -> dict[str, str]:
    """Digest every payload; raises if any drifted from the pinned values."""
    digests = {}
    for pid in PROMPT_IDS:
        digest = hashlib.sha256(prompt_bytes(pid, prompt_dir)).hexdigest()
        if digest != PROMPT_CHECKSUMS[pid]:
            raise ValueError(
                f"prompt {pid!r} checksum {digest} does not match pinned {PROMPT_CHECKSUMS[pid]}"
            )
        digests[pid] = digest
    return digests
