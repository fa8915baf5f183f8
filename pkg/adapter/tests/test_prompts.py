import hashlib

import pytest

from llm_chem_adapter.prompts import (
    PROMPT_CHECKSUMS,
    PROMPT_IDS,
    prompt_bytes,
    prompt_text,
    verify_prompt_checksums,
)


class TestPromptPayloads:
    def test_checksums_match_pinned_values(self):
        digests = verify_prompt_checksums()
        for pid in PROMPT_IDS:
            assert digests[pid] == PROMPT_CHECKSUMS[pid]
            assert hashlib.sha256(prompt_bytes(pid)).hexdigest() == PROMPT_CHECKSUMS[pid]

    def test_repair_prompt_content(self):
        text = prompt_text("repair")
        assert text.startswith("Instructions:")
        assert "SMILES repair engine" in text
        assert "never returning an empty string" in text
        assert "C1CC → C1CC1" in text
        assert "C(=O)(O → C(=O)O" in text
        assert "na → [Na]" in text
        assert text.rstrip().endswith("If input is already valid, return it unchanged.")

    def test_no_knowledge_prompt_content(self):
        text = prompt_text("no_knowledge")
        assert text.startswith("Output a SMILES string only!")
        assert "SMILES repair engine" in text
        assert "C1CC" not in text  # no chemistry rules in this variant

    def test_no_role_prompt_content(self):
        text = prompt_text("no_role")
        assert "repair engine" not in text
        assert "output this SMILES string" in text

    def test_drifted_payload_detected(self, tmp_path):
        for pid in PROMPT_IDS:
            (tmp_path / f"{pid}.txt").write_bytes(prompt_bytes(pid))
        (tmp_path / "repair.txt").write_bytes(b"tampered")
        with pytest.raises(ValueError, match="checksum"):
            verify_prompt_checksums(str(tmp_path))
