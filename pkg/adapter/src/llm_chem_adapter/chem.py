"""Chemical validity checking: rdkit sanitization when available."""

from __future__ import annotations

SMILES_CHARS = set("ABCDEFGHIKLMNOPRSTUVWXYZabcdefghiklmnoprstuy0123456789()[]{}=#$+-./\\@%*:~")


class RdkitValidator:
    name = "rdkit"

    def __init__(self):
        from rdkit import Chem, RDLogger

        RDLogger.DisableLog("rdApp.*")
        self._chem = Chem

    def valid(self, text: str) -> bool:
        if not text:
            return False
        return self._chem.MolFromSmiles(text, sanitize=True) is not None


class BasicValidator:
    """Grammar-level checks only: charset, bracket balance, ring-bond pairing.

    A stand-in for environments without a chemistry toolkit; it accepts some
    chemically impossible strings but rejects structural garbage.
    """

    name = "basic"

    def valid(self, text: str) -> bool:
        if not text or any(c not in SMILES_CHARS for c in text):
            return False
        depth_round = depth_square = 0
        ring_open: set[str] = set()
        for i, c in enumerate(text):
            if c == "(":
                depth_round += 1
            elif c == ")":
                depth_round -= 1
                if depth_round < 0:
                    return False
            elif c == "[":
                depth_square += 1
            elif c == "]":
                depth_square -= 1
                if depth_square < 0:
                    return False
            elif c.isdigit() and depth_square == 0:
                ring_open ^= {c}
        return depth_round == 0 and depth_square == 0 and not ring_open


def make_validator(kind: str = "auto"):
    if kind in ("auto", "rdkit"):
        try:
            return RdkitValidator()
        except ImportError:
            if kind == "rdkit":
                raise
    return BasicValidator()
