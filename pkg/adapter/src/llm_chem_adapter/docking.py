"""Docking-score backends with a persistent per-string cache.

The smina path reconstructs 3D coordinates from the string with rdkit,
optimizes them with the MMFF94 force field, docks against the configured
receptor inside a box grown from the reference ligand, and keeps the best
pose score. The fallback scorer is a deterministic hash landscape for
environments without a docking stack; identical strings always get
identical values either way, cache or not.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import tempfile
from typing import Optional

from .config import AdapterConfig, DockingSettings


class ScoreCache:
    """Append-only text->score map, one JSON object per line."""

    def __init__(self, path: Optional[str] = None):
        self._path = path
        self._scores: dict[str, float] = {}
        self._fh = None
        if path is not None and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = json.loads(line)
                        self._scores[rec["text"]] = float(rec["score"])

    def get(self, text: str) -> Optional[float]:
        return self._scores.get(text)

    def put(self, text: str, value: float) -> None:
        if text in self._scores:
            return
        self._scores[text] = value
        if self._path is not None:
            if self._fh is None:
                self._fh = open(self._path, "a", encoding="utf-8")
            self._fh.write(json.dumps({"text": text, "score": value}) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class FallbackScorer:
    """Deterministic pseudo-affinity from a string digest; no chemistry."""

    name = "fallback"

    def score(self, text: str) -> float:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        base = int.from_bytes(digest[:8], "big") / 2**64  # uniform [0, 1)
        return -4.0 - 6.0 * base + 0.02 * abs(len(text) - 30)


class SminaScorer:
    """Conformer generation + MMFF optimization + smina docking, best pose."""

    name = "smina"

    def __init__(self, settings: DockingSettings, receptor: str, reference_ligand: str):
        from rdkit import Chem  # noqa: F401  probes availability up front

        if shutil.which(settings.binary) is None:
            raise FileNotFoundError(f"docking binary {settings.binary!r} not on PATH")
        if not (receptor and os.path.exists(receptor)):
            raise FileNotFoundError(f"receptor file {receptor!r} missing")
        if not (reference_ligand and os.path.exists(reference_ligand)):
            raise FileNotFoundError(f"reference ligand {reference_ligand!r} missing")
        self.settings = settings
        self.receptor = receptor
        self.reference_ligand = reference_ligand

    def _prepare_ligand(self, text: str, path: str) -> None:
        from rdkit import Chem
        from rdkit.Chem import AllChem

        mol = Chem.MolFromSmiles(text)
        if mol is None:
            raise ValueError(f"unparseable molecule string: {text!r}")
        mol = Chem.AddHs(mol)
        params = AllChem.ETKDGv3()
        params.randomSeed = self.settings.seed
        if AllChem.EmbedMolecule(mol, params) != 0:
            raise ValueError(f"3d embedding failed for {text!r}")
        AllChem.MMFFOptimizeMolecule(mol)
        writer = Chem.SDWriter(path)
        writer.write(mol)
        writer.close()

    def score(self, text: str) -> float:
        with tempfile.TemporaryDirectory() as tmp:
            ligand = os.path.join(tmp, "ligand.sdf")
            self._prepare_ligand(text, ligand)
            out = subprocess.run(
                [
                    self.settings.binary,
                    "--receptor", self.receptor,
                    "--ligand", ligand,
                    "--autobox_ligand", self.reference_ligand,
                    "--autobox_add", str(self.settings.box_padding),
                    "--exhaustiveness", str(self.settings.exhaustiveness),
                    "--num_modes", str(self.settings.pose_count),
                    "--seed", str(self.settings.seed),
                ],
                capture_output=True,
                text=True,
                check=True,
            )
        affinities = [
            float(m.group(1))
            for m in re.finditer(r"^\s*\d+\s+(-?\d+\.\d+)", out.stdout, re.MULTILINE)
        ]
        if not affinities:
            raise RuntimeError(f"no pose scores in docking output for {text!r}")
        return min(affinities)


class CachedScorer:
    def __init__(self, backend, cache: ScoreCache):
        self.backend = backend
        self.cache = cache
        self.name = backend.name

    def score(self, text: str) -> float:
        hit = self.cache.get(text)
        if hit is not None:
            return hit
        value = float(self.backend.score(text))
        self.cache.put(text, value)
        return value

    def close(self) -> None:
        self.cache.close()


def make_scorer(config: AdapterConfig) -> CachedScorer:
    cache = ScoreCache(config.score_cache_path)
    if config.scorer in ("auto", "smina"):
        try:
            backend = SminaScorer(
                config.docking, config.receptor_path, config.reference_ligand_path
            )
            return CachedScorer(backend, cache)
        except (ImportError, FileNotFoundError):
            if config.scorer == "smina":
                raise
    return CachedScorer(FallbackScorer(), cache)
