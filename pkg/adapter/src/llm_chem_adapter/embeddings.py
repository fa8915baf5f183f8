"""Embedding backends: real input-embedding extraction or a hashed table.

Both backends satisfy the same law: a token's embedding row never depends on
its position (no positional encoding is ever added), so repeated tokens get
identical rows. Decoding prefixes the repair prompt's own token embeddings
to the candidate rows before generation.
"""

from __future__ import annotations

import numpy as np

PRINTABLE = "".join(chr(c) for c in range(32, 127))


class HashedTableBackend:
    """Deterministic per-byte embedding table; no model weights required.

    Tokens are printable-ASCII codepoints. Decoding maps each candidate row
    to the nearest table row; the prompt prefix shapes the request exactly
    like the model-backed path but carries no information here.
    """

    def __init__(self, d: int, l_max: int, seed: int = 0):
        self.name = f"hashed-table-{d}"
        self.d = int(d)
        self.l_max = int(l_max)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(5,)))
        self.table = rng.standard_normal((len(PRINTABLE), self.d))
        self._char_to_id = {c: i for i, c in enumerate(PRINTABLE)}

    def encode(self, text: str) -> tuple[list[int], np.ndarray]:
        try:
            ids = [self._char_to_id[c] for c in text[: self.l_max]]
        except KeyError as exc:
            raise ValueError(f"character {exc.args[0]!r} is not printable ASCII") from exc
        return ids, self.table[ids].copy()

    def _prompt_rows(self, text: str) -> np.ndarray:
        # prompts may carry arbitrary codepoints; fold them into the table
        ids = [ord(c) % len(PRINTABLE) for c in text]
        return self.table[ids]

    def decode(self, rows: np.ndarray, prompt_text: str) -> str:
        prompt_rows = self._prompt_rows(prompt_text)
        full = np.vstack([prompt_rows, rows]) if len(rows) else prompt_rows
        suffix = full[len(prompt_rows) :][: self.l_max]
        if suffix.shape[0] == 0:
            return "C"
        d2 = ((suffix[:, None, :] - self.table[None, :, :]) ** 2).sum(-1)
        out = "".join(PRINTABLE[i] for i in d2.argmin(axis=1))
        return out or "C"


class TransformersBackend:
    """Causal-LM backend: rows come from the input embedding matrix only.

    Hidden states are never used; they would reintroduce position
    dependence. Generation consumes prompt embeddings + candidate rows and
    samples at the configured temperature with a fixed seed.
    """

    def __init__(self, model_id: str, device: str, temperature: float, l_max: int, seed: int = 1):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id).to(device).eval()
        self.embedding = self.model.get_input_embeddings()
        self.name = model_id
        self.d = int(self.embedding.embedding_dim)
        self.l_max = int(l_max)
        self.device = device
        self.temperature = temperature
        self.seed = seed

    def encode(self, text: str) -> tuple[list[int], np.ndarray]:
        ids = self.tokenizer(text, add_special_tokens=False)["input_ids"][: self.l_max]
        with self._torch.no_grad():
            rows = self.embedding(self._torch.tensor(ids, device=self.device))
        return list(map(int, ids)), rows.detach().cpu().double().numpy()

    def decode(self, rows: np.ndarray, prompt_text: str) -> str:
        torch = self._torch
        prompt_ids = self.tokenizer(prompt_text, add_special_tokens=False)["input_ids"]
        with torch.no_grad():
            prompt_rows = self.embedding(torch.tensor(prompt_ids, device=self.device))
            cand_rows = torch.tensor(rows, device=self.device, dtype=prompt_rows.dtype)
            inputs_embeds = torch.cat([prompt_rows, cand_rows], dim=0)[None, :, :]
            mask = torch.ones(inputs_embeds.shape[:2], dtype=torch.long, device=self.device)
            torch.manual_seed(self.seed)
            generated = self.model.generate(
                inputs_embeds=inputs_embeds,
                attention_mask=mask,
                do_sample=True,
                temperature=self.temperature,
                max_new_tokens=self.l_max,
                pad_token_id=self.tokenizer.eos_token_id,
            )
        text = self.tokenizer.decode(generated[0], skip_special_tokens=True).strip()
        return text or "C"


def make_backend(config):
    """Backend named by config.model: 'hash:<d>' or a HuggingFace model id."""
    if config.model.startswith("hash:"):
        return HashedTableBackend(
            d=int(config.model.split(":", 1)[1]), l_max=config.l_max, seed=config.generation_seed
        )
    return TransformersBackend(
        model_id=config.model,
        device=config.device,
        temperature=config.temperature,
        l_max=config.l_max,
        seed=config.generation_seed,
    )
