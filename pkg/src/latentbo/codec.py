"""The encode/decode boundary: mock character codec and external endpoints.

The mock codec embeds each character through a fixed seeded table (the same
token always gets the same row, wherever it sits) and decodes by mapping
every row to the nearest table entry, ties to the lowest token id. That is
the desk-scale stand-in for repair decoding: small latent perturbations come
back as nearby valid strings. External endpoints speak the wire protocol of
:mod:`latentbo.protocol` through a child process.

Repair prompts are shipped verbatim as data files and are never interpreted
here; only the prompt id travels over the wire.
"""

from __future__ import annotations

import hashlib
from importlib import resources

import numpy as np

from .protocol import EndpointClient, ProtocolError
from .types import (
    CodecEndpoint,
    EmptySequenceError,
    LengthExceededError,
    TokenEmbeddingSeq,
)

PROMPT_IDS = ("repair", "no_knowledge", "no_role")

# sha256 of the shipped prompt payloads; external endpoints carrying their own
# copies must match these byte-for-byte.
PROMPT_CHECKSUMS = {
    "repair": "b1fc807101b1227069e942a0b65894cbe167d1115fcd8b66112396c448233ad2",
    "no_knowledge": "c5f4e099156b4001e0807e25665447c4cdeca73314b667adefd0c2f2e25f9e98",
    "no_role": "bebe9413e8fbfaaa17564f2b8beebe51272cab7a85c186024158e24f7b9eefed",
}


def prompt_text(prompt_id: str) -> str:
    if prompt_id not in PROMPT_IDS:
        raise ValueError(f"unknown prompt_id {prompt_id!r}, expected one of {PROMPT_IDS}")
    data = resources.files("latentbo.prompts").joinpath(f"{prompt_id}.txt").read_bytes()
    return data.decode("utf-8")


def prompt_checksum(prompt_id: str) -> str:
    if prompt_id not in PROMPT_IDS:
        raise ValueError(f"unknown prompt_id {prompt_id!r}, expected one of {PROMPT_IDS}")
    data = resources.files("latentbo.prompts").joinpath(f"{prompt_id}.txt").read_bytes()
    return hashlib.sha256(data).hexdigest()


class MockCodec:
    """Per-character table codec over a fixed alphabet.

    The embedding table is drawn once from a seeded standard normal; rows
    must be pairwise distinct so nearest-neighbor decoding is well posed.
    """

    def __init__(self, alphabet: str, d: int, l_max: int, seed: int = 0):
        if not alphabet:
            raise ValueError("alphabet must be non-empty")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet characters must be distinct")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(97,)))
        table = rng.standard_normal((len(alphabet), d))
        self._init(alphabet, table, l_max)

    @classmethod
    def from_table(cls, alphabet: str, table: np.ndarray, l_max: int) -> "MockCodec":
        obj = cls.__new__(cls)
        obj._init(alphabet, np.asarray(table, dtype=np.float64), l_max)
        return obj

    def _init(self, alphabet: str, table: np.ndarray, l_max: int):
        if table.shape[0] != len(alphabet):
            raise ValueError("one table row per alphabet character required")
        diffs = table[:, None, :] - table[None, :, :]
        dist = np.sqrt((diffs**2).sum(-1))
        off_diag = dist[~np.eye(len(alphabet), dtype=bool)]
        if len(alphabet) > 1 and off_diag.min() <= 0.0:
            raise ValueError("embedding table has coincident rows; decoding is ambiguous")
        self.alphabet = alphabet
        self.table = table
        self.table.setflags(write=False)
        self.l_max = l_max
        self.d = table.shape[1]
        self._char_to_id = {c: i for i, c in enumerate(alphabet)}
        self.min_row_distance = float(off_diag.min()) if len(alphabet) > 1 else np.inf

    def token_ids(self, text: str) -> list[int]:
        try:
            return [self._char_to_id[c] for c in text]
        except KeyError as exc:
            raise ValueError(f"character {exc.args[0]!r} not in codec alphabet") from exc

    def encode(self, text: str) -> TokenEmbeddingSeq:
        if not text:
            raise EmptySequenceError("cannot encode an empty string")
        if len(text) > self.l_max:
            raise LengthExceededError(f"text length {len(text)} exceeds l_max={self.l_max}")
        ids = self.token_ids(text)
        return TokenEmbeddingSeq(token_ids=tuple(ids), vectors=self.table[ids].copy())

    def decode(self, vectors: np.ndarray) -> str:
        """Nearest table row per position (ties to the lowest token id), capped at l_max."""
        vectors = np.asarray(vectors, dtype=np.float64)[: self.l_max]
        # squared distances; argmin returns the first (lowest-id) minimum
        d2 = ((vectors[:, None, :] - self.table[None, :, :]) ** 2).sum(-1)
        ids = d2.argmin(axis=1)
        return "".join(self.alphabet[i] for i in ids)

    def validate(self, text: str) -> bool:
        return bool(text) and len(text) <= self.l_max and all(c in self._char_to_id for c in text)


class CodecHandle:
    """Uniform encode/decode/validate over a mock or external endpoint."""

    def __init__(self, endpoint: CodecEndpoint, client: EndpointClient | None = None):
        self.endpoint = endpoint
        self.mock: MockCodec | None = None
        self.client: EndpointClient | None = None
        if endpoint.kind == "mock":
            self.mock = MockCodec(
                alphabet=endpoint.alphabet,
                d=endpoint.d,
                l_max=endpoint.l_max,
                seed=endpoint.table_seed,
            )
            self.d = self.mock.d
            self.l_max = self.mock.l_max
        else:
            self.client = client or EndpointClient(endpoint.command, timeout=endpoint.timeout)
            self.client.hello()
            self.d = self.client.d
            self.l_max = self.client.l_max
            if endpoint.d and endpoint.d != self.d:
                raise ProtocolError(
                    f"endpoint declares d={self.d}, config expects d={endpoint.d}"
                )

    def close(self) -> None:
        if self.client is not None:
            self.client.close()

    def __enter__(self) -> "CodecHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def encode(handle: CodecHandle, text: str) -> TokenEmbeddingSeq:
    """Embed `text`; one protocol round-trip for external endpoints."""
    if handle.mock is not None:
        return handle.mock.encode(text)
    if not text:
        raise EmptySequenceError("cannot encode an empty string")
    reply = handle.client.request("encode", text=text)
    emb = np.asarray(reply.get("embedding"), dtype=np.float64)
    if emb.ndim != 2 or emb.shape[1] != handle.d:
        raise ProtocolError(f"encode reply has shape {emb.shape}, expected (n, {handle.d})")
    if emb.shape[0] > handle.l_max:
        raise ProtocolError(f"encode reply longer than l_max={handle.l_max}")
    if not np.isfinite(emb).all():
        raise ProtocolError("encode reply contains non-finite values")
    ids = reply.get("token_ids")
    if ids is None:
        ids = tuple(range(emb.shape[0]))
    return TokenEmbeddingSeq(token_ids=tuple(int(i) for i in ids), vectors=emb)


def decode_repair(handle: CodecHandle, z, prompt_id: str = "repair") -> str:
    """Map a candidate embedding back to a string under the named repair prompt."""
    if prompt_id not in PROMPT_IDS:
        raise ValueError(f"unknown prompt_id {prompt_id!r}, expected one of {PROMPT_IDS}")
    vectors = z.vectors if hasattr(z, "vectors") else np.asarray(z, dtype=np.float64)
    if handle.mock is not None:
        return handle.mock.decode(vectors)
    reply = handle.client.request(
        "decode", embedding=[[float(v) for v in row] for row in vectors], prompt_id=prompt_id
    )
    text = reply.get("text")
    if not isinstance(text, str) or text == "":
        raise ProtocolError("decode reply must carry a non-empty string")
    return text


def validate(handle: CodecHandle, text: str) -> bool:
    """Whether `text` is a well-formed sequence for this codec."""
    if handle.mock is not None:
        return handle.mock.validate(text)
    reply = handle.client.request("validate", text=text)
    return bool(reply.get("valid"))
