"""Reference stdio endpoint for the latent-optimization wire protocol.

Serves encode/decode/validate/score over newline-delimited JSON: token
embeddings from a causal LM's input matrix (or a deterministic hashed
table), prompt-guided repair decoding, chemical validity checking, and
docking scores with per-string caching.
"""

from .chem import BasicValidator, RdkitValidator, make_validator
from .config import AdapterConfig, DockingSettings, load_adapter_config
from .docking import CachedScorer, FallbackScorer, ScoreCache, SminaScorer, make_scorer
from .embeddings import HashedTableBackend, TransformersBackend, make_backend
from .prompts import PROMPT_CHECKSUMS, PROMPT_IDS, prompt_text, verify_prompt_checksums
from .server import Handler, serve

__version__ = "0.1.0"
