# Shared Randomness - seed derivation standing in for pre-shared random tapes
import hashlib
import logging
import secrets
from typing import Union

import numpy as np

logger = logging.getLogger(__name__)

SEED_BYTES = 32

# Domain separation tags
TAG_PROVER_ROUND = "prover-round"
TAG_COMMIT_A = "commit-a"
TAG_VERIFIER_B = "verifier-b"
TAG_VERIFIER_C = "verifier-c"
TAG_INSTANCE = "instance"
TAG_CHANNEL = "channel"
TAG_ADVERSARY = "adversary"


def fresh_seed() -> bytes:
    """Draw a new session seed from the OS CSPRNG"""
    return secrets.token_bytes(SEED_BYTES)


def seed_from_text(text: Union[str, bytes]) -> bytes:
    """Turn a config/CLI seed into bytes; hex strings are taken literally"""
    if isinstance(text, bytes):
        return text
    try:
        raw = bytes.fromhex(text)
        if raw:
            return raw
    except ValueError:
        pass
    return hashlib.sha256(text.encode("utf-8")).digest()


def derive_seed(seed: bytes, tag: str, *indices: int) -> bytes:
    """SHAKE-256 over (tag, seed, indices), length-prefixed so distinct inputs never collide"""
    xof = hashlib.shake_256()
    tag_bytes = tag.encode("utf-8")
    xof.update(len(tag_bytes).to_bytes(2, "big") + tag_bytes)
    xof.update(len(seed).to_bytes(2, "big") + seed)
    for index in indices:
        xof.update(int(index).to_bytes(8, "big"))
    return xof.digest(SEED_BYTES)


def derive_rng(seed: bytes, tag: str, *indices: int) -> np.random.Generator:
    """Deterministic generator for one (tag, indices) slot of a shared seed"""
    key = int.from_bytes(derive_seed(seed, tag, *indices)[:16], "big")
    return np.random.Generator(np.random.Philox(key=key))
