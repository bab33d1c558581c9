# Syndrome Decoding - GF(2) vectors, parity-check matrices, permutations and SD instances
import json
import logging
import math
import operator
from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

WORD_BITS = 64
WORD_DTYPE = np.dtype("<u8")

NO_INSTANCE_MAX_N = 24
DEFAULT_SEARCH_CAP = 5_000_000
NO_INSTANCE_MAX_ATTEMPTS = 10_000


class LengthMismatchError(ValueError):
    """Raised when vector/matrix dimensions disagree"""


class ParameterError(ValueError):
    """Raised when (n, k, w) violate 0 < k < n, 0 < w <= n"""


class UnsupportedInstanceError(ValueError):
    """Raised when a NO instance cannot be certified at this size"""


class SearchSpaceError(ValueError):
    """Raised when brute-force enumeration would exceed the configured cap"""


def _word_count(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def _tail_mask(n: int) -> np.uint64:
    rem = n % WORD_BITS
    return np.uint64(0xFFFFFFFFFFFFFFFF if rem == 0 else (1 << rem) - 1)


class BitVector:
    """Fixed-length vector over GF(2), packed little-endian into 64-bit words"""

    __slots__ = ("words", "length")

    def __init__(self, words: np.ndarray, length: int):
        words = np.ascontiguousarray(words, dtype=WORD_DTYPE)
        if length < 0 or words.shape != (_word_count(length),):
            raise LengthMismatchError(f"{words.shape[0]} words cannot hold a length-{length} vector")
        if length and words[-1] & ~_tail_mask(length):
            words = words.copy()
            words[-1] &= _tail_mask(length)
        words.setflags(write=False)
        self.words = words
        self.length = length

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(np.zeros(_word_count(n), dtype=WORD_DTYPE), n)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8) & 1
        n = int(bits.shape[0])
        packed = np.packbits(bits, bitorder="little")
        buf = np.zeros(_word_count(n) * 8, dtype=np.uint8)
        buf[:packed.shape[0]] = packed
        return cls(buf.view(WORD_DTYPE), n)

    @classmethod
    def from_int(cls, value: int, n: int) -> "BitVector":
        """Bit i of the vector is the 2^i digit of value"""
        value = int(value)
        if value < 0 or value.bit_length() > n:
            raise LengthMismatchError(f"value does not fit in {n} bits")
        raw = value.to_bytes(_word_count(n) * 8, "little")
        return cls(np.frombuffer(raw, dtype=WORD_DTYPE), n)

    @classmethod
    def from_bytes(cls, data: bytes, n: int) -> "BitVector":
        if len(data) != (n + 7) // 8:
            raise LengthMismatchError(f"expected {(n + 7) // 8} bytes for {n} bits, got {len(data)}")
        return cls.from_int(int.from_bytes(data, "little"), n) if n else cls.zeros(0)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitVector":
        raw = rng.bytes(_word_count(n) * 8)
        return cls(np.frombuffer(raw, dtype=WORD_DTYPE), n)

    @classmethod
    def random_weight(cls, n: int, w: int, rng: np.random.Generator) -> "BitVector":
        """Uniform weight-w vector; the support is a Fisher-Yates prefix"""
        if not 0 <= w <= n:
            raise ParameterError(f"weight {w} outside [0, {n}]")
        bits = np.zeros(n, dtype=np.uint8)
        bits[rng.permutation(n)[:w]] = 1
        return cls.from_bits(bits)

    def to_bits(self) -> np.ndarray:
        return np.unpackbits(self.words.view(np.uint8), bitorder="little")[:self.length]

    def to_int(self) -> int:
        return int.from_bytes(self.words.tobytes(), "little")

    def to_bytes(self) -> bytes:
        return self.words.tobytes()[:(self.length + 7) // 8]

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_hex(cls, text: str, n: int) -> "BitVector":
        return cls.from_bytes(bytes.fromhex(text), n)

    def support(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.to_bits())]

    def truncate(self, n: int) -> "BitVector":
        return BitVector.from_bits(self.to_bits()[:n])

    def pad(self, n: int) -> "BitVector":
        if n < self.length:
            raise LengthMismatchError(f"cannot pad length {self.length} down to {n}")
        return BitVector.from_int(self.to_int(), n)

    def __xor__(self, other: "BitVector") -> "BitVector":
        if not isinstance(other, BitVector):
            return NotImplemented
        if other.length != self.length:
            raise LengthMismatchError(f"XOR of lengths {self.length} and {other.length}")
        return BitVector(self.words ^ other.words, self.length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return int((self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & np.uint64(1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.length, self.words.tobytes()))

    def __repr__(self) -> str:
        if self.length <= 32:
            return f"BitVector({''.join(str(b) for b in self.to_bits())})"
        return f"BitVector(n={self.length}, weight={hamming_weight(self)})"


def hamming_weight(v: BitVector) -> int:
    """Number of 1 coordinates"""
    return int(np.bitwise_count(v.words).sum())


class ParityCheckMatrix:
    """(n-k) x n matrix over GF(2), one packed BitVector-layout row per parity check"""

    __slots__ = ("rows", "n", "k")

    def __init__(self, rows: np.ndarray, n: int, k: int):
        rows = np.ascontiguousarray(rows, dtype=WORD_DTYPE)
        if not 0 < k < n:
            raise ParameterError(f"need 0 < k < n, got n={n}, k={k}")
        if rows.shape != (n - k, _word_count(n)):
            raise LengthMismatchError(f"rows shape {rows.shape} does not match ({n - k}, {_word_count(n)})")
        rows = rows.copy()
        rows[:, -1] &= _tail_mask(n)
        rows.setflags(write=False)
        self.rows = rows
        self.n = n
        self.k = k

    @property
    def m(self) -> int:
        return self.n - self.k

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "ParityCheckMatrix":
        raw = rng.bytes((n - k) * _word_count(n) * 8)
        return cls(np.frombuffer(raw, dtype=WORD_DTYPE).reshape(n - k, _word_count(n)), n, k)

    @classmethod
    def from_bit_matrix(cls, bits: np.ndarray, k: int) -> "ParityCheckMatrix":
        bits = np.asarray(bits, dtype=np.uint8)
        n = bits.shape[1]
        rows = np.stack([BitVector.from_bits(row).words for row in bits]) if bits.shape[0] else \
            np.zeros((0, _word_count(n)), dtype=WORD_DTYPE)
        return cls(rows, n, k)

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.n)

    def to_bit_matrix(self) -> np.ndarray:
        return np.stack([self.row(i).to_bits() for i in range(self.m)])

    def columns_as_ints(self) -> List[int]:
        """Column j as an integer whose bit i is H[i, j]"""
        bits = self.to_bit_matrix().T
        return [int.from_bytes(np.packbits(col, bitorder="little").tobytes(), "little") for col in bits]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParityCheckMatrix):
            return NotImplemented
        return (self.n, self.k) == (other.n, other.k) and np.array_equal(self.rows, other.rows)


def mat_vec_mul(H: ParityCheckMatrix, v: BitVector) -> BitVector:
    """H.v over GF(2): row i is the parity of AND(row_i, v)"""
    if v.length != H.n:
        raise LengthMismatchError(f"vector length {v.length} != matrix width {H.n}")
    parity = np.bitwise_count(H.rows & v.words).sum(axis=1) & 1
    return BitVector.from_bits(parity.astype(np.uint8))


class Permutation:
    """Bijection on [0, n) stored as its image array"""

    __slots__ = ("images",)

    def __init__(self, images: Union[np.ndarray, Iterable[int]]):
        images = np.array(list(images) if not isinstance(images, np.ndarray) else images, dtype=np.int64)
        n = images.shape[0]
        seen = np.zeros(n, dtype=bool)
        if n and (images.min() < 0 or images.max() >= n):
            raise ParameterError("permutation images out of range")
        seen[images] = True
        if not seen.all():
            raise ParameterError("permutation images are not distinct")
        images.setflags(write=False)
        self.images = images

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def __call__(self, i: int) -> int:
        return int(self.images[i])

    def compose(self, other: "Permutation") -> "Permutation":
        """(self o other)(i) = self(other(i))"""
        return Permutation(self.images[other.images])

    def rank(self) -> int:
        """Lexicographic rank from the Lehmer code, identity ranks 0"""
        n = len(self)
        if n == 0:
            return 0
        smaller_later = np.triu(self.images[None, :] < self.images[:, None], 1)
        digits = smaller_later.sum(axis=1)
        rank = 0
        for i in range(n):
            rank = rank * (n - i) + int(digits[i])
        return rank

    @classmethod
    def unrank(cls, n: int, rank: int) -> "Permutation":
        rank = int(rank)
        if not 0 <= rank < math.factorial(n):
            raise ParameterError(f"rank {rank} outside [0, {n}!)")
        digits = [0] * n
        for i in range(n - 1, -1, -1):
            rank, digits[i] = divmod(rank, n - i)
        available = list(range(n))
        return cls([available.pop(d) for d in digits])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.images, other.images)

    def __hash__(self) -> int:
        return hash(self.images.tobytes())

    def __repr__(self) -> str:
        return f"Permutation({self.images.tolist() if len(self) <= 16 else f'n={len(self)}'})"


def permute(sigma: Permutation, v: BitVector) -> BitVector:
    """Move coordinate i to position sigma(i): out[sigma(i)] = v[i]"""
    if len(sigma) != v.length:
        raise LengthMismatchError(f"permutation on {len(sigma)} points applied to length {v.length}")
    bits = v.to_bits()
    out = np.empty_like(bits)
    out[sigma.images] = bits
    return BitVector.from_bits(out)


def invert(sigma: Permutation) -> Permutation:
    inverse = np.empty_like(sigma.images)
    inverse[sigma.images] = np.arange(len(sigma), dtype=np.int64)
    return Permutation(inverse)


@dataclass(frozen=True)
class SdInstance:
    """Syndrome decoding instance: find e with H.e = s and |e| = w"""
    H: ParityCheckMatrix
    s: BitVector
    w: int

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def k(self) -> int:
        return self.H.k

    def __post_init__(self):
        if self.s.length != self.H.m:
            raise LengthMismatchError(f"syndrome length {self.s.length} != n-k = {self.H.m}")
        if not 0 < self.w <= self.H.n:
            raise ParameterError(f"need 0 < w <= n, got w={self.w}")


@dataclass(frozen=True)
class SdWitness:
    e: BitVector


def is_valid_witness(instance: SdInstance, witness: SdWitness) -> bool:
    e = witness.e
    return (e.length == instance.n and hamming_weight(e) == instance.w
            and mat_vec_mul(instance.H, e) == instance.s)


def _check_parameters(n: int, k: int, w: int):
    if not 0 < k < n:
        raise ParameterError(f"need 0 < k < n, got n={n}, k={k}")
    if not 0 < w <= n:
        raise ParameterError(f"need 0 < w <= n, got n={n}, w={w}")


def gen_yes_instance(n: int, k: int, w: int, rng: np.random.Generator) -> Tuple[SdInstance, SdWitness]:
    """Uniform H, uniform weight-w e, s = H.e"""
    _check_parameters(n, k, w)
    H = ParityCheckMatrix.random(n, k, rng)
    e = BitVector.random_weight(n, w, rng)
    instance = SdInstance(H=H, s=mat_vec_mul(H, e), w=w)
    logger.debug(f"Generated YES instance n={n} k={k} w={w}")
    return instance, SdWitness(e=e)


def brute_force_solve(instance: SdInstance, max_candidates: int = DEFAULT_SEARCH_CAP) -> Optional[SdWitness]:
    """First weight-w solution in lexicographic support order, or None"""
    n, w = instance.n, instance.w
    candidates = math.comb(n, w)
    if candidates > max_candidates:
        raise SearchSpaceError(f"C({n},{w}) = {candidates} exceeds search cap {max_candidates}")
    columns = instance.H.columns_as_ints()
    target = instance.s.to_int()
    for support in combinations(range(n), w):
        if reduce(operator.xor, (columns[j] for j in support), 0) == target:
            bits = np.zeros(n, dtype=np.uint8)
            bits[list(support)] = 1
            return SdWitness(e=BitVector.from_bits(bits))
    return None


def gen_no_instance(n: int, k: int, w: int, rng: np.random.Generator,
                    max_attempts: int = NO_INSTANCE_MAX_ATTEMPTS) -> SdInstance:
    """Random (H, s) resampled until brute force certifies there is no weight-w solution"""
    _check_parameters(n, k, w)
    if n > NO_INSTANCE_MAX_N:
        raise UnsupportedInstanceError(f"cannot certify NO instances above n={NO_INSTANCE_MAX_N} (got {n})")
    for attempt in range(1, max_attempts + 1):
        H = ParityCheckMatrix.random(n, k, rng)
        instance = SdInstance(H=H, s=BitVector.random(n - k, rng), w=w)
        if brute_force_solve(instance) is None:
            logger.debug(f"Certified NO instance n={n} k={k} w={w} after {attempt} draws")
            return instance
    raise UnsupportedInstanceError(f"no NO instance found for n={n} k={k} w={w} in {max_attempts} draws")


def instance_to_dict(instance: SdInstance) -> dict:
    return {
        "n": instance.n,
        "k": instance.k,
        "w": instance.w,
        "bit_order": "little-endian within bytes",
        "H": [instance.H.row(i).hex() for i in range(instance.H.m)],
        "s": instance.s.hex(),
    }


def instance_from_dict(data: dict) -> SdInstance:
    n, k, w = int(data["n"]), int(data["k"]), int(data["w"])
    rows = [BitVector.from_hex(row, n).words for row in data["H"]]
    matrix = np.stack(rows) if rows else np.zeros((0, _word_count(n)), dtype=WORD_DTYPE)
    return SdInstance(H=ParityCheckMatrix(matrix, n, k), s=BitVector.from_hex(data["s"], n - k), w=w)


def save_instance(instance: SdInstance, path: Union[str, Path]):
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1))
    logger.info(f"Saved SD instance n={instance.n} k={instance.k} w={instance.w} to {path}")


def load_instance(path: Union[str, Path]) -> SdInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_witness(witness: SdWitness, path: Union[str, Path]):
    Path(path).write_text(json.dumps({"n": witness.e.length, "e": witness.e.hex()}))


def load_witness(path: Union[str, Path]) -> SdWitness:
    data = json.loads(Path(path).read_text())
    return SdWitness(e=BitVector.from_hex(data["e"], int(data["n"])))
