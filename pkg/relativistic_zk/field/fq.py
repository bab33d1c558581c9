# Finite Field F_Q - Mersenne-prime arithmetic and the protocol's field encodings
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import gmpy2
import numpy as np
from gmpy2 import mpz

from ..coding.syndrome import BitVector, LengthMismatchError, Permutation

logger = logging.getLogger(__name__)

# Exponents q for which 2^q - 1 is prime; moduli built from these skip the primality test.
MERSENNE_EXPONENTS = (
    2, 3, 5, 7, 13, 17, 19, 31, 61, 89, 107, 127, 521, 607, 1279, 2203, 2281,
    3217, 4253, 4423, 9689, 9941, 11213, 19937, 21701, 23209, 44497,
)


class ParameterMismatchError(ValueError):
    """Raised when two field elements come from different fields"""


class FieldDivisionByZeroError(ZeroDivisionError):
    """Raised on inversion of zero"""


class CapacityError(ValueError):
    """Raised when the field is too small for an embedding"""


class NonCanonicalEncodingError(ValueError):
    """Raised when serialized bytes do not hold a canonical field element"""


@lru_cache(maxsize=64)
def perm_syndrome_range(n: int) -> int:
    """|P_n x {0,1}^n| = n! * 2^n"""
    return math.factorial(n) << n


@dataclass(frozen=True)
class FieldParams:
    """F_Q with Q = 2^q - 1, or any odd prime in test mode"""
    q_exponent: int
    modulus: int
    n_embed: int = 1

    def __post_init__(self):
        if self.q_exponent <= 0 or self.n_embed <= 0:
            raise ValueError("q_exponent and n_embed must be positive")
        if self.is_mersenne:
            if self.q_exponent not in MERSENNE_EXPONENTS:
                raise ValueError(f"2^{self.q_exponent} - 1 is not an accepted Mersenne prime")
        elif self.modulus % 2 == 0 or not gmpy2.is_prime(self.modulus):
            raise ValueError(f"test-mode modulus {self.modulus} is not an odd prime")
        if self.modulus < (1 << self.n_embed) or self.modulus < perm_syndrome_range(self.n_embed):
            raise CapacityError(f"modulus too small to embed n={self.n_embed} (needs >= n! * 2^n)")

    @classmethod
    def mersenne(cls, q_exponent: int, n_embed: int = 1) -> "FieldParams":
        return cls(q_exponent=q_exponent, modulus=(1 << q_exponent) - 1, n_embed=n_embed)

    @classmethod
    def test_mode(cls, modulus: int, n_embed: int = 1) -> "FieldParams":
        return cls(q_exponent=int(modulus).bit_length(), modulus=int(modulus), n_embed=n_embed)

    @classmethod
    def for_code_length(cls, n: int) -> "FieldParams":
        """Smallest accepted Mersenne field that embeds both encodings for length n"""
        need = perm_syndrome_range(n)
        for q in MERSENNE_EXPONENTS:
            if (1 << q) - 1 >= need:
                return cls.mersenne(q, n_embed=n)
        raise CapacityError(f"no accepted Mersenne exponent embeds n={n}")

    @property
    def is_mersenne(self) -> bool:
        return self.modulus == (1 << self.q_exponent) - 1

    @property
    def byte_width(self) -> int:
        return (self.q_exponent + 7) // 8

    def element(self, value: int) -> "FieldElement":
        return FieldElement(mpz(value) % self.modulus, self)

    def zero(self) -> "FieldElement":
        return FieldElement(mpz(0), self)

    def one(self) -> "FieldElement":
        return FieldElement(mpz(1), self)


@dataclass(frozen=True)
class FieldElement:
    value: mpz
    params: FieldParams

    def __post_init__(self):
        if not 0 <= self.value < self.params.modulus:
            raise ValueError(f"non-canonical field value (Q = 2^{self.params.q_exponent} - 1 class)")

    def __int__(self) -> int:
        return int(self.value)

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return fe_add(self, other)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return fe_sub(self, other)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return fe_mul(self, other)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        return fe_mul(self, fe_inv(other))

    def __neg__(self) -> "FieldElement":
        return fe_neg(self)

    def __repr__(self) -> str:
        if self.params.q_exponent <= 64:
            return f"FieldElement({int(self.value)} mod {self.params.modulus})"
        return f"FieldElement(<{int(self.value).bit_length()} bits> mod 2^{self.params.q_exponent}-1)"


def _same_params(x: FieldElement, y: FieldElement):
    if x.params is not y.params and x.params != y.params:
        raise ParameterMismatchError("field elements belong to different fields")


def _reduce(x: mpz, params: FieldParams) -> mpz:
    """Canonical residue; Mersenne moduli fold x_hi * 2^q + x_lo into x_hi + x_lo"""
    if params.is_mersenne:
        q, m = params.q_exponent, params.modulus
        while x > m:
            x = (x & m) + (x >> q)
        return mpz(0) if x == m else x
    return x % params.modulus


def fe_add(x: FieldElement, y: FieldElement) -> FieldElement:
    _same_params(x, y)
    total = x.value + y.value
    if total >= x.params.modulus:
        total -= x.params.modulus
    return FieldElement(total, x.params)


def fe_sub(x: FieldElement, y: FieldElement) -> FieldElement:
    _same_params(x, y)
    diff = x.value - y.value
    if diff < 0:
        diff += x.params.modulus
    return FieldElement(diff, x.params)


def fe_neg(x: FieldElement) -> FieldElement:
    return FieldElement(mpz(0) if x.value == 0 else x.params.modulus - x.value, x.params)


def fe_mul(x: FieldElement, y: FieldElement) -> FieldElement:
    _same_params(x, y)
    return FieldElement(_reduce(x.value * y.value, x.params), x.params)


def fe_pow(x: FieldElement, exponent: int) -> FieldElement:
    return FieldElement(gmpy2.powmod(x.value, exponent, x.params.modulus), x.params)


def fe_inv(x: FieldElement) -> FieldElement:
    """Fermat inverse x^(Q-2)"""
    if x.value == 0:
        raise FieldDivisionByZeroError("zero has no inverse in F_Q")
    return fe_pow(x, x.params.modulus - 2)


def fe_random(params: FieldParams, rng: np.random.Generator) -> FieldElement:
    """Uniform element by rejection: draw ceil(q/8) bytes, keep the low q bits, retry on >= Q"""
    mask = (1 << params.q_exponent) - 1
    while True:
        candidate = mpz(int.from_bytes(rng.bytes(params.byte_width), "big") & mask)
        if candidate < params.modulus:
            return FieldElement(candidate, params)


def fe_to_bytes(x: FieldElement) -> bytes:
    return int(x.value).to_bytes(x.params.byte_width, "big")


def fe_from_bytes(data: bytes, params: FieldParams) -> FieldElement:
    if len(data) != params.byte_width:
        raise NonCanonicalEncodingError(f"expected {params.byte_width} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= params.modulus:
        raise NonCanonicalEncodingError("encoded value is not below Q")
    return FieldElement(mpz(value), params)


@dataclass(frozen=True)
class MappingFailure:
    """A field element outside the valid range of its encoding slot"""
    slot: str
    reason: str


def encode_bitvec(v: BitVector, params: FieldParams) -> FieldElement:
    """Little-endian embedding: bit i of v carries weight 2^i"""
    if v.length > params.n_embed or (1 << v.length) > params.modulus:
        raise CapacityError(f"cannot embed a length-{v.length} vector (n_embed={params.n_embed})")
    return FieldElement(mpz(v.to_int()), params)


def decode_bitvec(x: FieldElement, n: int) -> Union[BitVector, MappingFailure]:
    if x.value >> n:
        return MappingFailure(slot="bitvec", reason=f"value has bits above position {n - 1}")
    return BitVector.from_int(int(x.value), n)


def encode_perm_syndrome(sigma: Permutation, s_prime: BitVector, params: FieldParams) -> FieldElement:
    """Index of (sigma, s') in P_n x {0,1}^n: lehmer_rank(sigma) * 2^n + int(s'), s' zero-padded to n bits"""
    n = len(sigma)
    if s_prime.length > n:
        raise LengthMismatchError(f"s' of length {s_prime.length} longer than n={n}")
    if perm_syndrome_range(n) > params.modulus:
        raise CapacityError(f"F_Q cannot embed n! * 2^n for n={n}")
    return FieldElement((mpz(sigma.rank()) << n) + s_prime.to_int(), params)


def decode_perm_syndrome(x: FieldElement, n: int) -> Union[Tuple[Permutation, BitVector], MappingFailure]:
    if x.value >= perm_syndrome_range(n):
        return MappingFailure(slot="perm_syndrome", reason=f"value is not below {n}! * 2^{n}")
    rank = int(x.value >> n)
    low = int(x.value & ((mpz(1) << n) - 1))
    return Permutation.unrank(n, rank), BitVector.from_int(low, n)
