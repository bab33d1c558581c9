# Stern Round Logic - prover pre-processing, P1/P2 answers and the verifier's checking procedure
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from ..coding.syndrome import (BitVector, Permutation, SdInstance, SdWitness, hamming_weight, invert,
                               is_valid_witness, mat_vec_mul, permute)
from ..commitment.fq_commitment import Commitment, commit, derive_prover_key, verify_reveal
from ..field.fq import (FieldElement, FieldParams, MappingFailure, ParameterMismatchError, decode_bitvec,
                        decode_perm_syndrome, encode_bitvec, encode_perm_syndrome)
from ..field.randomness import TAG_PROVER_ROUND, derive_rng

logger = logging.getLogger(__name__)

CHALLENGES = (1, 2, 3)


class InvalidWitnessError(ValueError):
    """Raised when honest pre-processing is given a witness that does not solve the instance"""


class InvalidChallengeError(ValueError):
    """Raised when a challenge is outside {1, 2, 3}"""


@dataclass(frozen=True)
class ProverRoundState:
    """Everything both provers agreed on before the round; s_prime has length n-k"""
    sigma: Permutation
    t: BitVector
    s_prime: BitVector
    z1: FieldElement
    z2: FieldElement
    z3: FieldElement
    a1: FieldElement
    a2: FieldElement
    a3: FieldElement

    @property
    def z(self) -> Tuple[FieldElement, FieldElement, FieldElement]:
        return self.z1, self.z2, self.z3

    @property
    def a(self) -> Tuple[FieldElement, FieldElement, FieldElement]:
        return self.a1, self.a2, self.a3


@dataclass(frozen=True)
class Phase1Message:
    """B = (b1, b2, b3), sent by V1"""
    b: Tuple[FieldElement, ...]


@dataclass(frozen=True)
class Phase1Response:
    """Y = (y1, y2, y3), sent by P1"""
    y: Tuple[Commitment, ...]


@dataclass(frozen=True)
class Phase2Message:
    c: int


@dataclass(frozen=True)
class Opening:
    index: int
    z: FieldElement
    a: FieldElement


@dataclass(frozen=True)
class Phase2Response:
    """The two openings with index != c, smallest index first"""
    openings: Tuple[Opening, ...]


class VerdictReason(str, Enum):
    OK = "OK"
    BAD_COMMITMENT = "BadCommitment"
    MAPPING_FAILURE = "MappingFailure"
    WEIGHT_CHECK_FAILED = "WeightCheckFailed"
    SYNDROME_CHECK_2_FAILED = "SyndromeCheck2Failed"
    SYNDROME_CHECK_3_FAILED = "SyndromeCheck3Failed"
    TIMING_VIOLATION = "TimingViolation"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: VerdictReason
    index: Optional[int] = None

    def __post_init__(self):
        if self.accepted != (self.reason is VerdictReason.OK):
            raise ValueError("a verdict is accepted exactly when its reason is OK")

    @classmethod
    def ok(cls) -> "Verdict":
        return cls(True, VerdictReason.OK)

    @classmethod
    def reject(cls, reason: VerdictReason, index: Optional[int] = None) -> "Verdict":
        return cls(False, reason, index)

    def label(self) -> str:
        """CSV form, e.g. BadCommitment(2)"""
        return self.reason.value if self.index is None else f"{self.reason.value}({self.index})"

    @classmethod
    def from_label(cls, text: str) -> "Verdict":
        name, _, rest = text.partition("(")
        reason = VerdictReason(name)
        index = int(rest.rstrip(")")) if rest else None
        return cls(reason is VerdictReason.OK, reason, index)


def revealed_indices(c: int) -> Tuple[int, int]:
    if c not in CHALLENGES:
        raise InvalidChallengeError(f"challenge must be 1, 2 or 3, got {c!r}")
    return tuple(i for i in CHALLENGES if i != c)


def assemble_state(sigma: Permutation, t: BitVector, s_prime: BitVector, e: BitVector,
                   round_seed: bytes, params: FieldParams) -> ProverRoundState:
    """Encode (sigma, s'), sigma(t) and sigma(t + e) and draw the three commitment keys"""
    n = len(sigma)
    return ProverRoundState(
        sigma=sigma,
        t=t,
        s_prime=s_prime,
        z1=encode_perm_syndrome(sigma, s_prime.pad(n), params),
        z2=encode_bitvec(permute(sigma, t), params),
        z3=encode_bitvec(permute(sigma, t ^ e), params),
        a1=derive_prover_key(round_seed, 1, params),
        a2=derive_prover_key(round_seed, 2, params),
        a3=derive_prover_key(round_seed, 3, params),
    )


def prover_preprocess(instance: SdInstance, witness: SdWitness, round_seed: bytes,
                      params: FieldParams) -> ProverRoundState:
    """Honest round state, deterministic in round_seed"""
    if not is_valid_witness(instance, witness):
        raise InvalidWitnessError("witness does not satisfy H.e = s with weight w")
    rng = derive_rng(round_seed, TAG_PROVER_ROUND)
    sigma = Permutation.random(instance.n, rng)
    t = BitVector.random(instance.n, rng)
    return assemble_state(sigma, t, mat_vec_mul(instance.H, t), witness.e, round_seed, params)


def p1_respond(state: ProverRoundState, message: Phase1Message) -> Phase1Response:
    return Phase1Response(y=tuple(commit(z, a, b) for z, a, b in zip(state.z, state.a, message.b)))


def p2_respond(state: ProverRoundState, message: Phase2Message) -> Phase2Response:
    return Phase2Response(openings=tuple(
        Opening(index=i, z=state.z[i - 1], a=state.a[i - 1]) for i in revealed_indices(message.c)
    ))


def _decode_z1(z1: FieldElement, instance: SdInstance):
    decoded = decode_perm_syndrome(z1, instance.n)
    if isinstance(decoded, MappingFailure):
        return decoded
    sigma, s_padded = decoded
    # s' occupies the low n-k bits; anything above is outside the slot
    if s_padded.to_int() >> instance.H.m:
        return MappingFailure(slot="perm_syndrome", reason="syndrome padding bits are set")
    return sigma, s_padded.truncate(instance.H.m)


def verifier_check(instance: SdInstance, B: Phase1Message, Y: Phase1Response, c: Phase2Message,
                   AZ: Phase2Response) -> Verdict:
    """Check both openings, decode what the challenge needs and run the challenge check"""
    try:
        expected = revealed_indices(c.c)
    except InvalidChallengeError:
        return Verdict.reject(VerdictReason.BAD_COMMITMENT)
    if len(B.b) != 3 or len(Y.y) != 3 or tuple(o.index for o in AZ.openings) != expected:
        return Verdict.reject(VerdictReason.BAD_COMMITMENT)

    revealed = {}
    for opening in AZ.openings:
        i = opening.index
        try:
            opened = verify_reveal(Y.y[i - 1], B.b[i - 1], opening.z, opening.a)
        except ParameterMismatchError:
            opened = False
        if not opened:
            return Verdict.reject(VerdictReason.BAD_COMMITMENT, i)
        revealed[i] = opening.z

    n, H = instance.n, instance.H
    if c.c == 1:
        v2 = decode_bitvec(revealed[2], n)
        if isinstance(v2, MappingFailure):
            return Verdict.reject(VerdictReason.MAPPING_FAILURE, 2)
        v3 = decode_bitvec(revealed[3], n)
        if isinstance(v3, MappingFailure):
            return Verdict.reject(VerdictReason.MAPPING_FAILURE, 3)
        if hamming_weight(v2 ^ v3) != instance.w:
            return Verdict.reject(VerdictReason.WEIGHT_CHECK_FAILED)
        return Verdict.ok()

    decoded = _decode_z1(revealed[1], instance)
    if isinstance(decoded, MappingFailure):
        return Verdict.reject(VerdictReason.MAPPING_FAILURE, 1)
    sigma, s_prime = decoded
    other = 3 if c.c == 2 else 2
    v = decode_bitvec(revealed[other], n)
    if isinstance(v, MappingFailure):
        return Verdict.reject(VerdictReason.MAPPING_FAILURE, other)
    syndrome = mat_vec_mul(H, permute(invert(sigma), v))
    if c.c == 2:
        if syndrome != instance.s ^ s_prime:
            return Verdict.reject(VerdictReason.SYNDROME_CHECK_2_FAILED)
    elif syndrome != s_prime:
        return Verdict.reject(VerdictReason.SYNDROME_CHECK_3_FAILED)
    return Verdict.ok()


def run_round(instance: SdInstance, state: ProverRoundState, B: Phase1Message, c: Phase2Message) -> Verdict:
    """One round without a network, for tests and the statistical harness"""
    return verifier_check(instance, B, p1_respond(state, B), c, p2_respond(state, c))
