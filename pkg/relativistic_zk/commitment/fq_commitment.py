# F_Q String Commitment - single-round relativistic commit / reveal and the binding extractor
import logging
from dataclasses import dataclass

from ..field.fq import (FieldElement, FieldParams, ParameterMismatchError, fe_add, fe_inv, fe_mul,
                        fe_random, fe_sub)
from ..field.randomness import TAG_COMMIT_A, TAG_VERIFIER_B, derive_rng

logger = logging.getLogger(__name__)


class DegenerateOpeningError(ValueError):
    """Raised when a double opening reveals the same value twice"""


@dataclass(frozen=True)
class CommitmentKeys:
    """a is shared by the provers, b by the verifiers; fresh for every commitment"""
    a: FieldElement
    b: FieldElement

    def commit(self, z: FieldElement) -> "Commitment":
        return commit(z, self.a, self.b)

    def verify(self, y: "Commitment", z: FieldElement) -> bool:
        return verify_reveal(y, self.b, z, self.a)


@dataclass(frozen=True)
class Commitment:
    y: FieldElement


def commit(z: FieldElement, a: FieldElement, b: FieldElement) -> Commitment:
    """y = a + z*b"""
    return Commitment(y=fe_add(a, fe_mul(z, b)))


def verify_reveal(y: Commitment, b: FieldElement, z: FieldElement, a: FieldElement) -> bool:
    try:
        return commit(z, a, b).y == y.y
    except ParameterMismatchError:
        return False


def extract_b(y: Commitment, z1: FieldElement, a1: FieldElement, z2: FieldElement, a2: FieldElement) -> FieldElement:
    """The only b under which both openings of y verify: (a2 - a1) / (z1 - z2)"""
    if z1 == z2:
        raise DegenerateOpeningError("double opening needs two distinct committed values")
    return fe_mul(fe_sub(a2, a1), fe_inv(fe_sub(z1, z2)))


def derive_prover_key(round_seed: bytes, slot: int, params: FieldParams) -> FieldElement:
    """a for commitment `slot`, from the round seed both provers derive from their shared seed"""
    return fe_random(params, derive_rng(round_seed, TAG_COMMIT_A, slot))


def derive_verifier_key(verifier_seed: bytes, round_index: int, slot: int, params: FieldParams) -> FieldElement:
    """b for commitment `slot` of round `round_index`, from the verifier-pair seed"""
    return fe_random(params, derive_rng(verifier_seed, TAG_VERIFIER_B, round_index, slot))
