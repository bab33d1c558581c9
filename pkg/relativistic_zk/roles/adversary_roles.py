# Adversary Roles - cheating prover pairs used to exercise soundness and timing enforcement
import logging
from typing import Optional

from ..field.randomness import TAG_ADVERSARY, derive_rng
from ..stern.cheating import cheating_preprocess, informed_preprocess, rotating_fail_challenge
from ..stern.stern_protocol import ProverRoundState, p1_respond, p2_respond
from ..transport.wire import (Frame, MessageType, decode_phase1_challenge, decode_phase2_challenge,
                              encode_frame, encode_phase1_response, encode_phase2_response)
from .base_role import AlarmSeverity, RoleProgram
from .prover_roles import ProverRole, ProverStrategy

logger = logging.getLogger(__name__)


class FixedFailStrategy(ProverStrategy):
    """Always gives up on the same challenge"""

    def __init__(self, *args, fail_challenge: int, **kwargs):
        super().__init__(*args, **kwargs)
        self.fail_challenge = fail_challenge

    def state_for(self, i: int) -> Optional[ProverRoundState]:
        return cheating_preprocess(self.instance, self.fail_challenge, self.round_seed(i), self.params)


class RotatingStrategy(ProverStrategy):
    """Fails challenge 1, 2, 3, 1, ... in successive rounds"""

    def state_for(self, i: int) -> Optional[ProverRoundState]:
        return cheating_preprocess(self.instance, rotating_fail_challenge(i), self.round_seed(i), self.params)


class AbortRateStrategy(ProverStrategy):
    """Sits out each round with probability abort_prob, otherwise plays the fallback.

    The coin is drawn from the provers' shared seed so both provers abort together.
    """

    def __init__(self, *args, abort_prob: float, fallback: ProverStrategy, **kwargs):
        super().__init__(*args, **kwargs)
        self.abort_prob = abort_prob
        self.fallback = fallback

    def aborts(self, i: int) -> bool:
        return bool(derive_rng(self.prover_seed, TAG_ADVERSARY, i).random() < self.abort_prob)

    def state_for(self, i: int) -> Optional[ProverRoundState]:
        if self.aborts(i):
            return None
        return self.fallback.state_for(i)


class SpookyP1(ProverRole):
    """Forwards B to P2 and waits for P2 to forward c before committing"""

    verifier = "v1"
    challenge_type = MessageType.PHASE1_CHALLENGE
    peers = ("v1", "p2")

    def answer(self, i: int, frame: Frame) -> RoleProgram:
        B = decode_phase1_challenge(frame.payload, self.params)
        yield from self.send("p2", encode_frame(frame))
        relayed = yield from self.await_frame("p2", MessageType.PHASE2_CHALLENGE, i, self.round_end_ns(i))
        if relayed is None or relayed.frame is None:
            self.add_alarm(f"RELAY_MISSING_{i}", AlarmSeverity.LOW, "no relayed challenge from p2", i)
            return None
        c = decode_phase2_challenge(relayed.frame.payload)
        state = informed_preprocess(self.instance, c.c, self.strategy.round_seed(i), self.params,
                                    self.strategy.witness)
        return encode_phase1_response(i, p1_respond(state, B))


class SpookyP2(ProverRole):
    """Forwards c to P1 and waits for P1 to forward B before opening"""

    verifier = "v2"
    challenge_type = MessageType.PHASE2_CHALLENGE
    peers = ("v2", "p1")

    def answer(self, i: int, frame: Frame) -> RoleProgram:
        c = decode_phase2_challenge(frame.payload)
        yield from self.send("p1", encode_frame(frame))
        relayed = yield from self.await_frame("p1", MessageType.PHASE1_CHALLENGE, i, self.round_end_ns(i))
        if relayed is None or relayed.frame is None:
            self.add_alarm(f"RELAY_MISSING_{i}", AlarmSeverity.LOW, "no relayed B from p1", i)
            return None
        state = informed_preprocess(self.instance, c.c, self.strategy.round_seed(i), self.params,
                                    self.strategy.witness)
        return encode_phase2_response(i, p2_respond(state, c))
