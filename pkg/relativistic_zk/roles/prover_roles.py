# Prover Roles - P1 answers phase 1 with commitments, P2 answers phase 2 with openings
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

from ..coding.syndrome import SdInstance, SdWitness
from ..field.fq import FieldParams
from ..field.randomness import TAG_PROVER_ROUND, derive_seed
from ..stern.stern_protocol import ProverRoundState, p1_respond, p2_respond, prover_preprocess
from ..transport.wire import (Frame, MessageType, WireFormatError, decode_phase1_challenge, decode_phase2_challenge,
                              decode_sync, encode_phase1_response, encode_phase2_response)
from .base_role import AlarmSeverity, BaseRole, RoleProgram

logger = logging.getLogger(__name__)


class ProverStrategy(ABC):
    """How the prover pair fills each round; both provers hold identical strategies"""

    def __init__(self, instance: SdInstance, params: FieldParams, prover_seed: bytes,
                 witness: Optional[SdWitness] = None):
        self.instance = instance
        self.params = params
        self.prover_seed = prover_seed
        self.witness = witness

    def round_seed(self, i: int) -> bytes:
        return derive_seed(self.prover_seed, TAG_PROVER_ROUND, i)

    @abstractmethod
    def state_for(self, i: int) -> Optional[ProverRoundState]:
        """Round-i state, or None when the pair sits the round out"""


class HonestStrategy(ProverStrategy):

    def state_for(self, i: int) -> Optional[ProverRoundState]:
        return prover_preprocess(self.instance, self.witness, self.round_seed(i), self.params)


class ProverRole(BaseRole):
    """Answers every challenge from its verifier until the session window closes"""

    verifier = ""
    challenge_type = MessageType.PHASE1_CHALLENGE

    def __init__(self, name: str, config, instance: SdInstance, params: FieldParams, strategy: ProverStrategy):
        super().__init__(name, config, instance, params)
        self.strategy = strategy

    def program(self) -> RoleProgram:
        delivery = yield from self.await_frame(self.verifier, MessageType.SYNC, None, None)
        if delivery is None or delivery.frame is None:
            self.add_alarm("SYNC_MISSING", AlarmSeverity.CRITICAL, f"no SYNC from {self.verifier}")
            return self.summary()
        self.T1_ns, R = decode_sync(delivery.frame.payload)
        window_end = self.T1_ns + (R + 1) * self.config.delta_T_ns
        while True:
            delivery = yield from self.await_frame(self.verifier, self.challenge_type, None, window_end)
            if delivery is None:
                break
            if delivery.frame is None:
                continue
            i = delivery.frame.round_index
            if not 1 <= i <= R:
                self.add_alarm("ROUND_RANGE", AlarmSeverity.MEDIUM, f"challenge for unknown round {i}", i)
                continue
            try:
                reply = yield from self.answer(i, delivery.frame)
            except WireFormatError as e:
                self.add_alarm(f"BAD_CHALLENGE_{i}", AlarmSeverity.HIGH, str(e), i, delivery.received_ns)
                continue
            if reply is None:
                self.increment_counter("aborted")
                continue
            yield from self.send(self.verifier, reply)
            self.increment_counter("answered")
        return self.summary()

    @abstractmethod
    def answer(self, i: int, frame: Frame) -> RoleProgram:
        """Encoded answer to the round-i challenge, or None to abort"""

    def summary(self) -> Dict[str, Any]:
        return {"role": self.name, "answered": self.counters["answered"], "aborted": self.counters["aborted"],
                "alarms": len(self.alarms)}


class PrecomputedProver(ProverRole):
    """Answers from round states prepared before T1, without talking to any other role"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.states: Dict[int, Optional[ProverRoundState]] = {}

    def prepare(self):
        """Precompute every round before T1"""
        for i in range(1, self.config.R + 1):
            self.states[i] = self.strategy.state_for(i)
        logger.info(f"{self.name}: prepared {self.config.R} rounds with {type(self.strategy).__name__}")

    def state_for(self, i: int) -> Optional[ProverRoundState]:
        if i not in self.states:
            self.states[i] = self.strategy.state_for(i)
        return self.states[i]

    def answer(self, i: int, frame: Frame) -> RoleProgram:
        return self.respond(i, frame)
        yield  # makes this a generator

    @abstractmethod
    def respond(self, i: int, frame: Frame) -> Optional[bytes]:
        """Encoded answer from the prepared state"""


class P1Prover(PrecomputedProver):
    verifier = "v1"
    challenge_type = MessageType.PHASE1_CHALLENGE
    peers = ("v1",)

    def respond(self, i: int, frame: Frame) -> Optional[bytes]:
        B = decode_phase1_challenge(frame.payload, self.params)
        state = self.state_for(i)
        if state is None:
            return None
        return encode_phase1_response(i, p1_respond(state, B))


class P2Prover(PrecomputedProver):
    verifier = "v2"
    challenge_type = MessageType.PHASE2_CHALLENGE
    peers = ("v2",)

    def respond(self, i: int, frame: Frame) -> Optional[bytes]:
        c = decode_phase2_challenge(frame.payload)
        state = self.state_for(i)
        if state is None:
            return None
        return encode_phase2_response(i, p2_respond(state, c))
