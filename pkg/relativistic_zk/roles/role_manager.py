# Role Manager - builds the four protocol parties for a session
import logging
from typing import Any, Dict, Iterable, List, Optional

from ..coding.syndrome import SdInstance, SdWitness
from ..config import AdversaryMode, ConfigError, ProtocolConfig, ROLES
from ..field.fq import FieldParams
from .adversary_roles import AbortRateStrategy, FixedFailStrategy, RotatingStrategy, SpookyP1, SpookyP2
from .base_role import BaseRole, RoleAlarm
from .prover_roles import HonestStrategy, P1Prover, P2Prover, ProverStrategy
from .verifier_roles import V1Verifier, V2Verifier

logger = logging.getLogger(__name__)


class RoleManager:
    """Creates and tracks the role instances of one session"""

    def __init__(self, config: ProtocolConfig, instance: SdInstance, params: Optional[FieldParams] = None,
                 witness: Optional[SdWitness] = None):
        self.config = config
        self.instance = instance
        self.params = params or config.field_params()
        self.witness = witness
        self.roles: Dict[str, BaseRole] = {}
        logger.info(f"Role manager initialized (adversary={config.adversary.describe()})")

    def build_strategy(self) -> ProverStrategy:
        """Prover-pair strategy for the configured adversary"""
        adversary = self.config.adversary
        common = (self.instance, self.params, self.config.seeds.prover_pair)
        mode = adversary.mode
        if mode is AdversaryMode.HONEST or mode is AdversaryMode.SPOOKY_RELAY:
            if mode is AdversaryMode.HONEST and self.witness is None:
                raise ConfigError("honest provers need a witness; use an adversary mode on NO instances")
            return HonestStrategy(*common, witness=self.witness)
        if mode is AdversaryMode.CHEAT_FIXED_FAIL:
            return FixedFailStrategy(*common, fail_challenge=adversary.fail_challenge)
        if mode is AdversaryMode.CHEAT_ROTATING:
            return RotatingStrategy(*common)
        fallback = HonestStrategy(*common, witness=self.witness) if self.witness else RotatingStrategy(*common)
        return AbortRateStrategy(*common, abort_prob=adversary.abort_prob, fallback=fallback)

    def initialize_roles(self, names: Iterable[str] = ROLES) -> Dict[str, BaseRole]:
        names = list(names)
        spooky = self.config.adversary.mode is AdversaryMode.SPOOKY_RELAY
        strategy = self.build_strategy() if {"p1", "p2"} & set(names) else None
        args = (self.config, self.instance, self.params)
        for name in names:
            if name == "v1":
                role = V1Verifier(name, *args)
            elif name == "v2":
                role = V2Verifier(name, *args)
            elif name == "p1":
                role = (SpookyP1 if spooky else P1Prover)(name, *args, strategy)
            elif name == "p2":
                role = (SpookyP2 if spooky else P2Prover)(name, *args, strategy)
            else:
                raise ConfigError(f"unknown role {name!r}")
            self.roles[name] = role
        logger.info(f"Initialized roles: {', '.join(self.roles)}")
        return self.roles

    def prepare_all(self):
        for role in self.roles.values():
            role.prepare()

    def get_role(self, name: str) -> Optional[BaseRole]:
        return self.roles.get(name)

    def get_all_alarms(self) -> List[RoleAlarm]:
        alarms = []
        for role in self.roles.values():
            alarms.extend(alarm for alarm in role.alarms if not alarm.acknowledged)
        return alarms

    def get_status(self) -> Dict[str, Any]:
        return {name: role.get_status() for name, role in self.roles.items()}
