# Session Runner - four roles on the virtual clock, or one role over the network
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..audit.session_auditor import SessionReport
from ..coding.syndrome import SdInstance, SdWitness
from ..config import ProtocolConfig, env_connect_timeout_s
from ..field.randomness import TAG_CHANNEL, derive_rng
from ..roles.role_manager import RoleManager
from .channel import SimulatedChannel, simulated_channel
from .drivers import RealtimeDriver, VirtualTimeDriver
from .timing import SessionClock, light_delay_ns

logger = logging.getLogger(__name__)


@dataclass
class SessionOutcome:
    """Result of a simulated four-role session"""
    reports: Dict[str, SessionReport]
    prover_results: Dict[str, Any]
    channel_status: Dict[str, Dict[str, int]]
    alarms: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def report(self) -> Optional[SessionReport]:
        return self.reports.get("v1") or self.reports.get("v2")

    @property
    def accepted(self) -> bool:
        return bool(self.reports) and all(r.accepted for r in self.reports.values())


def build_channel(config: ProtocolConfig) -> SimulatedChannel:
    """Channel from the config's simulation settings; the prover relay link takes D/c"""
    sim = config.simulation
    return simulated_channel(
        sim.one_way_delay_ns,
        jitter=sim.jitter_ns,
        drop_prob=sim.drop_prob,
        rng=derive_rng(config.seeds.harness, TAG_CHANNEL),
        link_delays={"p1-p2": math.ceil(light_delay_ns(config.D_km))},
        delay_overrides=sim.delay_overrides,
    )


def run_simulated_session(config: ProtocolConfig, instance: SdInstance, witness: Optional[SdWitness] = None,
                          channel: Optional[SimulatedChannel] = None) -> SessionOutcome:
    """All four roles in one process on a shared logical clock"""
    manager = RoleManager(config, instance, witness=witness)
    roles = manager.initialize_roles()
    manager.prepare_all()
    channel = channel or build_channel(config)
    driver = VirtualTimeDriver(channel, measure_compute=config.simulation.measure_compute)
    results = driver.run(roles.values())
    reports = {name: results[name] for name in ("v1", "v2") if isinstance(results.get(name), SessionReport)}
    outcome = SessionOutcome(
        reports=reports,
        prover_results={name: results.get(name) for name in ("p1", "p2")},
        channel_status=channel.get_status(),
        alarms=[a.to_dict() for a in manager.get_all_alarms()],
    )
    if outcome.report is not None:
        logger.info(f"Simulated session finished: accepted={outcome.accepted} "
                    f"F_observed={outcome.report.F_observed}/{outcome.report.allowed_losses}")
    return outcome


def run_role(role: str, config: ProtocolConfig, instance: SdInstance, witness: Optional[SdWitness] = None,
             driver: Optional[RealtimeDriver] = None):
    """One role over TCP; verifiers return their SessionReport, provers a completion summary"""
    manager = RoleManager(config, instance, witness=witness)
    party = manager.initialize_roles([role])[role]
    party.prepare()
    if driver is None:
        driver = RealtimeDriver(config.endpoints, SessionClock(config.clock_offset_ns), env_connect_timeout_s())
    driver.connect(role, party.peers)
    return driver.run(party)
