# Simulated Channel - latency, jitter and loss injection on the links between roles
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from ..field.randomness import TAG_CHANNEL, derive_rng, fresh_seed
from .wire import peek_round_index

logger = logging.getLogger(__name__)

# Lossy links carry protocol rounds; the verifier link and the prover relay are reliable
PROTOCOL_LINKS = ("v1-p1", "v2-p2")
ALL_LINKS = ("v1-p1", "v2-p2", "v1-v2", "p1-p2")


class ChannelError(ConnectionError):
    """Raised when a frame cannot be carried between two roles"""


def link_name(a: str, b: str) -> str:
    for name in ALL_LINKS:
        if set(name.split("-")) == {a, b}:
            return name
    raise ChannelError(f"no link between {a} and {b}")


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0


class SimulatedChannel:
    """Delivers frames after delay + uniform jitter and keeps per-direction order.

    Loss is decided once per protocol round: with probability drop_prob every frame of that round on the lossy
    links is dropped, so drop_prob is the per-round loss probability.
    """

    def __init__(self, one_way_delay_ns: int = 0, jitter_ns: int = 0, drop_prob: float = 0.0,
                 rng: Optional[np.random.Generator] = None, link_delays: Optional[Dict[str, int]] = None,
                 delay_overrides: Optional[Dict[int, int]] = None, lossy_links: Iterable[str] = PROTOCOL_LINKS):
        if one_way_delay_ns < 0 or jitter_ns < 0:
            raise ValueError("channel delays must be non-negative")
        if not 0 <= drop_prob < 1:
            raise ValueError(f"drop_prob must be in [0, 1), got {drop_prob}")
        self.one_way_delay_ns = one_way_delay_ns
        self.jitter_ns = jitter_ns
        self.drop_prob = drop_prob
        self.rng = rng if rng is not None else derive_rng(fresh_seed(), TAG_CHANNEL)
        self.link_delays = dict(link_delays or {})
        self.delay_overrides = dict(delay_overrides or {})
        self.lossy_links = frozenset(lossy_links)
        self.stats: Dict[str, LinkStats] = {name: LinkStats() for name in ALL_LINKS}
        self._last_arrival: Dict[Tuple[str, str], int] = {}
        self._round_lost: Dict[int, bool] = {}
        logger.info(f"Simulated channel initialized: delay={one_way_delay_ns} ns jitter={jitter_ns} ns "
                    f"drop={drop_prob}")

    def delay_for(self, link: str, round_index: int) -> int:
        """One-way delay before jitter; overrides add to protocol links in their round"""
        delay = self.link_delays.get(link, self.one_way_delay_ns)
        if link in PROTOCOL_LINKS:
            delay += self.delay_overrides.get(round_index, 0)
        return delay

    def schedule(self, src: str, dst: str, sent_ns: int, data: bytes) -> Optional[int]:
        """Arrival time of a frame sent at sent_ns, or None if it is lost"""
        link = link_name(src, dst)
        round_index = peek_round_index(data)
        stats = self.stats[link]
        stats.sent += 1
        # round 0 is session setup (SYNC, REPORT) and is never dropped
        if round_index and link in self.lossy_links and self.round_lost(round_index):
            stats.dropped += 1
            logger.debug(f"Dropped frame {src}->{dst} sent at {sent_ns}")
            return None
        arrival = sent_ns + self.delay_for(link, round_index)
        if self.jitter_ns:
            arrival += int(self.rng.integers(0, self.jitter_ns, endpoint=True))
        direction = (src, dst)
        arrival = max(arrival, self._last_arrival.get(direction, arrival))
        self._last_arrival[direction] = arrival
        stats.delivered += 1
        return arrival

    def round_lost(self, round_index: int) -> bool:
        """Loss draw for a round, made when its first lossy frame is sent"""
        if round_index not in self._round_lost:
            self._round_lost[round_index] = bool(self.drop_prob) and self.rng.random() < self.drop_prob
        return self._round_lost[round_index]

    def loss_rate(self) -> float:
        """Fraction of rounds seen on the lossy links that were lost"""
        if not self._round_lost:
            return 0.0
        return sum(self._round_lost.values()) / len(self._round_lost)

    def frame_loss_rate(self, links: Iterable[str] = PROTOCOL_LINKS) -> float:
        sent = sum(self.stats[name].sent for name in links)
        dropped = sum(self.stats[name].dropped for name in links)
        return dropped / sent if sent else 0.0

    def get_status(self) -> Dict[str, Dict[str, int]]:
        return {name: vars(stats).copy() for name, stats in self.stats.items()}


def simulated_channel(one_way_delay: int, jitter: int = 0, drop_prob: float = 0.0,
                      rng: Optional[np.random.Generator] = None, **kwargs) -> SimulatedChannel:
    return SimulatedChannel(one_way_delay_ns=one_way_delay, jitter_ns=jitter, drop_prob=drop_prob, rng=rng, **kwargs)
