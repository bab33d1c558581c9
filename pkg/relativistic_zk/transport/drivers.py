# Role Drivers - run role state machines on a shared virtual clock or over TCP in real time
import heapq
import logging
import queue
import socket
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Deque, Dict, Iterable, List, Optional, Tuple

from ..config import Endpoints
from .channel import ChannelError, SimulatedChannel, link_name
from .timing import SessionClock
from .wire import HEADER, Frame, WireFormatError, decode_frame, parse_header

logger = logging.getLogger(__name__)

HELLO_BYTES = 2
CONNECT_RETRY_S = 0.05


@dataclass(frozen=True)
class Send:
    """Send an encoded frame; the driver returns the send timestamp"""
    peer: str
    data: bytes


@dataclass(frozen=True)
class Receive:
    """Wait for the next frame from peer; the driver returns a Delivery, or None at the deadline"""
    peer: str
    deadline_ns: Optional[int] = None


@dataclass(frozen=True)
class SleepUntil:
    t_ns: int


@dataclass(frozen=True)
class Now:
    pass


@dataclass(frozen=True)
class Delivery:
    """A received frame; frame is None when the bytes did not parse"""
    peer: str
    frame: Optional[Frame]
    received_ns: int
    error: Optional[str] = None


def to_delivery(peer: str, data: bytes, received_ns: int) -> Delivery:
    try:
        return Delivery(peer, decode_frame(data), received_ns)
    except WireFormatError as e:
        return Delivery(peer, None, received_ns, str(e))


class _Event(IntEnum):
    DELIVER = 0
    RESUME = 1
    EFFECT = 2
    TIMEOUT = 3


class VirtualTimeDriver:
    """Discrete-event scheduler; every role sees the same logical clock"""

    def __init__(self, channel: SimulatedChannel, start_ns: int = 0, measure_compute: bool = False):
        self.channel = channel
        self.now = start_ns
        self.measure_compute = measure_compute
        self._heap: List[Tuple[int, int, int, _Event, Any]] = []
        self._seq = 0
        self._programs = {}
        self._inbox: Dict[Tuple[str, str], Deque[Delivery]] = defaultdict(deque)
        self._waiting: Dict[str, Tuple[str, int]] = {}
        self._tokens = 0
        self.results: Dict[str, Any] = {}
        logger.info(f"Virtual time driver initialized (measure_compute={measure_compute})")

    def _push(self, at_ns: int, kind: _Event, payload: Any):
        self._seq += 1
        heapq.heappush(self._heap, (at_ns, int(kind), self._seq, kind, payload))

    def run(self, roles: Iterable) -> Dict[str, Any]:
        """Run all roles to completion; returns each role's result by name"""
        for role in roles:
            self._programs[role.name] = role.program()
            self._push(self.now, _Event.RESUME, (role.name, None))
        while self._heap:
            at_ns, _, _, kind, payload = heapq.heappop(self._heap)
            self.now = max(self.now, at_ns)
            if kind is _Event.RESUME:
                self._resume(*payload)
            elif kind is _Event.EFFECT:
                self._apply(*payload)
            elif kind is _Event.DELIVER:
                self._deliver(*payload)
            else:
                self._timeout(*payload)
        for name, program in self._programs.items():
            if name not in self.results:
                logger.warning(f"Role {name} never finished (waiting on {self._waiting.get(name)})")
                program.close()
        return self.results

    def _resume(self, name: str, value: Any):
        program = self._programs[name]
        started = time.perf_counter_ns()
        try:
            effect = program.send(value)
        except StopIteration as stop:
            self.results[name] = stop.value
            return
        elapsed = time.perf_counter_ns() - started if self.measure_compute else 0
        self._push(self.now + elapsed, _Event.EFFECT, (name, effect))

    def _apply(self, name: str, effect: Any):
        if isinstance(effect, Now):
            self._push(self.now, _Event.RESUME, (name, self.now))
        elif isinstance(effect, SleepUntil):
            wake = max(effect.t_ns, self.now)
            self._push(wake, _Event.RESUME, (name, wake))
        elif isinstance(effect, Send):
            arrival = self.channel.schedule(name, effect.peer, self.now, effect.data)
            if arrival is not None:
                self._push(arrival, _Event.DELIVER, (effect.peer, name, effect.data))
            self._push(self.now, _Event.RESUME, (name, self.now))
        elif isinstance(effect, Receive):
            pending = self._inbox[(name, effect.peer)]
            if pending:
                self._push(self.now, _Event.RESUME, (name, pending.popleft()))
                return
            self._tokens += 1
            self._waiting[name] = (effect.peer, self._tokens)
            if effect.deadline_ns is not None:
                self._push(max(effect.deadline_ns, self.now), _Event.TIMEOUT, (name, self._tokens))
        else:
            raise TypeError(f"role {name} yielded unsupported effect {effect!r}")

    def _deliver(self, dst: str, src: str, data: bytes):
        if dst in self.results:
            return
        delivery = to_delivery(src, data, self.now)
        waiting = self._waiting.get(dst)
        if waiting and waiting[0] == src:
            del self._waiting[dst]
            self._push(self.now, _Event.RESUME, (dst, delivery))
        else:
            self._inbox[(dst, src)].append(delivery)

    def _timeout(self, name: str, token: int):
        waiting = self._waiting.get(name)
        if waiting and waiting[1] == token:
            del self._waiting[name]
            self._push(self.now, _Event.RESUME, (name, None))


def recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    while count:
        chunk = sock.recv(count)
        if not chunk:
            raise ConnectionError("peer closed the connection")
        chunks.append(chunk)
        count -= len(chunk)
    return b"".join(chunks)


class RealtimeDriver:
    """One role per process; a TCP stream per link, the first role of a link name listens"""

    def __init__(self, endpoints: Endpoints, clock: SessionClock, connect_timeout_s: float = 10.0):
        self.endpoints = endpoints
        self.clock = clock
        self.connect_timeout_s = connect_timeout_s
        self._sockets: Dict[str, socket.socket] = {}
        self._queues: Dict[str, "queue.Queue[Delivery]"] = {}
        self._readers: List[threading.Thread] = []
        self._closing = threading.Event()

    def connect(self, name: str, peers: Iterable[str]):
        """Open one stream per peer; raises ChannelError when a peer cannot be reached in time"""
        peers = list(peers)
        accept_from = [p for p in peers if link_name(name, p).split("-")[0] == name]
        dial_to = [p for p in peers if p not in accept_from]
        listener = None
        try:
            if accept_from:
                listener = socket.create_server(self.endpoints.address(name), reuse_port=False)
                listener.settimeout(self.connect_timeout_s)
            for peer in dial_to:
                self._dial(name, peer)
            while listener is not None and any(p not in self._sockets for p in accept_from):
                conn, _ = listener.accept()
                conn.settimeout(self.connect_timeout_s)
                hello = recv_exact(conn, HELLO_BYTES).decode("ascii", errors="replace")
                if hello not in accept_from or hello in self._sockets:
                    logger.warning(f"{name}: rejecting unexpected connection announcing {hello!r}")
                    conn.close()
                    continue
                self._adopt(hello, conn)
        except (socket.timeout, OSError) as e:
            self.close()
            raise ChannelError(f"{name}: could not connect to {peers}: {e}") from e
        finally:
            if listener is not None:
                listener.close()
        logger.info(f"{name}: connected to {', '.join(peers)}")

    def _dial(self, name: str, peer: str):
        deadline = time.monotonic() + self.connect_timeout_s
        while True:
            try:
                conn = socket.create_connection(self.endpoints.address(peer), timeout=self.connect_timeout_s)
                break
            except OSError:
                if time.monotonic() >= deadline:
                    raise
                time.sleep(CONNECT_RETRY_S)
        conn.sendall(name.encode("ascii"))
        self._adopt(peer, conn)

    def _adopt(self, peer: str, conn: socket.socket):
        conn.settimeout(None)
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sockets[peer] = conn
        self._queues[peer] = queue.Queue()
        reader = threading.Thread(target=self._read_loop, args=(peer, conn), daemon=True, name=f"reader-{peer}")
        reader.start()
        self._readers.append(reader)

    def _read_loop(self, peer: str, conn: socket.socket):
        inbox = self._queues[peer]
        try:
            while True:
                header = recv_exact(conn, HEADER.size)
                try:
                    _, _, length = parse_header(header)
                except WireFormatError as e:
                    # the stream cannot be resynchronised after a bad header
                    inbox.put(Delivery(peer, None, self.clock.now_ns(), str(e)))
                    return
                payload = recv_exact(conn, length)
                received_ns = self.clock.now_ns()
                inbox.put(to_delivery(peer, header + payload, received_ns))
        except (ConnectionError, OSError) as e:
            if not self._closing.is_set():
                logger.debug(f"Reader for {peer} stopped: {e}")

    def run(self, role) -> Any:
        program = role.program()
        value = None
        try:
            while True:
                try:
                    effect = program.send(value)
                except StopIteration as stop:
                    return stop.value
                value = self._apply(role.name, effect)
        finally:
            self.close()

    def _apply(self, name: str, effect: Any) -> Any:
        if isinstance(effect, Now):
            return self.clock.now_ns()
        if isinstance(effect, SleepUntil):
            return self.clock.sleep_until(effect.t_ns)
        if isinstance(effect, Send):
            try:
                self._sockets[effect.peer].sendall(effect.data)
            except (KeyError, OSError) as e:
                logger.error(f"{name}: send to {effect.peer} failed: {e}")
            return self.clock.now_ns()
        if isinstance(effect, Receive):
            inbox = self._queues.get(effect.peer)
            if inbox is None:
                return None
            timeout = None
            if effect.deadline_ns is not None:
                timeout = max(0.0, (effect.deadline_ns - self.clock.now_ns()) / 1e9)
            try:
                return inbox.get(timeout=timeout)
            except queue.Empty:
                return None
        raise TypeError(f"role {name} yielded unsupported effect {effect!r}")

    def close(self):
        self._closing.set()
        for conn in self._sockets.values():
            try:
                conn.close()
            except OSError:
                pass
        self._sockets.clear()
