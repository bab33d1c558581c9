# Wire Format - fixed-width frames for the four-role session
import json
import logging
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Dict, List, Tuple

from ..commitment.fq_commitment import Commitment
from ..field.fq import FieldElement, FieldParams, NonCanonicalEncodingError, fe_from_bytes, fe_to_bytes
from ..stern.stern_protocol import (InvalidChallengeError, Opening, Phase1Message, Phase1Response, Phase2Message,
                                    Phase2Response, revealed_indices)

logger = logging.getLogger(__name__)

MAGIC = b"RZKP"
VERSION = 1
HEADER = struct.Struct(">4sBBII")
SYNC_PAYLOAD = struct.Struct(">QI")
MAX_PAYLOAD = 1 << 26
# Half-transcripts are split into REPORT frames of at most this many payload bytes
REPORT_CHUNK_BYTES = 1 << 22


class WireFormatError(ValueError):
    """Raised on a frame that cannot be parsed"""


class MessageType(IntEnum):
    PHASE1_CHALLENGE = 1
    PHASE1_RESPONSE = 2
    PHASE2_CHALLENGE = 3
    PHASE2_RESPONSE = 4
    SYNC = 5
    REPORT = 6


@dataclass(frozen=True)
class Frame:
    msg_type: MessageType
    round_index: int
    payload: bytes


def encode_frame(frame: Frame) -> bytes:
    return HEADER.pack(MAGIC, VERSION, int(frame.msg_type), frame.round_index, len(frame.payload)) + frame.payload


def parse_header(header: bytes) -> Tuple[MessageType, int, int]:
    """(type, round index, payload length) from the first HEADER.size bytes"""
    if len(header) != HEADER.size:
        raise WireFormatError(f"header needs {HEADER.size} bytes, got {len(header)}")
    magic, version, msg_type, round_index, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise WireFormatError(f"unsupported version {version}")
    try:
        msg_type = MessageType(msg_type)
    except ValueError as e:
        raise WireFormatError(f"unknown message type {msg_type}") from e
    if length > MAX_PAYLOAD:
        raise WireFormatError(f"payload length {length} exceeds {MAX_PAYLOAD}")
    return msg_type, round_index, length


def decode_frame(data: bytes) -> Frame:
    msg_type, round_index, length = parse_header(data[:HEADER.size])
    payload = data[HEADER.size:]
    if len(payload) != length:
        raise WireFormatError(f"payload is {len(payload)} bytes, header says {length}")
    return Frame(msg_type, round_index, payload)


def peek_round_index(data: bytes) -> int:
    """Round index of an encoded frame, 0 when the header is unreadable"""
    try:
        return parse_header(data[:HEADER.size])[1]
    except WireFormatError:
        return 0


def _elements(payload: bytes, params: FieldParams, count: int) -> Tuple[FieldElement, ...]:
    width = params.byte_width
    if len(payload) != count * width:
        raise WireFormatError(f"expected {count} field elements ({count * width} bytes), got {len(payload)}")
    try:
        return tuple(fe_from_bytes(payload[i * width:(i + 1) * width], params) for i in range(count))
    except NonCanonicalEncodingError as e:
        raise WireFormatError(str(e)) from e


def encode_phase1_challenge(round_index: int, message: Phase1Message) -> bytes:
    return encode_frame(Frame(MessageType.PHASE1_CHALLENGE, round_index, b"".join(fe_to_bytes(b) for b in message.b)))


def decode_phase1_challenge(payload: bytes, params: FieldParams) -> Phase1Message:
    return Phase1Message(b=_elements(payload, params, 3))


def encode_phase1_response(round_index: int, response: Phase1Response) -> bytes:
    return encode_frame(Frame(MessageType.PHASE1_RESPONSE, round_index,
                              b"".join(fe_to_bytes(y.y) for y in response.y)))


def decode_phase1_response(payload: bytes, params: FieldParams) -> Phase1Response:
    return Phase1Response(y=tuple(Commitment(y) for y in _elements(payload, params, 3)))


def encode_phase2_challenge(round_index: int, message: Phase2Message) -> bytes:
    return encode_frame(Frame(MessageType.PHASE2_CHALLENGE, round_index, bytes([message.c])))


def decode_phase2_challenge(payload: bytes) -> Phase2Message:
    if len(payload) != 1 or payload[0] not in (1, 2, 3):
        raise WireFormatError(f"phase-2 challenge must be one byte in 1..3, got {payload!r}")
    return Phase2Message(c=payload[0])


def encode_phase2_response(round_index: int, response: Phase2Response) -> bytes:
    """z_lo, a_lo, z_hi, a_hi; the indices are implied by the challenge"""
    body = b"".join(fe_to_bytes(o.z) + fe_to_bytes(o.a) for o in response.openings)
    return encode_frame(Frame(MessageType.PHASE2_RESPONSE, round_index, body))


def decode_phase2_response(payload: bytes, params: FieldParams, c: int) -> Phase2Response:
    try:
        lo, hi = revealed_indices(c)
    except InvalidChallengeError as e:
        raise WireFormatError(str(e)) from e
    z_lo, a_lo, z_hi, a_hi = _elements(payload, params, 4)
    return Phase2Response(openings=(Opening(lo, z_lo, a_lo), Opening(hi, z_hi, a_hi)))


def encode_sync(T1_ns: int, R: int) -> bytes:
    return encode_frame(Frame(MessageType.SYNC, 0, SYNC_PAYLOAD.pack(T1_ns, R)))


def decode_sync(payload: bytes) -> Tuple[int, int]:
    if len(payload) != SYNC_PAYLOAD.size:
        raise WireFormatError(f"SYNC payload must be {SYNC_PAYLOAD.size} bytes, got {len(payload)}")
    return SYNC_PAYLOAD.unpack(payload)


def encode_report(body: Dict[str, Any]) -> bytes:
    return encode_frame(Frame(MessageType.REPORT, 0, json.dumps(body, separators=(",", ":")).encode("utf-8")))


def encode_report_chunks(role: str, rounds: List[Dict[str, Any]],
                         chunk_bytes: int = REPORT_CHUNK_BYTES) -> List[bytes]:
    """A half-transcript as a numbered run of REPORT frames, each payload near chunk_bytes or below"""
    groups: List[List[Dict[str, Any]]] = [[]]
    size = 0
    for record in rounds:
        record_size = len(json.dumps(record, separators=(",", ":")))
        if groups[-1] and size + record_size > chunk_bytes:
            groups.append([])
            size = 0
        groups[-1].append(record)
        size += record_size + 1
    return [encode_report({"role": role, "chunk": index, "chunks": len(groups), "rounds": group})
            for index, group in enumerate(groups)]


def decode_report(payload: bytes) -> Dict[str, Any]:
    try:
        body = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WireFormatError(f"REPORT payload is not JSON: {e}") from e
    if not isinstance(body, dict):
        raise WireFormatError("REPORT payload must be a JSON object")
    return body


def elements_to_hex(values) -> list:
    return [fe_to_bytes(v).hex() for v in values]


def elements_from_hex(values, params: FieldParams) -> Tuple[FieldElement, ...]:
    try:
        return tuple(fe_from_bytes(bytes.fromhex(v), params) for v in values)
    except (ValueError, TypeError) as e:
        raise WireFormatError(f"bad field element hex: {e}") from e
