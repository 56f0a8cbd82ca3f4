"""Binary framing shared by both serial links (host<->board, board<->force board).

Frame layout, normative (see docs/protocol.md):

    0xAA 0x55 | msg_type u8 | len u8 | payload (len bytes, <= 64) | crc u16 LE

The CRC is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no
xor-out) computed over msg_type, len and the payload.  Check value:
crc16(b"123456789") == 0x29B1.  All multi-byte fields are little-endian.
"""

from __future__ import annotations

import binascii
import struct
from dataclasses import dataclass
from enum import Enum

from .errors import OversizedPayload
from .types import ADC_MAX, NUM_CHANNELS

PREAMBLE = b"\xaa\x55"
MAX_PAYLOAD = 64

MSG_JOINT_REPORT = 0x01
MSG_FORCE_REPORT = 0x02
MSG_MOTOR_COMMAND = 0x03
MSG_LED_COMMAND = 0x04
MSG_HEARTBEAT = 0x05

DUTY_MAX_ABS = 1000  # motor duty is expressed in permille of full scale


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE over a byte string (0xFFFF for empty input)."""
    return binascii.crc_hqx(data, 0xFFFF)


@dataclass(frozen=True)
class JointReport:
    """Leader device sample: sequence counter, 7 ADC channels, button bits."""

    seq: int
    adc: tuple  # 7 x u16 counts (6 joints + trigger)
    buttons: int

    def __post_init__(self):
        if not 0 <= self.seq <= 0xFFFF:
            raise ValueError("seq outside u16 range")
        if len(self.adc) != NUM_CHANNELS:
            raise ValueError(f"expected {NUM_CHANNELS} adc values")
        if any(not 0 <= v <= ADC_MAX for v in self.adc):
            raise ValueError("adc count outside 12-bit range")
        if not 0 <= self.buttons <= 0xFF:
            raise ValueError("buttons outside u8 range")


@dataclass(frozen=True)
class ForceReport:
    """Linearized force-channel output magnitude in millivolts (0..3300)."""

    seq: int
    millivolts: int

    def __post_init__(self):
        if not 0 <= self.seq <= 0xFFFF:
            raise ValueError("seq outside u16 range")
        if not 0 <= self.millivolts <= 3300:
            raise ValueError("millivolts outside 0..3300")


@dataclass(frozen=True)
class MotorCommand:
    """Signed trigger-motor duty in permille; positive opposes closure."""

    duty: int

    def __post_init__(self):
        if not -DUTY_MAX_ABS <= self.duty <= DUTY_MAX_ABS:
            raise ValueError("duty outside [-1000, 1000]")


@dataclass(frozen=True)
class LedCommand:
    """Handle LED state: sensitivity divisor and recording flag."""

    mode: int  # sensitivity divisor (1, 2 or 4)
    recording: int  # 0 or 1

    def __post_init__(self):
        if not 0 <= self.mode <= 0xFF or not 0 <= self.recording <= 0xFF:
            raise ValueError("led fields outside u8 range")


@dataclass(frozen=True)
class Heartbeat:
    """Board liveness beacon carrying uptime in milliseconds."""

    uptime_ms: int

    def __post_init__(self):
        if not 0 <= self.uptime_ms <= 0xFFFFFFFF:
            raise ValueError("uptime outside u32 range")


Message = JointReport | ForceReport | MotorCommand | LedCommand | Heartbeat

_JOINT_STRUCT = struct.Struct("<H7HB")
_FORCE_STRUCT = struct.Struct("<HH")
_MOTOR_STRUCT = struct.Struct("<h")
_LED_STRUCT = struct.Struct("<BB")
_HEARTBEAT_STRUCT = struct.Struct("<I")

_PAYLOAD_SIZES = {
    MSG_JOINT_REPORT: _JOINT_STRUCT.size,
    MSG_FORCE_REPORT: _FORCE_STRUCT.size,
    MSG_MOTOR_COMMAND: _MOTOR_STRUCT.size,
    MSG_LED_COMMAND: _LED_STRUCT.size,
    MSG_HEARTBEAT: _HEARTBEAT_STRUCT.size,
}


def encode_message(msg: Message) -> tuple:
    """Serialize a message into (msg_type, payload bytes)."""
    if isinstance(msg, JointReport):
        return MSG_JOINT_REPORT, _JOINT_STRUCT.pack(msg.seq, *msg.adc, msg.buttons)
    if isinstance(msg, ForceReport):
        return MSG_FORCE_REPORT, _FORCE_STRUCT.pack(msg.seq, msg.millivolts)
    if isinstance(msg, MotorCommand):
        return MSG_MOTOR_COMMAND, _MOTOR_STRUCT.pack(msg.duty)
    if isinstance(msg, LedCommand):
        return MSG_LED_COMMAND, _LED_STRUCT.pack(msg.mode, msg.recording)
    if isinstance(msg, Heartbeat):
        return MSG_HEARTBEAT, _HEARTBEAT_STRUCT.pack(msg.uptime_ms)
    raise TypeError(f"not a protocol message: {msg!r}")


def decode_message(msg_type: int, payload: bytes) -> Message:
    """Rebuild a message from its wire payload.

    Raises ValueError when the type is unknown, the payload length does not
    match the schema, or a field violates its documented range.
    """
    expected = _PAYLOAD_SIZES.get(msg_type)
    if expected is None:
        raise ValueError(f"unknown message type 0x{msg_type:02x}")
    if len(payload) != expected:
        raise ValueError(
            f"type 0x{msg_type:02x} expects {expected}-byte payload, got {len(payload)}"
        )
    if msg_type == MSG_JOINT_REPORT:
        fields = _JOINT_STRUCT.unpack(payload)
        return JointReport(seq=fields[0], adc=fields[1:8], buttons=fields[8])
    if msg_type == MSG_FORCE_REPORT:
        seq, mv = _FORCE_STRUCT.unpack(payload)
        return ForceReport(seq=seq, millivolts=mv)
    if msg_type == MSG_MOTOR_COMMAND:
        (duty,) = _MOTOR_STRUCT.unpack(payload)
        return MotorCommand(duty=duty)
    if msg_type == MSG_LED_COMMAND:
        mode, recording = _LED_STRUCT.unpack(payload)
        return LedCommand(mode=mode, recording=recording)
    (uptime,) = _HEARTBEAT_STRUCT.unpack(payload)
    return Heartbeat(uptime_ms=uptime)


def build_frame(msg_type: int, payload: bytes) -> bytes:
    """Wrap a raw payload into a framed byte string."""
    if len(payload) > MAX_PAYLOAD:
        raise OversizedPayload(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    body = bytes([msg_type, len(payload)]) + payload
    return PREAMBLE + body + crc16(body).to_bytes(2, "little")


def encode_frame(msg: Message) -> bytes:
    """Serialize a message into one complete wire frame."""
    msg_type, payload = encode_message(msg)
    return build_frame(msg_type, payload)


class ErrorKind(Enum):
    CRC = "crc"
    UNKNOWN_TYPE = "unknown_type"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class ProtocolError:
    """One rejected frame, reported as a value (the stream keeps going)."""

    kind: ErrorKind
    detail: str


class FrameParser:
    """Incremental deframer with resynchronization.

    Feed arbitrary byte chunks; each well-formed frame is emitted exactly
    once regardless of how the stream is split.  After garbage or a corrupt
    frame the parser rescans for the next 0xAA 0x55 preamble one byte past
    the previous candidate start, so a valid frame is never swallowed by a
    bad one.  One parser per connection; not thread-safe.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> tuple:
        """Consume a chunk; return (messages, errors) recovered so far."""
        self._buf += data
        buf = self._buf
        n = len(buf)
        messages = []
        errors = []
        pos = 0  # index of the first byte still owned by the stream
        while True:
            start = buf.find(PREAMBLE, pos)
            if start < 0:
                # Drop scanned garbage but keep a trailing 0xAA that may be
                # the first preamble byte of the next chunk.
                pos = n - 1 if n > pos and buf[n - 1] == PREAMBLE[0] else n
                break
            if start + 4 > n:  # header not complete yet
                pos = start
                break
            msg_type = buf[start + 2]
            length = buf[start + 3]
            if length > MAX_PAYLOAD:
                pos = start + 1  # cannot be a real header; rescan
                continue
            end = start + 4 + length + 2
            if end > n:  # body not complete yet
                pos = start
                break
            body = bytes(buf[start + 2 : end - 2])
            received = int.from_bytes(buf[end - 2 : end], "little")
            if crc16(body) != received:
                errors.append(
                    ProtocolError(
                        ErrorKind.CRC,
                        f"crc mismatch on type 0x{msg_type:02x} frame",
                    )
                )
                pos = start + 1
                continue
            try:
                msg = decode_message(msg_type, body[2:])
            except ValueError as exc:
                errors.append(ProtocolError(ErrorKind.UNKNOWN_TYPE, str(exc)))
                pos = start + 1
                continue
            messages.append(msg)
            pos = end
        del self._buf[:pos]
        return messages, errors

    def flush(self) -> list:
        """Abandon any partial frame (timeout expired upstream).

        Returns a TruncatedFrame error if an in-progress frame is dropped.
        """
        errors = []
        if len(self._buf) >= 2 and self._buf[:2] == bytearray(PREAMBLE):
            errors.append(
                ProtocolError(ErrorKind.TRUNCATED, f"{len(self._buf)} buffered bytes dropped")
            )
        self._buf.clear()
        return errors

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
