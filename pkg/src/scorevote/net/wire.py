"""Length-prefixed, MAC-authenticated frames.

Frame layout (all integers big-endian)::

    [4  length of everything that follows]
    [1  protocol version][1 kind][16 session id][2 sender][4 round]
    [payload]
    [32 HMAC-SHA256 over header + payload]

MPC payloads are concatenated field elements, ``ceil(bits/8)`` bytes each.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ChannelError
from ..field import PrimeModulus

VERSION = 1
HEADER = struct.Struct("!BB16sHI")
LENGTH = struct.Struct("!I")
MAC_SIZE = 32
MAX_FRAME = 1 << 30


class Kind(enum.IntEnum):
    SHARE = 1       # voter -> tallier ballot share
    ACK = 2         # tallier -> voter confirmation
    OPEN = 3        # shares of a value being made public
    MASKED = 4      # shares of a uniformly masked value
    RESHARE = 5     # Shamir sub-shares, one distinct payload per receiver
    COMMIT = 6      # coin-toss commitment digest
    REVEAL = 7      # coin-toss opening (salt || coins)
    VOTERSET = 8    # accepted voter ids, 4-byte words
    EVIDENCE = 9    # additive shares of a rejected ballot
    DIGEST = 10     # agreement check on a locally computed value


@dataclass
class Message:
    kind: int
    sender: int
    round: int
    payload: bytes | np.ndarray = b""


def frame_size(payload_len: int) -> int:
    return LENGTH.size + HEADER.size + payload_len + MAC_SIZE


def encode_elements(values: np.ndarray, modulus: PrimeModulus) -> bytes:
    values = np.asarray(values, dtype=np.int64).ravel()
    width = modulus.byte_width
    if width in (1, 2, 4, 8):
        return values.astype(f">u{width}").tobytes()
    return b"".join(int(v).to_bytes(width, "big") for v in values)


def decode_elements(data: bytes, modulus: PrimeModulus) -> np.ndarray:
    width = modulus.byte_width
    if len(data) % width:
        raise ChannelError(f"payload of {len(data)} bytes is not a multiple of {width}")
    if width in (1, 2, 4, 8):
        out = np.frombuffer(data, dtype=f">u{width}").astype(np.int64)
    else:
        out = np.array([int.from_bytes(data[i:i + width], "big") for i in range(0, len(data), width)],
                       dtype=np.int64)
    if np.any(out >= modulus.p):
        raise ChannelError("field element out of range")
    return out


def payload_bytes(payload, modulus: PrimeModulus) -> bytes:
    if isinstance(payload, np.ndarray):
        return encode_elements(payload, modulus)
    return bytes(payload)


def payload_len(payload, modulus: PrimeModulus) -> int:
    if isinstance(payload, np.ndarray):
        return payload.size * modulus.byte_width
    return len(payload)


def encode_frame(msg: Message, session: bytes, key: bytes, modulus: PrimeModulus) -> bytes:
    body = HEADER.pack(VERSION, int(msg.kind), session, msg.sender, msg.round & 0xFFFFFFFF)
    body += payload_bytes(msg.payload, modulus)
    tag = hmac.new(key, body, hashlib.sha256).digest()
    return LENGTH.pack(len(body) + MAC_SIZE) + body + tag


def peek_sender(frame: bytes) -> int:
    if len(frame) < LENGTH.size + HEADER.size:
        raise ChannelError("truncated frame")
    return HEADER.unpack_from(frame, LENGTH.size)[3]


def decode_frame(frame: bytes, session: bytes, key: bytes) -> Message:
    """Verify and parse a complete frame (length prefix included).

    The payload is returned as raw bytes; callers decode field elements.
    """
    if len(frame) < frame_size(0):
        raise ChannelError("truncated frame")
    (length,) = LENGTH.unpack_from(frame)
    if length != len(frame) - LENGTH.size:
        raise ChannelError("length prefix does not match frame")
    body, tag = frame[LENGTH.size:-MAC_SIZE], frame[-MAC_SIZE:]
    if not hmac.compare_digest(tag, hmac.new(key, body, hashlib.sha256).digest()):
        raise ChannelError("MAC verification failed")
    version, kind, sess, sender, rnd = HEADER.unpack_from(body)
    if version != VERSION:
        raise ChannelError(f"unsupported protocol version {version}")
    if sess != session:
        raise ChannelError("frame belongs to another session")
    return Message(kind, sender, rnd, body[HEADER.size:])


def encode_ids(ids) -> bytes:
    return b"".join(struct.pack("!I", int(i)) for i in ids)


def decode_ids(data: bytes) -> list[int]:
    if len(data) % 4:
        raise ChannelError("voter-set payload is not a multiple of 4 bytes")
    return [v for (v,) in struct.iter_unpack("!I", data)]


class KeyRing:
    """Pairwise symmetric MAC keys, provisioned out of band."""

    def __init__(self, master: bytes):
        self._master = master
        self._cache: dict[tuple[int, int], bytes] = {}

    def key(self, a: int, b: int) -> bytes:
        pair = (min(a, b), max(a, b))
        k = self._cache.get(pair)
        if k is None:
            k = hmac.new(self._master, struct.pack("!HH", *pair), hashlib.sha256).digest()
            self._cache[pair] = k
        return k
