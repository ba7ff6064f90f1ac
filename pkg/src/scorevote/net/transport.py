"""Party endpoints and the deterministic in-process network.

Every party owns an :class:`Endpoint`.  Protocol messages are matched by
``(sender, kind, round)`` so delivery order inside a round never matters;
voter traffic (``SHARE``/``ACK``) is consumed as a stream instead.
"""

from __future__ import annotations

import asyncio
from typing import Callable

import numpy as np

from ..errors import AbortError, ChannelError
from ..field import PrimeModulus
from .wire import (
    KeyRing, Kind, Message, decode_elements, decode_frame, encode_frame, frame_size,
    payload_len, peek_sender,
)

STREAMED = frozenset({Kind.SHARE, Kind.ACK})


class Endpoint:
    def __init__(self, party: int, network: "BaseNetwork"):
        self.party = party
        self.network = network
        self._slots: dict[tuple[int, int, int], asyncio.Future] = {}
        self._streams: dict[int, asyncio.Queue] = {}
        self.bytes_sent = 0
        self.frames_sent = 0
        self.rejected_frames = 0
        self.received_log: list[tuple[int, int, int, int]] = []

    @property
    def modulus(self) -> PrimeModulus:
        return self.network.modulus

    def _slot(self, key) -> asyncio.Future:
        fut = self._slots.get(key)
        if fut is None:
            fut = asyncio.get_running_loop().create_future()
            self._slots[key] = fut
        return fut

    def _stream(self, kind: int) -> asyncio.Queue:
        q = self._streams.get(kind)
        if q is None:
            q = self._streams[kind] = asyncio.Queue()
        return q

    def deliver(self, msg: Message) -> None:
        self.received_log.append((msg.sender, int(msg.kind), msg.round,
                                  payload_len(msg.payload, self.modulus)))
        if msg.kind in STREAMED:
            self._stream(msg.kind).put_nowait(msg)
            return
        fut = self._slot((msg.sender, int(msg.kind), msg.round))
        if not fut.done():
            fut.set_result(msg)

    def deliver_frame(self, frame: bytes) -> Message | None:
        try:
            sender = peek_sender(frame)
            msg = decode_frame(frame, self.network.session, self.network.keys.key(sender, self.party))
        except ChannelError:
            self.rejected_frames += 1
            return None
        self.deliver(msg)
        return msg

    def fail_from(self, src: int) -> None:
        for (s, _, _), fut in self._slots.items():
            if s == src and not fut.done():
                fut.set_exception(AbortError(f"party {src} is unreachable"))
                fut.exception()  # waiters may be gone; awaiting still raises

    async def send(self, dst: int, msg: Message) -> None:
        if dst == self.party:
            raise ValueError("cannot send to self")
        self.bytes_sent += frame_size(payload_len(msg.payload, self.modulus))
        self.frames_sent += 1
        await self.network.transmit(self.party, dst, msg)

    async def recv(self, src: int, kind: int, round: int, timeout: float | None = None) -> Message:
        key = (src, int(kind), round)
        fut = self._slot(key)
        if not fut.done() and self.network.is_down(src):
            fut.set_exception(AbortError(f"party {src} is unreachable"))
        try:
            msg = await asyncio.wait_for(asyncio.shield(fut), timeout) if timeout else await fut
        except asyncio.TimeoutError:
            raise AbortError(f"timed out waiting for party {src} (kind {int(kind)}, round {round})") from None
        del self._slots[key]
        return msg

    async def next(self, kind: int, timeout: float | None = None) -> Message:
        q = self._stream(kind)
        if timeout is None:
            return await q.get()
        return await asyncio.wait_for(q.get(), timeout)

    def end_stream(self, kind: int) -> None:
        """Wake a consumer of ``kind`` with ``None`` (end of stream)."""
        self._stream(kind).put_nowait(None)

    def array(self, payload) -> np.ndarray:
        if isinstance(payload, np.ndarray):
            return payload
        return decode_elements(payload, self.modulus)


TamperHook = Callable[[int, int, Message, bytes], bytes | None]


class BaseNetwork:
    def __init__(self, session: bytes, keys: KeyRing, modulus: PrimeModulus):
        if len(session) != 16:
            raise ValueError("session id must be 16 bytes")
        self.session = session
        self.keys = keys
        self.modulus = modulus
        self.endpoints: dict[int, Endpoint] = {}
        self._down: set[int] = set()

    def endpoint(self, party: int) -> Endpoint:
        ep = self.endpoints.get(party)
        if ep is None:
            ep = self.endpoints[party] = Endpoint(party, self)
        return ep

    def is_down(self, party: int) -> bool:
        return party in self._down

    def crash(self, party: int) -> None:
        """Take a party offline; peers waiting on it abort."""
        self._down.add(party)
        for ep in self.endpoints.values():
            if ep.party != party:
                ep.fail_from(party)

    async def transmit(self, src: int, dst: int, msg: Message) -> None:
        raise NotImplementedError

    async def close(self) -> None:
        pass


class MemoryNetwork(BaseNetwork):
    """Single-process network.

    Voter traffic always travels as authenticated frames so tampering is
    observable.  MPC traffic is framed only when ``wire=True``; otherwise
    arrays are handed over directly and byte counts use the frame size they
    would have had.  ``tamper(src, dst, msg, frame)`` may return altered
    frame bytes, or ``b""`` to drop the frame.
    """

    def __init__(self, session: bytes, keys: KeyRing, modulus: PrimeModulus,
                 wire: bool = False, tamper: TamperHook | None = None):
        super().__init__(session, keys, modulus)
        self.wire = wire
        self.tamper = tamper

    async def transmit(self, src: int, dst: int, msg: Message) -> None:
        if src in self._down or dst in self._down:
            return
        target = self.endpoint(dst)
        if self.wire or msg.kind in STREAMED or self.tamper is not None:
            frame = encode_frame(msg, self.session, self.keys.key(src, dst), self.modulus)
            if self.tamper is not None:
                altered = self.tamper(src, dst, msg, frame)
                if altered is not None:
                    frame = altered
            if frame:
                target.deliver_frame(frame)
            return
        payload = msg.payload.copy() if isinstance(msg.payload, np.ndarray) else msg.payload
        target.deliver(Message(msg.kind, msg.sender, msg.round, payload))


def flip_bit(frame: bytes, position: int | None = None) -> bytes:
    """Flip one payload bit (defaults to the first payload byte)."""
    data = bytearray(frame)
    pos = 4 + 24 if position is None else position
    pos = min(pos, len(data) - 1)
    data[pos] ^= 0x01
    return bytes(data)
