"""Localhost TCP network carrying the framed wire format."""

from __future__ import annotations

import asyncio

from ..field import PrimeModulus
from .transport import BaseNetwork
from .wire import LENGTH, MAX_FRAME, KeyRing, Message, encode_frame


class TcpNetwork(BaseNetwork):
    """One listening socket per party; outgoing connections are cached.

    Frames are verified by the receiving endpoint; frames failing
    authentication are counted and dropped.
    """

    def __init__(self, session: bytes, keys: KeyRing, modulus: PrimeModulus, host: str = "127.0.0.1"):
        super().__init__(session, keys, modulus)
        self.host = host
        self.addresses: dict[int, tuple[str, int]] = {}
        self._servers: dict[int, asyncio.AbstractServer] = {}
        self._writers: dict[tuple[int, int], asyncio.StreamWriter] = {}
        self._locks: dict[tuple[int, int], asyncio.Lock] = {}
        self._readers: set[asyncio.Task] = set()

    async def listen(self, party: int, port: int = 0) -> tuple[str, int]:
        endpoint = self.endpoint(party)

        async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            task = asyncio.current_task()
            self._readers.add(task)
            try:
                while True:
                    head = await reader.readexactly(LENGTH.size)
                    (n,) = LENGTH.unpack(head)
                    if n > MAX_FRAME:
                        break
                    body = await reader.readexactly(n)
                    endpoint.deliver_frame(head + body)
            except (asyncio.IncompleteReadError, ConnectionError, asyncio.CancelledError):
                pass
            finally:
                self._readers.discard(task)
                writer.close()

        server = await asyncio.start_server(handle, self.host, port)
        self._servers[party] = server
        addr = server.sockets[0].getsockname()[:2]
        self.addresses[party] = addr
        return addr

    async def _writer(self, src: int, dst: int) -> asyncio.StreamWriter:
        key = (src, dst)
        w = self._writers.get(key)
        if w is None or w.is_closing():
            host, port = self.addresses[dst]
            _, w = await asyncio.open_connection(host, port)
            self._writers[key] = w
        return w

    async def transmit(self, src: int, dst: int, msg: Message) -> None:
        if src in self._down or dst in self._down:
            return
        frame = encode_frame(msg, self.session, self.keys.key(src, dst), self.modulus)
        lock = self._locks.setdefault((src, dst), asyncio.Lock())
        async with lock:
            w = await self._writer(src, dst)
            w.write(frame)
            await w.drain()

    def crash(self, party: int) -> None:
        super().crash(party)
        server = self._servers.pop(party, None)
        if server is not None:
            server.close()

    async def close(self) -> None:
        for w in self._writers.values():
            w.close()
        for w in self._writers.values():
            try:
                await w.wait_closed()
            except ConnectionError:
                pass
        self._writers.clear()
        for server in self._servers.values():
            server.close()
            await server.wait_closed()
        self._servers.clear()
        for task in list(self._readers):
            task.cancel()
        self._readers.clear()
