"""Message transports: an in-process hub and full-mesh TCP.

Both deliver ``RoundMessage`` objects keyed by ``(tag, round, sender)`` into
the recipient's inbox and log every frame they send, so transcripts from the
two transports can be compared byte for byte.
"""
from __future__ import annotations

import logging
import socket
import threading
import time

from ..errors import ConfigMismatch, ProtocolAbort
from .wire import (
    CONTROL_TAGS,
    TAG_BYE,
    TAG_HELLO,
    FrameError,
    RoundMessage,
    digest_payload,
    encode_frame,
    read_frame,
)

log = logging.getLogger(__name__)


class _Inbox:
    """Messages for one party plus the set of peers known to have departed."""

    def __init__(self):
        self.cond = threading.Condition()
        self.messages: dict[tuple[int, int, int], RoundMessage] = {}
        self.departed: set[int] = set()

    def put(self, msg: RoundMessage):
        with self.cond:
            self.messages[(msg.protocol_tag, msg.round, msg.sender)] = msg
            self.cond.notify_all()

    def mark_departed(self, peer: int):
        with self.cond:
            self.departed.add(peer)
            self.cond.notify_all()

    def collect(self, tag: int, rnd: int, senders, timeout: float) -> dict[int, RoundMessage]:
        senders = list(senders)
        deadline = time.monotonic() + timeout
        with self.cond:
            while True:
                missing = [s for s in senders if (tag, rnd, s) not in self.messages]
                if not missing:
                    return {s: self.messages.pop((tag, rnd, s)) for s in senders}
                gone = [s for s in missing if s in self.departed]
                if gone:
                    raise ProtocolAbort(
                        f"round {rnd}: parties {gone} left before sending", round=rnd, missing=missing)
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ProtocolAbort(
                        f"round {rnd}: timed out waiting for parties {missing}", round=rnd, missing=missing)
                self.cond.wait(remaining)


class InMemoryHub:
    """Shared switchboard for ``n`` in-process parties."""

    def __init__(self, n: int):
        self.n = n
        self.inboxes = [_Inbox() for _ in range(n)]

    def transport(self, index: int) -> "InMemoryTransport":
        return InMemoryTransport(self, index)

    def depart(self, index: int):
        for box in self.inboxes:
            box.mark_departed(index)


class InMemoryTransport:
    def __init__(self, hub: InMemoryHub, index: int):
        self.hub = hub
        self.index = index
        self.n = hub.n
        self.sent: list[tuple[int, bytes]] = []

    def send(self, recipient: int, msg: RoundMessage):
        frame = encode_frame(msg)
        self.sent.append((recipient, frame))
        self.hub.inboxes[recipient].put(msg)

    def broadcast(self, msg: RoundMessage):
        for j in range(self.n):
            self.send(j, msg)

    def collect(self, tag, rnd, senders, timeout):
        return self.hub.inboxes[self.index].collect(tag, rnd, senders, timeout)

    def close(self):
        self.hub.depart(self.index)


class TcpTransport:
    """Full-mesh TCP links between ``n`` parties.

    Party ``i`` connects to every lower index and accepts every higher one.
    Each link starts with a HELLO frame carrying the configuration digest;
    a mismatch raises ``ConfigMismatch`` on both ends. Links are unencrypted:
    channels are assumed private by deployment.
    """

    def __init__(self, index: int, addresses, digest: bytes, timeout: float = 30.0):
        self.index = index
        self.addresses = [tuple(a) for a in addresses]
        self.n = len(self.addresses)
        self.digest = digest
        self.timeout = timeout
        self.inbox = _Inbox()
        self.sent: list[tuple[int, bytes]] = []
        self._socks: dict[int, socket.socket] = {}
        self._locks: dict[int, threading.Lock] = {}
        self._readers: list[threading.Thread] = []
        self._listener: socket.socket | None = None
        self._closing = False

    # -- setup -----------------------------------------------------------
    def start(self):
        host, port = self.addresses[self.index]
        self._listener = socket.create_server((host, port), backlog=self.n, reuse_port=False)
        self._listener.settimeout(self.timeout)
        try:
            for j in range(self.index):
                self._connect(j)
            for _ in range(self.index + 1, self.n):
                self._accept()
        except BaseException:
            self._teardown()
            raise
        for j, sock in self._socks.items():
            sock.settimeout(None)
            th = threading.Thread(target=self._reader, args=(j, sock), daemon=True,
                                  name=f"rnss-reader-{self.index}-{j}")
            th.start()
            self._readers.append(th)
        return self

    def _hello(self) -> bytes:
        return encode_frame(RoundMessage(TAG_HELLO, 0, self.index, digest_payload(self.digest)))

    def _connect(self, j: int):
        deadline = time.monotonic() + self.timeout
        while True:
            try:
                sock = socket.create_connection(self.addresses[j], timeout=self.timeout)
                break
            except OSError:
                if time.monotonic() > deadline:
                    raise ProtocolAbort(f"party {self.index} could not reach party {j}", missing=(j,))
                time.sleep(0.05)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.sendall(self._hello())
        reply = self._read_hello(sock, expect=j)
        self._register(j, sock, reply)

    def _accept(self):
        try:
            sock, _ = self._listener.accept()
        except socket.timeout:
            raise ProtocolAbort(f"party {self.index} timed out waiting for peers") from None
        sock.settimeout(self.timeout)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        hello = self._read_hello(sock)
        sock.sendall(self._hello())
        self._register(hello.sender, sock, hello)

    def _read_hello(self, sock, expect=None) -> RoundMessage:
        try:
            msg = read_frame(sock)
        except (OSError, FrameError) as exc:
            raise ProtocolAbort(f"handshake failed: {exc}") from exc
        if msg is None or msg.protocol_tag != TAG_HELLO:
            raise ProtocolAbort("handshake failed: expected HELLO")
        if expect is not None and msg.sender != expect:
            raise ProtocolAbort(f"expected party {expect}, got {msg.sender}")
        return msg

    def _register(self, j: int, sock, hello: RoundMessage):
        if hello.payload != digest_payload(self.digest):
            sock.close()
            raise ConfigMismatch(f"party {j} runs a different configuration than party {self.index}")
        if j in self._socks or not 0 <= j < self.n or j == self.index:
            sock.close()
            raise ProtocolAbort(f"unexpected connection from party {j}")
        self._socks[j] = sock
        self._locks[j] = threading.Lock()

    def _reader(self, j: int, sock):
        try:
            while True:
                msg = read_frame(sock)
                if msg is None:
                    break
                self.inbox.put(msg)
        except (OSError, FrameError) as exc:
            if not self._closing:
                log.warning("party %d: link to %d failed: %s", self.index, j, exc)
        finally:
            self.inbox.mark_departed(j)

    # -- messaging -------------------------------------------------------
    def send(self, recipient: int, msg: RoundMessage):
        frame = encode_frame(msg)
        if msg.protocol_tag not in CONTROL_TAGS:
            self.sent.append((recipient, frame))
        if recipient == self.index:
            self.inbox.put(msg)
            return
        try:
            with self._locks[recipient]:
                self._socks[recipient].sendall(frame)
        except OSError as exc:
            raise ProtocolAbort(f"lost connection to party {recipient}: {exc}", missing=(recipient,)) from exc

    def broadcast(self, msg: RoundMessage):
        for j in range(self.n):
            self.send(j, msg)

    def collect(self, tag, rnd, senders, timeout):
        return self.inbox.collect(tag, rnd, senders, timeout)

    def close(self):
        """Exchange BYE frames so no data is in flight, then shut the links down."""
        if self._closing:
            return
        peers = [j for j in self._socks]
        try:
            for j in peers:
                self.send(j, RoundMessage(TAG_BYE, 0, self.index, ()))
            self.inbox.collect(TAG_BYE, 0, peers, self.timeout)
        except ProtocolAbort:
            pass
        finally:
            self._closing = True
            self._teardown()

    def _teardown(self):
        self._closing = True
        for sock in self._socks.values():
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
        if self._listener is not None:
            self._listener.close()
        for th in self._readers:
            th.join(timeout=1.0)
