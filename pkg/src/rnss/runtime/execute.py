"""Run a per-party script on every party, in-process or over TCP."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from ..core import EvaluationDomain, default_points
from ..errors import ProtocolAbort
from .engine import Party
from .transport import InMemoryHub, TcpTransport
from .wire import decode_frame


@dataclass
class Transcript:
    """Everything observable about a run.

    ``messages`` lists ``(recipient, frame)`` pairs for every protocol frame,
    in canonical order (round, tag, sender, recipient). ``results`` and
    ``io`` are indexed by party.
    """

    messages: list[tuple[int, bytes]] = field(default_factory=list)
    results: dict[int, Any] = field(default_factory=dict)
    io: dict[int, int] = field(default_factory=dict)

    def decoded(self):
        return [(rcpt, decode_frame(frame)) for rcpt, frame in self.messages]

    def to_bytes(self) -> bytes:
        return b"".join(rcpt.to_bytes(2, "big") + frame for rcpt, frame in self.messages)


def _canonical(entries) -> list[tuple[int, bytes]]:
    def key(entry):
        rcpt, frame = entry
        msg = decode_frame(frame)
        return (msg.round, msg.protocol_tag, msg.sender, rcpt)
    return sorted(entries, key=key)


def _run_threads(indices, target):
    errors: dict[int, BaseException] = {}
    threads = []
    for i in indices:
        def body(i=i):
            try:
                target(i)
            except BaseException as exc:  # re-raised by the caller with party context
                errors[i] = exc
        th = threading.Thread(target=body, name=f"rnss-party-{i}", daemon=True)
        threads.append(th)
        th.start()
    for th in threads:
        th.join()
    if errors:
        # Prefer the root cause over the aborts it triggered in other parties.
        root = [i for i in sorted(errors) if not isinstance(errors[i], ProtocolAbort)]
        i = root[0] if root else min(errors)
        exc = errors[i]
        exc.party = i
        raise exc


def _domain(n, t, points) -> EvaluationDomain:
    return EvaluationDomain(tuple(points) if points is not None else default_points(n), t)


def run_simulated(n: int, t: int, script: Callable[[Party], Any], *, seed: int = 0,
                  points: Sequence[float] | None = None, timeout: float = 10.0) -> Transcript:
    """Execute ``script(party)`` for all ``n`` parties in lockstep, in this process.

    Each party runs in its own thread and blocks at every round until the
    messages it needs have arrived. An exception in any party aborts the run
    and is re-raised with a ``party`` attribute.
    """
    domain = _domain(n, t, points)
    hub = InMemoryHub(n)
    transports = [hub.transport(i) for i in range(n)]
    parties = [Party(i, domain, transports[i], seed=seed, timeout=timeout) for i in range(n)]
    out = Transcript()

    def target(i):
        try:
            out.results[i] = script(parties[i])
        finally:
            transports[i].close()

    _run_threads(range(n), target)
    out.messages = _canonical([m for tr in transports for m in tr.sent])
    out.io = {i: parties[i].io.opens for i in range(n)}
    return out


def run_tcp(addresses: Sequence[tuple[str, int]], script: Callable[[Party], Any], *, t: int,
            seed: int = 0, points: Sequence[float] | None = None, digest: bytes = b"\0" * 32,
            local: Sequence[int] | None = None, timeout: float = 30.0) -> Transcript:
    """Execute ``script`` over real TCP links.

    ``local`` selects which party indices run in this process (default: all,
    each in its own thread); remote parties must be started elsewhere with
    the same configuration digest. The transcript covers frames sent by the
    local parties.
    """
    n = len(addresses)
    domain = _domain(n, t, points)
    local = list(range(n)) if local is None else list(local)
    transports = {i: TcpTransport(i, addresses, digest, timeout=timeout) for i in local}
    parties = {i: Party(i, domain, transports[i], seed=seed, timeout=timeout) for i in local}
    out = Transcript()

    def target(i):
        transports[i].start()
        try:
            out.results[i] = script(parties[i])
        finally:
            transports[i].close()

    _run_threads(local, target)
    out.messages = _canonical([m for i in local for m in transports[i].sent])
    out.io = {i: parties[i].io.opens for i in local}
    return out
