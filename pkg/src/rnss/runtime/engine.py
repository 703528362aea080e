"""Engines that perform openings: a global in-process view and a per-party view.

Protocol code in ``rnss.arith`` and ``rnss.kalman`` is written once against
the small engine surface used here (``open``, ``joint_random``, ``io``) and
runs unchanged on either engine:

* ``DirectEngine`` operates on complete ``ShareSet`` objects (all parties'
  shares at once). It is the fast path for sweeps and unit tests.
* ``Party`` is one logical party holding only its own share values; openings
  and dealing travel as round messages over a transport.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ..core import EvaluationDomain, SharingParams, ShareSet, SharedMatrix, interpolate_at, share_values
from ..errors import ProtocolAbort
from .wire import TAG_DEAL, TAG_OPEN, TAG_OUTPUT, RoundMessage


def stream_rng(seed: int, party, label: str) -> np.random.Generator:
    """Independent generator for ``(seed, party, label)``.

    Derived from a SHA-256 of the triple, so adding parties or labels never
    perturbs other streams and the result is stable across processes.
    """
    digest = hashlib.sha256(f"{int(seed)}|{party}|{label}".encode()).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass
class IoCounter:
    """Number of interactive operations (openings) performed."""

    opens: int = 0

    def increment(self):
        self.opens += 1


def _plain(value):
    arr = np.asarray(value, dtype=np.float64)
    return float(arr) if arr.ndim == 0 else arr


class DirectEngine:
    """Opens complete share sets in-process.

    Reconstruction uses the shares of the ``t + 1`` lowest-indexed parties
    (all parties with ``full=True``), exactly as the per-party engine does.
    """

    def __init__(self, domain: EvaluationDomain, seed: int = 0):
        self.domain = domain
        self.seed = seed
        self.io = IoCounter()
        self._rngs: dict[tuple[int, str], np.random.Generator] = {}

    @property
    def n(self):
        return self.domain.n

    @property
    def t(self):
        return self.domain.threshold

    def party_rng(self, index: int, label: str) -> np.random.Generator:
        key = (index, label)
        if key not in self._rngs:
            self._rngs[key] = stream_rng(self.seed, index, label)
        return self._rngs[key]

    def open(self, value: ShareSet, full: bool = False):
        if value.domain != self.domain or len(value) != self.n:
            raise ProtocolAbort("opening needs the shares of every party in the domain")
        k = self.n if full else self.t + 1
        plain = interpolate_at(value.points[:k], value.values[:k], 0.0)
        self.io.increment()
        return _plain(plain)

    def joint_random(self, params: SharingParams, shape=(), sigma2_r=None, contributions=None):
        """Shares of ``r = sum_p r_p`` where party ``p`` draws ``r_p ~ N(0, sigma2_r)``.

        ``contributions`` overrides the parties' draws (one entry per party);
        a ``None`` or NaN entry models a party that never delivered.
        """
        shape = tuple(shape)
        if sigma2_r is None:
            sigma2_r = params.sigma2_y
        dealt = []
        for p in range(self.n):
            rng = self.party_rng(p, "joint")
            r_p = rng.normal(0.0, math.sqrt(sigma2_r), size=shape)
            if contributions is not None:
                c = contributions[p]
                if c is None or np.any(np.isnan(np.asarray(c, dtype=np.float64))):
                    raise ProtocolAbort(f"party {p} did not contribute to joint randomness", missing=(p,))
                r_p = np.broadcast_to(np.asarray(c, dtype=np.float64), shape).copy()
            values, _, _ = share_values(r_p, self.domain, params, rng)
            dealt.append(values)
        total = dealt[0].copy()
        for values in dealt[1:]:
            total = total + values
        cls = SharedMatrix if len(shape) == 2 else ShareSet
        return cls(self.domain, total)


class Party:
    """One logical party: its evaluation point, RNG streams, transport and IO count."""

    def __init__(self, index: int, domain: EvaluationDomain, transport, seed: int = 0,
                 timeout: float = 30.0):
        self.index = index
        self.domain = domain
        self.transport = transport
        self.seed = seed
        self.timeout = timeout
        self.io = IoCounter()
        self.round = 0
        self._rngs: dict[str, np.random.Generator] = {}

    @property
    def n(self):
        return self.domain.n

    @property
    def t(self):
        return self.domain.threshold

    @property
    def point(self) -> float:
        return self.domain.points[self.index]

    def rng(self, label: str) -> np.random.Generator:
        if label not in self._rngs:
            self._rngs[label] = stream_rng(self.seed, self.index, label)
        return self._rngs[label]

    def _next_round(self) -> int:
        self.round += 1
        return self.round

    def open(self, value, full: bool = False):
        """Open a local share: the lowest ``t + 1`` parties broadcast, all reconstruct."""
        value = np.asarray(value, dtype=np.float64)
        rnd = self._next_round()
        senders = list(range(self.n if full else self.t + 1))
        if self.index in senders:
            self.transport.broadcast(RoundMessage(TAG_OPEN, rnd, self.index, tuple(value.ravel().tolist())))
        got = self.transport.collect(TAG_OPEN, rnd, senders, self.timeout)
        stacked = np.stack([self._payload(got[s], value.size, rnd, s) for s in senders])
        pts = np.asarray([self.domain.points[s] for s in senders])
        plain = interpolate_at(pts, stacked, 0.0).reshape(value.shape)
        self.io.increment()
        return _plain(plain)

    def exchange(self, outgoing, tag: int = TAG_DEAL) -> list[np.ndarray]:
        """Private round: send ``outgoing[j]`` to party ``j``; returns values by sender."""
        outgoing = np.asarray(outgoing, dtype=np.float64)
        rnd = self._next_round()
        for j in range(self.n):
            self.transport.send(j, RoundMessage(tag, rnd, self.index, tuple(outgoing[j].ravel().tolist())))
        got = self.transport.collect(tag, rnd, range(self.n), self.timeout)
        size = outgoing[0].size
        return [self._payload(got[s], size, rnd, s).reshape(outgoing.shape[1:]) for s in range(self.n)]

    def joint_random(self, params: SharingParams, shape=(), sigma2_r=None):
        shape = tuple(shape)
        if sigma2_r is None:
            sigma2_r = params.sigma2_y
        rng = self.rng("joint")
        r_p = rng.normal(0.0, math.sqrt(sigma2_r), size=shape)
        values, _, _ = share_values(r_p, self.domain, params, rng)
        incoming = self.exchange(values)
        total = incoming[0].copy()
        for v in incoming[1:]:
            total = total + v
        return total if shape else np.float64(total)

    def deliver(self, value) -> list[np.ndarray]:
        """Output delivery: every party learns every party's share of ``value``.

        Used by harnesses to reconstruct results; not an interactive
        operation of the computation and not counted in ``io``.
        """
        value = np.asarray(value, dtype=np.float64)
        return self.exchange(np.broadcast_to(value, (self.n,) + value.shape), tag=TAG_OUTPUT)

    def _payload(self, msg: RoundMessage, size: int, rnd: int, sender: int) -> np.ndarray:
        arr = msg.array()
        if arr.size != size:
            raise ProtocolAbort(
                f"party {sender} sent {arr.size} values in round {rnd}, expected {size}",
                round=rnd, missing=(sender,))
        return arr


def open_value(engine, local_share, full: bool = False):
    """Open a (masked) shared value through ``engine``; counts one interactive operation."""
    return engine.open(local_share, full=full)
