"""Arithmetic on shares: linear operations, Beaver multiplication and inversion.

Every protocol here is written against share *values* and an engine, so the
same function serves both views of a computation:

* global view: ``ShareSet``/``SharedMatrix`` operands with a ``DirectEngine``;
* party view: plain floats/arrays (one party's shares) with a ``Party``.

Interactive cost: ``add`` 0 openings, ``mult`` 2, ``inv`` 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvaluationDomain, SharedMatrix, ShareSet, SharingParams, share, share_matrix, share_values
from .errors import DomainMismatch, SingularMask, TripleReused

EPS_INV = 1e-9
COND_CAP = 1e12


@dataclass
class BeaverTriple:
    """Shares of random ``r1``, ``r2`` and their product; single use."""

    r1: object
    r2: object
    r1r2: object
    matrix: bool = False
    used: bool = False

    def consume(self):
        if self.used:
            raise TripleReused("Beaver triple already consumed")
        self.used = True

    def for_party(self, index: int) -> "BeaverTriple":
        """This triple as seen by one party (its own share values only)."""
        return BeaverTriple(self.r1.for_party(index), self.r2.for_party(index),
                            self.r1r2.for_party(index), self.matrix)


@dataclass(frozen=True)
class MaskedOpening:
    """Plain values revealed by a protocol run.

    ``d = s - r1`` and ``e = a - r2`` for ``mult``; ``inv`` additionally
    reveals ``sr = s * r`` (a matrix product in matrix form).
    """

    d: object = None
    e: object = None
    sr: object = None


def _same_domain(x, y):
    if isinstance(x, ShareSet) and isinstance(y, ShareSet):
        if x.domain != y.domain:
            raise DomainMismatch("operands are shared over different domains")


def add(x, y):
    _same_domain(x, y)
    return x + y


def sub(x, y):
    _same_domain(x, y)
    return x - y


def scale(c, x):
    """Multiply shares by a public constant."""
    return c * x


def shift(c, x):
    """Add a public constant ``c``.

    Equivalent to adding the noise-free sharing of ``c`` (every party holds
    ``c``; see ``core.constant_share``).
    """
    return x + c


def dealer_triple(domain: EvaluationDomain, params: SharingParams, dims=None, *,
                  sigma2_r: float | None = None, rng: np.random.Generator | None = None,
                  shape=()) -> BeaverTriple:
    """Trusted-dealer triple.

    ``r1``, ``r2`` are drawn from N(0, sigma2_r) (default ``params.sigma2_y``)
    and shared with ``params``. ``dims=((a, b), (b, c))`` gives matrix
    factors of those shapes and ``r1r2 = r1 @ r2``. Otherwise the triple is
    scalar; a nonempty ``shape`` gives independent elementwise triples for a
    batch of secrets of that shape.
    """
    if rng is None:
        rng = params.rng()
    if sigma2_r is None:
        sigma2_r = params.sigma2_y
    sd = math.sqrt(sigma2_r)
    if dims is None:
        r1 = rng.normal(0.0, sd, size=shape)
        r2 = rng.normal(0.0, sd, size=shape)
        if not shape:
            return BeaverTriple(share(r1, domain, params, rng)[0],
                                share(r2, domain, params, rng)[0],
                                share(r1 * r2, domain, params, rng)[0])
        return BeaverTriple(*(ShareSet(domain, share_values(v, domain, params, rng)[0])
                              for v in (r1, r2, r1 * r2)))
    (a, b), (b2, c) = dims
    if b != b2:
        raise ValueError(f"inner dimensions differ: {dims}")
    r1 = rng.normal(0.0, sd, size=(a, b))
    r2 = rng.normal(0.0, sd, size=(b, c))
    return BeaverTriple(share_matrix(r1, domain, params, rng),
                        share_matrix(r2, domain, params, rng),
                        share_matrix(r1 @ r2, domain, params, rng),
                        matrix=True)


def mult(x, y, triple: BeaverTriple, engine):
    """Beaver multiplication: two openings, then a local affine combination.

    Opens ``d = x - r1`` and ``e = y - r2``; every party computes
    ``de + d r2[p] + r1[p] e + r1r2[p]`` (matrix products in matrix form).
    """
    _same_domain(x, y)
    triple.consume()
    d = engine.open(x - triple.r1)
    e = engine.open(y - triple.r2)
    if triple.matrix:
        d = np.asarray(d)
        e = np.asarray(e)
        z = (d @ e) + d @ triple.r2 + triple.r1 @ e + triple.r1r2
    else:
        z = d * e + d * triple.r2 + triple.r1 * e + triple.r1r2
    return z, MaskedOpening(d=d, e=e)


def joint_random(domain: EvaluationDomain, params: SharingParams, engine, shape=(),
                 sigma2_r: float | None = None):
    """Shares of ``r = sum_p r_p`` with each ``r_p ~ N(0, sigma2_r)`` private to party ``p``.

    One private dealing round; no opening.
    """
    if engine.domain != domain:
        raise DomainMismatch("engine runs over a different domain")
    return engine.joint_random(params, shape, sigma2_r)


def inv(x, r, triple: BeaverTriple, engine, eps: float = EPS_INV, cond_cap: float = COND_CAP):
    """Shares of ``1/x`` (matrix inverse in matrix form) using the random mask ``r``.

    Opens ``sr = x r`` (one Beaver product plus one opening: three in all)
    and returns ``r / sr``; in matrix form ``r[p] @ inv(sr)``, which equals
    ``inv(x)`` because ``R (S R)^-1 = S^-1``.

    Raises ``SingularMask`` when ``|sr| < eps`` or, for matrices, when the
    condition number of ``sr`` exceeds ``cond_cap``.
    """
    z, op = mult(x, r, triple, engine)
    sr = engine.open(z)
    if triple.matrix:
        sr = np.atleast_2d(np.asarray(sr, dtype=np.float64))
        cond = np.linalg.cond(sr)
        if not np.isfinite(cond) or cond > cond_cap:
            raise SingularMask(f"opened mask product is ill-conditioned (cond={cond:.3g})")
        out = r @ np.linalg.inv(sr)
    else:
        if not np.all(np.abs(sr) >= eps):
            raise SingularMask(f"opened mask product {sr!r} is below {eps}")
        out = (1.0 / sr) * r
    return out, MaskedOpening(d=op.d, e=op.e, sr=sr)


def _require_matrix(*objs):
    for o in objs:
        if isinstance(o, ShareSet) and not isinstance(o, SharedMatrix):
            raise TypeError("expected a SharedMatrix")


def mat_add(x, y):
    _require_matrix(x, y)
    if isinstance(x, SharedMatrix) and isinstance(y, SharedMatrix) and x.shape != y.shape:
        raise DomainMismatch(f"dimension mismatch {x.shape} vs {y.shape}")
    return add(x, y)


def mat_mult(x, y, triple: BeaverTriple, engine):
    _require_matrix(x, y)
    if not triple.matrix:
        raise TypeError("matrix multiplication needs a matrix triple")
    xs, ys = np.shape(_local_shape(x)), np.shape(_local_shape(y))
    if xs[-1] != ys[-2] if len(xs) == 2 and len(ys) == 2 else False:
        raise DomainMismatch(f"dimension mismatch {xs} @ {ys}")
    return mult(x, y, triple, engine)


def mat_inv(x, r, triple: BeaverTriple, engine, cond_cap: float = COND_CAP):
    _require_matrix(x, r)
    if not triple.matrix:
        raise TypeError("matrix inversion needs a matrix triple")
    return inv(x, r, triple, engine, cond_cap=cond_cap)


def _local_shape(x):
    if isinstance(x, ShareSet):
        return np.empty(x.shape)
    return np.asarray(x)
