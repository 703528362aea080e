"""Real-number secret sharing: evaluation domains, ``share`` and ``recon``.

A secret ``s`` is hidden in a polynomial ``f`` of degree at most ``t`` with
``f(0) = s`` that also passes through ``t`` randomly chosen anchor points
``(x_j, y_j)``, where the ``x_j`` are drawn from the evaluation domain and the
``y_j`` are Gaussian. Party ``p`` receives ``f(p)``. Any ``t + 1`` shares
recover ``s`` by interpolation at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateNodes, DomainMismatch, InsufficientShares


def default_points(n: int) -> tuple[float, ...]:
    """The reproduction grid ``0.5 + 0.15 k`` for ``k = 0..n-1``."""
    return tuple(0.5 + 0.15 * k for k in range(n))


@dataclass(frozen=True)
class EvaluationDomain:
    """Public evaluation points (one per party) and the threshold ``t``."""

    points: tuple[float, ...]
    threshold: int

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if any(p == 0.0 for p in pts):
            raise ValueError("0 is reserved for the secret and cannot be an evaluation point")
        if any(not math.isfinite(p) for p in pts):
            raise ValueError("evaluation points must be finite")
        if len(set(pts)) != len(pts):
            raise DegenerateNodes(f"evaluation points are not distinct: {pts}")
        if not 1 <= self.threshold < len(pts):
            raise ValueError(f"need 1 <= t < n, got t={self.threshold}, n={len(pts)}")

    @classmethod
    def grid(cls, n: int, t: int) -> "EvaluationDomain":
        return cls(default_points(n), t)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def t(self) -> int:
        return self.threshold

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    def index_of(self, point: float) -> int:
        try:
            return self.points.index(float(point))
        except ValueError:
            raise KeyError(f"{point!r} is not an evaluation point of this domain") from None


@dataclass(frozen=True)
class SharingParams:
    """Privacy parameters of ``share``: anchor noise mean/variance and RNG seed."""

    mu_y: float = 0.0
    sigma2_y: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.sigma2_y >= 0.0:
            raise ValueError(f"sigma2_y must be >= 0, got {self.sigma2_y}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class AnchorWitness:
    """The anchor points used by one call to ``share`` (test/analysis only)."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]


class ShareSet:
    """Shares of one secret (or of an array of secrets) held by a set of parties.

    ``values`` has shape ``(k,) + shape`` where ``k`` is the number of parties
    present and ``shape`` the shape of the shared object (``()`` for scalars).
    Arithmetic with plain numbers and with other share sets over the same
    points is local: ``x + y``, ``x - y``, ``c * x`` and ``x + c`` (a public
    constant added by every party).
    """

    __array_ufunc__ = None

    def __init__(self, domain: EvaluationDomain, values, points=None):
        self.domain = domain
        self.values = np.asarray(values, dtype=np.float64)
        if points is None:
            points = domain.array()
        self.points = np.asarray(points, dtype=np.float64)
        if self.values.ndim == 0 or self.values.shape[0] != self.points.shape[0]:
            raise ValueError("values must have one leading entry per point")
        dom = set(domain.points)
        if any(float(p) not in dom for p in self.points):
            raise DomainMismatch("share points must belong to the domain")

    @classmethod
    def from_mapping(cls, domain: EvaluationDomain, mapping: Mapping[float, float]):
        pts = list(mapping)
        return cls(domain, [mapping[p] for p in pts], pts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def __len__(self):
        return self.points.shape[0]

    def as_dict(self) -> dict[float, float]:
        return {float(p): v for p, v in zip(self.points, self.values)}

    def at(self, point: float):
        idx = np.flatnonzero(self.points == float(point))
        if not idx.size:
            raise KeyError(point)
        return self.values[idx[0]]

    def for_party(self, index: int):
        """The share held by the party at ``domain.points[index]``."""
        return self.at(self.domain.points[index])

    def subset(self, points: Sequence[float]) -> "ShareSet":
        idx = []
        for p in points:
            hits = np.flatnonzero(self.points == float(p))
            if not hits.size:
                raise KeyError(p)
            idx.append(hits[0])
        return self._like(self.values[idx], self.points[idx])

    def _like(self, values, points=None):
        return type(self)._from_parts(self.domain, values, self.points if points is None else points)

    @classmethod
    def _from_parts(cls, domain, values, points):
        obj = cls.__new__(cls)
        obj.domain = domain
        obj.values = values
        obj.points = points
        return obj

    def _check(self, other: "ShareSet"):
        if other.domain != self.domain or not np.array_equal(other.points, self.points):
            raise DomainMismatch("operands are shared over different domains or party sets")
        if other.shape != self.shape:
            raise DomainMismatch(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        if isinstance(other, ShareSet):
            self._check(other)
            return self._like(self.values + other.values)
        return self._like(self.values + np.asarray(other, dtype=np.float64))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ShareSet):
            self._check(other)
            return self._like(self.values - other.values)
        return self._like(self.values - np.asarray(other, dtype=np.float64))

    def __rsub__(self, other):
        return self._like(np.asarray(other, dtype=np.float64) - self.values)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, other):
        if isinstance(other, ShareSet):
            return NotImplemented
        return self._like(self.values * np.asarray(other, dtype=np.float64))

    __rmul__ = __mul__

    def __repr__(self):
        return f"{type(self).__name__}(n={len(self)}, shape={self.shape})"


class SharedMatrix(ShareSet):
    """Entrywise shares of a matrix; ``values`` has shape ``(k, rows, cols)``.

    Supports products with public matrices on either side (``M @ X`` and
    ``X @ M``), which each party evaluates locally.
    """

    @property
    def rows(self) -> int:
        return self.values.shape[1]

    @property
    def cols(self) -> int:
        return self.values.shape[2]

    def entry(self, i: int, j: int) -> ShareSet:
        return ShareSet._from_parts(self.domain, self.values[:, i, j], self.points)

    @property
    def T(self) -> "SharedMatrix":
        return self._like(np.swapaxes(self.values, 1, 2))

    def __matmul__(self, other):
        if isinstance(other, ShareSet):
            return NotImplemented
        return self._like(self.values @ np.asarray(other, dtype=np.float64))

    def __rmatmul__(self, other):
        if isinstance(other, ShareSet):
            return NotImplemented
        return self._like(np.asarray(other, dtype=np.float64) @ self.values)


class NaiveShareSet(ShareSet):
    """Shares ``s + sum_j c_j p**j`` of the coefficient scheme, with its coefficients."""

    coefficients: tuple[float, ...] = ()


def _check_distinct(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if np.unique(xs).size != xs.size:
        raise DegenerateNodes(f"interpolation nodes are not distinct: {xs.tolist()}")
    return xs


def lagrange_basis(xs: Sequence[float], eval_at: float, j: int) -> float:
    """``prod_{k != j} (eval_at - xs[k]) / (xs[j] - xs[k])``, evaluated as written."""
    _check_distinct(xs)
    out = 1.0
    for k, xk in enumerate(xs):
        if k != j:
            out *= (eval_at - xk) / (xs[j] - xk)
    return out


def interpolate_at(xs, ys, x: float = 0.0, method: str = "barycentric"):
    """Value at ``x`` of the interpolant through ``(xs[i], ys[i])``.

    ``ys`` may carry trailing dimensions; they are interpolated independently.
    ``method="product"`` uses the textbook Lagrange sum instead of the
    barycentric kernel.
    """
    xs = _check_distinct(xs)
    ys = np.asarray(ys, dtype=np.float64)
    if ys.shape[0] != xs.shape[0]:
        raise ValueError("xs and ys differ in length")
    tail = ys.shape[1:]
    flat = ys.reshape(xs.shape[0], -1)
    if method == "barycentric":
        out = kernels.interp_eval(xs, flat, float(x))
    elif method == "product":
        out = np.zeros(flat.shape[1])
        for j in range(xs.shape[0]):
            out = out + flat[j] * lagrange_basis(xs, x, j)
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    out = out.reshape(tail)
    return float(out) if out.ndim == 0 else out


def draw_anchors(count: int, domain: EvaluationDomain, params: SharingParams,
                 rng: np.random.Generator):
    """Anchor abscissae and ordinates for ``count`` independent sharings.

    Abscissae are ``t`` distinct domain points chosen uniformly without
    replacement per sharing; ordinates are i.i.d. N(mu_y, sigma2_y).
    """
    t = domain.threshold
    pts = domain.array()
    idx = np.argsort(rng.random((count, domain.n)), axis=1)[:, :t]
    ys = rng.normal(params.mu_y, math.sqrt(params.sigma2_y), size=(count, t))
    return pts[idx], ys


def share_values(secrets, domain: EvaluationDomain, params: SharingParams,
                 rng: np.random.Generator):
    """Shares of every entry of ``secrets``; returns ``(values, xs, ys)``.

    ``values`` has shape ``(n,) + secrets.shape``; ``xs``/``ys`` hold the
    anchors, one row per flattened entry.
    """
    secrets = np.asarray(secrets, dtype=np.float64)
    flat = secrets.reshape(-1)
    xs, ys = draw_anchors(flat.size, domain, params, rng)
    vals = kernels.share_eval(flat, xs, ys, domain.array())
    values = np.ascontiguousarray(vals.T).reshape((domain.n,) + secrets.shape)
    return values, xs, ys


def share(s: float, domain: EvaluationDomain, params: SharingParams,
          rng: np.random.Generator | None = None) -> tuple[ShareSet, AnchorWitness]:
    """Share a real secret among all parties of ``domain``.

    Without an explicit ``rng`` the generator is seeded from
    ``params.rng_seed``, so equal inputs give equal shares.

    Returns the share set and the anchor witness. The share at each anchor
    abscissa is exactly the corresponding anchor ordinate.
    """
    if rng is None:
        rng = params.rng()
    values, xs, ys = share_values(np.float64(s), domain, params, rng)
    witness = AnchorWitness(tuple(xs[0].tolist()), tuple(ys[0].tolist()))
    return ShareSet(domain, values), witness


def share_with_witness(s: float, domain: EvaluationDomain, witness: AnchorWitness) -> ShareSet:
    """Deterministic sharing through given anchors (for replaying a known sharing)."""
    xs = np.asarray(witness.xs, dtype=np.float64)
    ys = np.asarray(witness.ys, dtype=np.float64)
    if xs.shape != (domain.threshold,) or ys.shape != xs.shape:
        raise ValueError(f"need {domain.threshold} anchors")
    for x in xs:
        domain.index_of(float(x))
    _check_distinct(np.concatenate([[0.0], xs]))
    vals = kernels.share_eval(np.array([float(s)]), xs[None, :], ys[None, :], domain.array())
    return ShareSet(domain, vals[0])


def share_matrix(m, domain: EvaluationDomain, params: SharingParams,
                 rng: np.random.Generator | None = None) -> SharedMatrix:
    """Share each entry of a matrix independently."""
    if rng is None:
        rng = params.rng()
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    values, _, _ = share_values(m, domain, params, rng)
    return SharedMatrix(domain, values)


def constant_share(c, domain: EvaluationDomain) -> ShareSet:
    """Noise-free sharing of a public constant: every party holds ``c``.

    This is the degree-0 member of the scheme (anchor ordinates all equal to
    ``c``, zero variance), so it needs no randomness.
    """
    c = np.asarray(c, dtype=np.float64)
    values = np.broadcast_to(c, (domain.n,) + c.shape).copy()
    cls = SharedMatrix if c.ndim == 2 else ShareSet
    return cls(domain, values)


def select_points(points: np.ndarray, t: int, mode: str = "lowest") -> np.ndarray:
    """Indices of the shares used for reconstruction."""
    if points.shape[0] < t + 1:
        raise InsufficientShares(f"need at least {t + 1} shares, got {points.shape[0]}")
    if mode == "lowest":
        return np.argsort(points, kind="stable")[: t + 1]
    if mode == "all":
        return np.arange(points.shape[0])
    raise ValueError(f"unknown selection mode {mode!r}")


def recon(partial: ShareSet, mode: str = "lowest", method: str = "barycentric"):
    """Reconstruct the secret from at least ``t + 1`` shares.

    ``mode="lowest"`` interpolates through the shares at the ``t + 1``
    smallest evaluation points; ``mode="all"`` uses every share provided.
    Matrix share sets reconstruct to a plain matrix.
    """
    _check_distinct(partial.points)
    idx = select_points(partial.points, partial.domain.threshold, mode)
    return interpolate_at(partial.points[idx], partial.values[idx], 0.0, method)


def naive_share(s: float, domain: EvaluationDomain, params: SharingParams,
                rng: np.random.Generator | None = None) -> NaiveShareSet:
    """Coefficient scheme: ``s[p] = s + sum_{j=1..t} c_j p**j``, ``c_j ~ N(0, sigma2_y)``.

    Kept for comparison only; low evaluation points leak more than high ones.
    """
    if rng is None:
        rng = params.rng()
    coeffs = rng.normal(0.0, math.sqrt(params.sigma2_y), size=domain.threshold)
    return naive_share_from_coefficients(s, domain, coeffs)


def naive_share_from_coefficients(s: float, domain: EvaluationDomain, coeffs) -> NaiveShareSet:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    pts = domain.array()
    noise = np.zeros_like(pts)
    for c in coeffs[::-1]:
        noise = (noise + c) * pts
    out = NaiveShareSet(domain, s + noise)
    out.coefficients = tuple(coeffs.tolist())
    return out
