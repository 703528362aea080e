"""Leakage analysis: closed-form mutual-information bounds and empirical estimates.

All quantities are in bits. Bounds are conditional on a fixed anchor set
(``LeakageModel.witness_xs``): given the anchors, a coalition's shares are
the jointly Gaussian vector ``S * l + W y`` with

* ``l[i]    = L0(p_i)``, the Lagrange basis at node 0 of the nodes ``{0} + xs``
* ``W[i, j] = (p_i / x_j) L_j(p_i)``, the basis at anchor ``x_j``

so the secret part has covariance ``A = sigma2_s l l^T`` and the anchor noise
``B = sigma2_y W W^T``. Joint bounds are ``0.5 * log2(det(A + B) / det(B))``.

``worst_case_bound`` maximises over anchor sets, which upper-bounds the
information in shares produced with a fresh random anchor set.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import psi

from . import kernels
from .core import EvaluationDomain, SharingParams, draw_anchors

INFINITE_LEAK = math.inf
"""Marker returned when a bound diverges (no noise protects the secret)."""

QUANTITIES = ("single_share", "t_shares", "t_shares_plus_mask", "t_shares_plus_sr")

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LeakageModel:
    """A sharing configuration with a fixed anchor set.

    Attributes:
        domain: evaluation domain.
        params: sharing parameters; only ``sigma2_y`` enters the bounds.
        sigma2_s: variance of the secret.
        witness_xs: the ``t`` anchor abscissae.
    """

    domain: EvaluationDomain
    params: SharingParams
    sigma2_s: float = 1.0
    witness_xs: tuple = ()

    def __post_init__(self):
        if not self.sigma2_s > 0:
            raise ValueError("sigma2_s must be positive")
        xs = tuple(float(x) for x in self.witness_xs)
        if not xs:
            xs = self.domain.points[: self.domain.threshold]
        if len(set(xs)) != len(xs):
            raise ValueError("witness points must be distinct")
        if len(xs) != self.domain.threshold:
            raise ValueError(f"expected {self.domain.threshold} witness points, got {len(xs)}")
        for x in xs:
            self.domain.index_of(x)
        object.__setattr__(self, "witness_xs", xs)

    def weights(self, points) -> tuple[np.ndarray, np.ndarray]:
        """``(l, W)``: secret weights ``L0(p)`` and anchor-noise weights per point."""
        pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
        nodes = np.concatenate([[0.0], self.witness_xs])
        basis = kernels.basis_matrix(nodes, pts)
        return basis[:, 0], basis[:, 1:]

    def noise_mean(self, p: float) -> float:
        """Mean of the anchor noise at ``p``: ``mu_y * sum_j w_j(p)``."""
        _, w = self.weights([p])
        return self.params.mu_y * float(w.sum())

    def covariances(self, points) -> tuple[np.ndarray, np.ndarray]:
        """``(A, B)``: secret and anchor-noise covariance of the shares at ``points``."""
        ell, w = self.weights(points)
        return self.sigma2_s * np.outer(ell, ell), self.params.sigma2_y * (w @ w.T)

    def _check_points(self, points):
        pts = [float(p) for p in np.atleast_1d(points)]
        for p in pts:
            self.domain.index_of(p)
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        return pts


@dataclass
class LeakageReport:
    per_share_bound_bits: dict = field(default_factory=dict)
    t_share_bound_bits: float = 0.0
    mult_transcript_bound_bits: float = 0.0
    inv_transcript_bound_bits: float = 0.0
    eigen_bound_bits: float = 0.0
    empirical: dict = field(default_factory=dict)


def gaussian_entropy_bits(sigma2: float) -> float:
    """Differential entropy of N(., sigma2) in bits."""
    if not sigma2 > 0:
        raise ValueError("variance must be positive")
    return 0.5 * math.log2(2.0 * math.pi * math.e * sigma2)


def sigma2_B(model: LeakageModel, p: float) -> float:
    """Variance of the anchor noise in the share at ``p``.

    Equals ``sigma2_y`` at an anchor point, where the share is the anchor
    ordinate itself.
    """
    model._check_points([p])
    _, w = model.weights([p])
    return model.params.sigma2_y * float(w[0] @ w[0])


def per_share_bound(model: LeakageModel, p: float) -> float:
    """``0.5 log2(1 + L0(p)^2 sigma2_s / sigma2_B(p))``; 0 at anchor points."""
    model._check_points([p])
    ell, w = model.weights([p])
    l0 = float(ell[0])
    if l0 == 0.0:
        return 0.0
    s2b = model.params.sigma2_y * float(w[0] @ w[0])
    if s2b == 0.0:
        return INFINITE_LEAK
    return 0.5 * math.log2(1.0 + l0 * l0 * model.sigma2_s / s2b)


def _log_det_ratio_bits(den: np.ndarray, excess: np.ndarray, rcond: float = 1e-13) -> float:
    """``0.5 log2(det(den + excess) / det den)``; ``INFINITE_LEAK`` if ``den`` is singular.

    Evaluated as ``sum log1p(eig(L^-1 excess L^-T))`` with ``den = L L^T``,
    which keeps full relative accuracy when the ratio is close to one.
    """
    diag = np.diag(den)
    if np.any(diag <= 0.0):
        return INFINITE_LEAK
    # Jacobi scaling so the singularity test ignores per-coordinate units.
    scale = 1.0 / np.sqrt(diag)
    den = den * np.outer(scale, scale)
    excess = excess * np.outer(scale, scale)
    ev = np.linalg.eigvalsh(den)
    if ev[0] <= rcond * ev[-1]:
        return INFINITE_LEAK
    L = np.linalg.cholesky(den)
    M = solve_triangular(L, solve_triangular(L, excess, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))
    if lam[0] <= -1.0:
        return INFINITE_LEAK
    return max(0.0, 0.5 * float(np.sum(np.log1p(lam))) / _LN2)


def rank_one_bound(model: LeakageModel, points) -> float:
    """``0.5 log2(1 + sigma2_s l^T B^-1 l)``, algebraically equal to ``t_share_bound``."""
    pts = model._check_points(points)
    ell, _ = model.weights(pts)
    if not np.any(ell):
        return 0.0
    _, B = model.covariances(pts)
    try:
        q = float(ell @ np.linalg.solve(B, ell))
    except np.linalg.LinAlgError:
        return INFINITE_LEAK
    return 0.5 * math.log2(1.0 + model.sigma2_s * q)


def t_share_bound(model: LeakageModel, points) -> float:
    """Information about ``S`` in the shares at ``points`` (at most ``t`` of them)."""
    pts = model._check_points(points)
    if len(pts) > model.domain.threshold:
        raise ValueError(f"at most t={model.domain.threshold} points")
    A, B = model.covariances(pts)
    if not np.any(A):
        return 0.0
    return _log_det_ratio_bits(B, A)


def mult_transcript_bound(model: LeakageModel, points, mask_sigma2: float) -> float:
    """Shares at ``points`` together with the opened ``S + R1``, ``R1 ~ N(0, mask_sigma2)``."""
    pts = model._check_points(points)
    A, B = model.covariances(pts)
    ell, _ = model.weights(pts)
    k = len(pts)
    excess = np.zeros((k + 1, k + 1))
    excess[:k, :k] = A
    excess[:k, k] = excess[k, :k] = model.sigma2_s * ell
    excess[k, k] = model.sigma2_s
    den = np.zeros_like(excess)
    den[:k, :k] = B
    den[k, k] = mask_sigma2
    return _log_det_ratio_bits(den, excess)


def inv_transcript_bound(model: LeakageModel, points, mask_sigma2: float,
                         mu_s: float = 0.0, mu_r: float = 0.0) -> float:
    """Shares at ``points`` together with the opened product ``S R``, ``R ~ N(mu_r, mask_sigma2)``.

    ``S R`` is not Gaussian; it is replaced by a Gaussian with the same
    second moments. Given ``S`` its variance is ``S^2 mask_sigma2``, averaged
    to ``E[S^2] mask_sigma2``. With zero means this equals ``t_share_bound``.
    """
    pts = model._check_points(points)
    A, B = model.covariances(pts)
    ell, _ = model.weights(pts)
    s2 = model.sigma2_s
    es2 = s2 + mu_s * mu_s
    er2 = mask_sigma2 + mu_r * mu_r
    k = len(pts)
    # Var(SR) - es2 mask_sigma2 = s2 mu_r^2
    excess = np.zeros((k + 1, k + 1))
    excess[:k, :k] = A
    excess[:k, k] = excess[k, :k] = ell * mu_r * s2
    excess[k, k] = es2 * er2 - (mu_s * mu_r) ** 2 - es2 * mask_sigma2
    den = np.zeros_like(excess)
    den[:k, :k] = B
    den[k, k] = es2 * mask_sigma2
    return _log_det_ratio_bits(den, excess)


def eigen_bound(model: LeakageModel, points) -> float:
    """``0.5 log2(lmax(A)/lmin(B) + lmax(B)/lmin(B))``, an upper bound on ``t_share_bound``."""
    pts = model._check_points(points)
    A, B = model.covariances(pts)
    ea = np.linalg.eigvalsh(A)
    eb = np.linalg.eigvalsh(B)
    if eb[0] <= 0.0:
        return INFINITE_LEAK
    return 0.5 * math.log2(max(ea[-1], 0.0) / eb[0] + eb[-1] / eb[0])


def naive_scheme_bound(sigma2_s: float, sigma2_c: Sequence[float], p: float) -> float:
    """Per-share leakage of the coefficient scheme ``s + sum_j c_j p^j``."""
    noise = sum(p ** (2 * j) * c for j, c in enumerate(sigma2_c, start=1))
    if sigma2_s == 0:
        return 0.0
    if noise == 0:
        return INFINITE_LEAK
    return 0.5 * math.log2(1.0 + sigma2_s / noise)


def naive_scheme_bounds(sigma2_s: float, sigma2_c: Sequence[float], points) -> dict:
    return {float(p): naive_scheme_bound(sigma2_s, sigma2_c, p) for p in points}


def default_points(domain: EvaluationDomain, quantity: str) -> tuple:
    """Coalition observed for ``quantity``: party 0 alone, else the first ``t`` parties."""
    if quantity == "single_share":
        return domain.points[:1]
    return domain.points[: domain.threshold]


def bound_for(model: LeakageModel, quantity: str, points=None, mask_sigma2: float | None = None) -> float:
    if points is None:
        points = default_points(model.domain, quantity)
    if mask_sigma2 is None:
        mask_sigma2 = model.params.sigma2_y
    if quantity in ("single_share", "t_shares"):
        return t_share_bound(model, points)
    if quantity == "t_shares_plus_mask":
        return mult_transcript_bound(model, points, mask_sigma2)
    if quantity == "t_shares_plus_sr":
        return inv_transcript_bound(model, points, mask_sigma2)
    raise ValueError(f"unknown quantity {quantity!r}")


def witness_sets(domain: EvaluationDomain, limit: int = 20000, samples: int = 2000,
                 rng: np.random.Generator | None = None):
    """Every anchor set if there are at most ``limit``, else ``samples`` random ones."""
    t = domain.threshold
    if math.comb(domain.n, t) <= limit:
        return list(itertools.combinations(domain.points, t))
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = domain.array()
    idx = np.sort(np.argsort(rng.random((samples, domain.n)), axis=1)[:, :t], axis=1)
    return [tuple(pts[row].tolist()) for row in idx]


def worst_case_bound(domain: EvaluationDomain, params: SharingParams, quantity: str = "t_shares",
                     sigma2_s: float = 1.0, points=None, mask_sigma2: float | None = None,
                     limit: int = 20000, samples: int = 2000,
                     rng: np.random.Generator | None = None) -> float:
    """Maximum of ``bound_for`` over anchor sets (all of them, or a sample)."""
    best = 0.0
    for xs in witness_sets(domain, limit, samples, rng):
        model = LeakageModel(domain, params, sigma2_s, xs)
        best = max(best, bound_for(model, quantity, points, mask_sigma2))
        if best == INFINITE_LEAK:
            break
    return best


def leakage_report(model: LeakageModel, points=None, mask_sigma2: float | None = None) -> LeakageReport:
    if points is None:
        points = default_points(model.domain, "t_shares")
    if mask_sigma2 is None:
        mask_sigma2 = model.params.sigma2_y
    return LeakageReport(
        per_share_bound_bits={p: per_share_bound(model, p) for p in model.domain.points},
        t_share_bound_bits=t_share_bound(model, points),
        mult_transcript_bound_bits=mult_transcript_bound(model, points, mask_sigma2),
        inv_transcript_bound_bits=inv_transcript_bound(model, points, mask_sigma2),
        eigen_bound_bits=eigen_bound(model, points),
    )


# -- empirical estimation -------------------------------------------------

@dataclass(frozen=True)
class MiSampleSpec:
    """What to sample for ``empirical_mi``.

    ``witness=None`` draws a fresh anchor set per sample, as sharing does;
    a tuple of abscissae fixes it (the setting the closed-form bounds assume).
    """

    domain: EvaluationDomain
    params: SharingParams
    quantity: str = "single_share"
    points: tuple | None = None
    sigma2_s: float = 1.0
    samples: int = 100_000
    mask_sigma2: float | None = None
    witness: tuple | None = None
    seed: int = 0
    bias_correct: bool = False

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if self.samples < 10:
            raise ValueError("need at least 10 samples")


@dataclass(frozen=True)
class MiEstimate:
    bits: float
    samples: int
    near_singular: bool = False

    def __float__(self):
        return self.bits


def gaussian_mi(x, y, bias_correct: bool = False, cond_cap: float = 1e12) -> MiEstimate:
    """Gaussian plug-in estimate of I(X; Y) from paired samples (rows).

    With ``bias_correct`` the log-determinants get the analytic
    small-sample correction for Gaussian entropy estimates.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x = x.reshape(x.shape[0], -1)
    y = y.reshape(y.shape[0], -1)
    n = x.shape[0]
    dx, dy = x.shape[1], y.shape[1]
    c = np.cov(np.hstack([x, y]), rowvar=False).reshape(dx + dy, dx + dy)
    hx = 0.5 * np.linalg.slogdet(c[:dx, :dx])[1]
    hy = 0.5 * np.linalg.slogdet(c[dx:, dx:])[1]
    sxy, lxy = np.linalg.slogdet(c)
    hxy = 0.5 * lxy
    near = bool(sxy <= 0 or np.linalg.cond(c) > cond_cap)
    if bias_correct:
        terms = psi((n - np.arange(1, dx + dy + 1)) / 2.0) / 2.0
        dterm = (_LN2 - math.log(n - 1.0)) / 2.0
        hx -= dx * dterm + terms[:dx].sum()
        hy -= dy * dterm + terms[:dy].sum()
        hxy -= (dx + dy) * dterm + terms.sum()
    with np.errstate(invalid="ignore"):
        bits = (hx + hy - hxy) / _LN2
    if not np.isfinite(bits):
        near = True
    return MiEstimate(float(bits), n, near)


def sample_joint(spec: MiSampleSpec) -> tuple[np.ndarray, np.ndarray]:
    """Samples ``(S, observation)`` for ``spec``; observation rows are shares then masked values."""
    rng = np.random.default_rng(spec.seed)
    dom, params, n = spec.domain, spec.params, spec.samples
    points = spec.points if spec.points is not None else default_points(dom, spec.quantity)
    secrets = rng.normal(0.0, math.sqrt(spec.sigma2_s), size=n)
    if spec.witness is None:
        xs, ys = draw_anchors(n, dom, params, rng)
    else:
        xs = np.broadcast_to(np.asarray(spec.witness, dtype=np.float64), (n, dom.threshold))
        ys = rng.normal(params.mu_y, math.sqrt(params.sigma2_y), size=(n, dom.threshold))
    obs = kernels.share_eval(secrets, xs, ys, np.asarray(points, dtype=np.float64))
    mask = params.sigma2_y if spec.mask_sigma2 is None else spec.mask_sigma2
    if spec.quantity == "t_shares_plus_mask":
        r = rng.normal(0.0, math.sqrt(mask), size=n)
        obs = np.column_stack([obs, secrets - r])
    elif spec.quantity == "t_shares_plus_sr":
        r = rng.normal(0.0, math.sqrt(mask), size=n)
        obs = np.column_stack([obs, secrets * r])
    return secrets, obs


def empirical_mi(spec: MiSampleSpec) -> MiEstimate:
    """Monte-Carlo Gaussian plug-in estimate of the leakage described by ``spec``."""
    secrets, obs = sample_joint(spec)
    return gaussian_mi(secrets, obs, bias_correct=spec.bias_correct)
