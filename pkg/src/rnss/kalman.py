"""Plain and privacy-preserving Kalman filtering.

Vectors are column matrices throughout. The private filter shares every model
matrix, the state, the controls and the measurements, and runs the five
filter equations with Beaver matrix products and one masked inversion per
step::

    x~ = A x^ + B u                      2 products
    P~ = A (P A^T) + Q                   2 products
    S  = H (P~ H^T) + R                  2 products
    K  = (P~ H^T) inv(S)                 2 products + 1 inversion
    y  = z - H x~                        1 product
    x^ = x~ + K y                        1 product
    P  = P~ - K (H P~)                   2 products

That is 12 products (2 openings each) and one inversion (3 openings): 27
openings per step, independent of the matrix dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .arith import BeaverTriple, dealer_triple, inv, mult
from .core import EvaluationDomain, SharingParams, interpolate_at, share_matrix
from .errors import ConfigError, SingularInnovation, SingularMask
from .runtime.engine import DirectEngine, stream_rng

OPENINGS_PER_STEP = 27


@dataclass(frozen=True)
class KalmanModel:
    """Linear-Gaussian state-space model ``x' = A x + B u + w``, ``z = H x + v``."""

    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "H", "Q", "R"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=np.float64)))
        s = self.A.shape[0]
        m = self.H.shape[0]
        if self.A.shape != (s, s) or self.B.shape[0] != s or self.H.shape != (m, s) \
                or self.Q.shape != (s, s) or self.R.shape != (m, m):
            raise ValueError("inconsistent model dimensions")
        for name in ("Q", "R"):
            mat = getattr(self, name)
            if not np.allclose(mat, mat.T):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(mat)[0] < -1e-12 * max(1.0, np.abs(mat).max()):
                raise ValueError(f"{name} must be positive semidefinite")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(state, control, measurement) dimensions."""
        return self.A.shape[0], self.B.shape[1], self.H.shape[0]


@dataclass
class KalmanState:
    """Estimate and covariance after ``k`` steps (plain arrays or shares)."""

    x_hat: object
    P: object
    k: int = 0


def default_model() -> KalmanModel:
    """Constant-velocity tracker with position measurements."""
    return KalmanModel(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.0], [0.0]], H=[[1.0, 0.0]],
                       Q=0.01 * np.eye(2), R=[[1.0]])


def default_x0() -> np.ndarray:
    return np.zeros((2, 1))


def plain_step(model: KalmanModel, state: KalmanState, u, z, cond_cap: float = 1e12) -> KalmanState:
    u = np.asarray(u, dtype=np.float64).reshape(-1, 1)
    z = np.asarray(z, dtype=np.float64).reshape(-1, 1)
    A, B, H = model.A, model.B, model.H
    x_pred = A @ state.x_hat + B @ u
    P_pred = A @ state.P @ A.T + model.Q
    S = H @ P_pred @ H.T + model.R
    if not np.isfinite(np.linalg.cond(S)) or np.linalg.cond(S) > cond_cap:
        raise SingularInnovation("innovation covariance is singular")
    K = P_pred @ H.T @ np.linalg.inv(S)
    x_new = x_pred + K @ (z - H @ x_pred)
    P_new = P_pred - K @ H @ P_pred
    return KalmanState(x_new, 0.5 * (P_new + P_new.T), state.k + 1)


def simulate(model: KalmanModel, x0, steps: int, seed: int = 0):
    """Draw a trajectory of ``steps`` steps.

    Returns ``(states, measurements, controls)``; entry ``i`` belongs to time
    ``k = i + 1``, i.e. ``states[i] = A states[i-1] + B controls[i-1] + w``
    starting from ``x0``, and ``measurements[i] = H states[i] + v``. Controls
    are zero.
    """
    rng = stream_rng(seed, "data", "simulate")
    s, u_dim, m = model.dims
    x = np.asarray(x0, dtype=np.float64).reshape(s, 1)
    states, zs, us = [], [], []
    u = np.zeros((u_dim, 1))
    for _ in range(steps):
        w = rng.multivariate_normal(np.zeros(s), model.Q, method="eigh").reshape(s, 1)
        x = model.A @ x + model.B @ u + w
        v = rng.multivariate_normal(np.zeros(m), model.R, method="eigh").reshape(m, 1)
        states.append(x)
        zs.append(model.H @ x + v)
        us.append(u.copy())
    return states, zs, us


def plain_filter(model: KalmanModel, x0, zs, us, P0=None) -> list[KalmanState]:
    state = KalmanState(np.asarray(x0, dtype=np.float64).reshape(-1, 1),
                        np.eye(model.dims[0]) if P0 is None else np.asarray(P0, dtype=np.float64))
    out = []
    for u, z in zip(us, zs):
        state = plain_step(model, state, u, z)
        out.append(state)
    return out


def rse_series(private, plain) -> list[float]:
    """Per-step Euclidean distance between private and plain estimates."""
    return [float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))
            for a, b in zip(private, plain)]


def triple_dims(model: KalmanModel) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Factor shapes of the 13 triples of one step, in consumption order."""
    s, u, m = model.dims
    return [
        ((s, s), (s, 1)),  # A x^
        ((s, u), (u, 1)),  # B u
        ((s, s), (s, s)),  # P A^T
        ((s, s), (s, s)),  # A (P A^T)
        ((s, s), (s, m)),  # P~ H^T
        ((m, s), (s, m)),  # H (P~ H^T)
        ((s, s), (s, m)),  # P~ H^T, for the gain
        ((m, m), (m, m)),  # S r, inside the inversion
        ((s, m), (m, m)),  # (P~ H^T) inv(S)
        ((m, s), (s, 1)),  # H x~
        ((s, m), (m, 1)),  # K y
        ((m, s), (s, s)),  # H P~
        ((s, m), (m, s)),  # K (H P~)
    ]


def private_step(engine, model: dict, state: KalmanState, u, z, triples, params: SharingParams,
                 mask_sigma2: float | None = None) -> KalmanState:
    """One step of the shared filter.

    Args:
        engine: ``DirectEngine`` (global shares) or ``Party`` (local shares).
        model: shares of ``A``, ``B``, ``H``, ``Q``, ``R`` keyed by name.
        state: shares of the previous estimate and covariance.
        u, z: shares of the control and the measurement.
        triples: 13 fresh matrix triples in ``triple_dims`` order.
        params: sharing parameters for the inversion mask.

    Raises:
        SingularMask: the opened mask product could not be inverted. The
            step can be retried with a fresh mask.
    """
    if len(triples) != 13:
        raise ValueError(f"a step consumes 13 triples, got {len(triples)}")
    T = iter(triples)
    A, B, H, Q, R = (model[k] for k in "ABHQR")

    def mul(x, y):
        return mult(x, y, next(T), engine)[0]

    x_pred = mul(A, state.x_hat) + mul(B, u)
    P_pred = mul(A, mul(state.P, A.T)) + Q
    S = mul(H, mul(P_pred, H.T)) + R
    PHt = mul(P_pred, H.T)
    m = np.shape(R)[-1]
    r = engine.joint_random(params, (m, m), mask_sigma2)
    try:
        S_inv, _ = inv(S, r, next(T), engine)
    except SingularMask as exc:
        raise SingularMask(f"step {state.k}: {exc}; retry the step with a fresh mask") from exc
    K = mul(PHt, S_inv)
    y = z - mul(H, x_pred)
    x_new = x_pred + mul(K, y)
    P_new = P_pred - mul(K, mul(H, P_pred))
    return KalmanState(x_new, 0.5 * (P_new + P_new.T), state.k + 1)


# -- experiment --------------------------------------------------------------

@dataclass
class KalmanSetup:
    """Inputs of the shared filter, prepared before the run.

    Every share set is global (all parties); a party takes its own column.
    """

    model: dict
    x0: object
    P0: object
    us: list
    zs: list
    triples: list
    plain: list = field(default_factory=list)


def model_from_config(cfg) -> tuple[KalmanModel, np.ndarray]:
    base = default_model()
    mats = {k: getattr(base, k) for k in "ABHQR"}
    mats.update({k: np.asarray(v, dtype=np.float64) for k, v in cfg.matrices})
    try:
        model = KalmanModel(**mats)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    x0 = np.asarray(cfg.x0, dtype=np.float64).reshape(-1, 1) if cfg.x0 else np.zeros((model.dims[0], 1))
    if x0.shape[0] != model.dims[0]:
        raise ConfigError("x0 does not match the state dimension")
    return model, x0


def prepare(model: KalmanModel, x0, domain: EvaluationDomain, params: SharingParams,
            steps: int, seed: int, mask_sigma2: float | None = None) -> KalmanSetup:
    """Data, plain reference run, input shares and per-step triples for ``seed``.

    Deterministic in its arguments, so separate processes rebuild identical
    material.
    """
    states, zs, us = simulate(model, x0, steps, seed)
    plain = plain_filter(model, x0, zs, us)
    rng = stream_rng(seed, "input", "model")
    shared_model = {k: share_matrix(getattr(model, k), domain, params, rng) for k in "ABHQR"}
    rng = stream_rng(seed, "input", "init")
    x0_sh = share_matrix(np.asarray(x0).reshape(-1, 1), domain, params, rng)
    P0_sh = share_matrix(np.eye(model.dims[0]), domain, params, rng)
    us_sh, zs_sh, triples = [], [], []
    dims = triple_dims(model)
    mask = params.sigma2_y if mask_sigma2 is None else mask_sigma2
    for k in range(steps):
        rng = stream_rng(seed, "input", f"step{k}")
        us_sh.append(share_matrix(us[k], domain, params, rng))
        zs_sh.append(share_matrix(zs[k], domain, params, rng))
        rng = stream_rng(seed, "dealer", f"step{k}")
        triples.append([dealer_triple(domain, params, d, sigma2_r=mask, rng=rng) for d in dims])
    return KalmanSetup(shared_model, x0_sh, P0_sh, us_sh, zs_sh, triples, [s.x_hat for s in plain])


def _local(setup: KalmanSetup, index: int | None):
    """The setup as seen by one party (``index``) or globally (``None``)."""
    def pick(v):
        return v if index is None else v.for_party(index)
    model = {k: pick(v) for k, v in setup.model.items()}
    triples = [[BeaverTriple(pick(t.r1), pick(t.r2), pick(t.r1r2), t.matrix) for t in step]
               for step in setup.triples]
    return model, pick(setup.x0), pick(setup.P0), [pick(u) for u in setup.us], \
        [pick(z) for z in setup.zs], triples


def run_private(engine, setup: KalmanSetup, params: SharingParams, mask_sigma2: float | None,
                reveal: Callable, index: int | None = None) -> list[tuple[int, float, int]]:
    """Run every step and return CSV rows ``(k, rse, io_cumulative)``.

    ``reveal(shares)`` turns the estimate shares into a plain vector; it is
    output delivery and does not count as an opening.
    """
    model, x0, P0, us, zs, triples = _local(setup, index)
    state = KalmanState(x0, P0)
    rows = []
    for k, (u, z, tr) in enumerate(zip(us, zs, triples)):
        state = private_step(engine, model, state, u, z, tr, params, mask_sigma2)
        rse = rse_series([reveal(state.x_hat)], [setup.plain[k]])[0]
        rows.append((k, rse, engine.io.opens))
    return rows


def mask_variance(sigma2_y: float, mask_sigma2: float | None) -> float:
    """Default mask variance: ``sigma2_y``, or 1 for noise-free sharing."""
    if mask_sigma2 is not None:
        return mask_sigma2
    return sigma2_y if sigma2_y > 0 else 1.0


def run_direct(model: KalmanModel, x0, domain: EvaluationDomain, sigma2_y: float, steps: int,
               seed: int, mask_sigma2: float | None = None):
    params = SharingParams(sigma2_y=sigma2_y)
    mask = mask_variance(sigma2_y, mask_sigma2)
    setup = prepare(model, x0, domain, params, steps, seed, mask)
    engine = DirectEngine(domain, seed)

    def reveal(x):
        k = domain.threshold + 1
        return interpolate_at(x.points[:k], x.values[:k], 0.0)
    return run_private(engine, setup, params, mask, reveal)


def party_script(model: KalmanModel, x0, domain: EvaluationDomain, sigma2_y: float, steps: int,
                 seed: int, mask_sigma2: float | None = None):
    """Script for ``runtime.run_simulated``/``run_tcp``; each party returns the CSV rows."""
    params = SharingParams(sigma2_y=sigma2_y)
    mask = mask_variance(sigma2_y, mask_sigma2)
    setup = prepare(model, x0, domain, params, steps, seed, mask)

    def script(party):
        def reveal(x):
            got = party.deliver(x)
            k = domain.threshold + 1
            return interpolate_at(domain.points[:k], np.stack(got[:k]), 0.0)
        return run_private(party, setup, params, mask, reveal, index=party.index)
    return script

