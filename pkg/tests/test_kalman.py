import numpy as np
import pytest

from rnss import EvaluationDomain
from rnss.errors import SingularInnovation
from rnss.kalman import (
    OPENINGS_PER_STEP,
    KalmanModel,
    KalmanState,
    default_model,
    default_x0,
    party_script,
    plain_filter,
    plain_step,
    prepare,
    rse_series,
    run_direct,
    simulate,
    triple_dims,
)
from rnss.runtime import run_simulated
from rnss.runtime.wire import TAG_OUTPUT


def scalar_filter(a, q, h, r, x0, p0, zs):
    """Textbook scalar recursion, written out by hand."""
    x, p, out = x0, p0, []
    for z in zs:
        xp = a * x
        pp = a * p * a + q
        k = pp * h / (h * pp * h + r)
        x = xp + k * (z - h * xp)
        p = (1 - k * h) * pp
        out.append((x, p))
    return out


class TestModel:
    def test_default(self):
        m = default_model()
        assert m.dims == (2, 1, 1)
        np.testing.assert_array_equal(default_x0(), np.zeros((2, 1)))

    @pytest.mark.parametrize("kw", [
        dict(A=np.eye(2), B=[[0.0]], H=[[1.0, 0.0]], Q=np.eye(2), R=[[1.0]]),
        dict(A=np.eye(2), B=[[0.0], [0.0]], H=[[1.0]], Q=np.eye(2), R=[[1.0]]),
        dict(A=np.eye(2), B=[[0.0], [0.0]], H=[[1.0, 0.0]], Q=[[1.0, 0.5], [0.0, 1.0]], R=[[1.0]]),
        dict(A=np.eye(2), B=[[0.0], [0.0]], H=[[1.0, 0.0]], Q=np.eye(2), R=[[-1.0]]),
    ])
    def test_rejects_bad_models(self, kw):
        with pytest.raises(ValueError):
            KalmanModel(**kw)


class TestPlainFilter:
    def test_matches_scalar_recursion(self):
        model = KalmanModel(A=[[0.9]], B=[[0.0]], H=[[2.0]], Q=[[0.3]], R=[[0.5]])
        _, zs, us = simulate(model, [[1.0]], 40, seed=2)
        got = plain_filter(model, [[1.0]], zs, us, P0=[[2.0]])
        ref = scalar_filter(0.9, 0.3, 2.0, 0.5, 1.0, 2.0, [float(z[0, 0]) for z in zs])
        for st, (x, p) in zip(got, ref):
            assert st.x_hat[0, 0] == pytest.approx(x, abs=1e-12)
            assert st.P[0, 0] == pytest.approx(p, abs=1e-12)

    def test_tiny_measurement_noise_tracks_measurement(self):
        base = default_model()
        model = KalmanModel(base.A, base.B, base.H, base.Q, 1e-12 * np.eye(1))
        _, zs, us = simulate(default_model(), default_x0(), 10, seed=1)
        for st, z in zip(plain_filter(model, default_x0(), zs, us), zs):
            assert (model.H @ st.x_hat)[0, 0] == pytest.approx(z[0, 0], abs=1e-8)

    def test_huge_measurement_noise_keeps_prediction(self):
        base = default_model()
        model = KalmanModel(base.A, base.B, base.H, base.Q, 1e12 * np.eye(1))
        x0 = np.array([[1.0], [0.5]])
        _, zs, us = simulate(default_model(), x0, 5, seed=1)
        state = KalmanState(x0, np.eye(2))
        for u, z in zip(us, zs):
            pred = model.A @ state.x_hat
            state = plain_step(model, state, u, z)
            np.testing.assert_allclose(state.x_hat, pred, atol=1e-9)

    def test_covariance_stays_symmetric(self):
        _, zs, us = simulate(default_model(), default_x0(), 100, seed=3)
        for st in plain_filter(default_model(), default_x0(), zs, us):
            np.testing.assert_allclose(st.P, st.P.T, atol=1e-9)
            assert np.linalg.eigvalsh(st.P)[0] > 0

    def test_singular_innovation(self):
        model = KalmanModel(A=np.eye(2), B=[[0.0], [0.0]], H=[[0.0, 0.0]], Q=np.zeros((2, 2)), R=[[0.0]])
        with pytest.raises(SingularInnovation):
            plain_step(model, KalmanState(np.zeros((2, 1)), np.eye(2)), [[0.0]], [[1.0]])


class TestSimulate:
    def test_noise_free_trajectory(self):
        base = default_model()
        model = KalmanModel(base.A, base.B, base.H, np.zeros((2, 2)), np.zeros((1, 1)))
        x0 = np.array([[2.0], [0.5]])
        _, zs, _ = simulate(model, x0, 6, seed=0)
        for k in range(1, 7):
            expected = base.H @ np.linalg.matrix_power(base.A, k) @ x0
            np.testing.assert_allclose(zs[k - 1], expected, atol=1e-12)

    def test_noise_covariances(self):
        model = KalmanModel(A=np.zeros((2, 2)), B=[[0.0], [0.0]], H=[[1.0, 1.0]],
                            Q=[[1.0, 0.3], [0.3, 0.5]], R=[[2.0]])
        states, zs, _ = simulate(model, np.zeros((2, 1)), 20000, seed=5)
        w = np.hstack(states)
        np.testing.assert_allclose(np.cov(w), model.Q, rtol=0.1, atol=0.03)
        v = np.hstack(zs) - model.H @ w
        assert v.var() == pytest.approx(2.0, rel=0.1)

    def test_seed_reproducible(self):
        a = simulate(default_model(), default_x0(), 5, seed=11)[1]
        b = simulate(default_model(), default_x0(), 5, seed=11)[1]
        c = simulate(default_model(), default_x0(), 5, seed=12)[1]
        np.testing.assert_array_equal(np.hstack(a), np.hstack(b))
        assert not np.array_equal(np.hstack(a), np.hstack(c))


def test_rse_series():
    assert rse_series([np.array([3.0, 4.0])], [np.zeros(2)]) == [5.0]
    assert rse_series([], []) == []


class TestPrivateFilter:
    def test_noise_free_sharing_is_exact(self):
        rows = run_direct(default_model(), default_x0(), EvaluationDomain.grid(3, 1), 0.0, 50, seed=0)
        assert max(r[1] for r in rows) < 1e-10

    def test_noisy_sharing_tracks_plain(self):
        rows = run_direct(default_model(), default_x0(), EvaluationDomain.grid(3, 1), 1000.0, 50, seed=0)
        assert [r[0] for r in rows] == list(range(50))
        assert np.median([r[1] for r in rows]) < 1e-6

    def test_openings_per_step(self):
        rows = run_direct(default_model(), default_x0(), EvaluationDomain.grid(3, 1), 10.0, 5, seed=0)
        assert [r[2] for r in rows] == [OPENINGS_PER_STEP * (k + 1) for k in range(5)]

    def test_openings_independent_of_dimensions(self):
        model = KalmanModel(A=0.9 * np.eye(3), B=np.ones((3, 2)), H=np.ones((2, 3)),
                            Q=0.1 * np.eye(3), R=np.eye(2))
        rows = run_direct(model, np.zeros((3, 1)), EvaluationDomain.grid(5, 2), 10.0, 3, seed=1)
        assert rows[-1][2] == 3 * OPENINGS_PER_STEP
        assert max(r[1] for r in rows) < 1e-6

    def test_thirteen_triples(self):
        assert len(triple_dims(default_model())) == 13

    def test_simulated_matches_direct(self):
        dom = EvaluationDomain.grid(3, 1)
        direct = run_direct(default_model(), default_x0(), dom, 100.0, 4, seed=2)
        out = run_simulated(3, 1, party_script(default_model(), default_x0(), dom, 100.0, 4, seed=2), seed=2)
        for rows in out.results.values():
            assert rows == direct

    def test_transcript_hides_inputs(self):
        dom = EvaluationDomain.grid(3, 1)
        model = default_model()
        out = run_simulated(3, 1, party_script(model, default_x0(), dom, 100.0, 5, seed=4), seed=4)
        payload = {v for _, m in out.decoded() if m.protocol_tag != TAG_OUTPUT for v in m.payload}
        states, zs, us = simulate(model, default_x0(), 5, seed=4)
        plain = plain_filter(model, default_x0(), zs, us)
        secrets = {float(v) for arr in [*zs, *(s.x_hat for s in plain)] for v in np.ravel(arr)}
        secrets |= {float(v) for k in "ABHQR" for v in np.ravel(getattr(model, k))}
        assert not payload & secrets

    def test_private_covariance_symmetric(self):
        from rnss import SharingParams, recon
        from rnss.kalman import _local, private_step
        from rnss.runtime import DirectEngine
        dom = EvaluationDomain.grid(3, 1)
        params = SharingParams(sigma2_y=100.0)
        setup = prepare(default_model(), default_x0(), dom, params, 3, seed=0)
        model, x0, P0, us, zs, triples = _local(setup, None)
        state = KalmanState(x0, P0)
        eng = DirectEngine(dom)
        for u, z, tr in zip(us, zs, triples):
            state = private_step(eng, model, state, u, z, tr, params)
            P = recon(state.P)
            np.testing.assert_allclose(P, P.T, atol=1e-9)

    def test_wrong_triple_count(self):
        from rnss import SharingParams
        from rnss.kalman import private_step
        with pytest.raises(ValueError, match="13 triples"):
            private_step(None, {k: None for k in "ABHQR"}, KalmanState(None, None), None, None, [],
                         SharingParams())
