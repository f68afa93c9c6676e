import io

import numpy as np
import pytest

from fbmchaos.errors import CapacityError, DomainError
from fbmchaos.fbm import (
    FbmPath,
    SimSpec,
    coarsen,
    dump_csv,
    increment_cov_matrix,
    simulate,
    simulate_batch,
)
from fbmchaos.gaussian import HurstModel, cov_rect, rho


def spec(H=0.4, d=2, m=4, refine=1, seed=7, replica=0):
    return SimSpec(model=HurstModel(H, d), m=m, refine=refine, seed=seed, replica=replica)


class TestSimSpec:
    def test_capacity(self):
        with pytest.raises(CapacityError):
            SimSpec(model=HurstModel(0.4, 2), m=10, refine=64)

    def test_invalid(self):
        with pytest.raises(DomainError):
            SimSpec(model=HurstModel(0.4, 2), m=0)
        with pytest.raises(DomainError):
            SimSpec(model=HurstModel(0.4, 2), m=3, refine=0)

    def test_mesh(self):
        sp = spec(m=5, refine=4)
        assert sp.mesh == pytest.approx(2 ** -5 / 4)
        assert sp.size == 4 * 32


class TestIncrementCov:
    def test_diagonal_and_lag1(self):
        sp = spec(H=0.4, m=3, refine=2)
        S = increment_cov_matrix(sp)
        mesh = sp.mesh
        np.testing.assert_allclose(np.diag(S), mesh ** 0.8)
        assert S[0, 1] / mesh ** 0.8 == pytest.approx(rho(1, 0.4), rel=1e-13)

    def test_matches_cov_rect(self):
        sp = spec(H=0.45, m=3, refine=1)
        S = increment_cov_matrix(sp)
        t = sp.times
        for i in (0, 2, 7):
            for j in (0, 3, 7):
                expect = cov_rect(((t[i], t[i + 1]), (t[j], t[j + 1])), 0.45)
                assert S[i, j] == pytest.approx(expect, abs=1e-14)


class TestSimulate:
    def test_deterministic(self):
        a = simulate(spec())
        b = simulate(spec())
        assert np.array_equal(a.increments, b.increments)

    def test_distinct_replicas_and_components(self):
        a = simulate(spec(replica=0))
        b = simulate(spec(replica=1))
        assert not np.allclose(a.increments, b.increments)
        assert not np.allclose(a.increments[0], a.increments[1])

    def test_starts_at_zero(self):
        p = simulate(spec())
        assert np.all(p.values[:, 0] == 0)
        np.testing.assert_allclose(p.values[:, -1], p.increments.sum(axis=1))

    def test_batch_matches_single(self):
        sp = spec(m=3)
        batch = simulate_batch(sp, 3)
        for r in range(3):
            single = simulate(spec(m=3, replica=r))
            np.testing.assert_allclose(batch[r], single.increments, atol=1e-12)

    def test_empirical_covariance_exact_law(self):
        # grid of 16 increments, 10^4 replicas: every covariance entry within
        # 5 standard errors of the closed form
        sp = spec(H=0.4, m=4, refine=1, seed=11)
        N = 10 ** 4
        X = simulate_batch(sp, N)[:, 0, :]  # one component is enough here
        S = increment_cov_matrix(sp)
        emp = X.T @ X / N
        # SE of a covariance entry of jointly Gaussian pairs
        se = np.sqrt((np.outer(np.diag(S), np.diag(S)) + S ** 2) / N)
        assert np.all(np.abs(emp - S) < 5 * se)

    def test_brownian_lag1_uncorrelated(self):
        sp = spec(H=0.5, m=6, seed=3)
        N = 10 ** 4
        X = simulate_batch(sp, N)[:, 0, :]
        var = sp.mesh
        lag1 = np.mean(X[:, :-1] * X[:, 1:], axis=0)
        se = var / np.sqrt(N)
        assert np.all(np.abs(lag1) < 5 * se)

    def test_cross_replica_streams_uncorrelated(self):
        sp = spec(H=0.4, m=6, seed=5)
        N = 2000
        X = simulate_batch(sp, N)[:, 0, 0]
        Y = simulate_batch(spec(H=0.4, m=6, seed=5, replica=N), N)[:, 0, 0]
        r = np.corrcoef(X, Y)[0, 1]
        assert abs(r) < 5 / np.sqrt(N)


class TestCoarsen:
    def test_identity(self):
        p = simulate(spec(m=4))
        assert coarsen(p, 4) is p

    def test_endpoint_preserved(self):
        p = simulate(spec(m=6, refine=2))
        q = coarsen(p, 3)
        np.testing.assert_allclose(q.values[:, -1], p.values[:, -1], atol=1e-12)

    def test_refine_preserved(self):
        p = simulate(spec(m=6, refine=2))
        q = coarsen(p, 4)
        assert q.spec.m == 4 and q.spec.refine == 2
        assert q.increments.shape[1] == 2 * 16

    def test_cannot_refine(self):
        p = simulate(spec(m=3))
        with pytest.raises(DomainError):
            coarsen(p, 5)

    def test_coarse_law(self):
        # coarse empirical covariance matches the coarse closed form
        sp = spec(H=0.4, m=6, seed=13)
        N = 10 ** 4
        X = simulate_batch(sp, N)[:, 0, :]
        Xc = X.reshape(N, 16, 4).sum(axis=2)
        Sc = increment_cov_matrix(spec(H=0.4, m=4))
        emp = Xc.T @ Xc / N
        se = np.sqrt((np.outer(np.diag(Sc), np.diag(Sc)) + Sc ** 2) / N)
        assert np.all(np.abs(emp - Sc) < 5 * se)


class TestDump:
    def test_csv_roundtrip(self):
        p = simulate(spec(m=2, d=2))
        buf = io.StringIO()
        dump_csv(p, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,B1,B2"
        assert len(lines) == 1 + p.spec.size + 1
        last = [float(x) for x in lines[-1].split(",")]
        assert last[0] == 1.0
        assert last[1] == p.values[0, -1]
