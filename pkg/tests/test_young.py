import json
import pathlib

import numpy as np
import pytest

from fbmchaos.errors import CapacityError, DomainError
from fbmchaos.gaussian import cov, cov_rect, iterated_cov_Rl
from fbmchaos.young import (
    ControlFunction,
    GridFunction,
    GridPartition,
    Vp,
    bar_Vp,
    controlled_pvar,
    discrete_young_integral,
    iterated_A,
    iterated_A_bound,
    product_pvar_check,
    psi_path,
    rect_increment,
    tilde_Vp,
    towghi_check,
    towghi_fuzz_report,
    young_compose_h,
    zeta_sum_check,
)

DATA = pathlib.Path(__file__).parent / "data"


def random_grid_function(rng, points=4, N=2):
    axes = tuple(
        np.sort(np.concatenate(([0.0, 1.0], rng.uniform(0, 1, points - 2))))
        for _ in range(N)
    )
    part = GridPartition(axes=axes)
    return GridFunction(partition=part, values=rng.normal(size=(points,) * N))


class TestTypes:
    def test_partition_validation(self):
        with pytest.raises(DomainError):
            GridPartition(axes=(np.array([0.0]),))
        with pytest.raises(DomainError):
            GridPartition(axes=(np.array([0.0, 0.5, 0.5, 1.0]),))
        with pytest.raises(DomainError):
            GridPartition(axes=(np.array([-0.1, 1.0]),))

    def test_grid_function_shape(self):
        P = GridPartition.uniform(3, 2)
        with pytest.raises(DomainError):
            GridFunction(partition=P, values=np.zeros((3, 4)))

    def test_control_function_rejects_subadditive_failure(self):
        ControlFunction(w=lambda s, t: t - s)
        ControlFunction(w=lambda s, t: (t - s) ** 2)
        with pytest.raises(DomainError):
            ControlFunction(w=lambda s, t: np.sqrt(t - s))
        with pytest.raises(DomainError):
            ControlFunction(w=lambda s, t: t - s + 1.0)


class TestRectIncrement:
    def test_one_dimensional_difference(self):
        P = GridPartition.uniform(5, 1)
        f = GridFunction(partition=P, values=np.array([0.0, 1.0, 3.0, 6.0, 10.0]))
        assert rect_increment(f, {0: (1, 3)}) == pytest.approx(5.0)

    def test_product_factorizes(self):
        rng = np.random.default_rng(0)
        P = GridPartition.uniform(4, 2)
        a, b = rng.normal(size=4), rng.normal(size=4)
        f = GridFunction(partition=P, values=np.outer(a, b))
        v = rect_increment(f, {0: (0, 2), 1: (1, 3)})
        assert v == pytest.approx((a[2] - a[0]) * (b[3] - b[1]))

    def test_additive_over_abutting_boxes(self):
        rng = np.random.default_rng(1)
        f = random_grid_function(rng)
        whole = rect_increment(f, {0: (0, 3), 1: (0, 3)})
        parts = sum(
            rect_increment(f, {0: (i, i + 1), 1: (j, j + 1)})
            for i in range(3)
            for j in range(3)
        )
        assert whole == pytest.approx(parts, abs=1e-12)

    def test_fixed_axes(self):
        rng = np.random.default_rng(2)
        f = random_grid_function(rng)
        v = rect_increment(f, {1: (0, 2)}, fixed={0: 1})
        assert v == pytest.approx(f.values[1, 2] - f.values[1, 0])

    def test_bad_axes_rejected(self):
        rng = np.random.default_rng(3)
        f = random_grid_function(rng)
        with pytest.raises(DomainError):
            rect_increment(f, {0: (0, 1)})
        with pytest.raises(DomainError):
            rect_increment(f, {0: (0, 9), 1: (0, 1)})


class TestVariationFunctionals:
    def test_monotone_1d_vp_is_one(self):
        P = GridPartition(axes=(np.array([0.0, 0.2, 0.5, 0.7, 1.0]),))
        f = GridFunction(partition=P, values=np.array([0.0, 0.1, 0.4, 0.8, 1.0]))
        for p in (1.0, 2.0, 3.5):
            assert float(Vp(f, p)) == pytest.approx(1.0)

    def test_brownian_covariance_v1_is_one(self):
        # exhaustive sub-partition enumeration of min(s,t) on uniform grids
        for n in (3, 4, 5, 6):
            P = GridPartition.uniform(n, 2)
            f = GridFunction.sample(P, lambda s, t: np.minimum(s, t))
            v = Vp(f, 1.0)
            assert v.exact and float(v) == pytest.approx(1.0, abs=1e-12)

    def test_vp_at_least_tilde(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            f = random_grid_function(rng)
            p = rng.uniform(1, 3)
            assert float(Vp(f, p)) >= tilde_Vp(f, p) - 1e-12

    def test_monotonicity_in_p(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            f = random_grid_function(rng)
            assert float(Vp(f, 2.5)) <= float(Vp(f, 1.5)) + 1e-12

    def test_lower_bound_flagged_and_below_exact(self):
        rng = np.random.default_rng(6)
        f = random_grid_function(rng)
        lo, hi = Vp(f, 2.0, mode="lower_bound"), Vp(f, 2.0)
        assert not lo.exact and hi.exact
        assert float(lo) <= float(hi) + 1e-12

    def test_capacity_gate(self):
        P = GridPartition.uniform(13, 2)
        f = GridFunction(partition=P, values=np.zeros((13, 13)))
        with pytest.raises(CapacityError):
            Vp(f, 2.0)

    def test_bar_vp_dominates_vp(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            f = random_grid_function(rng)
            assert float(bar_Vp(f, 2.0)) >= float(Vp(f, 2.0)) - 1e-12

    def test_bar_vp_1d_closed_form(self):
        P = GridPartition.uniform(4, 1)
        f = GridFunction(partition=P, values=np.array([0.5, 1.0, -1.0, 2.0]))
        assert float(bar_Vp(f, 2.0)) == pytest.approx(float(Vp(f, 2.0)) + 0.5)

    def test_bar_vp_zero(self):
        P = GridPartition.uniform(4, 2)
        f = GridFunction(partition=P, values=np.zeros((4, 4)))
        assert float(bar_Vp(f, 1.5)) == 0.0


class TestControlledPvar:
    def test_1d_equals_vp(self):
        rng = np.random.default_rng(8)
        P = GridPartition.uniform(5, 1)
        f = GridFunction(partition=P, values=rng.normal(size=5))
        assert float(controlled_pvar(f, 1.7)) == pytest.approx(float(Vp(f, 1.7)))

    def test_friz_victoir_sandwich_fuzz(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            f = random_grid_function(rng)
            p = rng.uniform(1, 3)
            assert tilde_Vp(f, p) <= float(Vp(f, p)) + 1e-12
            assert float(Vp(f, p)) <= float(controlled_pvar(f, p)) + 1e-12

    def test_two_piece_superadditivity(self):
        # ||f||^p over the whole box dominates the sum over a vertical split
        rng = np.random.default_rng(10)
        for _ in range(10):
            f = random_grid_function(rng, points=3)
            p = rng.uniform(1, 2.5)
            whole = float(controlled_pvar(f, p)) ** p
            parts = 0.0
            for cols in ((0, 1), (1, 2)):
                keep = np.asarray(cols)
                sub = GridFunction(
                    partition=GridPartition(
                        axes=(f.partition.axes[0], f.partition.axes[1][keep])
                    ),
                    values=f.values[:, keep],
                )
                parts += float(controlled_pvar(sub, p)) ** p
            assert parts <= whole + 1e-10

    def test_capacity(self):
        P = GridPartition.uniform(5, 2)
        f = GridFunction(partition=P, values=np.zeros((5, 5)))
        with pytest.raises(CapacityError):
            controlled_pvar(f, 2.0)


class TestYoungIntegral:
    def test_constant_integrand_telescopes(self):
        rng = np.random.default_rng(11)
        g = random_grid_function(rng)
        one = GridFunction(partition=g.partition, values=np.ones(g.partition.shape))
        v = discrete_young_integral(one, g)
        assert v == pytest.approx(rect_increment(g, {0: (0, 3), 1: (0, 3)}), abs=1e-12)

    def test_zero_integrand(self):
        rng = np.random.default_rng(12)
        g = random_grid_function(rng)
        zero = GridFunction(partition=g.partition, values=np.zeros(g.partition.shape))
        assert discrete_young_integral(zero, g) == 0.0

    def test_refinement_limit_quarter(self):
        errs = []
        for n in (16, 64, 256):
            P = GridPartition.uniform(n + 1, 2)
            f = GridFunction.sample(P, lambda u, v: u * v)
            errs.append(abs(discrete_young_integral(f, f) - 0.25))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 5e-3

    def test_separable_integrator_factorizes(self):
        rng = np.random.default_rng(13)
        P1 = GridPartition.uniform(5, 1)
        a, b = rng.normal(size=5), rng.normal(size=5)
        fa = GridFunction(partition=P1, values=a)
        fb = GridFunction(partition=P1, values=b)
        P2 = GridPartition(axes=P1.axes * 2)
        f2 = GridFunction(partition=P2, values=np.outer(a, b))
        g2 = GridFunction(partition=P2, values=np.outer(a, b))
        prod = discrete_young_integral(fa, fa) * discrete_young_integral(fb, fb)
        assert discrete_young_integral(f2, g2) == pytest.approx(prod, abs=1e-12)

    def test_partition_mismatch(self):
        rng = np.random.default_rng(14)
        f, g = random_grid_function(rng), random_grid_function(rng)
        with pytest.raises(DomainError):
            discrete_young_integral(f, g)


class TestTowghi:
    def test_needs_young_exponents(self):
        rng = np.random.default_rng(15)
        f = random_grid_function(rng)
        with pytest.raises(DomainError):
            towghi_check(f, f, 2.0, 2.0)

    def test_zero_integrator_note(self):
        P = GridPartition.uniform(3, 2)
        z = GridFunction(partition=P, values=np.zeros((3, 3)))
        rep = towghi_check(z, z, 1.9, 1.9)
        assert rep["finite"] and rep["bound_kind"] == "degenerate"

    def test_sharp_bound_for_vanishing_f(self):
        rng = np.random.default_rng(16)
        f = random_grid_function(rng)
        vals = f.values.copy()
        vals[0, :] = 0.0
        vals[:, 0] = 0.0
        rep = towghi_check(
            GridFunction(partition=f.partition, values=vals),
            GridFunction(partition=f.partition, values=rng.normal(size=(4, 4))),
            1.9,
            1.9,
        )
        # sharp-variant norm never exceeds the face-augmented one
        assert rep["bound_kind"] == "V_p"

    def test_golden_ratio_regression(self):
        golden = json.loads((DATA / "towghi_golden.json").read_text())
        rep = towghi_fuzz_report(
            seed=golden["seed"],
            cases=golden["cases"],
            points=golden["points"],
            p=golden["p"],
            q=golden["q"],
        )
        assert rep["max_ratio"] == pytest.approx(golden["max_ratio"], rel=1e-12)


class TestComposeAndIteratedA:
    def test_constant_integrand_gives_increments(self):
        rng = np.random.default_rng(17)
        g = random_grid_function(rng)
        one = GridFunction(partition=g.partition, values=np.ones(g.partition.shape))
        h = young_compose_h(one, g)
        for i in (1, 3):
            for j in (2, 3):
                assert h.values[i, j] == pytest.approx(
                    rect_increment(g, {0: (0, i), 1: (0, j)}), abs=1e-12
                )

    def test_zero_f(self):
        rng = np.random.default_rng(18)
        g = random_grid_function(rng)
        zero = GridFunction(partition=g.partition, values=np.zeros(g.partition.shape))
        assert np.all(young_compose_h(zero, g).values == 0.0)

    def test_reproduces_iterated_covariance_recursion(self):
        H, n = 0.4, 32
        ic1 = iterated_cov_Rl(1, (0, 1), n, H)
        P = GridPartition(axes=(ic1.grid, ic1.grid))
        f = GridFunction(partition=P, values=ic1.values)
        g = GridFunction.sample(P, lambda s, t: cov(s, t, H))
        h = young_compose_h(f, g)
        ic2 = iterated_cov_Rl(2, (0, 1), n, H)
        np.testing.assert_allclose(h.values, ic2.values, atol=1e-14)

    def test_single_level_telescoping(self):
        H, grid = 0.45, np.linspace(0, 1, 33)
        s, t = 0.25, 0.625
        vals = iterated_A([np.ones_like(grid)], [psi_path(s, t, H, grid)], grid)
        assert vals[-1] == pytest.approx(cov_rect(((s, t), (0.0, 1.0)), H))

    def test_zero_integrand(self):
        grid = np.linspace(0, 1, 17)
        vals = iterated_A(
            [np.zeros_like(grid), np.ones_like(grid)],
            [psi_path(0, 1, 0.4, grid)] * 2,
            grid,
        )
        assert np.all(vals == 0.0)

    def test_bound_fuzz(self):
        H = 0.4
        grid = np.linspace(0, 1, 65)
        rng = np.random.default_rng(19)
        for _ in range(100):
            r = int(rng.integers(1, 4))
            a_list, h_list, boxes = [], [], []
            for _ in range(r):
                s, t = np.sort(rng.uniform(0, 1, 2))
                a_list.append(rng.uniform(-2, 2) * np.cos(rng.uniform(0, 7) * grid))
                h_list.append(psi_path(s, t, H, grid))
                boxes.append((s, t))
            vals = iterated_A(a_list, h_list, grid)
            assert np.max(np.abs(vals)) <= iterated_A_bound(a_list, boxes, H)


class TestProductAndZeta:
    def test_disjoint_product_rule(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            f = random_grid_function(rng, N=1)
            g = random_grid_function(rng, N=1)
            rep = product_pvar_check(f, g, rng.uniform(1, 2.5))
            assert rep["pass"]

    def test_one_factor_constant(self):
        rng = np.random.default_rng(21)
        f = random_grid_function(rng, N=1)
        one = GridFunction(
            partition=GridPartition.uniform(3, 1), values=np.ones(3)
        )
        rep = product_pvar_check(f, one, 2.0)
        assert rep["lhs"] == pytest.approx(0.0, abs=1e-12)

    def test_shared_form_ratio_finite(self):
        rng = np.random.default_rng(22)
        f = random_grid_function(rng, N=2, points=3)
        g = GridFunction(partition=f.partition, values=rng.normal(size=(3, 3)))
        rep = product_pvar_check(f, g, 1.5, 2.5)
        assert rep["pass"] and np.isfinite(rep["ratio"])
        with pytest.raises(DomainError):
            product_pvar_check(f, g, 1.5, 1.5)

    def test_zeta_bound_holds(self):
        w = ControlFunction(w=lambda s, t: t - s)
        P = GridPartition(axes=(np.linspace(0, 1, 6),) * 2)
        phi = GridFunction.sample(P, lambda u, v: u * v)
        rep = zeta_sum_check(phi, w, 1.9, 1.9, 1.0)
        assert rep["pass"]

    def test_zeta_homogeneity(self):
        w1 = lambda s, t: t - s
        w2 = lambda s, t: 2.0 * (t - s)
        P = GridPartition(axes=(np.linspace(0, 1, 5),) * 2)
        phi = GridFunction.sample(P, lambda u, v: u * v)
        r1 = zeta_sum_check(phi, w1, 1.9, 1.9, 1.0)
        r2 = zeta_sum_check(phi, w2, 1.9, 1.9, 1.0)
        assert r2["bound"] == pytest.approx(r1["bound"] * 2.0 ** r1["theta"])
        assert r2["lhs"] == pytest.approx(r1["lhs"])

    def test_zeta_hypothesis_violation(self):
        w = ControlFunction(w=lambda s, t: t - s)
        P = GridPartition(axes=(np.linspace(0, 1, 5),) * 2)
        phi = GridFunction.sample(P, lambda u, v: 50.0 * u * v)
        with pytest.raises(DomainError):
            zeta_sum_check(phi, w, 1.9, 1.9, 1.0)

    def test_zero_phi(self):
        w = ControlFunction(w=lambda s, t: t - s)
        P = GridPartition(axes=(np.linspace(0, 1, 4),) * 2)
        phi = GridFunction(partition=P, values=np.zeros((4, 4)))
        rep = zeta_sum_check(phi, w, 1.9, 1.9, 0.0)
        assert rep["pass"] and rep["lhs"] == 0.0
