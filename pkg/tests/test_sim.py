"""Tests for the pseudo-spectral nonlinear simulation."""

import numpy as np
import pytest

from shearmhd import sim
from shearmhd.linear import ModeIndex, PhysParams, solve_mode
from shearmhd.spectral import GridSpec, forward_transform, l2_norm, sobolev_norm
from shearmhd.weights import WeightParams

PARAMS = PhysParams(nu=1e-2, kappa=1e-3, alpha=2.0)
WP = WeightParams(N=5, alpha=2.0, nu=1e-2, kappa=1e-3)


def small_grid():
    return GridSpec(nx=16, ny=16, Ly=4 * np.pi)


def random_state(grid, eps=1e-2, eps_tilde=2e-2, seed=0):
    return sim.random_divfree_state(grid, PARAMS, eps, eps_tilde, N=5, rng=seed)


class TestDissipationFactor:
    def test_antiderivative_matches_symbol(self):
        # d phi / dt = k^2 + (xi - k t)^2, checked by central differences
        grid = small_grid()
        t, h = 2.3, 1e-6
        deriv = (sim.diss_antiderivative(grid, t + h) - sim.diss_antiderivative(grid, t - h)) / (2 * h)
        K, XI = grid.kk, grid.xixi
        exact = K**2 + (XI - K * t) ** 2
        assert np.allclose(deriv, exact, rtol=1e-7, atol=1e-6)

    def test_zero_at_origin_mode(self):
        grid = small_grid()
        assert sim.diss_antiderivative(grid, 10.0)[0, 0] == 0.0


class TestInitialData:
    def test_amplitudes(self):
        st = random_state(small_grid(), eps=1e-3, eps_tilde=5e-3)
        hn_neq, hn_eq = sim.hn_norms(st, 5)
        assert hn_neq == pytest.approx(1e-3, rel=1e-10)
        assert hn_eq == pytest.approx(5e-3, rel=1e-10)

    def test_divergence_free(self):
        st = random_state(small_grid())
        assert sim.incompressibility_defect(st) < 1e-14

    def test_x_average_is_horizontal(self):
        st = random_state(small_grid())
        assert np.max(np.abs(st.v2[0, :])) < 1e-16
        assert np.max(np.abs(st.b2[0, :])) < 1e-16

    def test_real_fields(self):
        st = random_state(small_grid())
        for c in st.fields():
            phys = np.fft.ifft2(c) * c.size
            assert np.max(np.abs(phys.imag)) < 1e-12

    def test_seed_reproducible(self):
        a = random_state(small_grid(), seed=7)
        b = random_state(small_grid(), seed=7)
        assert all(np.array_equal(x, y) for x, y in zip(a.fields(), b.fields()))


class TestPVars:
    def test_norm_identity_on_fluctuation(self):
        # || p1 || = || v || on k != 0 for divergence-free v
        st = random_state(small_grid(), eps=1e-2, eps_tilde=0.0)
        pv = sim.compute_pvars(st)
        knz = st.grid.kk != 0
        scale = st.grid.Lx * st.grid.Ly
        v_norm = np.sqrt(scale * np.sum(
            (np.abs(st.v1) ** 2 + np.abs(st.v2) ** 2)[np.broadcast_to(knz, st.v1.shape)]
        ))
        p_norm = np.sqrt(scale * np.sum(np.abs(pv.p1.coeffs[np.broadcast_to(knz, st.v1.shape)]) ** 2))
        assert p_norm == pytest.approx(v_norm, rel=1e-12)

    def test_x_average_passthrough(self):
        st = random_state(small_grid(), eps=0.0, eps_tilde=1e-2)
        pv = sim.compute_pvars(st)
        assert np.allclose(pv.p1.coeffs[0, :], st.v1[0, :])
        assert np.allclose(pv.p2.coeffs[0, :], st.b1[0, :])


class TestEnergy:
    def test_sandwich_bounds(self):
        # (1 - 1/(2a)) ||Ap||^2 <= E <= (1 + 1/(2a)) ||Ap||^2
        st = random_state(small_grid(), eps=1e-2, eps_tilde=1e-2)
        grid = st.grid
        pv = sim.compute_pvars(st)
        K = np.broadcast_to(grid.kk, (grid.nx, grid.ny))
        XI = np.broadcast_to(grid.xixi, (grid.nx, grid.ny))
        from shearmhd.weights import eval_A

        A = eval_A(st.t, K, XI, WP)
        knz = K != 0
        scale = grid.Lx * grid.Ly
        ap2 = scale * float(
            np.sum((A[knz] * np.abs(pv.p1.coeffs[knz])) ** 2)
            + np.sum((A[knz] * np.abs(pv.p2.coeffs[knz])) ** 2)
        )
        E = sim.compute_energy(st, WP)
        assert (1 - 0.25) * ap2 - 1e-12 <= E <= (1 + 0.25) * ap2 + 1e-12

    def test_zero_state(self):
        grid = small_grid()
        z = np.zeros((16, 16), dtype=complex)
        st = sim.State(grid, PARAMS, 0.0, z, z.copy(), z.copy(), z.copy())
        assert sim.compute_energy(st, WP) == 0.0


class TestFluxIdentity:
    def test_vanishes_on_random_state(self):
        st = random_state(GridSpec(nx=32, ny=32, Ly=4 * np.pi), eps=0.5, eps_tilde=0.5)
        flux = sim.nonlinear_flux(st)
        hn, hq = sim.hn_norms(st, 5)
        scale = (hn + hq) ** 3
        assert abs(flux) <= 1e-12 * scale


class TestStep:
    def test_zero_dt_identity(self):
        st = random_state(small_grid())
        out = sim.step(st, 0.0)
        assert all(np.array_equal(a, b) for a, b in zip(st.fields(), out.fields()))

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError):
            sim.step(random_state(small_grid()), -0.1)

    def test_preserves_divergence(self):
        st = random_state(small_grid(), eps=5e-2, eps_tilde=5e-2)
        for _ in range(5):
            st = sim.step(st, 0.02)
        assert sim.incompressibility_defect(st) < 1e-13

    def test_pure_dissipation_exact(self):
        # with only the k = 0 x-average magnetic mode... use linear_only and a
        # single y mode of b1 at k=0: the x-average evolves as b1' = kappa dyy b1
        # plus the lift b2 = 0, so decay is exactly exp(-kappa xi^2 t)
        grid = small_grid()
        z = np.zeros((16, 16), dtype=complex)
        b1 = z.copy()
        b1[0, 1] = 1.0
        b1[0, -1] = 1.0
        st = sim.State(grid, PARAMS, 0.0, z.copy(), z.copy(), b1, z.copy())
        out = sim.step(st, 0.5, linear_only=True)
        xi1 = 2 * np.pi / grid.Ly
        expect = np.exp(-PARAMS.kappa * xi1**2 * 0.5)
        assert abs(out.b1[0, 1]) == pytest.approx(expect, rel=1e-12)

    def test_fourth_order_in_time(self):
        st = random_state(small_grid(), eps=0.3, eps_tilde=0.3)

        def advance(dt, n):
            s = st
            for _ in range(n):
                s = sim.step(s, dt)
            return s

        ref = advance(0.0025, 64)
        e1 = sum(np.linalg.norm(a - b) for a, b in zip(advance(0.04, 4).fields(), ref.fields()))
        e2 = sum(np.linalg.norm(a - b) for a, b in zip(advance(0.02, 8).fields(), ref.fields()))
        order = np.log2(e1 / e2)
        assert order > 3.5, f"observed order {order}"

    def test_single_mode_matches_linear_ode(self):
        grid = small_grid()
        params = PhysParams(nu=5e-3, kappa=1e-3, alpha=2.0)
        st = sim.single_mode_state(grid, params, k=1, xi_index=0, amplitude=1e-8)
        for _ in range(200):
            st = sim.step(st, 0.05)
        pv = sim.compute_pvars(st)
        amp = np.sqrt(np.abs(pv.p1.coeffs[1, 0]) ** 2 + np.abs(pv.p2.coeffs[1, 0]) ** 2)
        r = solve_mode(ModeIndex(k=1, xi=0.0), params, (1.0, 0.0), 10.0,
                       tol=1e-12, keep_trace=True)
        expect = 1e-8 * r.trace_abs[-1]
        assert amp == pytest.approx(expect, rel=1e-6)


class TestSimulateDriver:
    def test_records_and_monotone_time(self):
        st = random_state(small_grid(), eps=1e-3, eps_tilde=1e-3)
        recs = sim.simulate(st, 2.0, WP, sample_dt=0.5, dt_max=0.05)
        assert recs[0].t == 0.0
        assert recs[-1].t == pytest.approx(2.0, abs=1e-9)
        ts = [r.t for r in recs]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert all(np.isfinite(r.E_main) for r in recs)
        assert recs[-1].ED_v_cum >= 0

    def test_growth_floor(self):
        st = random_state(small_grid(), eps=1e-3, eps_tilde=1e-3)
        recs = sim.simulate(st, 1.0, WP, sample_dt=0.5, dt_max=0.05)
        assert all(r.growth_L >= 1.0 for r in recs)

    def test_overflow_guard(self):
        # energy stacked on the outermost retained band must trip the guard
        grid = small_grid()
        z = np.zeros((16, 16), dtype=complex)
        v1 = z.copy()
        v1[5, 0] = 1.0
        v1[-5, 0] = 1.0
        st = sim.State(grid, PARAMS, 0.0, v1, z.copy(), z.copy(), z.copy())
        with pytest.raises(sim.ResolutionOverflow):
            sim.simulate(st, 0.5, WP, sample_dt=0.1, dt_max=0.05)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        st = random_state(small_grid(), eps=1e-2, eps_tilde=1e-2)
        st = sim.step(st, 0.03)
        path = str(tmp_path / "run.chk")
        sim.save_checkpoint(st, path)
        back = sim.load_checkpoint(path)
        assert back.t == st.t
        assert back.params == st.params
        assert back.grid == st.grid
        assert all(np.array_equal(a, b) for a, b in zip(st.fields(), back.fields()))

    def test_sidecar_written(self, tmp_path):
        st = random_state(small_grid())
        path = str(tmp_path / "run.chk")
        sim.save_checkpoint(st, path)
        meta = (tmp_path / "run.chk.meta").read_text()
        assert "format = shearmhd-checkpoint-v1" in meta
        assert "nu = 0.01" in meta

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.chk"
        path.write_bytes(b"NOTACHKP" + b"\x00" * 64)
        with pytest.raises(ValueError):
            sim.load_checkpoint(str(path))
