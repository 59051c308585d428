import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrwitness.photon import (
    AngularProfile,
    ConsistencyError,
    PhaseFunction,
    PixelGrid,
    SlmProfileConfig,
    WindowTruncationWarning,
    build_total_state,
    epsilon,
    epsilon_curve,
    gaussian_profile,
    load_table,
    random_odd_phase,
    reduced_state,
    reduced_state_from_epsilon,
    reduced_state_of_total,
    save_table,
    slm_phase_profiles,
    table_on_grid,
    tabulated_profile,
    visibility,
)
from corrwitness.qstate import InvariantError, partial_trace, reduced_from_branches

from conftest import default_profile

special = pytest.importorskip("scipy.special")


def fourier(profile, a):
    """Independent oracle for G(a) = sum_m w_m e^{i a m}."""
    m = profile.grid.offsets
    return np.sum(profile.weights * np.exp(1j * a * m))


class TestGrid:
    def test_resolution_exact(self, grid):
        assert grid.resolution == 100e-6 / 0.330
        assert grid.size == 33
        assert list(grid.offsets[[0, 16, 32]]) == [-16, 0, 16]

    def test_default_window_covers_acceptance(self, grid):
        assert grid.size >= 10e-3 / grid.resolution

    def test_from_acceptance(self):
        assert PixelGrid.from_acceptance(10.0).half_window_N == 16


class TestGaussianProfile:
    def test_normalized_symmetric_peaked(self, profile):
        w = profile.weights
        assert abs(w.sum() - 1) <= 1e-12
        assert np.array_equal(w, w[::-1])
        assert np.argmax(w) == 16

    def test_fwhm_in_pixels(self, grid):
        # oracle: 6 mrad / (0.30303 mrad/px) = 19.8 px; here measured on the weights
        assert 6e-3 / grid.resolution == pytest.approx(19.8, abs=0.01)
        p = default_profile(grid=PixelGrid(half_window_N=64))
        m, w = p.grid.offsets, p.weights / p.weights.max()
        # half maximum sits at |m| = 9.9, between pixel samples 9 and 10
        assert w[m == 9][0] > 0.5 > w[m == 10][0]

    def test_amplitude_width_is_wider_in_weights(self):
        a = default_profile(width_of="amplitude")
        i = default_profile()
        assert a.pixel_std() < i.pixel_std()
        assert a.pixel_std() * math.sqrt(2) == pytest.approx(default_profile(grid=PixelGrid(half_window_N=64)).pixel_std(), rel=0.1)

    def test_uniform_limit(self, grid):
        with pytest.warns(WindowTruncationWarning):
            p = gaussian_profile(grid, math.inf)
        assert np.allclose(p.weights, 1 / 33, atol=1e-15)

    def test_window_warning_and_strict(self, grid):
        with pytest.warns(WindowTruncationWarning):
            gaussian_profile(grid, 6.0)
        with pytest.raises(ValueError, match="3 x FWHM"):
            gaussian_profile(grid, 6.0, strict=True)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            gaussian_profile(PixelGrid(half_window_N=64), 6.0, strict=True)

    def test_rejects_bad_fwhm(self, grid):
        with pytest.raises(ValueError):
            gaussian_profile(grid, 0.0)

    def test_profile_invariants(self, grid):
        with pytest.raises(InvariantError, match="normalized"):
            AngularProfile(grid, np.ones(33))
        with pytest.raises(InvariantError, match="non-negative"):
            AngularProfile(grid, np.r_[-1.0, np.full(32, 2 / 32)])


class TestSlmProfiles:
    def test_center_pixel(self):
        phi1, _ = slm_phase_profiles(SlmProfileConfig(n1=5), 5, 0.0, PhaseFunction.zero())
        assert phi1 == 0.0

    def test_arithmetic(self):
        _, phi2 = slm_phase_profiles(SlmProfileConfig(a_opt=0.1, n2=100), 110, 0.2, PhaseFunction.zero())
        assert phi2 == pytest.approx(3.0, abs=1e-15)

    def test_default_slope(self):
        assert SlmProfileConfig().a_opt == 0.1
        assert SlmProfileConfig().b == 0.0


class TestPhaseFunction:
    @pytest.mark.parametrize("f", [PhaseFunction.zero(), PhaseFunction.linear(0.1), PhaseFunction.sinusoidal(-0.6)])
    def test_builtins_are_odd(self, f):
        m = np.arange(-16, 17)
        assert np.allclose(f(m), -f(-m), atol=0)
        assert f.is_odd

    def test_tabulated_odd_flag(self, rng, grid):
        assert random_odd_phase(grid, rng).is_odd
        assert not PhaseFunction.tabulated(np.arange(33.0)).is_odd

    def test_tabulated_size_mismatch(self, grid):
        with pytest.raises(ValueError, match="33 pixels"):
            epsilon(default_profile(), PhaseFunction.tabulated(np.zeros(5)), 0.0)


class TestTotalState:
    def test_norm_and_branches(self, grid, profile):
        psi = build_total_state(grid, profile, PhaseFunction.zero(), 0.0)
        A = psi.amplitudes
        assert np.allclose(np.abs(A[0]), np.abs(A[1]), atol=0)
        assert np.all(np.angle(A[1]) == 0)
        assert np.sum(np.abs(A) ** 2) == pytest.approx(1, abs=1e-12)

    def test_grid_mismatch(self, profile):
        with pytest.raises(ValueError, match="different grid"):
            build_total_state(PixelGrid(half_window_N=8), profile, PhaseFunction.zero(), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), a=st.floats(-1, 1), kind=st.sampled_from(["zero", "linear", "sinusoidal", "random"]))
    def test_oracle_equivalence(self, seed, a, kind):
        grid = PixelGrid()
        profile = default_profile(grid=grid)
        rng = np.random.default_rng(seed)
        f = random_odd_phase(grid, rng) if kind == "random" else PhaseFunction(kind, rng.uniform(-1, 1))
        psi = build_total_state(grid, profile, f, a)
        via_trace = partial_trace(psi.vector().amplitudes, [4, grid.size], [0])
        closed = reduced_state(profile, f, a, 1.0).entries
        assert np.max(np.abs(via_trace - closed)) <= 1e-12
        assert np.max(np.abs(reduced_state_of_total(psi).entries - closed)) <= 1e-12

    def test_global_phase_on_both_branches_is_irrelevant(self, grid, profile, rng):
        f = random_odd_phase(grid, rng)
        psi = build_total_state(grid, profile, f, 0.3)
        phase = np.exp(1j * 1.234)
        base = reduced_from_branches(psi.amplitudes[0], psi.amplitudes[1]).entries
        rotated = reduced_from_branches(phase * psi.amplitudes[0], phase * psi.amplitudes[1]).entries
        assert np.max(np.abs(base - rotated)) <= 1e-12

    def test_vv_only_phase_rotates_coherence(self, grid, profile):
        # a VV-only phase is a local polarization rotation: it is not invisible
        psi = build_total_state(grid, profile, PhaseFunction.zero(), 0.3)
        phase = np.exp(1j * 0.7)
        base = reduced_from_branches(psi.amplitudes[0], psi.amplitudes[1]).entries
        rotated = reduced_from_branches(psi.amplitudes[0], phase * psi.amplitudes[1]).entries
        assert rotated[3, 0] == pytest.approx(phase * base[3, 0], abs=1e-15)
        assert np.allclose(np.abs(rotated), np.abs(base), atol=1e-15)


class TestEpsilon:
    def test_calibrated_baseline(self, profile):
        assert epsilon(profile, PhaseFunction.zero(), 0.0, 0.914) == pytest.approx(0.914, abs=1e-12)

    def test_matches_direct_sum(self, profile, rng):
        f = random_odd_phase(profile.grid, rng)
        m = profile.grid.offsets
        for a in (-0.7, 0.0, 0.33):
            direct = 0.8 * np.sum(profile.weights * np.exp(1j * (a * m + f(m))))
            assert epsilon(profile, f, a, 0.8) == pytest.approx(direct, abs=1e-14)

    def test_gaussian_closed_form(self, wide_profile):
        s = wide_profile.pixel_std()
        assert wide_profile.grid.half_window_N >= 6 * s
        a = np.linspace(-1, 1, 41)
        eps = epsilon_curve(wide_profile, PhaseFunction.zero(), a)
        assert np.max(np.abs(eps - np.exp(-a ** 2 * s ** 2 / 2))) <= 1e-6

    @pytest.mark.parametrize("lam", [-0.6, 0.25])
    def test_jacobi_anger(self, profile, lam):
        a = np.linspace(0, 1, 21)
        eps = epsilon_curve(profile, PhaseFunction.sinusoidal(lam), a)
        ks = np.arange(-30, 31)
        oracle = [sum(special.jv(k, 1.0) * fourier(profile, x + k * lam) for k in ks) for x in a]
        assert np.max(np.abs(eps - np.array(oracle))) <= 1e-12

    def test_linear_is_time_shift(self, profile):
        a = np.linspace(0, 1, 101)
        lin = epsilon_curve(profile, PhaseFunction.linear(0.1), a)
        shifted = epsilon_curve(profile, PhaseFunction.zero(), a + 0.1)
        assert np.array_equal(lin, shifted)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), V0=st.floats(0.01, 1.0))
    def test_real_and_bounded(self, seed, V0):
        rng = np.random.default_rng(seed)
        grid = PixelGrid()
        prof = tabulated_profile(grid, _sym(rng.random(33)))
        a = rng.uniform(-1, 1, 10)
        for f in (PhaseFunction.sinusoidal(rng.uniform(-1, 1)), random_odd_phase(grid, rng)):
            eps = epsilon_curve(prof, f, a, V0)
            assert np.max(np.abs(eps.imag)) <= 1e-12
            assert np.all(np.abs(eps) <= V0 + 1e-12)

    @pytest.mark.parametrize("f", ["zero", "linear", "sinusoidal"])
    def test_discretization(self, f):
        """Halving the pixel at fixed angular window and FWHM moves eps by <= 1e-4.

        Per-pixel slopes and phase frequencies are halved on the fine grid so
        both grids describe the same angular phase.
        """
        coarse = PixelGrid(100e-6, 0.330, 64)
        fine = PixelGrid(50e-6, 0.330, 128)
        pc, pf = default_profile(grid=coarse), default_profile(grid=fine)
        param = {"zero": 0.0, "linear": 0.1, "sinusoidal": -0.6}[f]
        a = np.linspace(-1, 1, 81)
        ec = epsilon_curve(pc, PhaseFunction(f, param), a)
        ef = epsilon_curve(pf, PhaseFunction(f, param / 2), a / 2)
        assert np.max(np.abs(ec - ef)) <= 1e-4


def _sym(w):
    return 0.5 * (w + w[::-1])


class TestReducedState:
    def test_pure_and_mixed_limits(self):
        assert reduced_state_from_epsilon(1.0).purity() == pytest.approx(1.0, abs=1e-15)
        assert reduced_state_from_epsilon(0.0).purity() == pytest.approx(0.5, abs=1e-15)

    def test_eigenvalues(self):
        ev = np.sort(reduced_state_from_epsilon(0.914).eigenvalues())[::-1]
        assert np.allclose(ev, [0.957, 0.043, 0, 0], atol=1e-12)

    def test_inconsistent_epsilon(self):
        with pytest.raises(ConsistencyError):
            reduced_state_from_epsilon(1.01)

    def test_visibility(self):
        assert visibility(0.914) == 0.914
        assert visibility(0.3j) == 0.0

    def test_jacobi_anger_at_zero(self, profile):
        eps = epsilon(profile, PhaseFunction.sinusoidal(-0.6), 0.0)
        oracle = sum(special.jv(k, 1.0) * fourier(profile, -0.6 * k) for k in range(-30, 31))
        assert visibility(eps) == pytest.approx(oracle.real, abs=1e-12)


class TestTables:
    def test_round_trip(self, tmp_path, grid):
        path = tmp_path / "g.txt"
        vals = np.exp(-grid.offsets ** 2 / 50.0)
        save_table(path, grid.offsets, vals, header="profile")
        offsets, values = load_table(path)
        assert np.array_equal(offsets, grid.offsets)
        assert np.array_equal(table_on_grid(grid, offsets, values), vals)

    def test_missing_offsets(self, grid):
        with pytest.raises(ValueError, match="offset"):
            table_on_grid(grid, [0, 1], [1.0, 2.0])
        filled = table_on_grid(grid, [0], [1.0], fill=0.0)
        assert filled.sum() == 1.0

    def test_bad_columns(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# three columns\n0 1 2\n1 1 2\n")
        with pytest.raises(ValueError, match="two columns"):
            load_table(path)
