import numpy as np
import pytest

from dpwave.grids import Grid, LINE, PERIODIC, SampledField
from dpwave.operators import detect_kinks
from dpwave.steady import (
    ConvergenceError,
    DivergenceError,
    SingularJacobianError,
    SolveConfig,
    WaveProfile,
    asymptotic_constant,
    bounds_check,
    continue_in_height,
    crest_curvature,
    peakon,
    residual,
    residual_norm,
    solve_newton,
    solve_petviashvili,
    _newton,
)


class TestPeakon:
    def test_crest_value(self, line_grid):
        pk = peakon(2.5, 0.0, line_grid)
        assert pk.phi[line_grid.center_index] == 2.5

    def test_shifted_crest(self, line_grid):
        pk = peakon(1.0, 3.0, line_grid)
        x = line_grid.nodes()
        assert x[np.argmax(pk.phi)] == pytest.approx(3.0, abs=line_grid.spacing)

    def test_residual_near_zero(self, line_peakon):
        assert residual_norm(line_peakon) < 1e-6

    def test_rejects_nonpositive_speed(self, line_grid):
        with pytest.raises(ValueError):
            peakon(-1.0, 0.0, line_grid)


class TestResidual:
    def test_zero_profile_gives_minus_a(self, line_grid):
        p = WaveProfile(line_grid, np.zeros(line_grid.n), 1.0, a=0.25)
        r = residual(p).values
        assert np.max(np.abs(r + 0.25)) < 1e-12

    def test_constant_profile_formula(self):
        # LC = C makes the residual (2c phi0 - 4 phi0^2)/3 - a pointwise
        g = Grid(PERIODIC, 256, 10.0)
        c, phi0, a = 1.0, 0.3, 0.05
        p = WaveProfile(g, np.full(g.n, phi0), c, a)
        expected = (2 * c * phi0 - 4 * phi0 ** 2) / 3 - a
        assert np.max(np.abs(residual(p).values - expected)) < 1e-12

    def test_translation_invariance(self, solved_40):
        rolled = solved_40.with_phi(np.roll(solved_40.phi, 37))
        assert residual_norm(rolled) == pytest.approx(residual_norm(solved_40),
                                                      abs=1e-11)


class TestNewton:
    def test_converged_profile_is_fixed_point(self, solved_40):
        prof, rec = _newton(solved_40,
                            SolveConfig(residual_tol=1e-10, max_iter=5))
        assert rec.iterations == 0
        assert np.array_equal(prof.phi, solved_40.phi)

    def test_pinned_amplitude(self, solved_40):
        assert solved_40.phi[solved_40.grid.center_index] == pytest.approx(0.5,
                                                                           abs=1e-11)
        assert residual_norm(solved_40) <= 1e-12

    def test_even_symmetry(self, solved_40):
        n = solved_40.grid.n
        idx = (n - np.arange(n)) % n
        assert np.max(np.abs(solved_40.phi - solved_40.phi[idx])) == 0.0

    def test_noisy_peakon_recovers(self):
        # the perturbation is scrubbed back to the peaked wave; the crest
        # node keeps an intrinsic offset ~ sqrt(quadrature floor) because
        # the crest equation degenerates quadratically at the peaked limit
        grid = Grid(LINE, 2048, 30.0)
        pk = peakon(1.0, 0.0, grid)
        rng = np.random.default_rng(7)
        noise = 1e-4 * rng.standard_normal(grid.n) * np.exp(
            -np.abs(grid.nodes()))
        noise[grid.center_index] = 0.0
        noisy = pk.with_phi(pk.phi + noise)
        back = solve_newton(noisy, SolveConfig(residual_tol=1e-6, max_iter=60))
        x = np.abs(grid.nodes())
        diff = np.abs(back.phi - pk.phi)
        assert np.max(diff[x > 1.0]) < 5e-6
        assert np.max(diff) < 1e-3

    def test_zero_initial_with_amplitude_fails(self, periodic_40):
        init = WaveProfile(periodic_40, np.zeros(periodic_40.n), 1.0)
        with pytest.raises((ConvergenceError, SingularJacobianError)):
            solve_newton(init, SolveConfig(amplitude_mu=0.5, max_iter=20))

    def test_max_iter_exhaustion_carries_norm(self, periodic_40):
        init = WaveProfile(periodic_40,
                           0.5 * np.exp(-np.abs(periodic_40.nodes())), 1.0)
        with pytest.raises(ConvergenceError) as err:
            solve_newton(init, SolveConfig(amplitude_mu=0.5, residual_tol=1e-30,
                                           max_iter=3))
        assert err.value.residual_norm > 0


class TestPetviashvili:
    def test_converges_and_matches_newton_smooth(self, periodic_8):
        # profile distance between the two methods is bounded by the crest
        # conditioning times the residual tolerance (~40x here)
        x = periodic_8.nodes()
        init = WaveProfile(periodic_8,
                           0.5 * (0.5 * (1 + np.cos(np.pi * x / 4.0))) ** 2, 1.0)
        pv = solve_petviashvili(init, SolveConfig(residual_tol=1e-10,
                                                  max_iter=6000))
        assert residual_norm(pv) <= 1e-10
        nw = solve_newton(WaveProfile(periodic_8, pv.phi, 1.0),
                          SolveConfig(amplitude_mu=float(pv.phi.max()),
                                      residual_tol=1e-13, max_iter=50))
        assert nw.c == pytest.approx(1.0, abs=1e-7)
        assert np.max(np.abs(pv.phi - nw.phi)) < 1e-8

    def test_converges_and_matches_newton_near_peaked(self, periodic_40):
        # crest conditioning is much worse on the long-period family
        init = WaveProfile(periodic_40,
                           0.9 * np.exp(-np.abs(periodic_40.nodes())), 1.0)
        pv = solve_petviashvili(init, SolveConfig(residual_tol=1e-8,
                                                  max_iter=4000))
        assert residual_norm(pv) <= 1e-8
        nw = solve_newton(init, SolveConfig(residual_tol=1e-12, max_iter=100))
        assert np.max(np.abs(pv.phi - nw.phi)) < 1e-5

    def test_negative_hump_diverges(self, periodic_40):
        init = WaveProfile(periodic_40,
                           -0.5 * np.exp(-np.abs(periodic_40.nodes())), 1.0)
        with pytest.raises((DivergenceError, ConvergenceError)):
            solve_petviashvili(init, SolveConfig(max_iter=200))

    def test_stabilization_beats_plain_iteration(self, periodic_40):
        # gamma = 2 keeps the amplitude mode in check and finds the wave;
        # the unstabilized map contracts the same input to the useless
        # trivial solution
        grid = periodic_40
        init = 0.9 * np.exp(-np.abs(grid.nodes()))
        pv = solve_petviashvili(WaveProfile(grid, init, 1.0),
                                SolveConfig(residual_tol=1e-8, max_iter=4000))
        from dpwave.operators import apply_L
        phi = init.copy()
        for _ in range(300):
            phi = (3.0 / 2.0) * (apply_L(SampledField(grid, phi * phi)).values
                                 + phi * phi / 3.0)
            if not np.all(np.isfinite(phi)) or np.max(np.abs(phi)) > 1e6:
                break
        assert residual_norm(pv) <= 1e-8
        assert np.max(np.abs(pv.phi)) > 0.5
        collapsed = np.all(np.isfinite(phi)) and np.max(np.abs(phi)) < 1e-3
        blown_up = not np.all(np.isfinite(phi)) or np.max(np.abs(phi)) > 1e3
        assert collapsed or blown_up


class TestContinuation:
    def test_full_path(self, periodic_40):
        path = continue_in_height(periodic_40, 1.0, 0.1, 0.9, 9)
        assert len(path.entries) == 9
        assert not path.truncated
        mus = path.heights
        assert np.all(np.diff(mus) > 0)
        curv = [e.crest_curvature for e in path.entries]
        assert np.all(np.diff(curv) > 0)
        sups = [e.profile.phi.max() for e in path.entries]
        assert np.all(np.diff(sups) > 0)
        for e in path.entries:
            assert e.record.residual_norm <= 1e-10
            assert bounds_check(e.profile).admitted
            assert e.profile.phi.max() <= e.profile.c + 1e-9

    def test_degenerate_single_entry(self, periodic_40):
        path = continue_in_height(periodic_40, 1.0, 0.3, 0.3, 5)
        assert len(path.entries) == 1

    def test_peaking_guard(self, periodic_40):
        with pytest.raises(ValueError):
            continue_in_height(periodic_40, 1.0, 0.1, 0.9999, 3)

    def test_bad_range(self, periodic_40):
        with pytest.raises(ValueError):
            continue_in_height(periodic_40, 1.0, 0.5, 0.1, 3)


class TestAsymptoticConstant:
    def test_peakon_vanishes(self, line_peakon):
        assert abs(asymptotic_constant(line_peakon)) < 1e-6

    def test_zero_profile(self, line_grid):
        p = WaveProfile(line_grid, np.zeros(line_grid.n), 1.0)
        assert asymptotic_constant(p) == 0.0

    def test_requires_line_grid(self, solved_40):
        with pytest.raises(ValueError):
            asymptotic_constant(solved_40)

    def test_recovers_artificial_offset(self, line_grid):
        # a hump riding on the pedestal of the a0-equation: the tails sit on
        # the constant branch, so the estimate must land on a0, not zero
        a0 = 0.01
        beta = (1 - np.sqrt(1 - 12 * a0)) / 4   # pedestal root of the
        # constant-solution equation 4 b^2 - 2 c b + 3 a = 0 at c = 1
        x = line_grid.nodes()
        p = WaveProfile(line_grid, 0.5 * np.exp(-np.abs(x)) + beta, 1.0, a0)
        est = asymptotic_constant(p)
        assert est == pytest.approx(a0, rel=0.05)
        assert abs(est) > 100 * abs(asymptotic_constant(
            peakon(1.0, 0.0, line_grid)))

    def test_converged_line_profile(self, solved_line):
        assert abs(asymptotic_constant(solved_line)) < 1e-6


class TestBounds:
    def test_peakon_passes(self, line_peakon):
        rep = bounds_check(line_peakon)
        assert rep.admitted
        assert rep.sup == 1.0
        assert rep.argmax == 0.0

    def test_oversized_profile_fails_2c(self, line_peakon):
        tall = line_peakon.with_phi(3.0 * line_peakon.phi)
        rep = bounds_check(tall)
        assert not rep.below_2c

    def test_zero_profile_fails_positivity(self, line_grid):
        rep = bounds_check(WaveProfile(line_grid, np.zeros(line_grid.n), 1.0))
        assert not rep.positive

    def test_negative_dip_fails(self, line_grid):
        x = line_grid.nodes()
        v = np.exp(-np.abs(x)) - 0.2 * np.exp(-((x - 2) / 0.5) ** 2)
        rep = bounds_check(WaveProfile(line_grid, v, 1.0))
        assert not rep.positive


class TestLineFamilyCollapse:
    """Truncated-line solves land on the peaked family: the crest/speed
    ratio exceeds one by a discretization-level margin that shrinks under
    refinement, and the attainable residual is floored by the degenerate
    crest equation."""

    def test_crest_exceeds_speed_at_discretization_level(self, solved_line):
        # the collapse signature: the crest/speed bound fails by a margin
        # that is pure discretization (the continuum peaked wave has ratio 1)
        ratio = solved_line.phi.max() / solved_line.c
        assert 1.0 < ratio < 1.001
        rep = bounds_check(solved_line)
        assert rep.positive and rep.below_2c
        assert not rep.below_c

    def test_profile_shape_near_peakon(self, solved_line):
        scale = solved_line.phi.max()
        pk = scale * np.exp(-np.abs(solved_line.grid.nodes()))
        assert np.max(np.abs(solved_line.phi - pk)) < 5e-3 * scale


def test_crest_curvature_peakon_scale(line_grid):
    # second difference of c*exp(-|x|) at the crest ~ 2c/h for the kink
    pk = peakon(1.0, 0.0, line_grid)
    h = line_grid.spacing
    expected = 2.0 * (1.0 - np.exp(-h)) / h ** 2
    assert crest_curvature(pk) == pytest.approx(expected, rel=1e-10)


def test_solver_pattern_stability(solved_line):
    # the converged profile's own slope-break pattern reproduces its residual
    pat = detect_kinks(solved_line.phi ** 2, solved_line.grid.spacing)
    assert residual_norm(solved_line, kinks=pat) <= 1e-8
