import numpy as np
import pytest

from dpwave.decay import (
    ConvEstimateCase,
    conv_estimate_case,
    conv_estimate_check,
    conv_estimate_lhs,
    default_sweep_parameters,
    fit_tail_rate,
    run_sweep,
)
from dpwave.grids import Grid, LINE
from dpwave.steady import WaveProfile


class TestTailRate:
    def test_peakon_rate_exact(self, line_peakon):
        rep = fit_tail_rate(line_peakon, window=(5.0, 20.0))
        assert rep.fitted_rate == pytest.approx(1.0, abs=1e-6)
        assert rep.weighted_sup == pytest.approx(1.0, abs=1e-6)
        assert rep.fit_r2 > 1 - 1e-12
        assert rep.weighted_variation < 1e-10

    def test_double_rate_field(self, line_grid):
        p = WaveProfile(line_grid, np.exp(-2 * np.abs(line_grid.nodes())), 1.0)
        rep = fit_tail_rate(p, window=(3.0, 10.0))
        assert rep.fitted_rate == pytest.approx(2.0, abs=1e-6)

    def test_long_period_profile_kernel_rate(self, solved_80):
        rep = fit_tail_rate(solved_80, window=(8.0, 20.0))
        assert rep.fitted_rate == pytest.approx(1.0, rel=0.05)
        assert np.isfinite(rep.weighted_sup)
        assert rep.weighted_variation < 0.25

    def test_default_window(self, line_peakon):
        rep = fit_tail_rate(line_peakon)
        lo, hi = rep.fit_window
        assert lo == pytest.approx(0.75 * 30.0)
        assert hi < 30.0
        assert rep.fitted_rate == pytest.approx(1.0, abs=1e-4)

    def test_rejects_nonpositive_tail(self, line_grid):
        v = np.exp(-np.abs(line_grid.nodes())) - 1e-3
        p = WaveProfile(line_grid, np.maximum(v, 0.0) + 0.0, 1.0)
        with pytest.raises(ValueError):
            fit_tail_rate(p, window=(10.0, 25.0))


class TestConvEstimateLhs:
    def test_frozen_oracle_value(self):
        # brute-force Riemann value frozen before the build; also equal to
        # the closed form 3 - 4*ln 2 obtainable by substitution
        lhs = conv_estimate_lhs(1.0, 2.0, 1.0, 0.0)
        assert lhs == pytest.approx(0.22741127776021886, abs=1e-6)
        assert lhs == pytest.approx(3.0 - 4.0 * np.log(2.0), abs=1e-10)

    @pytest.mark.parametrize("params,frozen", [
        ((0.5, 1.0, 1.0, 2.0), 0.633086316920068),
        ((1.0, 2.0, 0.1, 5.0), 0.6691032525439018),
        ((3.6, 4.0, 10.0, -1.0), 2.885236319082393e-05),
    ])
    def test_frozen_riemann_anchors(self, params, frozen):
        assert conv_estimate_lhs(*params) == pytest.approx(frozen, rel=1e-6)

    def test_symmetric_in_y(self):
        for (l, m, s) in [(0.5, 1.0, 1.0), (1.8, 2.0, 0.3)]:
            a = conv_estimate_lhs(l, m, s, 3.3)
            b = conv_estimate_lhs(l, m, s, -3.3)
            assert a == pytest.approx(b, rel=1e-9)

    def test_large_y_envelope_stabilizes(self):
        l, m, s = 1.0, 2.0, 1.0
        scaled = []
        for y in (5.0, 10.0, 20.0):
            lhs = conv_estimate_lhs(l, m, s, y)
            scaled.append(lhs * (1 + s * np.exp(y)) ** m * np.exp(-l * y))
        # monotone stabilization toward a finite limit
        assert abs(scaled[2] - scaled[1]) < abs(scaled[1] - scaled[0])
        assert abs(scaled[2] - scaled[1]) < 1e-3 * scaled[2]

    def test_hypothesis_violation(self):
        with pytest.raises(ValueError):
            conv_estimate_lhs(2.0, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            conv_estimate_lhs(3.0, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            conv_estimate_lhs(1.0, 2.0, -1.0, 0.0)


class TestConvEstimateCheck:
    def test_case_constants(self):
        case = ConvEstimateCase(1.0, 2.0, 1.0, 0.0, lhs=0.227)
        assert case.B_paper == 1.0
        assert case.B_safe == pytest.approx(1.0 + 2.0 + 1.0 / 3.0)

    def test_case_validation(self):
        with pytest.raises(ValueError):
            ConvEstimateCase(2.0, 1.0, 1.0, 0.0, lhs=1.0)

    def test_degenerate_near_hypothesis(self):
        case = conv_estimate_case(0.99 * 2.0, 2.0, 1.0, 0.0)
        assert case.B_paper == pytest.approx(1.0 / (2.0 - 1.98))
        v = conv_estimate_check(case)
        assert v.ok_safe

    def test_full_sweep_safe_bound(self):
        verdicts = run_sweep()
        assert len(verdicts) == 189
        assert all(v.ok_safe for v in verdicts)

    def test_sigma_blowup_ratio_bounded(self):
        l, m, y = 0.5, 1.0, 1.0
        prev = None
        for sigma in (1e2, 1e4, 1e6):
            v = conv_estimate_check(conv_estimate_case(l, m, sigma, y))
            assert v.ok_safe
            assert v.case.lhs < (prev if prev is not None else np.inf)
            prev = v.case.lhs
        assert prev < 1e-5  # both sides collapse as sigma grows


def test_sweep_parameter_grid_shape():
    params = list(default_sweep_parameters())
    assert len(params) == 3 * 3 * 3 * 7
    for l, m, sigma, y in params:
        assert 0 < l < m
