import math
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fisherlens.fisher import f_tot, f_unentangled
from fisherlens.model import AnalyzerBasis, SourceModel, overlap_delta
from fisherlens.oracle import (
    FiniteDifferenceWarning,
    Grid,
    GridError,
    amplitude_psf,
    classical_fi_position,
    f_tot_numeric,
    f_unentangled_numeric,
    f_weights,
    fi_branch_numeric,
    grid_state,
)

PI = math.pi


def balanced_weight_info(alpha, s, sigma=1.0):
    # r = 1, phi = 0: n1 = (1 - sin 2a delta)/2, so dn1/ds = sin 2a delta s / (8 sigma^2)
    delta = overlap_delta(s, sigma)
    n1 = 0.5 * (1 - math.sin(2 * alpha) * delta)
    dn1 = math.sin(2 * alpha) * delta * s / (8 * sigma ** 2)
    return dn1 ** 2 * (1 / n1 + 1 / (1 - n1))


class TestGrid:
    def test_default_layout(self):
        g = Grid.default(2.0, 1.0)
        assert (g.x_lo, g.x_hi, g.n) == (-10.0, 10.0, 4001)
        assert g.x[0] == -10.0 and g.x[-1] == 10.0
        assert g.dx == pytest.approx(20.0 / 4000)

    @pytest.mark.parametrize("n", [100, 4000, 51])
    def test_point_count(self, n):
        with pytest.raises(GridError):
            Grid(-1.0, 1.0, n)

    def test_empty(self):
        with pytest.raises(GridError):
            Grid(1.0, 1.0, 101)

    def test_too_coarse(self):
        with pytest.raises(GridError, match="not converged"):
            Grid.default(1.0, 1.0, 201).check(1.0, 1.0)

    def test_too_narrow(self):
        with pytest.raises(GridError):
            Grid(-3.0, 3.0, 4001).check(1.0, 1.0)


class TestGridState:
    def test_single_source(self):
        st = grid_state(SourceModel(r=0.0), AnalyzerBasis(0.0), 1.0)
        np.testing.assert_allclose(st.psi1, amplitude_psf(st.grid.x, 0.5, 1.0), atol=1e-15)
        assert st.n1 == pytest.approx(1.0, abs=1e-10)
        assert st.n2 == 0.0

    def test_balanced_null_branch(self):
        st = grid_state(SourceModel(r=1.0), AnalyzerBasis(PI / 4), 0.0)
        assert np.max(np.abs(st.psi1)) < 1e-15
        assert st.n2 == pytest.approx(1.0, abs=1e-10)

    def test_overlap_by_quadrature(self):
        g = Grid.default(1.0, 1.0)
        ov = trapezoid(amplitude_psf(g.x, 0.5, 1.0) * amplitude_psf(g.x, -0.5, 1.0), g.x)
        assert ov == pytest.approx(math.exp(-1 / 8), abs=1e-10)

    def test_negative_separation(self):
        with pytest.raises(ValueError):
            grid_state(SourceModel(), AnalyzerBasis(0.0), -1.0)


class TestBranchInformation:
    def test_single_source_branch(self):
        f1, f2 = fi_branch_numeric(SourceModel(r=0.0), AnalyzerBasis(0.0), 1.3)
        assert f1 == pytest.approx(0.25, abs=1e-8)
        assert f2 == 0.0

    def test_empty_branch_skipped(self):
        f1, f2 = fi_branch_numeric(SourceModel(r=1.0), AnalyzerBasis(PI / 4), 0.0)
        assert f1 == 0.0
        assert f2 == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize(
        "r, alpha, phi, s, sigma",
        [
            (0.5, PI / 6, 0.0, 1.0, 1.0),
            (1.0, PI / 6, 0.0, 1.5233, 1.0),
            (2.0, 0.3, 1.1, 0.4, 1.0),
            (1.0, PI / 4, 0.0, 0.05, 1.0),
            (0.3, 1.2, PI, 3.0, 2.0),
            (1.0, PI / 4, 0.0, 0.0, 1.0),
            (0.5, math.atan(2.0), 0.0, 0.0, 1.0),
        ],
    )
    def test_total_matches_closed_form(self, r, alpha, phi, s, sigma):
        model, basis = SourceModel(sigma=sigma, r=r, phi=phi), AnalyzerBasis(alpha)
        exact = f_tot(model, basis, s)
        assert f_tot_numeric(model, basis, s) == pytest.approx(exact, abs=1e-6 * max(exact, 1e-3 / sigma ** 2))

    def test_grid_doubling(self):
        model, basis = SourceModel(r=0.7, phi=0.4), AnalyzerBasis(0.5)
        coarse = f_tot_numeric(model, basis, 1.2, Grid.default(1.2, 1.0, 4001))
        fine = f_tot_numeric(model, basis, 1.2, Grid.default(1.2, 1.0, 8001))
        assert coarse == pytest.approx(fine, abs=1e-8)

    def test_step_halving_is_quiet(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", FiniteDifferenceWarning)
            f_tot_numeric(SourceModel(r=1.0), AnalyzerBasis(PI / 6), 1.0)

    def test_oversized_step_warns(self):
        with pytest.warns(FiniteDifferenceWarning):
            f_tot_numeric(SourceModel(r=1.0), AnalyzerBasis(PI / 6), 1.0, h=0.5)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            f_tot_numeric(SourceModel(), AnalyzerBasis(0.0), 1.0, h=0.0)


class TestUnentangledNumeric:
    @pytest.mark.parametrize(
        "r, phi, s", [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (1.0, 0.0, 0.5), (0.5, PI, 2.0), (0.25, PI / 2, 1.5), (1.0, PI, 0.3)]
    )
    def test_matches_closed_form(self, r, phi, s):
        model = SourceModel(r=r, phi=phi)
        exact = f_unentangled(model, s)
        assert f_unentangled_numeric(model, s) == pytest.approx(exact, abs=1e-6 * max(exact, 1e-3))


class TestClassicalInformation:
    def test_weight_information_zero_cases(self):
        assert f_weights(SourceModel(r=0.0), AnalyzerBasis(0.4), 1.0) == 0.0
        assert f_weights(SourceModel(r=1.0, phi=PI / 2), AnalyzerBasis(0.4), 1.0) == 0.0

    def test_weight_information_reference(self):
        got = f_weights(SourceModel(r=1.0), AnalyzerBasis(PI / 6), 1.0)
        assert got == pytest.approx(balanced_weight_info(PI / 6, 1.0), rel=1e-8)

    def test_single_source_position(self):
        assert classical_fi_position(SourceModel(r=0.0), AnalyzerBasis(0.0), 1.0) == pytest.approx(0.25, abs=1e-8)

    def test_far_separation(self):
        got = classical_fi_position(SourceModel(r=0.6, phi=0.3), AnalyzerBasis(0.4), 12.0)
        assert got == pytest.approx(0.25, abs=1e-6)

    def test_decomposes_into_branch_and_weight_parts(self):
        model, basis = SourceModel(r=1.0), AnalyzerBasis(PI / 6)
        f_cl = classical_fi_position(model, basis, 1.0)
        assert f_cl == pytest.approx(0.25, abs=1e-7)
        assert f_cl == pytest.approx(f_tot(model, basis, 1.0) + f_weights(model, basis, 1.0), abs=1e-6)

    def test_dominates_branch_total(self):
        rng = np.random.default_rng(3)
        for r, alpha, s in zip(rng.uniform(0, 2, 15), rng.uniform(0, PI / 2, 15), rng.uniform(0.1, 4, 15)):
            model, basis = SourceModel(r=r), AnalyzerBasis(alpha)
            assert classical_fi_position(model, basis, s) >= f_tot(model, basis, s) - 1e-6
