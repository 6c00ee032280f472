import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsplit.flows import (
    apply_filter,
    chi,
    fractional_laplacian,
    linear_flow,
    make_filter,
    nonlinear_flow,
)
from nlsplit.grid import ComplexField, as_frequency, make_grid, norm

from conftest import random_field


class TestChi:
    def test_reference_values(self):
        assert chi(0.5) == 1.0
        assert chi(2.7) == 0.0
        assert chi(1.5) == pytest.approx(0.5, abs=1e-15)
        assert chi(1.0) == 1.0 and chi(2.0) == 0.0

    def test_bridge_formula(self):
        # g(t) = exp(-1/t): chi(1.25) = g(0.75) / (g(0.75) + g(0.25))
        a, b = math.exp(-1 / 0.75), math.exp(-4.0)
        assert chi(1.25) == pytest.approx(a / (a + b), rel=1e-14)

    def test_vectorised_and_monotone(self):
        r = np.linspace(0, 3, 3001)
        c = chi(r)
        assert c.shape == r.shape
        assert np.all(np.diff(c) <= 0)
        assert np.all((c >= 0) & (c <= 1))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            chi(-0.1)

    @given(st.floats(0.0, 0.5))
    def test_midpoint_symmetry(self, t):
        assert chi(1.5 - t) + chi(1.5 + t) == pytest.approx(1.0, abs=1e-14)


class TestFilter:
    def test_small_grid_example(self):
        g = make_grid(1, 8, math.pi)
        k = make_filter(g, 1.0)
        xi = g.wavenumbers[0]
        w = dict(zip(xi.tolist(), k.weights.tolist()))
        assert w[0.0] == w[1.0] == w[-1.0] == 1.0
        for x in (2.0, -2.0, 3.0, -3.0, -4.0):
            assert w[x] == pytest.approx(chi(abs(x)))
        assert w[2.0] == 0.0

    def test_scale_four_kills_unit_mode(self):
        g = make_grid(1, 16, math.pi)
        k = make_filter(g, 4.0)
        assert k.weights[list(g.wavenumbers[0]).index(1.0)] == 0.0

    def test_wide_filter_is_all_pass(self):
        g = make_grid(2, 16, math.pi)
        # 2 s^(-1/2) > max |xi|
        assert make_filter(g, 1e-4).is_all_pass

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            make_filter(make_grid(1, 8, 1.0), 0.0)

    def test_kills_single_mode(self):
        g = make_grid(1, 32, math.pi)
        f = ComplexField(g, np.exp(2j * g.axis))
        out = apply_filter(f, make_filter(g, 1.0))
        assert np.abs(out.values).max() < 1e-14

    def test_band_limited_passes_unchanged(self):
        g = make_grid(1, 64, math.pi)
        x = g.axis
        f = ComplexField(g, np.exp(1j * x) + 0.3 * np.exp(-3j * x))
        out = apply_filter(f, make_filter(g, 0.1))
        assert np.abs(out.values - f.values).max() < 1e-13

    def test_keeps_space_tag(self, rng):
        g = make_grid(1, 32, 2.0)
        f = as_frequency(random_field(g, rng))
        assert apply_filter(f, make_filter(g, 0.1)).space == "frequency"

    def test_contraction_and_grid_check(self, rng):
        g = make_grid(2, 32, 3.0)
        k = make_filter(g, 0.2)
        for _ in range(20):
            f = random_field(g, rng)
            assert norm(apply_filter(f, k)) <= norm(f)
        with pytest.raises(ValueError):
            apply_filter(random_field(make_grid(2, 16, 3.0), rng), k)

    def test_weights_are_radial(self):
        g = make_grid(2, 32, 2.0)
        w = make_filter(g, 0.05).weights
        assert np.array_equal(w, w.T)
        assert np.array_equal(w[1:, :], w[1:, :][::-1, :])

    def test_filters_commute(self, rng):
        g = make_grid(1, 128, 4.0)
        # diagonal multipliers commute exactly on coefficients
        f = as_frequency(random_field(g, rng))
        a, b = make_filter(g, 0.01), make_filter(g, 0.3)
        ab = apply_filter(apply_filter(f, a), b)
        ba = apply_filter(apply_filter(f, b), a)
        assert np.array_equal(ab.values, ba.values)


class TestLinearFlow:
    def test_identity_at_zero(self, rng, grid1):
        f = random_field(grid1, rng)
        assert linear_flow(f, 0.0) is f

    def test_plane_wave_phase(self, grid1):
        x = grid1.axis
        out = linear_flow(ComplexField(grid1, np.exp(2j * x)), 0.1)
        assert np.abs(out.values - np.exp(-0.4j) * np.exp(2j * x)).max() < 1e-13

    def test_group_and_unitarity(self, rng):
        g = make_grid(2, 32, 3.0)
        f = random_field(g, rng)
        back = linear_flow(linear_flow(f, 0.37), -0.37)
        assert np.abs(back.values - f.values).max() < 1e-12
        two = linear_flow(linear_flow(f, 0.2), 0.3)
        one = linear_flow(f, 0.5)
        assert np.abs(two.values - one.values).max() < 1e-12
        assert norm(linear_flow(f, 1.3)) == pytest.approx(norm(f), rel=1e-13)

    def test_commutes_with_filter(self, rng, grid1):
        f = random_field(grid1, rng)
        k = make_filter(grid1, 0.05)
        a = apply_filter(linear_flow(f, 0.3), k)
        b = linear_flow(apply_filter(f, k), 0.3)
        assert np.abs(a.values - b.values).max() < 1e-13


class TestNonlinearFlow:
    def test_constant_field(self):
        g = make_grid(1, 16, 1.0)
        out = nonlinear_flow(ComplexField(g, np.ones(16)), math.pi, 1, 2)
        assert np.abs(out.values + 1).max() < 1e-15

    def test_identity_and_modulus(self, rng, grid1):
        f = random_field(grid1, rng)
        assert np.array_equal(nonlinear_flow(f, 0.0, 1, 2).values, f.values)
        out = nonlinear_flow(f, 0.7, -1, 1.5)
        np.testing.assert_allclose(np.abs(out.values), np.abs(f.values), rtol=1e-15, atol=0)

    def test_group_law(self, rng, grid1):
        f = random_field(grid1, rng)
        a = nonlinear_flow(nonlinear_flow(f, 0.05, 1, 2), 0.05, 1, 2)
        b = nonlinear_flow(f, 0.1, 1, 2)
        assert np.abs(a.values - b.values).max() < 1e-13

    def test_rejects_frequency_input_and_bad_p(self, rng, grid1):
        f = random_field(grid1, rng)
        with pytest.raises(ValueError):
            nonlinear_flow(as_frequency(f), 0.1, 1, 2)
        with pytest.raises(ValueError):
            nonlinear_flow(f, 0.1, 1, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.sampled_from([-1, 1]), st.floats(0.1, 4.0), st.integers(0, 1000))
    def test_mass_preserved(self, t, lam, p, seed):
        g = make_grid(1, 32, 1.0)
        f = random_field(g, np.random.default_rng(seed))
        assert norm(nonlinear_flow(f, t, lam, p)) == pytest.approx(norm(f), rel=1e-13)


def test_fractional_laplacian_on_a_mode(grid1):
    x = grid1.axis
    out = fractional_laplacian(ComplexField(grid1, np.exp(3j * x)), 2)
    assert np.abs(out.values - 9 * np.exp(3j * x)).max() < 1e-12
