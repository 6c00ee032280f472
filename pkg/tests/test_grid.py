import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsplit.grid import (
    ComplexField,
    DomainTruncationWarning,
    HlogS,
    Hs,
    L2,
    Lr,
    as_frequency,
    boundary_mass_fraction,
    check_boundary_mass,
    dump_field,
    forward_transform,
    inverse_transform,
    load_field,
    make_grid,
    norm,
)

from conftest import random_field


class TestMakeGrid:
    def test_spacing_and_wavenumbers(self):
        g = make_grid(1, 8, math.pi)
        assert g.shape == (8,)
        assert g.spacing == pytest.approx(math.pi / 4)
        np.testing.assert_allclose(g.wavenumbers[0], np.arange(-4, 4))
        np.testing.assert_allclose(g.axis, -math.pi + np.arange(8) * math.pi / 4)

    def test_two_dimensional(self):
        g = make_grid(2, 16, 2.0)
        assert g.shape == (16, 16)
        assert g.total_points == 256
        assert g.cell_volume == pytest.approx(0.25**2)
        assert g.frequency_magnitude().shape == (16, 16)
        assert g.frequency_cell == pytest.approx((math.pi / 2) ** 2)

    @pytest.mark.parametrize("args", [(4, 16, 1.0), (1, 12, 1.0), (1, 4, 1.0), (1, 16, 0.0), (1, 16, -1.0)])
    def test_rejects_bad_parameters(self, args):
        with pytest.raises(ValueError):
            make_grid(*args)

    def test_same_as(self):
        assert make_grid(1, 16, 1.0).same_as(make_grid(1, 16, 1.0))
        assert not make_grid(1, 16, 1.0).same_as(make_grid(1, 32, 1.0))


class TestTransforms:
    def test_single_mode_lands_on_its_lattice_point(self):
        g = make_grid(1, 32, math.pi)
        x = g.axis
        c = forward_transform(ComplexField(g, np.exp(3j * x))).values
        k = list(g.wavenumbers[0]).index(3.0)
        assert abs(c[k]) == pytest.approx(math.sqrt(32))
        c[k] = 0
        assert np.abs(c).max() < 1e-12

    def test_round_trip(self, rng):
        for d, n in ((1, 64), (2, 32), (3, 8)):
            g = make_grid(d, n, 3.0)
            f = random_field(g, rng)
            back = inverse_transform(forward_transform(f))
            assert np.abs(back.values - f.values).max() < 1e-12

    def test_real_even_spectrum_gives_real_even_field(self):
        g = make_grid(1, 64, 5.0)
        spec = np.exp(-np.abs(g.wavenumbers[0]))
        u = inverse_transform(ComplexField(g, spec, "frequency")).values
        assert np.abs(u.imag).max() < 1e-14
        refl = (64 - np.arange(64)) % 64
        assert np.abs(u[refl] - u).max() < 1e-14

    def test_parseval_on_100_random_fields(self, rng):
        g = make_grid(2, 16, 1.5)
        for _ in range(100):
            f = random_field(g, rng)
            assert norm(forward_transform(f)) == pytest.approx(norm(f), rel=1e-13)

    def test_space_tags_are_checked(self, rng):
        g = make_grid(1, 16, 1.0)
        f = random_field(g, rng)
        with pytest.raises(ValueError):
            inverse_transform(f)
        with pytest.raises(ValueError):
            forward_transform(as_frequency(f))
        with pytest.raises(ValueError):
            f + as_frequency(f)
        with pytest.raises(ValueError):
            f + random_field(make_grid(1, 32, 1.0), np.random.default_rng(0))


class TestNorms:
    def test_gaussian_l2(self):
        # int exp(-2x^2) dx = sqrt(pi/2)
        g = make_grid(1, 1024, 16.0)
        f = ComplexField(g, np.exp(-g.axis**2))
        assert norm(f) == pytest.approx((math.pi / 2) ** 0.25, abs=1e-6)

    def test_lr_of_constant(self):
        g = make_grid(2, 16, 1.0)
        f = ComplexField(g, np.full(g.shape, 3.0))
        # |box| = 4
        assert norm(f, Lr(4)) == pytest.approx(3.0 * 4 ** 0.25)
        assert norm(f, Lr(math.inf)) == 3.0
        assert norm(f, Lr(2)) == pytest.approx(norm(f))

    def test_sobolev_weights(self):
        g = make_grid(1, 32, math.pi)
        f = ComplexField(g, np.exp(2j * g.axis))
        m = math.sqrt(2 * math.pi)
        assert norm(f, Hs(0)) == pytest.approx(norm(f), rel=1e-13)
        assert norm(f, Hs(1)) == pytest.approx(m * math.sqrt(5), rel=1e-12)
        assert norm(f, HlogS(1)) == pytest.approx(m * math.log(4), rel=1e-12)
        assert norm(f, L2()) == pytest.approx(m, rel=1e-13)

    def test_rejects_bad_parameters(self, rng):
        f = random_field(make_grid(1, 16, 1.0), rng)
        with pytest.raises(ValueError):
            norm(f, Lr(0.5))
        with pytest.raises(ValueError):
            norm(f, Hs(-1))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.0, 8.0), st.integers(0, 2**32 - 1))
    def test_lr_is_monotone_in_r_after_normalising(self, r, seed):
        # on a probability space Lr norms increase with r
        g = make_grid(1, 32, 0.5)
        f = random_field(g, np.random.default_rng(seed))
        assert norm(f, Lr(r)) <= norm(f, Lr(r + 1.0)) * (1 + 1e-12)


class TestBoundary:
    def test_localised_field_has_no_boundary_mass(self):
        g = make_grid(1, 256, 16.0)
        f = ComplexField(g, np.exp(-g.axis**2))
        assert boundary_mass_fraction(f) < 1e-100
        assert check_boundary_mass(f) < 1e-8

    def test_wide_field_warns(self):
        g = make_grid(1, 64, 2.0)
        with pytest.warns(DomainTruncationWarning):
            check_boundary_mass(ComplexField(g, np.ones(g.shape)))


class TestDump:
    @pytest.mark.parametrize("space", ["physical", "frequency"])
    def test_round_trip(self, tmp_path, rng, space):
        g = make_grid(2, 8, 1.25)
        f = random_field(g, rng)
        if space == "frequency":
            f = as_frequency(f)
        path = tmp_path / "f.nlsf"
        dump_field(f, path)
        back = load_field(path)
        assert back.space == space
        assert back.grid.same_as(g)
        assert np.array_equal(back.values, f.values)

    def test_header_layout(self, tmp_path):
        g = make_grid(1, 8, 1.0)
        path = tmp_path / "f.nlsf"
        dump_field(ComplexField(g, np.arange(8) + 1j), path)
        raw = path.read_bytes()
        assert raw[:4] == b"NLSF"
        assert len(raw) == 4 + 4 + 1 + 8 + 8 + 1 + 16 * 8
        assert np.frombuffer(raw[26:42], "<f8").tolist() == [0.0, 1.0]

    def test_rejects_corrupt_files(self, tmp_path):
        g = make_grid(1, 8, 1.0)
        path = tmp_path / "f.nlsf"
        dump_field(ComplexField(g, np.zeros(8)), path)
        raw = path.read_bytes()
        (tmp_path / "bad").write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(ValueError):
            load_field(tmp_path / "bad")
        (tmp_path / "short").write_bytes(raw[:-8])
        with pytest.raises(ValueError):
            load_field(tmp_path / "short")
