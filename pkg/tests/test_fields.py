import numpy as np
import pytest

from cilab import (
    GridSpec, band_project, biot_savart, differential, from_grid,
    inverse_divergence, leray_project, load_field, mollify_space, save_field,
    to_grid,
)
from cilab.fields import (
    c0_norm, dealias, divergence_defect, grid_l2_norm_squared, inner, l2_norm,
    trace_defect, zeros,
)

GRID = GridSpec(32)


def random_band_limited(grid, rank, kmax, seed, mean_zero=False, div_free=False):
    rng = np.random.default_rng(seed)
    n = grid.n
    ncomp = {"scalar": 1, "vector3": 3, "symtensor3x3": 6}[rank]
    raw = rng.standard_normal((ncomp, n, n, n))
    f = from_grid(raw, grid, rank, mean_zero=mean_zero)
    f = band_project(f, "leq", kmax)
    if mean_zero:
        f.coeffs[:, 0, 0, 0] = 0.0
    if div_free:
        f = leray_project(f)
    return f


class TestTransforms:
    def test_zero_field_round_trip(self):
        f = zeros(GRID, "scalar")
        assert np.all(to_grid(f) == 0.0)

    def test_single_mode_coefficients(self):
        x = GRID.mesh()[0]
        f = from_grid(np.sin(2 * np.pi * x), GRID, "scalar")
        assert f.get_mode((1, 0, 0))[0] == pytest.approx(-0.5j, abs=1e-14)
        assert f.get_mode((-1, 0, 0))[0] == pytest.approx(0.5j, abs=1e-14)
        others = f.coeffs.copy()
        others[0, 1, 0, 0] = 0.0
        others[0, -1, 0, 0] = 0.0  # conjugate slot on the kz=0 plane
        assert np.max(np.abs(others)) < 1e-14

    def test_round_trip_band_limited(self):
        f = random_band_limited(GRID, "vector3", 10, seed=1)
        g = to_grid(f)
        f2 = from_grid(g, GRID, "vector3")
        assert np.max(np.abs(f2.coeffs - f.coeffs)) < 1e-12

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            from_grid(np.zeros((3, 16, 16, 16)), GRID, "vector3")

    def test_parseval(self):
        f = random_band_limited(GRID, "vector3", 12, seed=2)
        g = to_grid(f)
        assert grid_l2_norm_squared(g) == pytest.approx(inner(f, f), rel=1e-12)


class TestDifferential:
    def test_grad_of_constant(self):
        f = zeros(GRID, "scalar")
        f.coeffs[0, 0, 0, 0] = 3.7
        g = differential(f, "grad")
        assert c0_norm(g) == 0.0

    def test_div_curl_identity(self):
        v = random_band_limited(GRID, "vector3", 8, seed=3)
        dcv = differential(differential(v, "curl"), "div")
        assert c0_norm(dcv) < 1e-12 * max(c0_norm(v), 1.0)

    def test_curl_of_shear(self):
        # v = (sin 2 pi x2, 0, 0) has curl (0, 0, -2 pi cos 2 pi x2)
        y = GRID.mesh()[1]
        v = from_grid(np.stack([np.sin(2 * np.pi * y), 0 * y, 0 * y]),
                      GRID, "vector3")
        c = to_grid(differential(v, "curl"))
        expected = -2 * np.pi * np.cos(2 * np.pi * y)
        assert np.max(np.abs(c[2] - expected)) < 1e-12 * 2 * np.pi
        assert np.max(np.abs(c[:2])) < 1e-12

    def test_curl_grad_is_zero(self):
        f = random_band_limited(GRID, "scalar", 8, seed=4)
        cg = differential(differential(f, "grad"), "curl")
        assert c0_norm(cg) < 1e-12 * max(c0_norm(f), 1.0)


class TestLeray:
    def test_kills_gradients(self):
        p = random_band_limited(GRID, "scalar", 9, seed=5)
        g = differential(p, "grad")
        assert c0_norm(leray_project(g)) < 1e-12 * max(c0_norm(g), 1.0)

    def test_fixes_div_free(self):
        v = random_band_limited(GRID, "vector3", 9, seed=6, div_free=True)
        pv = leray_project(v)
        assert np.max(np.abs(pv.coeffs - v.coeffs)) < 1e-12

    def test_idempotent(self):
        v = random_band_limited(GRID, "vector3", 9, seed=7)
        p1 = leray_project(v)
        p2 = leray_project(p1)
        assert np.max(np.abs(to_grid(p2) - to_grid(p1))) < 1e-12

    def test_single_mode_gradient_field(self):
        x = GRID.mesh()[0]
        v = from_grid(np.stack([np.sin(2 * np.pi * x), 0 * x, 0 * x]),
                      GRID, "vector3")
        assert c0_norm(leray_project(v)) < 1e-13

    def test_mean_passes_through(self):
        v = zeros(GRID, "vector3")
        v.coeffs[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        pv = leray_project(v)
        assert np.allclose(pv.coeffs[:, 0, 0, 0], [1.0, 2.0, 3.0])


class TestBiotSavart:
    def test_zero(self):
        assert c0_norm(biot_savart(zeros(GRID, "vector3"))) == 0.0

    def test_curl_inverts(self):
        v = random_band_limited(GRID, "vector3", 9, seed=8, mean_zero=True,
                                div_free=True)
        b = biot_savart(v)
        err = c0_norm(differential(b, "curl") - v)
        assert err < 1e-10 * c0_norm(v)
        assert divergence_defect(b) < 1e-12

    def test_single_mode_oracle(self):
        # v = (0, sin 2 pi x1, 0) -> b = (0, 0, cos(2 pi x1) / (2 pi))
        x = GRID.mesh()[0]
        v = from_grid(np.stack([0 * x, np.sin(2 * np.pi * x), 0 * x]),
                      GRID, "vector3")
        b = to_grid(biot_savart(v))
        expected = np.cos(2 * np.pi * x) / (2 * np.pi)
        assert np.max(np.abs(b[2] - expected)) < 1e-13
        assert np.max(np.abs(b[:2])) < 1e-13

    def test_rejects_nonzero_mean(self):
        v = zeros(GRID, "vector3")
        v.coeffs[0, 0, 0, 0] = 1.0
        v.set_mode((0, 1, 0), [0.5, 0, 0])
        with pytest.raises(ValueError, match="mean"):
            biot_savart(v)

    def test_rejects_divergent(self):
        x = GRID.mesh()[0]
        v = from_grid(np.stack([np.sin(2 * np.pi * x), 0 * x, 0 * x]),
                      GRID, "vector3")
        with pytest.raises(ValueError, match="divergence"):
            biot_savart(v)


class TestInverseDivergence:
    def test_right_inverse(self):
        v = random_band_limited(GRID, "vector3", 9, seed=9, mean_zero=True)
        r = inverse_divergence(v)
        err = c0_norm(differential(r, "div") - v)
        assert err < 1e-10 * c0_norm(v)

    def test_symmetric_trace_free(self):
        v = random_band_limited(GRID, "vector3", 9, seed=10, mean_zero=True)
        r = inverse_divergence(v)
        assert trace_defect(r) < 1e-12 * max(c0_norm(r), 1.0)

    def test_zero(self):
        r = inverse_divergence(zeros(GRID, "vector3"))
        assert c0_norm(r) == 0.0

    def test_mean_removed_automatically(self):
        v = random_band_limited(GRID, "vector3", 6, seed=11)
        v.coeffs[:, 0, 0, 0] = [1.0, -2.0, 0.5]
        r = inverse_divergence(v)
        w = v.copy()
        w.coeffs[:, 0, 0, 0] = 0.0
        assert c0_norm(differential(r, "div") - w) < 1e-10 * c0_norm(w)


class TestBandProject:
    def test_identity_on_band_limited(self):
        f = random_band_limited(GRID, "scalar", 5, seed=12)
        g = band_project(f, "leq", 5)
        assert np.max(np.abs(g.coeffs - f.coeffs)) == 0.0

    def test_partition(self):
        f = random_band_limited(GRID, "vector3", 14, seed=13)
        lo = band_project(f, "leq", 6.5)
        hi = band_project(f, "geq", 6.5)
        assert np.max(np.abs(lo.coeffs + hi.coeffs - f.coeffs)) == 0.0

    def test_kills_high_mode(self):
        x = GRID.mesh()[0]
        f = from_grid(np.sin(4 * np.pi * x), GRID, "scalar")
        assert c0_norm(band_project(f, "leq", 1)) < 1e-14

    def test_clamps_beyond_nyquist(self):
        f = random_band_limited(GRID, "scalar", 10, seed=14)
        with pytest.warns(UserWarning, match="Nyquist"):
            g = band_project(f, "leq", 100.0)
        assert np.max(np.abs(g.coeffs - f.coeffs)) == 0.0


class TestMollify:
    def test_constant_preserved(self):
        f = zeros(GRID, "scalar")
        f.coeffs[0, 0, 0, 0] = 2.5
        g = mollify_space(f, 0.25)
        assert abs(to_grid(g) - 2.5).max() < 1e-12

    def test_commutes_with_differential(self):
        f = random_band_limited(GRID, "scalar", 10, seed=15)
        a = differential(mollify_space(f, 0.1), "grad")
        b = mollify_space(differential(f, "grad"), 0.1)
        assert c0_norm(a - b) < 1e-12 * max(c0_norm(b), 1.0)

    def test_smooths(self):
        f = random_band_limited(GRID, "scalar", 12, seed=16, mean_zero=True)
        g = mollify_space(f, 0.2)
        assert l2_norm(g) < l2_norm(f)

    def test_warns_under_resolved(self):
        f = random_band_limited(GRID, "scalar", 4, seed=17)
        with pytest.warns(UserWarning, match="under-resolved"):
            mollify_space(f, 0.5 / GRID.n)

    def test_rejects_bad_width(self):
        f = zeros(GRID, "scalar")
        with pytest.raises(ValueError):
            mollify_space(f, 1.5)


class TestDealias:
    def test_keeps_low_band(self):
        f = random_band_limited(GRID, "scalar", 8, seed=18)
        g = dealias(f)
        assert np.max(np.abs(g.coeffs - f.coeffs)) == 0.0

    def test_removes_corner_modes(self):
        f = zeros(GRID, "scalar")
        f.set_mode((12, 12, 12), [1.0])
        assert c0_norm(dealias(f)) == 0.0


class TestSnapshot:
    @pytest.mark.parametrize("rank", ["scalar", "vector3", "symtensor3x3"])
    def test_file_round_trip_bit_exact(self, rank, tmp_path):
        f = random_band_limited(GRID, rank, 9, seed=19)
        p1 = tmp_path / "a.fld"
        p2 = tmp_path / "b.fld"
        save_field(f, p1)
        g = load_field(p1)
        save_field(g, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert g.rank == rank

    def test_rejects_garbage(self, tmp_path):
        p = tmp_path / "x.fld"
        p.write_bytes(b"NOTAFILE" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_field(p)


class TestGridSpec:
    def test_rejects_small_or_odd(self):
        with pytest.raises(ValueError):
            GridSpec(6)
        with pytest.raises(ValueError):
            GridSpec(34 + 1)

    def test_nyquist(self):
        assert GridSpec(32).nyquist == 16
