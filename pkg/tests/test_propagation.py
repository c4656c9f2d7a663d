import numpy as np
import pytest

from emwavenet.field import ComplexField, total_energy
from emwavenet.propagation import (
    adjoint_propagate,
    exact_transfer,
    fresnel_transfer,
    propagate,
    rayleigh_sommerfeld_kernel,
)

LAM = 0.03  # meters; desk-scale X-band-like wavelength used throughout
DX = 0.01


def random_field(n, seed, pitch=DX):
    rng = np.random.default_rng(seed)
    return ComplexField(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), pitch)


def cdot(a, b):
    """Complex inner product <a, b> = sum conj(a) * b."""
    return np.vdot(a.data, b.data)


class TestFresnelTransfer:
    def test_zero_distance_is_identity(self):
        h = fresnel_transfer(16, DX, LAM, 0.0)
        assert np.max(np.abs(h.values - 1.0)) == 0.0

    def test_dc_bin_phase_is_kd(self):
        # lambda 0.03, d 0.3 -> k d = 20 pi, a whole number of turns
        h = fresnel_transfer(16, DX, LAM, 0.3)
        assert abs(h.values[0, 0] - 1.0) < 1e-12

    def test_unit_magnitude_at_reference_parameters(self):
        # radar-chip regime: N=256, dx=1e-4 m, lambda=0.03 m, d=0.3 m
        h = fresnel_transfer(256, 1e-4, 0.03, 0.3)
        assert np.max(np.abs(np.abs(h.values) - 1.0)) < 1e-12

    def test_nyquist_violation_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            fresnel_transfer(16, LAM / 2, LAM, 0.1)

    def test_negative_distance_allowed(self):
        h_fwd = fresnel_transfer(16, DX, LAM, 0.2)
        h_bwd = fresnel_transfer(16, DX, LAM, -0.2)
        assert np.max(np.abs(h_bwd.values - np.conj(h_fwd.values))) < 1e-12

    def test_semigroup(self):
        h1 = fresnel_transfer(32, DX, LAM, 0.17)
        h2 = fresnel_transfer(32, DX, LAM, 0.46)
        h12 = fresnel_transfer(32, DX, LAM, 0.63)
        assert np.max(np.abs(h1.values * h2.values - h12.values)) < 1e-12


class TestExactTransfer:
    def test_zero_distance(self):
        h = exact_transfer(16, DX, LAM, 0.0)
        grid_f = np.fft.fftfreq(16, d=DX)
        evanescent = (LAM * grid_f[:, None]) ** 2 + (LAM * grid_f[None, :]) ** 2 > 1.0
        assert np.all(h.values[evanescent] == 0.0)
        assert np.max(np.abs(h.values[~evanescent] - 1.0)) == 0.0

    def test_phase_at_half_cutoff_bin(self):
        # n=8, dx=0.0075: bin (1,1) sits at (lam fx)^2 + (lam fy)^2 = 0.5,
        # so over d = lam the phase is 2 pi sqrt(0.5)
        n, dx = 8, 0.0075
        h = exact_transfer(n, dx, LAM, LAM)
        fx = np.fft.fftfreq(n, d=dx)
        assert (LAM * fx[1]) ** 2 * 2 == pytest.approx(0.5, rel=1e-12)
        assert h.values[1, 1] == pytest.approx(np.exp(2j * np.pi * np.sqrt(0.5)), rel=1e-12)

    def test_fine_sampling_regime_is_mostly_evanescent(self):
        # dx << lambda: cutoff disk f <= 1/lambda is tiny next to 1/(2 dx)
        h = exact_transfer(256, 1e-4, 0.03, 0.3)
        zero_fraction = np.mean(h.values == 0.0)
        assert zero_fraction > 0.99


class TestPropagate:
    def test_identity_at_zero_distance(self):
        u = random_field(16, seed=1)
        out = propagate(u, fresnel_transfer(16, DX, LAM, 0.0))
        assert np.max(np.abs(out.data - u.data)) < 1e-14

    def test_energy_conserved(self):
        u = random_field(64, seed=2)
        out = propagate(u, fresnel_transfer(64, DX, LAM, 0.8))
        assert abs(total_energy(out) - total_energy(u)) / total_energy(u) < 1e-10

    def test_linearity(self):
        u, v = random_field(16, seed=3), random_field(16, seed=4)
        h = fresnel_transfer(16, DX, LAM, 0.3)
        a, b = 0.7 + 0.2j, -1.1 + 0.5j
        lhs = propagate(ComplexField(a * u.data + b * v.data, DX), h).data
        rhs = a * propagate(u, h).data + b * propagate(v, h).data
        assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-12

    def test_inverse(self):
        u = random_field(32, seed=5)
        fwd = propagate(u, fresnel_transfer(32, DX, LAM, 0.4))
        back = propagate(fwd, fresnel_transfer(32, DX, LAM, -0.4))
        assert np.max(np.abs(back.data - u.data)) / np.max(np.abs(u.data)) < 1e-10

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="size"):
            propagate(random_field(16, seed=6), fresnel_transfer(32, DX, LAM, 0.1))

    def test_gaussian_beam_waist_law(self):
        # analytic oracle: w(z) = w0 sqrt(1 + (z/zR)^2), zR = pi w0^2 / lambda
        n, dx = 256, DX
        w0 = 15 * dx
        z_r = np.pi * w0**2 / LAM
        coords = (np.arange(n) - n / 2) * dx
        xx, yy = np.meshgrid(coords, coords, indexing="ij")
        beam = ComplexField(np.exp(-(xx**2 + yy**2) / w0**2), dx)
        for z in (0.25 * z_r, 0.75 * z_r):
            out = propagate(beam, fresnel_transfer(n, dx, LAM, z))
            intensity = np.abs(out.data) ** 2
            w_measured = np.sqrt(2.0 * np.sum((xx**2 + yy**2) * intensity) / np.sum(intensity))
            w_expected = w0 * np.sqrt(1.0 + (z / z_r) ** 2)
            assert abs(w_measured - w_expected) / w_expected < 0.01


class TestAdjoint:
    def test_identity_kernel(self):
        u = random_field(16, seed=7)
        out = adjoint_propagate(u, fresnel_transfer(16, DX, LAM, 0.0))
        assert np.max(np.abs(out.data - u.data)) < 1e-14

    @pytest.mark.parametrize("kind", ["fresnel", "exact"])
    def test_inner_product_identity(self, kind):
        make = fresnel_transfer if kind == "fresnel" else exact_transfer
        h = make(32, DX, LAM, 0.37)
        for seed in range(5):
            x = random_field(32, seed=100 + seed)
            y = random_field(32, seed=200 + seed)
            lhs = cdot(propagate(x, h), y)
            rhs = cdot(x, adjoint_propagate(y, h))
            assert abs(lhs - rhs) / abs(rhs) < 1e-10

    def test_adjoint_equals_negative_distance(self):
        for make in (fresnel_transfer, exact_transfer):
            h_fwd = make(16, DX, LAM, 0.21)
            h_bwd = make(16, DX, LAM, -0.21)
            u = random_field(16, seed=8)
            a = adjoint_propagate(u, h_fwd).data
            b = propagate(u, h_bwd).data
            assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-12

    def test_unitary_round_trip(self):
        h = fresnel_transfer(32, DX, LAM, 0.5)
        x = random_field(32, seed=9)
        back = adjoint_propagate(propagate(x, h), h)
        assert np.max(np.abs(back.data - x.data)) / np.max(np.abs(x.data)) < 1e-10


class TestRayleighSommerfeld:
    def test_on_axis_value(self):
        z = 0.2
        kernel = rayleigh_sommerfeld_kernel(16, DX, LAM, z)
        expected = (1.0 / z) * (1.0 / (2 * np.pi * z) + 1.0 / (1j * LAM)) * np.exp(2j * np.pi * z / LAM)
        assert kernel.data[8, 8] == pytest.approx(expected, rel=1e-12)

    def test_magnitude_monotone_in_radius(self):
        kernel = rayleigh_sommerfeld_kernel(64, DX, LAM, 0.5)
        mags = np.abs(kernel.data[32, 32:])
        assert np.all(np.diff(mags) < 0)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            rayleigh_sommerfeld_kernel(16, DX, LAM, 0.0)

    def test_cross_validates_exact_transfer(self):
        # Two independent routes to the same diffraction pattern: a delta
        # propagated spectrally vs direct spatial convolution with the
        # impulse response (= dx^2 * kernel for a unit center pixel). The
        # 5% norm tolerance on the central quarter-side box reflects the
        # wrap-around inherent to the periodic spectral method.
        n, z = 64, 0.055
        delta = np.zeros((n, n), dtype=complex)
        delta[n // 2, n // 2] = 1.0
        spectral = propagate(ComplexField(delta, DX), exact_transfer(n, DX, LAM, z)).data
        direct = rayleigh_sommerfeld_kernel(n, DX, LAM, z).data * DX**2
        box = slice(n // 2 - n // 8, n // 2 + n // 8)
        rel = np.linalg.norm(spectral[box, box] - direct[box, box]) / np.linalg.norm(direct[box, box])
        assert rel < 0.05
