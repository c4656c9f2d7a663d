import numpy as np
import pytest

from emwavenet.data import (
    NoiseChip,
    Sample,
    add_noise_snr,
    central_window_side,
    embed,
    load_dataset,
    load_noise_chips,
    per_item_seed,
    random_mask_noise,
    read_cf,
    splitmix64,
    superpose,
    synth_dataset,
    synth_noise_chip,
    write_cf,
    write_dataset,
)
from emwavenet.field import ComplexField, energy_of, total_energy
from emwavenet.network import NetConfig, init_layers, forward


def random_field(n, seed, pitch=0.01):
    rng = np.random.default_rng(seed)
    return ComplexField(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), pitch)


class TestCF32:
    @pytest.mark.parametrize("n,pitch", [(16, 0.01), (128, 3e-4)])
    def test_round_trip_bit_identical(self, tmp_path, n, pitch):
        f = ComplexField(random_field(n, seed=0, pitch=pitch).data.astype(np.complex64), pitch)
        path = tmp_path / "a.cf32"
        write_cf(f, path)
        first = path.read_bytes()
        back = read_cf(path)
        assert np.array_equal(back.data, f.data)
        assert back.pitch == np.float32(pitch)
        write_cf(back, path)
        assert path.read_bytes() == first

    def test_payload_size_mismatch_names_counts(self, tmp_path):
        path = tmp_path / "短.cf32"
        write_cf(random_field(16, seed=1), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-64])
        with pytest.raises(ValueError, match=r"expected \d+ bytes, got \d+"):
            read_cf(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.cf32"
        write_cf(random_field(16, seed=2), path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError, match="magic"):
            read_cf(path)

    def test_file_size_arithmetic(self, tmp_path):
        path = tmp_path / "c.cf32"
        write_cf(random_field(64, seed=3), path)
        assert path.stat().st_size == 4 * 64 * 64 * 2 + 16


class TestSynthDataset:
    def test_seed_determinism(self):
        a = synth_dataset(3, 2, 32, seed=7)
        b = synth_dataset(3, 2, 32, seed=7)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.field.data, sb.field.data)
            assert sa.labels == sb.labels

    def test_classes_have_distinct_geometry(self):
        from emwavenet.data import _class_geometry

        seen = []
        for c in range(16):
            positions, amps = _class_geometry(c, 64)
            seen.append((positions.round(6).tobytes(), amps.round(6).tobytes()))
        assert len(set(seen)) == 16

    def test_class_geometry_is_seed_independent(self):
        a = synth_dataset(2, 1, 32, seed=1)
        b = synth_dataset(2, 1, 32, seed=2)
        # different seeds, same classes: fields differ but labels align
        assert a[0].labels == b[0].labels
        assert not np.array_equal(a[0].field.data, b[0].field.data)

    def test_nontrivial_phase(self):
        for sample in synth_dataset(2, 3, 32, seed=8):
            assert np.max(np.abs(sample.field.data.imag)) > 0

    def test_counts_and_labels(self):
        samples = synth_dataset(4, 5, 32, seed=9)
        assert len(samples) == 20
        labels = [s.label for s in samples]
        assert labels == sorted(labels)
        assert set(labels) == set(range(4))


class TestEmbed:
    def test_centered_occupancy(self):
        f = random_field(128, seed=10)
        out = embed(f, 256)
        assert np.array_equal(out.data[64:192, 64:192], f.data)
        outside = out.data.copy()
        outside[64:192, 64:192] = 0
        assert not outside.any()

    def test_identity_when_sizes_match(self):
        f = random_field(32, seed=11)
        assert embed(f, 32) is f

    def test_energy_preserved(self):
        f = random_field(32, seed=12)
        assert total_energy(embed(f, 64)) == pytest.approx(total_energy(f), rel=0)

    def test_rejects_shrinking(self):
        with pytest.raises(ValueError, match="embed"):
            embed(random_field(64, seed=13), 32)


class TestSuperpose:
    def test_single_sample_identity(self):
        s = Sample(random_field(16, seed=14), frozenset({0}))
        out = superpose([s])
        assert np.array_equal(out.field.data, s.field.data)
        assert out.labels == {0}

    def test_coherent_cancellation(self):
        f = random_field(16, seed=15)
        a = Sample(f, frozenset({0}))
        b = Sample(ComplexField(-f.data, f.pitch), frozenset({1}))
        assert not superpose([a, b]).field.data.any()

    def test_label_union_and_disjointness(self):
        a = Sample(random_field(16, seed=16), frozenset({0}))
        b = Sample(random_field(16, seed=17), frozenset({2}))
        assert superpose([a, b]).labels == {0, 2}
        with pytest.raises(ValueError, match="overlap"):
            superpose([a, Sample(b.field, frozenset({0}))])

    def test_shape_mismatch_rejected(self):
        a = Sample(random_field(16, seed=18), frozenset({0}))
        b = Sample(random_field(32, seed=19), frozenset({1}))
        with pytest.raises(ValueError, match="shape"):
            superpose([a, b])

    def test_commutes_with_forward(self):
        cfg = NetConfig(freq_hz=9.6e9, wavelength=0.03, num_layers=2, grid_size=16, spacing=0.5, pitch=0.01)
        layers = init_layers(cfg, seed=20)
        a = Sample(random_field(16, seed=21), frozenset({0}))
        b = Sample(random_field(16, seed=22), frozenset({1}))
        mixed, _ = forward(cfg, layers, superpose([a, b]).field)
        fa, _ = forward(cfg, layers, a.field)
        fb, _ = forward(cfg, layers, b.field)
        assert np.max(np.abs(mixed.data - (fa.data + fb.data))) / np.max(np.abs(mixed.data)) < 1e-12


class TestAddNoiseSnr:
    def _chip(self, seed=23, n=32):
        return synth_noise_chip(n, seed)

    def test_zero_db_equal_energies(self):
        s = Sample(random_field(32, seed=24), frozenset({0}))
        out = add_noise_snr(s, self._chip(), 0.0, seed=1)
        added = out.field.data - s.field.data
        assert energy_of(added) == pytest.approx(energy_of(s.field.data), rel=1e-12)

    def test_plus_ten_db_tenth_energy(self):
        s = Sample(random_field(32, seed=25), frozenset({0}))
        out = add_noise_snr(s, self._chip(), 10.0, seed=2)
        added = out.field.data - s.field.data
        assert energy_of(added) == pytest.approx(energy_of(s.field.data) / 10.0, rel=1e-12)

    def test_measured_snr_matches_request_across_grid(self):
        s = Sample(random_field(32, seed=26), frozenset({0}))
        for snr_db in range(-10, 11, 2):
            out = add_noise_snr(s, self._chip(), float(snr_db), seed=3)
            added = out.field.data - s.field.data
            measured = 10.0 * np.log10(energy_of(s.field.data) / energy_of(added))
            assert abs(measured - snr_db) < 1e-6

    def test_signal_component_untouched(self):
        # the output is exactly x + alpha * n: no rescaling of the signal
        from emwavenet.data import _tiled_window

        s = Sample(random_field(32, seed=27), frozenset({0}))
        chip = self._chip()
        out = add_noise_snr(s, chip, -4.0, seed=4)
        rng = np.random.default_rng(4)
        window = _tiled_window(chip.field.data.astype(np.complex128), 32, rng)
        alpha = np.sqrt(energy_of(s.field.data) / (energy_of(window) * 10.0 ** (-4.0 / 10.0)))
        assert np.array_equal(out.field.data, s.field.data + alpha * window)

    def test_zero_energy_chip_rejected(self):
        s = Sample(random_field(32, seed=28), frozenset({0}))
        dead = NoiseChip(ComplexField(np.zeros((32, 32)), 0.01))
        with pytest.raises(ValueError, match="zero energy"):
            add_noise_snr(s, dead, 0.0, seed=5)


class TestRandomMaskNoise:
    def test_zero_side_is_identity(self):
        s = Sample(random_field(64, seed=29), frozenset({0}))
        out = random_mask_noise(s, synth_noise_chip(64, 30), (0, 0), 0.0, seed=6)
        assert np.array_equal(out.field.data, s.field.data)

    def test_patch_stays_in_central_window(self):
        n = 64
        window = central_window_side(n)
        assert window == 22
        s = Sample(ComplexField(np.ones((n, n)), 0.01), frozenset({0}))
        chip = synth_noise_chip(n, 31)
        win0 = (n - window) // 2
        for seed in range(500):
            out = random_mask_noise(s, chip, (3, 11), 0.0, seed=seed)
            delta = np.abs(out.field.data - s.field.data) > 0
            ys, xs = np.nonzero(delta)
            if len(ys) == 0:
                continue
            assert ys.min() >= win0 and ys.max() < win0 + window
            assert xs.min() >= win0 and xs.max() < win0 + window

    def test_patch_local_snr(self):
        s = Sample(random_field(64, seed=32), frozenset({0}))
        out = random_mask_noise(s, synth_noise_chip(64, 33), (9, 9), 0.0, seed=7)
        delta = out.field.data - s.field.data
        ys, xs = np.nonzero(np.abs(delta) > 0)
        patch = (slice(ys.min(), ys.max() + 1), slice(xs.min(), xs.max() + 1))
        measured = 10 * np.log10(energy_of(s.field.data[patch]) / energy_of(delta[patch]))
        assert abs(measured) < 1e-6

    def test_oversized_patch_rejected(self):
        s = Sample(random_field(64, seed=34), frozenset({0}))
        with pytest.raises(ValueError, match="window"):
            random_mask_noise(s, synth_noise_chip(64, 35), (23, 23), 0.0, seed=8)


class TestDatasetIO:
    def test_write_load_round_trip(self, tmp_path):
        samples = synth_dataset(3, 2, 16, seed=36)
        count = write_dataset(samples, tmp_path)
        assert count == 6
        loaded = load_dataset(tmp_path)
        assert len(loaded) == 6
        assert [s.label for s in loaded] == [s.label for s in samples]
        for a, b in zip(loaded, samples):
            assert np.allclose(a.field.data, b.field.data, atol=1e-6)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "nope")

    def test_noise_chips_round_trip(self, tmp_path):
        noise_dir = tmp_path / "noise"
        noise_dir.mkdir()
        write_cf(synth_noise_chip(16, 37).field, noise_dir / "chip_000.cf32")
        chips = load_noise_chips(noise_dir)
        assert len(chips) == 1 and chips[0].field.n == 16


class TestSeedDerivation:
    def test_splitmix_reference_values(self):
        # splitmix64 of state 0 and 1 (standard constants)
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert splitmix64(1) == 0x910A2DEC89025CC1

    def test_per_item_seeds_distinct(self):
        seeds = {per_item_seed(42, i) for i in range(1000)}
        assert len(seeds) == 1000
