"""Sample I/O, synthetic dataset generation and interference transforms.

File format CF32: magic ``CF32``, u32 height, u32 width, f32 pitch, then
row-major interleaved (re, im) float32, all little-endian. Datasets live
in a directory tree ``<root>/<class_index>/<sample_id>.cf32`` with clutter
chips under ``<root>/noise/``.

All randomized transforms are deterministic given their seed; per-sample
streams are derived from a master seed with splitmix64 so samples can be
generated independently and in parallel.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .field import ComplexField, energy_of
from .train import write_bytes_atomic

CF_MAGIC = b"CF32"
_CF_HEADER = struct.Struct("<4sIIf")

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class Sample:
    """A complex field plus its class label set (singleton for ordinary
    samples; superposition samples carry the union of their sources)."""

    field: ComplexField
    labels: frozenset

    def __post_init__(self):
        labels = frozenset(int(c) for c in self.labels)
        if not labels:
            raise ValueError("sample must carry at least one label")
        if any(c < 0 for c in labels):
            raise ValueError(f"labels must be non-negative, got {sorted(labels)}")
        object.__setattr__(self, "labels", labels)

    @property
    def label(self) -> int:
        """The single label; raises for multi-label samples."""
        if len(self.labels) != 1:
            raise ValueError(f"sample has {len(self.labels)} labels, expected exactly one")
        return next(iter(self.labels))


@dataclass(frozen=True)
class NoiseChip:
    """Clutter patch (e.g. forest) used by the interference transforms."""

    field: ComplexField
    source: str = ""


def splitmix64(x: int) -> int:
    """One splitmix64 output for state x; the package's seed-derivation hash."""
    x = (x + _GOLDEN64) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def per_item_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit stream seed for item ``index`` under a master seed."""
    return splitmix64(((master_seed & _MASK64) + (index + 1) * _GOLDEN64) & _MASK64)


def write_cf(field: ComplexField, path) -> None:
    """Write a field as CF32 (atomic)."""
    header = _CF_HEADER.pack(CF_MAGIC, field.n, field.n, field.pitch)
    interleaved = np.empty((field.n, field.n, 2), dtype="<f4")
    interleaved[..., 0] = field.data.real.astype(np.float32)
    interleaved[..., 1] = field.data.imag.astype(np.float32)
    write_bytes_atomic(path, header + interleaved.tobytes())


def read_cf(path) -> ComplexField:
    """Read a CF32 file; validates magic and exact payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _CF_HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(blob)} bytes, need {_CF_HEADER.size})")
    magic, height, width, pitch = _CF_HEADER.unpack_from(blob)
    if magic != CF_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {CF_MAGIC!r}")
    if height != width:
        raise ValueError(f"{path}: non-square grid {height}x{width} not supported")
    expected = _CF_HEADER.size + height * width * 8
    if len(blob) != expected:
        raise ValueError(f"{path}: payload size mismatch, expected {expected} bytes, got {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=_CF_HEADER.size).reshape(height, width, 2)
    data = flat[..., 0] + 1j * flat[..., 1]
    return ComplexField(data.astype(np.complex64), float(pitch))


def _class_geometry(class_index: int, n: int):
    """Deterministic scatterer constellation for a class (seed-independent).

    The scatterer count, ring radius tier, base orientation, and the
    jittered polar positions and amplitudes are all functions of the class
    index alone, so datasets drawn with different master seeds share the
    same class definitions (train/test splits stay consistent).
    """
    rng = np.random.default_rng(0xC1A55 + class_index)
    count = 3 + class_index % 6
    radius = n * (0.13 + 0.05 * (class_index // 6))
    base = 2.399963229728653 * class_index  # golden angle spreads orientations
    angles = base + 2.0 * np.pi * np.arange(count) / count + rng.uniform(-0.25, 0.25, count)
    radii = radius * rng.uniform(0.7, 1.25, count)
    amps = rng.uniform(0.6, 1.4, count)
    x = radii * np.cos(angles)
    y = radii * np.sin(angles)
    return np.stack([x, y], axis=1), amps


def _render_scatterers(positions, amps, phases, n: int, blob_sigma: float = 1.0) -> np.ndarray:
    cols = np.arange(n) - n / 2.0
    rows = np.arange(n) - n / 2.0
    out = np.zeros((n, n), dtype=np.complex128)
    for (px, py), a, psi in zip(positions, amps, phases):
        gx = np.exp(-((cols - px) ** 2) / (2.0 * blob_sigma**2))
        gy = np.exp(-((rows - py) ** 2) / (2.0 * blob_sigma**2))
        out += (a * np.exp(1j * psi)) * (gy[:, None] * gx[None, :])
    return out


def synth_dataset(classes: int, per_class: int, n: int, seed: int, pitch: float = 0.01) -> list:
    """Point-scatterer dataset: per class a fixed constellation, per sample
    a random global rotation within +/-10 degrees, sub-pixel jitter,
    per-scatterer uniform phase, and -20 dB complex background speckle."""
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    samples = []
    for c in range(classes):
        positions, amps = _class_geometry(c, n)
        for j in range(per_class):
            rng = np.random.default_rng(per_item_seed(seed, c * per_class + j))
            theta = rng.uniform(-np.pi / 18.0, np.pi / 18.0)  # +/- 10 degrees
            rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
            pos = positions @ rot.T + rng.uniform(-0.5, 0.5, positions.shape)
            phases = rng.uniform(0.0, 2.0 * np.pi, len(amps))
            signal = _render_scatterers(pos, amps, phases, n)
            speckle = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
            scale = np.sqrt(energy_of(signal) * 1e-2 / energy_of(speckle))  # -20 dB
            samples.append(Sample(ComplexField(signal + scale * speckle, pitch), frozenset({c})))
    return samples


def synth_noise_chip(n: int, seed: int, pitch: float = 0.01, correlation_px: float = 2.0) -> NoiseChip:
    """Spatially correlated complex speckle standing in for clutter chips."""
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    f = np.fft.fftfreq(n)
    gauss = np.exp(-2.0 * (np.pi * correlation_px) ** 2 * (f[:, None] ** 2 + f[None, :] ** 2))
    chip = np.fft.ifft2(np.fft.fft2(white) * gauss)
    chip /= np.sqrt(energy_of(chip) / (n * n))
    return NoiseChip(ComplexField(chip, pitch), source=f"synthetic:{seed}")


def embed(f: ComplexField, n_out: int) -> ComplexField:
    """Zero-pad a field to n_out x n_out, centered; phase untouched."""
    if f.n > n_out:
        raise ValueError(f"cannot embed a {f.n}-pixel field into {n_out} pixels")
    if f.n == n_out:
        return f
    out = np.zeros((n_out, n_out), dtype=f.data.dtype)
    start = (n_out - f.n) // 2
    out[start : start + f.n, start : start + f.n] = f.data
    return ComplexField(out, f.pitch)


def superpose(samples) -> Sample:
    """Coherent (complex) sum of samples with pairwise disjoint label sets."""
    samples = list(samples)
    if not samples:
        raise ValueError("superpose needs at least one sample")
    base = samples[0]
    labels = set(base.labels)
    total = base.field.data.astype(np.complex128).copy()
    for s in samples[1:]:
        if s.field.n != base.field.n:
            raise ValueError(f"shape mismatch: {s.field.n} vs {base.field.n}")
        if labels & s.labels:
            raise ValueError(f"label sets overlap on {sorted(labels & s.labels)}")
        labels |= s.labels
        total = total + s.field.data
    return Sample(ComplexField(total, base.field.pitch), frozenset(labels))


def _tiled_window(chip: np.ndarray, n: int, rng) -> np.ndarray:
    """n x n window from the chip, periodically tiled, seeded offset."""
    cn = chip.shape[0]
    oy = int(rng.integers(0, cn))
    ox = int(rng.integers(0, cn))
    reps = -(-(n + max(oy, ox)) // cn) + 1
    tiled = np.tile(chip, (reps, reps))
    return tiled[oy : oy + n, ox : ox + n]


def add_noise_snr(sample: Sample, noise: NoiseChip, snr_db: float, seed: int) -> Sample:
    """Coherently add clutter scaled so 10 log10(E_signal/E_noise) = snr_db."""
    rng = np.random.default_rng(seed)
    window = _tiled_window(noise.field.data.astype(np.complex128), sample.field.n, rng)
    e_sig = energy_of(sample.field.data)
    e_noise = energy_of(window)
    if e_noise <= 0:
        raise ValueError("noise chip window has zero energy")
    alpha = np.sqrt(e_sig / (e_noise * 10.0 ** (snr_db / 10.0)))
    return Sample(ComplexField(sample.field.data + alpha * window, sample.field.pitch), sample.labels)


def central_window_side(n: int) -> int:
    """Side of the centered masking window: 88 px at n = 256, scaled."""
    return int(round(88 * n / 256))


def random_mask_noise(sample: Sample, noise: NoiseChip, side_range, snr_db: float, seed: int) -> Sample:
    """Coherently add a clutter patch of seeded size and position.

    The square patch side is drawn uniformly from ``side_range``, its
    position uniformly such that the patch stays inside the centered
    masking window (88 x 88 at n = 256, proportionally scaled). The added
    clutter is scaled so the patch-local signal-to-noise ratio equals
    ``snr_db``; pixels outside the patch are untouched.
    """
    n = sample.field.n
    window = central_window_side(n)
    s_min, s_max = int(side_range[0]), int(side_range[1])
    if s_min < 0 or s_min > s_max:
        raise ValueError(f"invalid side range [{s_min}, {s_max}]")
    if s_max > window:
        raise ValueError(f"patch side {s_max} exceeds the central {window}x{window} window")
    rng = np.random.default_rng(seed)
    side = int(rng.integers(s_min, s_max + 1))
    if side == 0:
        return Sample(ComplexField(sample.field.data.copy(), sample.field.pitch), sample.labels)
    win0 = (n - window) // 2
    y0 = win0 + int(rng.integers(0, window - side + 1))
    x0 = win0 + int(rng.integers(0, window - side + 1))
    patch_noise = _tiled_window(noise.field.data.astype(np.complex128), n, rng)[:side, :side]
    patch_signal = sample.field.data[y0 : y0 + side, x0 : x0 + side]
    e_sig = energy_of(patch_signal)
    e_noise = energy_of(patch_noise)
    if e_noise <= 0:
        raise ValueError("noise chip window has zero energy")
    if e_sig <= 0:
        raise ValueError("patch contains no signal energy; the requested patch-local SNR is unrealizable")
    alpha = np.sqrt(e_sig / (e_noise * 10.0 ** (snr_db / 10.0)))
    out = sample.field.data.copy()
    out[y0 : y0 + side, x0 : x0 + side] = patch_signal + alpha * patch_noise
    return Sample(ComplexField(out, sample.field.pitch), sample.labels)


def write_dataset(samples, root) -> int:
    """Write singleton-label samples as <root>/<class>/<index>.cf32."""
    count = 0
    for i, sample in enumerate(samples):
        class_dir = os.path.join(os.fspath(root), str(sample.label))
        os.makedirs(class_dir, exist_ok=True)
        write_cf(sample.field, os.path.join(class_dir, f"{i:05d}.cf32"))
        count += 1
    return count


def load_dataset(root) -> list:
    """Load <root>/<class_index>/*.cf32 in deterministic order."""
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise FileNotFoundError(f"dataset directory {root} does not exist")
    samples = []
    class_dirs = sorted((d for d in os.listdir(root) if d.isdigit()), key=int)
    for d in class_dirs:
        class_dir = os.path.join(root, d)
        for name in sorted(os.listdir(class_dir)):
            if name.endswith(".cf32"):
                samples.append(Sample(read_cf(os.path.join(class_dir, name)), frozenset({int(d)})))
    if not samples:
        raise ValueError(f"no .cf32 samples under {root}")
    return samples


def load_noise_chips(noise_dir) -> list:
    """Load every chip under the noise directory, sorted by filename."""
    noise_dir = os.fspath(noise_dir)
    if not os.path.isdir(noise_dir):
        raise FileNotFoundError(f"noise directory {noise_dir} does not exist")
    chips = [
        NoiseChip(read_cf(os.path.join(noise_dir, name)), source=name)
        for name in sorted(os.listdir(noise_dir))
        if name.endswith(".cf32")
    ]
    if not chips:
        raise ValueError(f"no .cf32 noise chips under {noise_dir}")
    return chips
