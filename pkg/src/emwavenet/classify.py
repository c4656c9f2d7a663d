"""Detector-plane readout: class regions, energies, prediction, SNR loss.

Classification is by energy: each class owns a rectangle on the detector
plane, the predicted class is the one whose rectangle holds the most
energy, and the loss for a sample of class c is the energy ratio

    L = (total - region_c) / region_c

which is zero exactly when all detector energy lands inside the true
region, and is invariant to any complex rescaling of the input field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .field import ComplexField

ENERGY_FLOOR = 1e-20


class Rect(NamedTuple):
    """Axis-aligned pixel rectangle: x is the column axis, y the row axis."""

    x0: int
    y0: int
    w: int
    h: int


@dataclass(frozen=True)
class DetectorLayout:
    """C disjoint class rectangles on an n x n detector plane."""

    regions: tuple
    n: int

    def __post_init__(self):
        regions = tuple(Rect(*r) for r in self.regions)
        object.__setattr__(self, "regions", regions)
        if len(regions) < 2:
            raise ValueError(f"need at least 2 class regions, got {len(regions)}")
        paint = np.zeros((self.n, self.n), dtype=bool)
        for idx, r in enumerate(regions):
            if r.w <= 0 or r.h <= 0:
                raise ValueError(f"region {idx} has non-positive area: {r}")
            if r.x0 < 0 or r.y0 < 0 or r.x0 + r.w > self.n or r.y0 + r.h > self.n:
                raise ValueError(f"region {idx} exceeds the {self.n}x{self.n} detector plane: {r}")
            block = paint[r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w]
            if block.any():
                raise ValueError(f"region {idx} overlaps an earlier region: {r}")
            block[:] = True

    @property
    def num_classes(self) -> int:
        return len(self.regions)

    def masks(self) -> np.ndarray:
        """Boolean membership masks g_c, shape (C, n, n)."""
        out = np.zeros((self.num_classes, self.n, self.n), dtype=bool)
        for c, r in enumerate(self.regions):
            out[c, r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w] = True
        return out


@dataclass(frozen=True)
class EnergyReadout:
    """Per-class region energies and the whole-plane total."""

    per_class: np.ndarray
    total: float

    def __post_init__(self):
        per_class = np.asarray(self.per_class, dtype=np.float64)
        object.__setattr__(self, "per_class", per_class)
        object.__setattr__(self, "total", float(self.total))


def lattice_regions(n: int, c: int, side: int, cols: int) -> tuple:
    """First c cells of a centered rows x cols lattice of ``side`` squares."""
    rows = -(-c // cols)
    if cols * side > n or rows * side > n:
        raise ValueError(f"{c} regions of side {side} do not fit on an {n}x{n} plane")
    gap_x = (n - cols * side) / (cols + 1)
    gap_y = (n - rows * side) / (rows + 1)
    regions = []
    for i in range(c):
        row, col = divmod(i, cols)
        x0 = int(round(gap_x * (col + 1) + side * col))
        y0 = int(round(gap_y * (row + 1) + side * row))
        regions.append(Rect(x0, y0, side, side))
    return tuple(regions)


def default_layout(n: int, c: int) -> DetectorLayout:
    """Standard layout: c squares of side n//8 on a centered grid of
    ceil(c/5) rows by min(c, 5) columns with equal gaps."""
    if n < 64:
        raise ValueError(f"default layout needs a detector of at least 64 pixels, got {n}")
    if not (2 <= c <= 16):
        raise ValueError(f"default layout supports 2..16 classes, got {c}")
    return DetectorLayout(regions=lattice_regions(n, c, n // 8, min(c, 5)), n=n)


def region_energies_arrays(data: np.ndarray, layout: DetectorLayout):
    """Batched readout on raw (batch, n, n) arrays -> ((batch, C), (batch,))."""
    intensity = data.real * data.real + data.imag * data.imag
    per_class = np.empty(data.shape[:-2] + (layout.num_classes,))
    for c, r in enumerate(layout.regions):
        per_class[..., c] = intensity[..., r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w].sum(axis=(-2, -1))
    total = intensity.sum(axis=(-2, -1))
    return per_class, total


def region_energies(u: ComplexField, layout: DetectorLayout) -> EnergyReadout:
    """Per-class energies s_c = sum |u|^2 over region c, plus the total."""
    if u.n != layout.n:
        raise ValueError(f"field size {u.n} does not match layout size {layout.n}")
    per_class, total = region_energies_arrays(u.data[None], layout)
    return EnergyReadout(per_class=per_class[0], total=float(total[0]))


def predict(readout: EnergyReadout) -> int:
    """Index of the most energetic region; ties break to the lowest index."""
    return int(np.argmax(readout.per_class))


def predict_multi(readout: EnergyReadout, k: int) -> set:
    """Indices of the k most energetic regions (ties to the lowest index)."""
    c = len(readout.per_class)
    if not (1 <= k <= c):
        raise ValueError(f"k must be in 1..{c}, got {k}")
    order = np.lexsort((np.arange(c), -readout.per_class))
    return set(int(i) for i in order[:k])


def _floored(value: float, what: str) -> float:
    if value <= ENERGY_FLOOR:
        warnings.warn(
            f"{what} {value:.3e} is at or below the {ENERGY_FLOOR:.0e} floor; "
            "loss evaluated with the floored denominator",
            RuntimeWarning,
            stacklevel=3,
        )
        return ENERGY_FLOOR
    return value


def snr_loss(readout: EnergyReadout, label: int) -> float:
    """Energy-ratio loss (total - s_label) / s_label for one sample."""
    if not (0 <= label < len(readout.per_class)):
        raise ValueError(f"label {label} outside 0..{len(readout.per_class) - 1}")
    s_label = _floored(float(readout.per_class[label]), "true-region energy")
    return (readout.total - float(readout.per_class[label])) / s_label


def snr_loss_grad_field(detector_field: ComplexField, layout: DetectorLayout, label: int) -> ComplexField:
    """Loss cotangent on the detector plane.

    Per pixel the cotangent is w * m with w = (S_c - S_t) / S_c^2 inside
    the true region and 1/S_c outside (S_t total energy, S_c true-region
    energy). Feeding this into the backward sweep reproduces the
    finite-difference gradients of the scalar loss; the gradient with
    respect to the real/imag parts of a detector pixel is twice the
    real/imag part of the cotangent.
    """
    if detector_field.n != layout.n:
        raise ValueError(f"field size {detector_field.n} does not match layout size {layout.n}")
    if not (0 <= label < layout.num_classes):
        raise ValueError(f"label {label} outside 0..{layout.num_classes - 1}")
    readout = region_energies(detector_field, layout)
    cot = cotangent_arrays(
        detector_field.data[None], readout.per_class[None], np.array([readout.total]), [label], layout
    )
    return ComplexField(cot[0], detector_field.pitch)


def cotangent_arrays(data, per_class, totals, labels, layout: DetectorLayout) -> np.ndarray:
    """Batched detector-plane cotangents for per-sample SNR losses."""
    out = np.empty_like(data)
    for b, label in enumerate(labels):
        s_c = _floored(float(per_class[b, label]), "true-region energy")
        s_t = float(totals[b])
        out[b] = data[b] * (1.0 / s_c)
        r = layout.regions[label]
        out[b, r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w] = data[b, r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w] * (
            (s_c - s_t) / (s_c * s_c)
        )
    return out


def batch_losses(per_class: np.ndarray, totals: np.ndarray, labels) -> np.ndarray:
    """Vector of per-sample SNR losses (no floor warnings on the hot path
    unless triggered)."""
    losses = np.empty(len(labels))
    for b, label in enumerate(labels):
        s_c = _floored(float(per_class[b, label]), "true-region energy")
        losses[b] = (float(totals[b]) - float(per_class[b, label])) / s_c
    return losses
