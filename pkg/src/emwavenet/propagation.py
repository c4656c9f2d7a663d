"""Free-space propagation kernels in the angular-spectrum framework.

Two transfer-function flavors are provided:

* ``fresnel`` — paraxial quadratic-phase form
  H = exp[j k d (1 - lambda^2/2 (fx^2 + fy^2))], k = 2 pi / lambda.
  Pure phase on every bin, hence energy conserving and exactly invertible.
  This is the kernel the network trains with.
* ``exact`` — full angular-spectrum phase
  H = exp[j (2 pi / lambda) sqrt(1 - (lambda fx)^2 - (lambda fy)^2) d]
  on propagating bins, zero on evanescent bins. Provided for validation.

The Rayleigh-Sommerfeld spatial impulse response is included purely as an
independent cross-check of the exact kernel; nothing in the network path
uses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ComplexField, freq_grid

FRESNEL = "fresnel"
EXACT = "exact"


@dataclass(frozen=True)
class TransferFunction:
    """Angular-spectrum transfer function sampled on the DFT frequency grid."""

    values: np.ndarray  # (n, n) complex128, DFT bin ordering
    kind: str  # "fresnel" | "exact"
    distance: float  # meters, may be negative (adjoint direction)
    wavelength: float  # meters

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_sampling(n: int, pitch: float, wavelength: float) -> None:
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"grid size must be positive and even, got {n}")
    if not (wavelength > 0):
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if not (pitch > 0):
        raise ValueError(f"pixel pitch must be positive, got {pitch}")
    if pitch >= wavelength / 2:
        raise ValueError(
            f"pixel pitch {pitch} violates the Nyquist sampling constraint: "
            f"pitch must be less than half the wavelength ({wavelength / 2})"
        )


def fresnel_transfer(n: int, pitch: float, wavelength: float, distance: float) -> TransferFunction:
    """Paraxial (Fresnel) transfer function; |H| = 1 on every bin."""
    _check_sampling(n, pitch, wavelength)
    grid = freq_grid(n, pitch)
    f_sq = grid.fx[:, None] ** 2 + grid.fy[None, :] ** 2
    k = 2.0 * np.pi / wavelength
    h = np.exp(1j * (k * distance) * (1.0 - 0.5 * wavelength**2 * f_sq))
    return TransferFunction(values=h, kind=FRESNEL, distance=float(distance), wavelength=float(wavelength))


def exact_transfer(n: int, pitch: float, wavelength: float, distance: float) -> TransferFunction:
    """Exact angular-spectrum transfer function; evanescent bins are zeroed."""
    _check_sampling(n, pitch, wavelength)
    grid = freq_grid(n, pitch)
    arg = 1.0 - (wavelength * grid.fx[:, None]) ** 2 - (wavelength * grid.fy[None, :]) ** 2
    propagating = arg >= 0.0
    phase = np.zeros_like(arg)
    np.sqrt(arg, where=propagating, out=phase)
    h = np.exp(1j * (2.0 * np.pi / wavelength * distance) * phase)
    h[~propagating] = 0.0
    return TransferFunction(values=h, kind=EXACT, distance=float(distance), wavelength=float(wavelength))


def apply_transfer(data: np.ndarray, h: np.ndarray) -> np.ndarray:
    """ifft2(fft2(data) * h) over the trailing two axes; batch-aware."""
    spectrum = np.fft.fft2(data, axes=(-2, -1))
    spectrum *= h
    return np.fft.ifft2(spectrum, axes=(-2, -1))


def propagate(u: ComplexField, h: TransferFunction) -> ComplexField:
    """Propagate a field by multiplying its angular spectrum with h."""
    if u.n != h.n:
        raise ValueError(f"field size {u.n} does not match transfer function size {h.n}")
    return ComplexField(apply_transfer(u.data, h.values), u.pitch)


def adjoint_propagate(g: ComplexField, h: TransferFunction) -> ComplexField:
    """Adjoint of propagate: spectrum multiplied by conj(h).

    For both kernel kinds this equals propagation over distance -d; for the
    pure-phase Fresnel kernel it is also the exact inverse.
    """
    if g.n != h.n:
        raise ValueError(f"field size {g.n} does not match transfer function size {h.n}")
    return ComplexField(apply_transfer(g.data, np.conj(h.values)), g.pitch)


def rayleigh_sommerfeld_kernel(n: int, pitch: float, wavelength: float, z: float) -> ComplexField:
    """Spatial impulse response of free-space diffraction (validation oracle).

    h(x, y) = z/r^2 * (1/(2 pi r) + 1/(j lambda)) * exp(j 2 pi r / lambda),
    r = sqrt(x^2 + y^2 + z^2), sampled at pixel centers with the on-axis
    sample at index (n//2, n//2).
    """
    if not (z > 0):
        raise ValueError(f"propagation distance must be positive, got {z}")
    if not (wavelength > 0):
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    coords = (np.arange(n) - n // 2) * pitch
    r = np.sqrt(coords[:, None] ** 2 + coords[None, :] ** 2 + z * z)
    h = (z / r**2) * (1.0 / (2.0 * np.pi * r) + 1.0 / (1j * wavelength)) * np.exp(2j * np.pi * r / wavelength)
    return ComplexField(h, pitch)
