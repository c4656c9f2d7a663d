"""Complex wavefield container, 2-D DFT conventions and energy accounting.

The DFT convention is fixed package-wide: the forward transform is
unnormalized and the inverse carries the 1/N^2 factor, so

    ifft2(fft2(u)) == u         and
    sum |u|^2 == (1/N^2) * sum |fft2(u)|^2   (Parseval)

All propagation and gradient code relies on this pairing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_COMPLEX_DTYPES = (np.complex64, np.complex128)


@dataclass(frozen=True)
class ComplexField:
    """Square grid of complex field samples with a physical pixel pitch.

    Parameters
    ----------
    data : ndarray, shape (n, n)
        Complex field samples (dimensionless amplitude). Non-complex input
        is promoted to complex128.
    pitch : float
        Physical distance in meters between adjacent samples.
    """

    data: np.ndarray
    pitch: float

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype not in _COMPLEX_DTYPES:
            data = data.astype(np.complex128)
        data = np.ascontiguousarray(data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"field grid must be square, got shape {data.shape}")
        n = data.shape[0]
        if n < 2 or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 2, got {n}")
        if not (self.pitch > 0):
            raise ValueError(f"pixel pitch must be positive, got {self.pitch}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains non-finite samples (NaN or Inf)")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "pitch", float(self.pitch))

    @property
    def n(self) -> int:
        """Grid size in pixels per side."""
        return self.data.shape[0]

    @property
    def extent(self) -> float:
        """Physical side length n * pitch in meters."""
        return self.n * self.pitch


@dataclass(frozen=True)
class FreqGrid:
    """Spatial-frequency sample vectors in standard DFT output ordering.

    fx[i] = i/(n*dx) for i < n/2 and (i-n)/(n*dx) otherwise, in cycles
    per meter; identical along both axes for the square grids used here.
    """

    fx: np.ndarray
    fy: np.ndarray


def freq_grid(n: int, pitch: float) -> FreqGrid:
    """Spatial frequencies (cycles/m) matching fft2 output ordering."""
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"grid size must be positive and even, got {n}")
    if not (pitch > 0):
        raise ValueError(f"pixel pitch must be positive, got {pitch}")
    f = np.fft.fftfreq(n, d=pitch)
    return FreqGrid(fx=f, fy=f.copy())


def fft2(field: ComplexField) -> ComplexField:
    """Forward unnormalized 2-D DFT of the field (spectrum keeps the pitch tag)."""
    return ComplexField(np.fft.fft2(field.data), field.pitch)


def ifft2(spectrum: ComplexField) -> ComplexField:
    """Inverse 2-D DFT carrying the 1/N^2 normalization."""
    return ComplexField(np.fft.ifft2(spectrum.data), spectrum.pitch)


def total_energy(field: ComplexField) -> float:
    """Sum of |u|^2 over all pixels (arbitrary units, >= 0)."""
    return energy_of(field.data)


def energy_of(data: np.ndarray) -> float:
    """Energy of a raw complex array; shared by the batched training path."""
    return float(np.sum(data.real * data.real + data.imag * data.imag))
