"""Modulation layers and the full forward pass.

A network is a stack of per-pixel complex masks t = a * exp(j k phi)
interleaved with fixed free-space propagation hops of length d. The input
plane is not modulated: the sequence is propagate, then (modulate,
propagate) repeated per layer, ending on the detector plane. The forward
pass caches every layer's incident field; the backward sweep needs them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .field import ComplexField
from .propagation import TransferFunction, apply_transfer, fresnel_transfer

INIT_DEFAULT = "default"
INIT_IDENTITY = "identity"


@dataclass(frozen=True)
class NetConfig:
    """Physical and structural hyperparameters of the network.

    Attributes
    ----------
    freq_hz : float
        Radar operating frequency in Hz (metadata; propagation phases are
        driven by ``wavelength`` alone, which is configured independently).
    wavelength : float
        Wavelength in meters.
    num_layers : int
        Number of modulation layers M (>= 0).
    grid_size : int
        Grid resolution N; fields and masks are N x N.
    spacing : float
        Distance d in meters between consecutive planes.
    pitch : float
        Spatial sampling interval dx in meters; must be below half the
        wavelength (Nyquist).
    """

    freq_hz: float
    wavelength: float
    num_layers: int
    grid_size: int
    spacing: float
    pitch: float

    def __post_init__(self):
        if self.grid_size < 2 or self.grid_size % 2 != 0:
            raise ValueError(f"grid_size must be even and >= 2, got {self.grid_size}")
        if self.num_layers < 0:
            raise ValueError(f"num_layers must be >= 0, got {self.num_layers}")
        if not (self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not (self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not (self.freq_hz > 0):
            raise ValueError(f"freq_hz must be positive, got {self.freq_hz}")
        if not (0 < self.pitch < self.wavelength / 2):
            raise ValueError(
                f"pitch {self.pitch} violates the Nyquist sampling constraint: "
                f"it must be positive and less than half the wavelength ({self.wavelength / 2})"
            )

    @property
    def aperture(self) -> float:
        """Physical layer side length, grid_size * pitch (meters)."""
        return self.grid_size * self.pitch

    @property
    def wavenumber(self) -> float:
        """k = 2 pi / wavelength (rad/m), from the configured wavelength."""
        return 2.0 * np.pi / self.wavelength

    def transfer(self) -> TransferFunction:
        """Fresnel transfer function for one inter-layer hop."""
        return fresnel_transfer(self.grid_size, self.pitch, self.wavelength, self.spacing)


@dataclass
class ModulationLayer:
    """Per-pixel trainable amplitude and phase path length.

    ``amp`` is a dimensionless real gain (unconstrained; negative values
    absorb a pi phase), ``phase`` a path length in meters, converted to
    radians by ``wavenumber`` when the mask t = amp * exp(j k phase) is
    applied.
    """

    amp: np.ndarray
    phase: np.ndarray
    wavenumber: float

    def __post_init__(self):
        self.amp = np.ascontiguousarray(self.amp, dtype=np.float64)
        self.phase = np.ascontiguousarray(self.phase, dtype=np.float64)
        if self.amp.shape != self.phase.shape or self.amp.ndim != 2:
            raise ValueError(
                f"amp and phase must be matching 2-D grids, got {self.amp.shape} and {self.phase.shape}"
            )
        if not (np.all(np.isfinite(self.amp)) and np.all(np.isfinite(self.phase))):
            raise ValueError("layer parameters contain non-finite values")
        if not (self.wavenumber > 0):
            raise ValueError(f"wavenumber must be positive, got {self.wavenumber}")

    @property
    def n(self) -> int:
        return self.amp.shape[0]

    def transmission(self) -> np.ndarray:
        """Complex mask t = amp * exp(j k phase)."""
        return self.amp * np.exp(1j * self.wavenumber * self.phase)

    def copy(self) -> "ModulationLayer":
        return ModulationLayer(self.amp.copy(), self.phase.copy(), self.wavenumber)


@dataclass(frozen=True)
class ForwardCache:
    """Incident fields m^1..m^M plus the detector-plane field m^(M+1)."""

    fields: tuple  # tuple[ComplexField, ...], length num_layers + 1

    def __len__(self) -> int:
        return len(self.fields)

    def incident(self, layer_index: int) -> ComplexField:
        """Field arriving at modulation layer ``layer_index`` (0-based)."""
        return self.fields[layer_index]

    @property
    def detector(self) -> ComplexField:
        return self.fields[-1]


def init_layers(cfg: NetConfig, scheme: str = INIT_DEFAULT, seed=None) -> list:
    """Create the trainable layer stack.

    ``default``: unit amplitude, phase path uniform in [0, wavelength).
    ``identity``: unit amplitude, zero phase (network reduces to pure
    propagation). Deterministic given the seed.
    """
    if scheme not in (INIT_DEFAULT, INIT_IDENTITY):
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    n = cfg.grid_size
    layers = []
    for _ in range(cfg.num_layers):
        amp = np.ones((n, n))
        if scheme == INIT_DEFAULT:
            phase = rng.uniform(0.0, cfg.wavelength, size=(n, n))
        else:
            phase = np.zeros((n, n))
        layers.append(ModulationLayer(amp, phase, cfg.wavenumber))
    return layers


def modulate(u: ComplexField, layer: ModulationLayer) -> ComplexField:
    """Apply the layer mask elementwise: out = u * amp * exp(j k phase)."""
    if u.n != layer.n:
        raise ValueError(f"field size {u.n} does not match layer size {layer.n}")
    data = np.ascontiguousarray(u.data, dtype=np.complex128)
    out = kernels.modulate(data[None], layer.amp, layer.phase, layer.wavenumber)[0]
    return ComplexField(out, u.pitch)


def forward_arrays(x: np.ndarray, h: np.ndarray, layers: list, wavenumber: float):
    """Batched forward pass on raw arrays; returns (detector, cache list).

    x has shape (batch, n, n); the cache holds the incident field at every
    layer followed by the detector field, each (batch, n, n).
    """
    x = apply_transfer(x, h)
    cache = [x]
    for layer in layers:
        x = kernels.modulate(x, layer.amp, layer.phase, wavenumber)
        x = apply_transfer(x, h)
        cache.append(x)
    return x, cache


def forward(cfg: NetConfig, layers: list, u: ComplexField):
    """Full forward pass of one sample.

    Returns the detector-plane field and the per-layer cache required by
    the backward sweep.
    """
    if len(layers) != cfg.num_layers:
        raise ValueError(f"expected {cfg.num_layers} layers, got {len(layers)}")
    if u.n != cfg.grid_size:
        raise ValueError(f"input size {u.n} does not match configured grid {cfg.grid_size}")
    for layer in layers:
        if layer.n != cfg.grid_size:
            raise ValueError(f"layer size {layer.n} does not match configured grid {cfg.grid_size}")
    h = cfg.transfer().values
    data = np.ascontiguousarray(u.data, dtype=np.complex128)
    detector, cache = forward_arrays(data[None], h, layers, cfg.wavenumber)
    fields = tuple(ComplexField(c[0], u.pitch) for c in cache)
    return fields[-1], ForwardCache(fields=fields)


def param_count(cfg: NetConfig) -> int:
    """Number of trainable scalars: M * N^2 * 2 (amplitude + phase per pixel)."""
    return cfg.num_layers * cfg.grid_size**2 * 2
