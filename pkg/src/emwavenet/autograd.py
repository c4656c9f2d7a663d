"""Analytic parameter gradients of the energy-ratio loss.

The network is a chain of linear maps (propagation, elementwise masks), so
the reverse sweep is: adjoint-propagate the detector-plane cotangent into
the last layer, emit the amplitude/phase gradients there from the cached
incident field, multiply by the conjugate mask, and repeat toward the
input. An independent central-finite-difference oracle is provided; it is
the arbiter of correctness for the analytic sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .classify import DetectorLayout, region_energies, snr_loss, snr_loss_grad_field
from .field import ComplexField
from .network import ForwardCache, NetConfig, forward
from .propagation import apply_transfer


@dataclass
class ParamGrads:
    """Per-layer gradients d_amp (dimensionless^-1) and d_phase (1/m)."""

    amp: list
    phase: list

    def __len__(self) -> int:
        return len(self.amp)


def backward_arrays(cotangent: np.ndarray, cache: list, layers: list, wavenumber: float, h: np.ndarray):
    """Batched reverse sweep on raw arrays.

    ``cotangent`` is the detector-plane cotangent (batch, n, n); ``cache``
    the list produced by forward_arrays. Returns gradients summed over the
    batch; callers divide by the batch size for a mean reduction.
    """
    num_layers = len(layers)
    d_amp = [None] * num_layers
    d_phase = [None] * num_layers
    h_conj = np.conj(h)
    g = cotangent
    for l in range(num_layers - 1, -1, -1):
        g = apply_transfer(g, h_conj)
        d_amp[l], d_phase[l], g = kernels.modulation_backward(
            g, cache[l], layers[l].amp, layers[l].phase, wavenumber
        )
    return d_amp, d_phase


def backward(cfg: NetConfig, layers: list, cache: ForwardCache, cotangent: ComplexField) -> ParamGrads:
    """Gradients of the scalar loss whose detector cotangent is given.

    ``cache`` must come from ``forward`` on the same layer stack.
    """
    if len(cache) != len(layers) + 1:
        raise ValueError(f"cache length {len(cache)} does not match {len(layers)} layers + detector")
    if cotangent.n != cfg.grid_size:
        raise ValueError(f"cotangent size {cotangent.n} does not match grid {cfg.grid_size}")
    for f in cache.fields:
        if f.n != cfg.grid_size:
            raise ValueError("cache field size does not match configured grid")
    h = cfg.transfer().values
    cache_arrays = [np.ascontiguousarray(f.data, dtype=np.complex128)[None] for f in cache.fields]
    cot = np.ascontiguousarray(cotangent.data, dtype=np.complex128)[None]
    d_amp, d_phase = backward_arrays(cot, cache_arrays, layers, cfg.wavenumber, h)
    return ParamGrads(amp=d_amp, phase=d_phase)


def loss_of(cfg: NetConfig, layers: list, u: ComplexField, layout: DetectorLayout, label: int) -> float:
    """Scalar SNR loss of one sample under the current parameters."""
    detector, _ = forward(cfg, layers, u)
    return snr_loss(region_energies(detector, layout), label)


def grads_of(cfg: NetConfig, layers: list, u: ComplexField, layout: DetectorLayout, label: int) -> ParamGrads:
    """Analytic gradients of the per-sample loss (forward + backward)."""
    detector, cache = forward(cfg, layers, u)
    cot = snr_loss_grad_field(detector, layout, label)
    return backward(cfg, layers, cache, cot)


def finite_diff_grads(
    cfg: NetConfig,
    layers: list,
    sample,
    layout: DetectorLayout,
    amp_step: float = 1e-6,
    phase_step: float = 1e-7,
) -> ParamGrads:
    """Central finite differences of the loss per parameter (oracle).

    Runs a full forward pass for every probe; intended for small grids
    (<= 32 x 32). ``sample`` provides ``field`` and ``label``.
    """
    u, label = sample.field, sample.label
    d_amp = []
    d_phase = []
    for layer in layers:
        ga = np.zeros_like(layer.amp)
        gp = np.zeros_like(layer.phase)
        for grid, grad, step in ((layer.amp, ga, amp_step), (layer.phase, gp, phase_step)):
            it = np.nditer(grid, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = grid[idx]
                grid[idx] = orig + step
                lo_hi = loss_of(cfg, layers, u, layout, label)
                grid[idx] = orig - step
                lo_lo = loss_of(cfg, layers, u, layout, label)
                grid[idx] = orig
                grad[idx] = (lo_hi - lo_lo) / (2.0 * step)
        d_amp.append(ga)
        d_phase.append(gp)
    return ParamGrads(amp=d_amp, phase=d_phase)


def max_relative_error(analytic: ParamGrads, reference: ParamGrads, floor: float = 1e-12) -> float:
    """Largest elementwise |a - r| / |r| over entries with |r| > floor."""
    worst = 0.0
    for pair in (zip(analytic.amp, reference.amp), zip(analytic.phase, reference.phase)):
        for a, r in pair:
            mask = np.abs(r) > floor
            if not mask.any():
                continue
            rel = np.abs(a[mask] - r[mask]) / np.abs(r[mask])
            worst = max(worst, float(rel.max()))
    return worst
