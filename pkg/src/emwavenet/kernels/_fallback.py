"""Pure-NumPy implementations of the hot elementwise kernels.

Semantics are shared with the compiled module ``_core``; the backend is
chosen once at import time in ``kernels/__init__``. Shapes: fields are
(batch, n, n) complex128, parameter grids are (n, n) float64.
"""

from __future__ import annotations

import numpy as np


def modulate(u, amp, phase, k):
    """u * a * exp(j k phase), broadcast over the batch axis."""
    t = amp * np.exp(1j * k * phase)
    return u * t


def modulation_backward(g, m, amp, phase, k):
    """Backward sweep through one modulation layer.

    g is the loss cotangent at the layer output, m the cached incident
    field. Returns per-pixel parameter gradients summed over the batch and
    the cotangent propagated to the incident field:

        q       = m * conj(g) * exp(j k phase)
        d_amp   = 2 Re q               (summed over batch)
        d_phase = -2 k a Im q          (summed over batch)
        g_prev  = a * exp(-j k phase) * g
    """
    e = np.exp(1j * k * phase)
    q = m * np.conj(g) * e
    d_amp = 2.0 * np.sum(q.real, axis=0)
    d_phase = (-2.0 * k) * amp * np.sum(q.imag, axis=0)
    g_prev = (amp * np.conj(e)) * g
    return d_amp, d_phase, g_prev


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """In-place Adam step on one parameter grid.

    bc1/bc2 are the bias corrections 1 - beta^t for the current step count.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
