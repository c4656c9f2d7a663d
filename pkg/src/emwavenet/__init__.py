"""Trainable free-space microwave propagation network for complex-valued
SAR target recognition.

A classifier whose layers are angular-spectrum propagation hops through
vacuum interleaved with learnable per-pixel amplitude/phase masks; class
decisions are read out as energy in detector-plane regions and training
uses analytic gradients of an energy-ratio loss.
"""

from .field import ComplexField, FreqGrid, fft2, freq_grid, ifft2, total_energy
from .propagation import (
    TransferFunction,
    adjoint_propagate,
    exact_transfer,
    fresnel_transfer,
    propagate,
    rayleigh_sommerfeld_kernel,
)
from .network import (
    ForwardCache,
    ModulationLayer,
    NetConfig,
    forward,
    init_layers,
    modulate,
    param_count,
)
from .classify import (
    DetectorLayout,
    EnergyReadout,
    Rect,
    default_layout,
    predict,
    predict_multi,
    region_energies,
    snr_loss,
    snr_loss_grad_field,
)
from .autograd import ParamGrads, backward, finite_diff_grads
from .train import (
    AdamState,
    DivergenceError,
    TrainConfig,
    adam_step,
    evaluate,
    fit,
    load_checkpoint,
    lr_schedule,
    save_checkpoint,
)
from .data import (
    NoiseChip,
    Sample,
    add_noise_snr,
    embed,
    random_mask_noise,
    read_cf,
    superpose,
    synth_dataset,
    write_cf,
)
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "FreqGrid",
    "fft2",
    "ifft2",
    "freq_grid",
    "total_energy",
    "TransferFunction",
    "fresnel_transfer",
    "exact_transfer",
    "propagate",
    "adjoint_propagate",
    "rayleigh_sommerfeld_kernel",
    "NetConfig",
    "ModulationLayer",
    "ForwardCache",
    "init_layers",
    "modulate",
    "forward",
    "param_count",
    "DetectorLayout",
    "Rect",
    "EnergyReadout",
    "default_layout",
    "region_energies",
    "predict",
    "predict_multi",
    "snr_loss",
    "snr_loss_grad_field",
    "ParamGrads",
    "backward",
    "finite_diff_grads",
    "TrainConfig",
    "AdamState",
    "DivergenceError",
    "adam_step",
    "lr_schedule",
    "fit",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
    "Sample",
    "NoiseChip",
    "synth_dataset",
    "read_cf",
    "write_cf",
    "embed",
    "superpose",
    "add_noise_snr",
    "random_mask_noise",
    "backend_name",
    "__version__",
]
