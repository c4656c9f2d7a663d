"""Adam optimization, the epoch loop, evaluation and checkpoint I/O."""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from . import kernels
from .classify import DetectorLayout, batch_losses, cotangent_arrays, region_energies_arrays
from .autograd import backward_arrays
from .network import ModulationLayer, NetConfig, forward_arrays

CHECKPOINT_MAGIC = b"EMWV"
CHECKPOINT_VERSION = 1
# magic, version u16, then f64 freq/wavelength/spacing/pitch, u32 grid, u32 layer count
_HEADER = struct.Struct("<4sHddddII")


class DivergenceError(RuntimeError):
    """Raised when the training loss turns non-finite."""


@dataclass
class TrainConfig:
    """Optimization settings; defaults follow the step-decay schedule of
    halving the 0.1 initial rate every 20 epochs over a 200-epoch run."""

    lr0: float = 0.1
    decay_every: int = 20
    decay_factor: float = 0.5
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    grad_clip: float | None = None  # optional global-norm clip; off by default

    def __post_init__(self):
        if self.lr0 < 0:
            raise ValueError(f"lr0 must be non-negative, got {self.lr0}")
        if not (0 < self.decay_factor <= 1):
            raise ValueError(f"decay_factor must be in (0, 1], got {self.decay_factor}")
        if self.decay_every < 1:
            raise ValueError(f"decay_every must be >= 1, got {self.decay_every}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.grad_clip is not None and not (self.grad_clip > 0):
            raise ValueError(f"grad_clip must be positive when set, got {self.grad_clip}")


@dataclass
class AdamState:
    """First/second moment grids mirroring the layer parameters."""

    m_amp: list
    v_amp: list
    m_phase: list
    v_phase: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_layers(cls, layers) -> "AdamState":
        zeros = lambda l: np.zeros_like(l.amp)
        return cls(
            m_amp=[zeros(l) for l in layers],
            v_amp=[zeros(l) for l in layers],
            m_phase=[zeros(l) for l in layers],
            v_phase=[zeros(l) for l in layers],
        )


def adam_step(layers, grads, state: AdamState, lr: float):
    """One Adam update applied in place to every amp and phase grid.

    Rejects non-finite gradients before touching any state so a bad step
    never corrupts the parameters.
    """
    if len(grads.amp) != len(layers):
        raise ValueError(f"gradient count {len(grads.amp)} does not match {len(layers)} layers")
    for ga, gp in zip(grads.amp, grads.phase):
        if not (np.all(np.isfinite(ga)) and np.all(np.isfinite(gp))):
            raise ValueError("non-finite gradient: Adam step rejected")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for i, layer in enumerate(layers):
        kernels.adam_update(
            layer.amp, grads.amp[i], state.m_amp[i], state.v_amp[i], lr, state.beta1, state.beta2, state.eps, bc1, bc2
        )
        kernels.adam_update(
            layer.phase,
            grads.phase[i],
            state.m_phase[i],
            state.v_phase[i],
            lr,
            state.beta1,
            state.beta2,
            state.eps,
            bc1,
            bc2,
        )
    return layers, state


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Step decay: lr0 * decay_factor ** floor(epoch / decay_every)."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return cfg.lr0 * cfg.decay_factor ** (epoch // cfg.decay_every)


@dataclass
class EpochStats:
    epoch: int
    lr: float
    mean_loss: float
    train_acc: float


class _SimpleGrads:
    def __init__(self, amp, phase):
        self.amp = amp
        self.phase = phase


def _stack_dataset(dataset, cfg: NetConfig):
    if not dataset:
        raise ValueError("dataset is empty")
    fields = np.empty((len(dataset), cfg.grid_size, cfg.grid_size), dtype=np.complex128)
    labels = np.empty(len(dataset), dtype=np.int64)
    for i, sample in enumerate(dataset):
        if len(sample.labels) != 1:
            raise ValueError(f"sample {i} is multi-label; the trainer accepts single-label samples only")
        if sample.field.n != cfg.grid_size:
            raise ValueError(f"sample {i} size {sample.field.n} does not match grid {cfg.grid_size}")
        fields[i] = sample.field.data
        labels[i] = sample.label
    return fields, labels


def _dataset_metrics(fields, labels, layers, layout, h, wavenumber, chunk=128):
    """Mean loss and accuracy of the current parameters over a dataset."""
    loss_sum = 0.0
    hits = 0
    for start in range(0, len(labels), chunk):
        x = fields[start : start + chunk]
        y = labels[start : start + chunk]
        detector, _ = forward_arrays(x, h, layers, wavenumber)
        per_class, totals = region_energies_arrays(detector, layout)
        loss_sum += float(batch_losses(per_class, totals, y).sum())
        hits += int(np.sum(np.argmax(per_class, axis=1) == y))
    return loss_sum / len(labels), hits / len(labels)


def fit(
    net_cfg: NetConfig,
    layers,
    trainset,
    layout: DetectorLayout,
    train_cfg: TrainConfig,
    checkpoint_path=None,
    log=None,
):
    """Train the layer stack; returns (layers, history).

    Seeded mini-batch shuffling, forward/backward over each batch, Adam
    update per batch. After each epoch's updates the history records the
    mean loss and accuracy of a clean pass over the training set, so the
    last entry agrees exactly with evaluating the saved checkpoint on the
    same data. Fully deterministic given (seed, config, dataset). When the
    loss turns non-finite the parameters are rolled back to the last
    completed epoch (also on disk if ``checkpoint_path`` is given) and
    DivergenceError is raised.
    """
    fields, labels = _stack_dataset(trainset, net_cfg)
    if labels.max() >= layout.num_classes:
        raise ValueError(f"label {labels.max()} outside the {layout.num_classes}-class layout")
    h = net_cfg.transfer().values
    k = net_cfg.wavenumber
    state = AdamState.for_layers(layers)
    rng = np.random.default_rng(train_cfg.seed)
    history = []
    snapshot = [layer.copy() for layer in layers]
    num = len(trainset)

    for epoch in range(train_cfg.epochs):
        lr = lr_schedule(epoch, train_cfg)
        order = rng.permutation(num)
        diverged = False
        for start in range(0, num, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            x = fields[idx]
            y = labels[idx]
            detector, cache = forward_arrays(x, h, layers, k)
            per_class, totals = region_energies_arrays(detector, layout)
            losses = batch_losses(per_class, totals, y)
            if not np.all(np.isfinite(losses)):
                diverged = True
                break
            cot = cotangent_arrays(detector, per_class, totals, y, layout)
            cot *= 1.0 / len(idx)
            d_amp, d_phase = backward_arrays(cot, cache, layers, k, h)
            grads = _SimpleGrads(d_amp, d_phase)
            if train_cfg.grad_clip is not None:
                _clip_global_norm(grads, train_cfg.grad_clip)
            adam_step(layers, grads, state, lr)
        if not diverged:
            mean_loss, train_acc = _dataset_metrics(fields, labels, layers, layout, h, k)
            diverged = not np.isfinite(mean_loss)
        if diverged:
            for layer, saved in zip(layers, snapshot):
                layer.amp[:] = saved.amp
                layer.phase[:] = saved.phase
            if checkpoint_path is not None:
                save_checkpoint(layers, net_cfg, checkpoint_path)
            raise DivergenceError(
                f"non-finite loss at epoch {epoch}; parameters rolled back to epoch {epoch - 1}"
            )
        stats = EpochStats(epoch=epoch, lr=lr, mean_loss=mean_loss, train_acc=train_acc)
        history.append(stats)
        snapshot = [layer.copy() for layer in layers]
        if checkpoint_path is not None:
            save_checkpoint(layers, net_cfg, checkpoint_path)
        if log is not None:
            log(stats)
    return layers, history


def _clip_global_norm(grads, max_norm: float):
    total = 0.0
    for g in grads.amp + grads.phase:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.amp + grads.phase:
            g *= scale


def evaluate(net_cfg: NetConfig, layers, dataset, layout: DetectorLayout, chunk: int = 64):
    """Accuracy and C x C confusion matrix (rows true, columns predicted)."""
    fields, labels = _stack_dataset(dataset, net_cfg)
    if labels.max() >= layout.num_classes:
        raise ValueError(f"label {labels.max()} outside the {layout.num_classes}-class layout")
    h = net_cfg.transfer().values
    confusion = np.zeros((layout.num_classes, layout.num_classes), dtype=np.int64)
    for start in range(0, len(dataset), chunk):
        x = fields[start : start + chunk]
        detector, _ = forward_arrays(x, h, layers, net_cfg.wavenumber)
        per_class, _ = region_energies_arrays(detector, layout)
        pred = np.argmax(per_class, axis=1)
        for t, p in zip(labels[start : start + chunk], pred):
            confusion[t, p] += 1
    accuracy = float(np.trace(confusion)) / len(dataset)
    return accuracy, confusion


def write_bytes_atomic(path, payload: bytes):
    """Write via a temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(layers, net_cfg: NetConfig, path):
    """Serialize config + parameters; canonical bytes for a given state."""
    for i, layer in enumerate(layers):
        if layer.n != net_cfg.grid_size:
            raise ValueError(f"layer {i} size {layer.n} does not match configured grid {net_cfg.grid_size}")
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        net_cfg.freq_hz,
        net_cfg.wavelength,
        net_cfg.spacing,
        net_cfg.pitch,
        net_cfg.grid_size,
        len(layers),
    )
    chunks = [header]
    for layer in layers:
        chunks.append(np.ascontiguousarray(layer.amp, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(layer.phase, dtype="<f8").tobytes())
    write_bytes_atomic(path, b"".join(chunks))


def load_checkpoint(path):
    """Restore (layers, net_cfg); validates magic, version and exact size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"checkpoint {path} truncated: {len(blob)} bytes, header needs {_HEADER.size}")
    magic, version, freq_hz, wavelength, spacing, pitch, grid, count = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"checkpoint {path} has bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint {path} has unsupported version {version}")
    net_cfg = NetConfig(
        freq_hz=freq_hz,
        wavelength=wavelength,
        num_layers=count,
        grid_size=grid,
        spacing=spacing,
        pitch=pitch,
    )
    grid_bytes = grid * grid * 8
    expected = _HEADER.size + count * 2 * grid_bytes
    if len(blob) != expected:
        raise ValueError(f"checkpoint {path} has {len(blob)} bytes, expected {expected}")
    layers = []
    offset = _HEADER.size
    for _ in range(count):
        amp = np.frombuffer(blob, dtype="<f8", count=grid * grid, offset=offset).reshape(grid, grid)
        offset += grid_bytes
        phase = np.frombuffer(blob, dtype="<f8", count=grid * grid, offset=offset).reshape(grid, grid)
        offset += grid_bytes
        layers.append(ModulationLayer(amp.copy(), phase.copy(), net_cfg.wavenumber))
    return layers, net_cfg
