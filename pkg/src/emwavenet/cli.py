"""Command-line front end.

Subcommands: synth (dataset generation), train, eval, gradcheck
(analytic-vs-finite-difference verification), interfere (superposition /
noise-overlay / random-mask protocols). Exit codes: 0 success, 1
validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import autograd, classify, data, network, train
from .config import RunConfig, load_run_config
from .field import ComplexField
from .kernels import backend_name


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _write_csv(path, header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    train.write_bytes_atomic(path, ("\n".join(lines) + "\n").encode())


def cmd_synth(args) -> int:
    samples = data.synth_dataset(args.classes, args.per_class, args.n, args.seed, pitch=args.pitch)
    os.makedirs(args.out, exist_ok=True)
    count = data.write_dataset(samples, args.out)
    for i in range(args.noise_chips):
        chip = data.synth_noise_chip(args.n, data.per_item_seed(args.seed, 1_000_000 + i), pitch=args.pitch)
        noise_dir = os.path.join(args.out, "noise")
        os.makedirs(noise_dir, exist_ok=True)
        data.write_cf(chip.field, os.path.join(noise_dir, f"chip_{i:03d}.cf32"))
    print(f"wrote {count} samples across {args.classes} classes to {args.out}")
    if args.noise_chips:
        print(f"wrote {args.noise_chips} noise chips to {os.path.join(args.out, 'noise')}")
    return 0


def _require_dir(path, what: str):
    if not os.path.isdir(path):
        raise FileNotFoundError(f"{what} directory {path} does not exist")


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    _require_dir(cfg.paths.train_dir, "train")
    trainset = data.load_dataset(cfg.paths.train_dir)
    layers = network.init_layers(cfg.net, seed=cfg.train.seed)
    os.makedirs(os.path.dirname(cfg.paths.checkpoint) or ".", exist_ok=True)
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    print(f"training {cfg.net.num_layers} layers on {len(trainset)} samples [{backend_name()} kernels]")
    layers, history = train.fit(
        cfg.net,
        layers,
        trainset,
        cfg.layout,
        cfg.train,
        checkpoint_path=cfg.paths.checkpoint,
        log=lambda s: print(f"epoch {s.epoch:4d}  lr {s.lr:.5f}  loss {s.mean_loss:.5f}  acc {s.train_acc:.4f}"),
    )
    metrics_path = os.path.join(cfg.paths.out_dir, "train_metrics.csv")
    _write_csv(
        metrics_path,
        "epoch,lr,mean_loss,train_acc",
        [(s.epoch, s.lr, s.mean_loss, s.train_acc) for s in history],
    )
    print(f"checkpoint: {cfg.paths.checkpoint}")
    print(f"metrics: {metrics_path}")
    return 0


def _load_net(args, cfg: RunConfig):
    ckpt = args.checkpoint or cfg.paths.checkpoint
    if not os.path.isfile(ckpt):
        raise FileNotFoundError(f"checkpoint {ckpt} does not exist")
    layers, net_cfg = train.load_checkpoint(ckpt)
    if net_cfg.grid_size != cfg.layout.n:
        raise ValueError(
            f"checkpoint grid {net_cfg.grid_size} does not match layout size {cfg.layout.n}"
        )
    return layers, net_cfg


def _energy_maps(net_cfg, layers, dataset, layout, out_dir):
    from PIL import Image

    h = net_cfg.transfer().values
    sums = np.zeros((layout.num_classes, net_cfg.grid_size, net_cfg.grid_size))
    counts = np.zeros(layout.num_classes, dtype=np.int64)
    for start in range(0, len(dataset), 64):
        chunk = dataset[start : start + 64]
        x = np.stack([s.field.data for s in chunk]).astype(np.complex128)
        detector, _ = network.forward_arrays(x, h, layers, net_cfg.wavenumber)
        intensity = detector.real**2 + detector.imag**2
        totals = intensity.sum(axis=(-2, -1))
        for s, inten, tot in zip(chunk, intensity, totals):
            if tot > 0:
                sums[s.label] += inten / tot
                counts[s.label] += 1
    paths = []
    for c in range(layout.num_classes):
        img = sums[c] / max(int(counts[c]), 1)
        peak = img.max()
        u8 = np.zeros_like(img, dtype=np.uint8) if peak <= 0 else np.uint8(np.round(img / peak * 255.0))
        path = os.path.join(out_dir, f"class_{c}.png")
        tmp = path + ".tmp"
        Image.fromarray(u8, mode="L").save(tmp, format="PNG")
        os.replace(tmp, path)
        paths.append(path)
    return paths


def cmd_eval(args) -> int:
    cfg = load_run_config(args.config)
    _require_dir(cfg.paths.test_dir, "test")
    layers, net_cfg = _load_net(args, cfg)
    dataset = data.load_dataset(cfg.paths.test_dir)
    accuracy, confusion = train.evaluate(net_cfg, layers, dataset, cfg.layout)
    print(f"accuracy: {accuracy:.4f} over {len(dataset)} samples")
    print("confusion (rows true, cols predicted):")
    for row in confusion:
        print("  " + " ".join(f"{v:5d}" for v in row))
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    for path in _energy_maps(net_cfg, layers, dataset, cfg.layout, cfg.paths.out_dir):
        print(f"energy map: {path}")
    return 0


def cmd_gradcheck(args) -> int:
    wavelength, pitch, spacing = 0.03, 0.01, 0.5
    net_cfg = network.NetConfig(
        freq_hz=9.6e9,
        wavelength=wavelength,
        num_layers=args.layers,
        grid_size=args.n,
        spacing=spacing,
        pitch=pitch,
    )
    rng = np.random.default_rng(args.seed)
    layers = []
    for _ in range(args.layers):
        amp = rng.uniform(0.5, 1.5, (args.n, args.n))
        phase = rng.uniform(0.0, wavelength, (args.n, args.n))
        layers.append(network.ModulationLayer(amp, phase, net_cfg.wavenumber))
    side = max(2, args.n // 8)
    layout = classify.DetectorLayout(regions=classify.lattice_regions(args.n, 3, side, 3), n=args.n)
    u = ComplexField(rng.standard_normal((args.n, args.n)) + 1j * rng.standard_normal((args.n, args.n)), pitch)
    sample = data.Sample(u, frozenset({int(rng.integers(0, 3))}))
    analytic = autograd.grads_of(net_cfg, layers, sample.field, layout, sample.label)
    fd = autograd.finite_diff_grads(net_cfg, layers, sample, layout)
    err = autograd.max_relative_error(analytic, fd)
    print(f"max relative error analytic vs finite differences: {err:.3e} (tol {args.tol:.1e})")
    return 0 if err <= args.tol else 2


def _superpose_protocol(net_cfg, layers, dataset, layout, combos, seed):
    by_label = {}
    for s in dataset:
        by_label.setdefault(s.label, []).append(s)
    labels = sorted(by_label)
    rows = []
    for k in (1, 2, 3):
        if k > len(labels):
            raise ValueError(f"superpose mode with k={k} needs at least {k} classes, found {len(labels)}")
        if k == 1:
            # degenerate protocol: every sample once, identical to plain eval
            hits = sum(
                1
                for s in dataset
                if classify.predict_multi(
                    classify.region_energies(network.forward(net_cfg, layers, s.field)[0], layout), 1
                )
                == {s.label}
            )
            rows.append((1, hits / len(dataset)))
            continue
        hits = 0
        for i in range(combos):
            rng = np.random.default_rng(data.per_item_seed(seed, k * 10_000_000 + i))
            chosen = rng.choice(len(labels), size=k, replace=False)
            parts = [by_label[labels[c]][int(rng.integers(0, len(by_label[labels[c]])))] for c in chosen]
            mixed = data.superpose(parts)
            detector, _ = network.forward(net_cfg, layers, mixed.field)
            readout = classify.region_energies(detector, layout)
            if classify.predict_multi(readout, k) == set(mixed.labels):
                hits += 1
        rows.append((k, hits / combos))
    return rows


def _snr_protocol(net_cfg, layers, dataset, layout, chips, seed):
    rows = []
    for snr_db in range(-10, 11, 2):
        hits = 0
        for i, sample in enumerate(dataset):
            rng_seed = data.per_item_seed(seed, snr_db * 1_000_000 + i)
            chip = chips[i % len(chips)]
            noisy = data.add_noise_snr(sample, chip, float(snr_db), rng_seed)
            detector, _ = network.forward(net_cfg, layers, noisy.field)
            if classify.predict(classify.region_energies(detector, layout)) == sample.label:
                hits += 1
        rows.append((snr_db, hits / len(dataset)))
    return rows


def _mask_protocol(net_cfg, layers, dataset, layout, chips, seed, snr_db):
    window = data.central_window_side(net_cfg.grid_size)
    rows = []
    for percent in range(10, 91, 10):
        side = int(round(np.sqrt(percent / 100.0) * window))
        hits = 0
        for i, sample in enumerate(dataset):
            rng_seed = data.per_item_seed(seed, percent * 1_000_000 + i)
            chip = chips[i % len(chips)]
            masked = data.random_mask_noise(sample, chip, (side, side), snr_db, rng_seed)
            detector, _ = network.forward(net_cfg, layers, masked.field)
            if classify.predict(classify.region_energies(detector, layout)) == sample.label:
                hits += 1
        rows.append((percent / 100.0, hits / len(dataset)))
    return rows


def cmd_interfere(args) -> int:
    cfg = load_run_config(args.config)
    _require_dir(cfg.paths.test_dir, "test")
    layers, net_cfg = _load_net(args, cfg)
    dataset = data.load_dataset(cfg.paths.test_dir)
    if args.mode == "superpose":
        rows = _superpose_protocol(net_cfg, layers, dataset, cfg.layout, args.combos, args.seed)
    else:
        if cfg.paths.noise_dir is None:
            raise ValueError(f"[paths] noise_dir is required for interfere mode {args.mode!r}")
        chips = data.load_noise_chips(cfg.paths.noise_dir)
        if args.mode == "snr":
            rows = _snr_protocol(net_cfg, layers, dataset, cfg.layout, chips, args.seed)
        else:
            rows = _mask_protocol(net_cfg, layers, dataset, cfg.layout, chips, args.seed, args.mask_snr_db)
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    out = os.path.join(cfg.paths.out_dir, f"interfere_{args.mode}.csv")
    _write_csv(out, "param,accuracy", rows)
    for param, acc in rows:
        print(f"{args.mode} {param}: accuracy {acc:.4f}")
    print(f"results: {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emwavenet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic point-scatterer dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--pitch", type=float, default=0.01)
    p.add_argument("--noise-chips", type=int, default=0, help="also write clutter chips under <out>/noise")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a network from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test set")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("interfere", help="run an interference protocol over the test set")
    p.add_argument("--mode", choices=("superpose", "snr", "mask"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--combos", type=int, default=100, help="superpose mode: draws per target count")
    p.add_argument("--mask-snr-db", type=float, default=0.0, help="mask mode: patch-local SNR in dB")
    p.set_defaults(func=cmd_interfere)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except train.DivergenceError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
