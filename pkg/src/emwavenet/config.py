"""Run configuration: an INI document with [net], [train], [layout] and
[paths] sections.

Relative paths are resolved against the directory containing the config
file. The [layout] section either names a class count (standard layout)
or lists explicit ``regions = x0,y0,w,h; x0,y0,w,h; ...`` rectangles.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .classify import DetectorLayout, Rect, default_layout
from .network import NetConfig
from .train import TrainConfig


@dataclass(frozen=True)
class RunPaths:
    train_dir: str
    test_dir: str
    noise_dir: str | None
    checkpoint: str
    out_dir: str


@dataclass(frozen=True)
class RunConfig:
    net: NetConfig
    train: TrainConfig
    layout: DetectorLayout
    paths: RunPaths


class ConfigError(ValueError):
    """Config parse/validation failure with a field-level message."""


def _get(parser, section: str, key: str, cast, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"config [{section}] is missing required key '{key}'")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config [{section}] {key}: cannot parse {raw!r} as {cast.__name__}") from None


def _parse_regions(raw: str) -> tuple:
    regions = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        nums = [p.strip() for p in part.split(",")]
        if len(nums) != 4:
            raise ConfigError(f"config [layout] regions: expected 'x0,y0,w,h', got {part!r}")
        try:
            regions.append(Rect(*(int(v) for v in nums)))
        except ValueError:
            raise ConfigError(f"config [layout] regions: non-integer value in {part!r}") from None
    if not regions:
        raise ConfigError("config [layout] regions is empty")
    return tuple(regions)


def load_run_config(path) -> RunConfig:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    for section in ("net", "layout", "paths"):
        if not parser.has_section(section):
            raise ConfigError(f"config is missing the [{section}] section")

    try:
        net = NetConfig(
            freq_hz=_get(parser, "net", "freq_hz", float, required=True),
            wavelength=_get(parser, "net", "wavelength", float, required=True),
            num_layers=_get(parser, "net", "layers", int, required=True),
            grid_size=_get(parser, "net", "grid", int, required=True),
            spacing=_get(parser, "net", "spacing", float, required=True),
            pitch=_get(parser, "net", "pitch", float, required=True),
        )
    except ValueError as exc:
        raise ConfigError(f"config [net]: {exc}") from None

    clip = _get(parser, "train", "grad_clip", float) if parser.has_section("train") else None
    try:
        train = TrainConfig(
            lr0=_get(parser, "train", "lr0", float, default=0.1),
            decay_every=_get(parser, "train", "decay_every", int, default=20),
            decay_factor=_get(parser, "train", "decay_factor", float, default=0.5),
            epochs=_get(parser, "train", "epochs", int, default=200),
            batch_size=_get(parser, "train", "batch_size", int, default=32),
            seed=_get(parser, "train", "seed", int, default=0),
            grad_clip=clip,
        )
    except ValueError as exc:
        raise ConfigError(f"config [train]: {exc}") from None

    try:
        if parser.has_option("layout", "regions"):
            layout = DetectorLayout(regions=_parse_regions(parser.get("layout", "regions")), n=net.grid_size)
        else:
            classes = _get(parser, "layout", "classes", int, required=True)
            layout = default_layout(net.grid_size, classes)
    except ValueError as exc:
        raise ConfigError(f"config [layout]: {exc}") from None

    base = os.path.dirname(os.path.abspath(path))
    resolve = lambda p: p if p is None or os.path.isabs(p) else os.path.normpath(os.path.join(base, p))
    paths = RunPaths(
        train_dir=resolve(_get(parser, "paths", "train_dir", str, required=True)),
        test_dir=resolve(_get(parser, "paths", "test_dir", str, required=True)),
        noise_dir=resolve(_get(parser, "paths", "noise_dir", str)),
        checkpoint=resolve(_get(parser, "paths", "checkpoint", str, required=True)),
        out_dir=resolve(_get(parser, "paths", "out_dir", str, required=True)),
    )
    return RunConfig(net=net, train=train, layout=layout, paths=paths)
