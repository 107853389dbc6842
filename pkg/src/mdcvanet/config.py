"""Scenario configuration: INI files with sections, plus bundled presets."""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .channel import BackgroundSource, BernoulliLoss, ChannelModel, GilbertElliottLoss, Occupancy
from .edca import DEFAULT_QUEUE_CAPACITY, DEFAULT_RETRY_LIMIT, SIFS_US, SLOT_US, parameter_set
from .errors import ConfigError
from .mapper import MAPPERS, MapperConfig
from .trace import DEFAULT_LATENCY_BUDGET_MS, DEFAULT_MTU, Description

PRESETS = ("scenario1", "scenario2")
OUTPUT_DIR_ENV = "MDCVANET_OUTPUT_DIR"


@dataclass(frozen=True)
class LossConfig:
    model: str = "bernoulli"  # or "gilbert_elliott"
    p_loss: float = 0.0
    p_good_to_bad: float = 0.0
    p_bad_to_good: float = 1.0
    loss_good: float = 0.0
    loss_bad: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    trace_path: Path
    name: str = "scenario"
    mapper: str = "adaptive"
    mapper_config: MapperConfig = field(default_factory=MapperConfig)
    parameter_set: str = "SCH"
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    retry_limit: int = DEFAULT_RETRY_LIMIT
    sifs_us: float = SIFS_US
    slot_us: float = SLOT_US
    phy_rate: float = 6e6  # bit/s
    tx_overhead_us: float = 0.0
    loss: LossConfig = field(default_factory=LossConfig)
    busy_mean_ms: float = 0.0
    idle_mean_ms: float = 1.0
    background: tuple[BackgroundSource, ...] = ()
    mtu: int = DEFAULT_MTU
    latency_budget_ms: float = DEFAULT_LATENCY_BUDGET_MS
    seed: int = 0
    sample_period_ms: float = 10.0
    duration_ms: float | None = None  # defaults to the trace play time
    output_dir: Path | None = None

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def ac_configs(self):
        return parameter_set(self.parameter_set, self.queue_capacity)

    def build_channel(self) -> ChannelModel:
        """A fresh channel model; Gilbert-Elliott state is per run."""
        if self.loss.model == "gilbert_elliott":
            loss = GilbertElliottLoss(
                self.loss.p_good_to_bad, self.loss.p_bad_to_good, self.loss.loss_good, self.loss.loss_bad
            )
        else:
            loss = BernoulliLoss(self.loss.p_loss)
        return ChannelModel(loss, Occupancy(self.busy_mean_ms, self.idle_mean_ms))

    def validate(self) -> None:
        def fail(msg, fld):
            raise ConfigError(msg, field=fld)

        if self.mapper not in MAPPERS:
            fail(f"unknown mapper {self.mapper!r}; use one of {', '.join(MAPPERS)}", "mapper.mapper")
        if not 0 <= self.seed < 1 << 64:
            fail("seed must be an unsigned 64-bit value", "scenario.seed")
        if not self.trace_path.is_file():
            raise ConfigError(f"trace file not found: {self.trace_path}", field="scenario.trace")
        checks = [
            (self.phy_rate > 0, "phy_rate must be > 0", "mac.phy_rate_mbps"),
            (self.tx_overhead_us >= 0, "tx_overhead_us must be >= 0", "mac.tx_overhead_us"),
            (self.retry_limit >= 0, "retry_limit must be >= 0", "mac.retry_limit"),
            (self.sifs_us > 0 and self.slot_us > 0, "sifs_us and slot_us must be > 0", "mac"),
            (self.mtu >= 1, "mtu must be >= 1", "video.mtu"),
            (self.latency_budget_ms > 0, "latency_budget_ms must be > 0", "video.latency_budget_ms"),
            (self.sample_period_ms > 0, "sample_period_ms must be > 0", "report.sample_period_ms"),
            (self.duration_ms is None or self.duration_ms > 0, "duration_ms must be > 0", "scenario.duration_ms"),
        ]
        for ok, msg, fld in checks:
            if not ok:
                fail(msg, fld)
        try:
            self.ac_configs()
            self.mapper_config.validate(self.queue_capacity)
            self.build_channel()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


class _Reader:
    """Typed access to a parsed INI file with path/field aware errors."""

    def __init__(self, parser: configparser.ConfigParser, path: str):
        self.parser = parser
        self.path = path

    def get(self, section, key, kind=str, default=None):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key).strip()
        try:
            if kind is bool:
                return self.parser.getboolean(section, key)
            return kind(raw)
        except ValueError:
            raise ConfigError(f"cannot parse {raw!r} as {kind.__name__}", self.path, f"{section}.{key}") from None


def preset_path(name: str) -> Path:
    return Path(str(resources.files("mdcvanet") / "presets" / f"{name}.ini"))


def resolve_config_path(name_or_path: str | Path) -> Path:
    path = Path(name_or_path)
    if path.is_file():
        return path
    if str(name_or_path) in PRESETS:
        return preset_path(str(name_or_path))
    raise ConfigError(f"no such config file or preset: {name_or_path}", str(name_or_path))


def load_config(name_or_path: str | Path, apply_env: bool = True) -> ScenarioConfig:
    path = resolve_config_path(name_or_path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(exc), str(path)) from None
    r = _Reader(parser, str(path))

    trace = r.get("scenario", "trace")
    if trace is None:
        raise ConfigError("missing trace path", str(path), "scenario.trace")
    trace_path = Path(trace)
    if not trace_path.is_absolute():
        trace_path = path.parent / trace_path

    mapper_cfg = MapperConfig(
        p_descrip={
            Description.D1: r.get("mapper", "p_d1", float, 0.0),
            Description.D2: r.get("mapper", "p_d2", float, 0.6),
        },
        qth_low=r.get("mapper", "qth_low", int, 20),
        qth_high=r.get("mapper", "qth_high", int, 45),
    )
    loss = LossConfig(
        model=r.get("channel", "loss", str, "bernoulli"),
        p_loss=r.get("channel", "p_loss", float, 0.0),
        p_good_to_bad=r.get("channel", "p_good_to_bad", float, 0.0),
        p_bad_to_good=r.get("channel", "p_bad_to_good", float, 1.0),
        loss_good=r.get("channel", "loss_good", float, 0.0),
        loss_bad=r.get("channel", "loss_bad", float, 1.0),
    )
    if loss.model not in ("bernoulli", "gilbert_elliott"):
        raise ConfigError(f"unknown loss model {loss.model!r}", str(path), "channel.loss")

    background = []
    for section in parser.sections():
        if not section.startswith("background:"):
            continue
        try:
            background.append(
                BackgroundSource(
                    name=section.split(":", 1)[1].strip(),
                    target_ac=r.get(section, "ac", int, 0),
                    packet_size=r.get(section, "packet_size", int, 512),
                    mean_rate=r.get(section, "rate", float, 0.0),
                    pattern=r.get(section, "pattern", str, "cbr").lower(),
                    station=r.get(section, "station", str, "neighbor"),
                )
            )
        except ValueError as exc:
            raise ConfigError(str(exc), str(path), section) from None

    out = r.get("scenario", "output_dir")
    if apply_env and os.environ.get(OUTPUT_DIR_ENV):
        out = os.environ[OUTPUT_DIR_ENV]
    duration_s = r.get("scenario", "duration_s", float)

    config = ScenarioConfig(
        trace_path=trace_path,
        name=r.get("scenario", "name", str, path.stem),
        mapper=r.get("mapper", "mapper", str, "adaptive"),
        mapper_config=mapper_cfg,
        parameter_set=r.get("mac", "parameter_set", str, "SCH"),
        queue_capacity=r.get("mac", "queue_capacity", int, DEFAULT_QUEUE_CAPACITY),
        retry_limit=r.get("mac", "retry_limit", int, DEFAULT_RETRY_LIMIT),
        sifs_us=r.get("mac", "sifs_us", float, SIFS_US),
        slot_us=r.get("mac", "slot_us", float, SLOT_US),
        phy_rate=r.get("mac", "phy_rate_mbps", float, 6.0) * 1e6,
        tx_overhead_us=r.get("mac", "tx_overhead_us", float, 0.0),
        loss=loss,
        busy_mean_ms=r.get("channel", "busy_mean_ms", float, 0.0),
        idle_mean_ms=r.get("channel", "idle_mean_ms", float, 1.0),
        background=tuple(background),
        mtu=r.get("video", "mtu", int, DEFAULT_MTU),
        latency_budget_ms=r.get("video", "latency_budget_ms", float, DEFAULT_LATENCY_BUDGET_MS),
        seed=r.get("scenario", "seed", int, 0),
        sample_period_ms=r.get("report", "sample_period_ms", float, 10.0),
        duration_ms=None if duration_s is None else duration_s * 1000.0,
        output_dir=Path(out) if out else None,
    )
    try:
        config.validate()
    except ConfigError as exc:
        exc.path = exc.path or str(path)
        raise
    return config
