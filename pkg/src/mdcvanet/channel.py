"""Shared-medium environment: random loss, external occupancy, background flows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .trace import Packet


@dataclass(frozen=True)
class BernoulliLoss:
    p_loss: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_loss <= 1.0:
            raise ValueError("p_loss must be in [0, 1]")


@dataclass
class GilbertElliottLoss:
    """Two-state Markov loss. The state steps once per transmission, then
    the loss draw uses the new state's loss probability."""

    p_good_to_bad: float
    p_bad_to_good: float
    loss_good: float = 0.0
    loss_bad: float = 1.0
    bad: bool = False

    def __post_init__(self):
        for name in ("p_good_to_bad", "p_bad_to_good", "loss_good", "loss_bad"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    @property
    def stationary_bad(self) -> float:
        total = self.p_good_to_bad + self.p_bad_to_good
        return self.p_good_to_bad / total if total else float(self.bad)


@dataclass(frozen=True)
class Occupancy:
    """On/off external busy process with exponential idle and busy periods.

    ``mean_busy_ms == 0`` disables it.
    """

    mean_busy_ms: float = 0.0
    mean_idle_ms: float = 1.0

    def __post_init__(self):
        if self.mean_busy_ms < 0 or self.mean_idle_ms <= 0:
            raise ValueError("occupancy means must be positive (mean_busy_ms=0 disables)")

    @property
    def enabled(self) -> bool:
        return self.mean_busy_ms > 0


@dataclass
class ChannelModel:
    loss: BernoulliLoss | GilbertElliottLoss = field(default_factory=BernoulliLoss)
    external_busy: Occupancy = field(default_factory=Occupancy)


@dataclass(frozen=True)
class BackgroundSource:
    name: str
    target_ac: int
    packet_size: int
    mean_rate: float  # packets/s
    pattern: str = "cbr"  # "cbr" or "poisson"
    # "local" queues the flow on the video sender itself; any other label
    # names a contending station (flows with the same label share it).
    station: str = "neighbor"

    def __post_init__(self):
        if not self.station:
            raise ValueError("station label must not be empty")
        if self.target_ac not in range(4):
            raise ValueError("target_ac must be 0..3")
        if self.mean_rate < 0:
            raise ValueError("mean_rate must be >= 0")
        if self.packet_size < 1:
            raise ValueError("packet_size must be >= 1")
        if self.pattern not in ("cbr", "poisson"):
            raise ValueError("pattern must be 'cbr' or 'poisson'")


def sample_loss(model: ChannelModel, rng) -> bool:
    loss = model.loss
    if isinstance(loss, GilbertElliottLoss):
        if loss.bad:
            if rng.random() < loss.p_bad_to_good:
                loss.bad = False
        elif rng.random() < loss.p_good_to_bad:
            loss.bad = True
        p = loss.loss_bad if loss.bad else loss.loss_good
    else:
        p = loss.p_loss
    # p == 0 and p == 1 are exact without consuming a draw.
    if p <= 0.0:
        return False
    if p >= 1.0:
        return True
    return rng.random() < p


def next_busy_interval(model: ChannelModel, rng, now: float) -> tuple[float, float] | None:
    """Next external busy interval ``(start, end)`` in ms after ``now``.

    Returns None when the occupancy process is disabled.
    """
    occ = model.external_busy
    if not occ.enabled:
        return None
    start = now + rng.expovariate(1.0 / occ.mean_idle_ms)
    end = start + rng.expovariate(1.0 / occ.mean_busy_ms)
    return start, end


def generate_background(
    source: BackgroundSource,
    horizon: float,
    rng=None,
    first_packet_id: int = 0,
) -> list[Packet]:
    """Arrivals on ``[0, horizon)`` ms for one background flow."""
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if source.mean_rate == 0:
        return []
    period = 1000.0 / source.mean_rate
    if source.pattern == "cbr":
        times = [k * period for k in range(math.ceil(horizon / period)) if k * period < horizon]
    else:
        times = []
        t = rng.expovariate(1.0 / period)
        while t < horizon:
            times.append(t)
            t += rng.expovariate(1.0 / period)
    return [
        Packet(
            packet_id=first_packet_id + i,
            frame_index=-1,
            description=None,
            payload_size=source.packet_size,
            fragment_index=0,
            fragment_count=1,
            arrival_time=t,
            deadline=math.inf,
            target_ac=source.target_ac,
        )
        for i, t in enumerate(times)
    ]
