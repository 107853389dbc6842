"""Video packet to access-category mapping policies.

Three policies are compared:

* ``baseline`` - every video packet goes to AC[2] (plain EDCA).
* ``static``   - odd description (D1) to AC[2], even description (D2) to AC[1].
* ``adaptive`` - RED-like demotion driven by the live AC[2] queue length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .trace import Description, Packet

AC_BK, AC_BE, AC_VI, AC_VO = 0, 1, 2, 3

MAPPERS = ("baseline", "static", "adaptive")


@dataclass(frozen=True)
class MapperConfig:
    p_descrip: dict[Description, float] = field(
        default_factory=lambda: {Description.D1: 0.0, Description.D2: 0.6}
    )
    qth_low: int = 20
    qth_high: int = 45

    def validate(self, queue_capacity: int | None = None) -> None:
        for desc in Description:
            p = self.p_descrip.get(desc)
            if p is None or not 0.0 <= p <= 1.0:
                raise ValueError(f"p_descrip[{desc.value}] must be in [0, 1], got {p}")
        if self.p_descrip[Description.D2] < self.p_descrip[Description.D1]:
            raise ValueError("p_descrip[D2] must be >= p_descrip[D1]")
        if not 0 <= self.qth_low < self.qth_high:
            raise ValueError("need 0 <= qth_low < qth_high")
        if queue_capacity is not None and self.qth_high > queue_capacity:
            raise ValueError("qth_high exceeds the queue capacity")


@dataclass(frozen=True)
class MappingDecision:
    target_ac: int
    drawn_probability: float | None = None  # probability the draw was compared against
    rng_draw: float | None = None


def map_baseline(packet: Packet) -> MappingDecision:
    return MappingDecision(AC_VI)


def map_static(packet: Packet) -> MappingDecision:
    return MappingDecision(AC_VI if packet.description is Description.D1 else AC_BE)


def compute_p_new(p_descrip: float, qlen_ac2: float, qth_low: float, qth_high: float) -> float:
    """Queue-scaled demotion probability, clamped to ``[0, p_descrip]``."""
    if qth_low >= qth_high:
        raise ValueError("qth_low must be below qth_high")
    p = p_descrip * (qlen_ac2 - qth_low) / (qth_high - qth_low)
    return min(max(p, 0.0), p_descrip)


def map_adaptive(packet: Packet, qlen_ac2: int, config: MapperConfig, rng) -> MappingDecision:
    """Adaptive policy.

    The band ``[qth_low, qth_high]`` is closed: both endpoints use the
    queue-scaled probability. Below the band no random draw is consumed.
    """
    p_descrip = config.p_descrip[packet.description]
    if qlen_ac2 < config.qth_low:
        return MappingDecision(AC_VI)
    draw = rng.random()
    if qlen_ac2 <= config.qth_high:
        p_new = compute_p_new(p_descrip, qlen_ac2, config.qth_low, config.qth_high)
        return MappingDecision(AC_BE if draw < p_new else AC_VI, p_new, draw)
    return MappingDecision(AC_BK if draw < p_descrip else AC_BE, p_descrip, draw)


class Mapper:
    """A policy bound to its configuration and private random stream."""

    def __init__(self, policy: str, config: MapperConfig | None = None, rng=None):
        if policy not in MAPPERS:
            raise ValueError(f"unknown mapper {policy!r}; expected one of {', '.join(MAPPERS)}")
        self.policy = policy
        self.config = config or MapperConfig()
        self.rng = rng

    def decide(self, packet: Packet, qlen_ac2: int) -> MappingDecision:
        if self.policy == "baseline":
            return map_baseline(packet)
        if self.policy == "static":
            return map_static(packet)
        return map_adaptive(packet, qlen_ac2, self.config, self.rng)
