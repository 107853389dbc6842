"""Wire trace, mapper, channel and EDCA station into one simulation run."""

from __future__ import annotations

from dataclasses import dataclass

from .channel import generate_background
from .config import ScenarioConfig
from .edca import NS_PER_MS, AcStats, EdcaSimulator, MacOutcome, MacState, QueueSample
from .mapper import AC_VI, Mapper
from .receiver import DeliveryRecord, DeliveryStatus, classify_delivery
from .rng import Streams
from .trace import Packet, VideoTraceFrame, packetize_all, trace_duration_ms

LOCAL_STATION = "local"

_STATUS = {
    "overflow": DeliveryStatus.DROPPED_OVERFLOW,
    "deadline": DeliveryStatus.DROPPED_DEADLINE,
    "retry": DeliveryStatus.LOST_CHANNEL,
}


@dataclass
class SimResult:
    packets: list[Packet]  # video packets only
    records: list[DeliveryRecord]  # one per video packet, packet_id order
    assignments: dict[int, int]  # video packet_id -> AC chosen by the mapper
    samples: list[QueueSample]
    mac_stats: list[AcStats]
    still_queued: list[int]
    duration_ms: float
    external_busy_ms: float
    own_busy_ms: float
    collisions: int = 0
    background_stats: dict[str, list[AcStats]] | None = None
    background_queued: dict[str, list[int]] | None = None


def simulate(
    config: ScenarioConfig,
    frames: list[VideoTraceFrame],
    *,
    check_invariants: bool = False,
) -> SimResult:
    streams = Streams(config.seed)
    video = packetize_all(frames, config.mtu, config.latency_budget_ms)
    duration_ms = config.duration_ms if config.duration_ms is not None else trace_duration_ms(frames)

    mapper = Mapper(config.mapper, config.mapper_config, streams["mapper"])
    assignments: dict[int, int] = {}
    outcomes: dict[int, DeliveryRecord] = {}

    def classify(packet: Packet, state: MacState) -> int:
        ac = mapper.decide(packet, state.qlen(AC_VI)).target_ac
        assignments[packet.packet_id] = ac
        return ac

    def on_outcome(out: MacOutcome) -> None:
        if out.station or not out.packet.is_video:
            return
        when = out.time / NS_PER_MS
        if out.status == "delivered":
            outcomes[out.packet.packet_id] = classify_delivery(out.packet, when)
        else:
            outcomes[out.packet.packet_id] = DeliveryRecord(out.packet.packet_id, None, _STATUS[out.status])

    sim = EdcaSimulator(
        config.ac_configs(),
        config.build_channel(),
        classify=classify,
        on_outcome=on_outcome,
        backoff_rng=streams["backoff"],
        loss_rng=streams["channel.loss"],
        busy_rng=streams["channel.busy"],
        phy_rate=config.phy_rate,
        tx_overhead_us=config.tx_overhead_us,
        sifs_us=config.sifs_us,
        slot_us=config.slot_us,
        retry_limit=config.retry_limit,
        sample_period_ns=round(config.sample_period_ms * NS_PER_MS),
        sample_until_ns=round(duration_ms * NS_PER_MS),
        check_invariants=check_invariants,
    )
    sim.add_arrivals(video)
    stations = {LOCAL_STATION: 0}
    next_id = len(video)
    for source in sorted(config.background, key=lambda s: s.name):
        if source.station not in stations:
            stations[source.station] = len(sim.stations)
            sim.add_station(config.ac_configs(), streams[f"backoff.{source.station}"])
        if duration_ms <= 0:
            continue
        bg = generate_background(source, duration_ms, streams[f"background.{source.name}"], next_id)
        next_id += len(bg)
        sim.add_arrivals(bg, stations[source.station])

    last_deadline = max((p.deadline for p in video), default=0.0)
    end_ns = round(max(duration_ms, last_deadline) * NS_PER_MS) + NS_PER_MS
    sim.start_occupancy()
    sim.run(end_ns)

    records = [
        outcomes.get(p.packet_id) or DeliveryRecord(p.packet_id, None, DeliveryStatus.DROPPED_DEADLINE)
        for p in video
    ]
    return SimResult(
        packets=video,
        records=records,
        assignments=assignments,
        samples=sim.samples,
        mac_stats=sim.state.stats,
        still_queued=[len(q) for q in sim.state.queues],
        duration_ms=duration_ms,
        external_busy_ms=sim.external_busy_ns / NS_PER_MS,
        own_busy_ms=sim.own_busy_ns / NS_PER_MS,
        collisions=sim.collisions,
        background_stats={
            name: sim.stations[i].state.stats for name, i in stations.items() if i
        },
        background_queued={
            name: [len(q) for q in sim.stations[i].state.queues] for name, i in stations.items() if i
        },
    )
