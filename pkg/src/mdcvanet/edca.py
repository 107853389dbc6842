"""Discrete-event model of IEEE 802.11p EDCA medium access.

Each station has four prioritized FIFO queues contending for one shared
medium with AIFS plus binary exponential backoff. Station 0 sends the
video; optional further stations carry background flows. Exogenous medium
occupancy (``channel.Occupancy``) defers to frames already on the air.

Simulation time is kept as integer nanoseconds so slot arithmetic and tie
detection are exact.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .channel import ChannelModel, next_busy_interval, sample_loss
from .trace import Packet

SIFS_US = 32
SLOT_US = 13
DEFAULT_QUEUE_CAPACITY = 50
DEFAULT_RETRY_LIMIT = 7
NS_PER_US = 1_000
NS_PER_MS = 1_000_000


@dataclass(frozen=True)
class AccessCategoryConfig:
    ac_index: int
    cw_min: int
    cw_max: int
    aifsn: int
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY

    def __post_init__(self):
        if self.ac_index not in range(4):
            raise ValueError("ac_index must be 0..3")
        for cw in (self.cw_min, self.cw_max):
            if cw < 0 or (cw + 1) & cw:
                raise ValueError(f"contention window {cw} is not of the form 2^k - 1")
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must not exceed cw_max")
        if self.aifsn < 1:
            raise ValueError("aifsn must be >= 1")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")

    def aifs_us(self, sifs: float = SIFS_US, slot: float = SLOT_US) -> float:
        return derive_aifs(self.aifsn, sifs, slot)


def _acs(rows, capacity):
    return tuple(
        AccessCategoryConfig(ac, cw_min, cw_max, aifsn, capacity)
        for ac, (cw_min, cw_max, aifsn) in enumerate(rows)
    )


# (cw_min, cw_max, aifsn) for AC[0] (BK) .. AC[3] (VO)
CCH_ROWS = ((15, 1023, 9), (7, 15, 6), (3, 7, 3), (3, 7, 2))
SCH_ROWS = ((31, 1023, 7), (31, 1023, 3), (15, 31, 2), (7, 15, 2))
PARAMETER_SETS = {"CCH": CCH_ROWS, "SCH": SCH_ROWS}


def parameter_set(name: str = "SCH", queue_capacity: int = DEFAULT_QUEUE_CAPACITY):
    try:
        rows = PARAMETER_SETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown EDCA parameter set {name!r} (CCH or SCH)") from None
    return _acs(rows, queue_capacity)


def derive_aifs(aifsn: int, sifs: float = SIFS_US, slot: float = SLOT_US) -> float:
    if aifsn < 1:
        raise ValueError("aifsn must be >= 1")
    return sifs + aifsn * slot


def transmission_duration(payload: int, phy_rate: float, overhead: float = 0.0) -> float:
    """Airtime in microseconds for ``payload`` bytes at ``phy_rate`` bit/s."""
    if phy_rate <= 0:
        raise ValueError("phy_rate must be > 0")
    return overhead + 8.0 * payload / phy_rate * 1e6


class EnqueueOutcome(enum.Enum):
    ACCEPTED = "accepted"
    DROPPED_OVERFLOW = "dropped_overflow"


@dataclass
class AcStats:
    enqueued: int = 0  # offered to the AC, including overflow refusals
    transmitted: int = 0
    dropped_overflow: int = 0
    dropped_deadline: int = 0
    dropped_retry: int = 0

    def balance(self, still_queued: int) -> int:
        """Zero when every offered packet is accounted for."""
        return self.enqueued - (
            self.transmitted
            + self.dropped_overflow
            + self.dropped_deadline
            + self.dropped_retry
            + still_queued
        )


class MacState:
    def __init__(self, configs):
        self.configs = tuple(configs)
        if [c.ac_index for c in self.configs] != [0, 1, 2, 3]:
            raise ValueError("need exactly one config per AC, ordered 0..3")
        self.queues: list[deque[Packet]] = [deque() for _ in range(4)]
        self.cw = [c.cw_min for c in self.configs]
        self.backoff: list[int | None] = [None] * 4
        self.retries = [0] * 4
        self.in_flight: int | None = None  # AC whose head packet is on the air
        self.channel_busy_until = 0  # ns
        self.stats = [AcStats() for _ in range(4)]

    def qlen(self, ac: int) -> int:
        return len(self.queues[ac])

    def capacity(self, ac: int) -> int:
        return self.configs[ac].queue_capacity

    def reset_contention(self, ac: int) -> None:
        self.cw[ac] = self.configs[ac].cw_min
        self.retries[ac] = 0

    def grow_cw(self, ac: int) -> None:
        self.cw[ac] = min(2 * self.cw[ac] + 1, self.configs[ac].cw_max)


def enqueue(state: MacState, ac: int, packet: Packet) -> EnqueueOutcome:
    if ac not in range(4):
        raise ValueError(f"invalid access category {ac}")
    state.stats[ac].enqueued += 1
    if len(state.queues[ac]) >= state.capacity(ac):
        state.stats[ac].dropped_overflow += 1
        return EnqueueOutcome.DROPPED_OVERFLOW
    state.queues[ac].append(packet)
    return EnqueueOutcome.ACCEPTED


def purge_expired(state: MacState, now: float, dropped: list | None = None) -> int:
    """Remove queued video packets whose deadline (ms) is strictly before ``now`` (ms).

    A packet currently on the air is left alone. Removed ``(ac, packet)``
    pairs are appended to ``dropped`` when given.
    """
    count = 0
    for ac, queue in enumerate(state.queues):
        if not queue:
            continue
        flying = queue[0] if state.in_flight == ac else None
        expired = [p for p in queue if p.deadline < now and p is not flying]
        if not expired:
            continue
        head = queue[0]
        doomed = {id(p) for p in expired}
        state.queues[ac] = deque(p for p in queue if id(p) not in doomed)
        state.stats[ac].dropped_deadline += len(expired)
        if id(head) in doomed:
            state.reset_contention(ac)
        if not state.queues[ac]:
            state.backoff[ac] = None
        count += len(expired)
        if dropped is not None:
            dropped.extend((ac, p) for p in expired)
    return count


class EventKind(enum.IntEnum):
    # Value is the tie-break rank for events sharing a timestamp.
    TX_COMPLETE = 0
    CHANNEL_BUSY_END = 1
    PACKET_ARRIVAL = 2
    BACKOFF_EXPIRY = 3
    CHANNEL_BUSY_START = 4


@dataclass(order=True, frozen=True)
class SimEvent:
    time: int  # ns
    kind: EventKind
    seq: int
    payload: object = field(default=None, compare=False)


@dataclass(frozen=True)
class QueueSample:
    time: int  # ns
    qlen: tuple[int, int, int, int]


@dataclass(frozen=True)
class MacOutcome:
    """Final fate of one packet handed to a station's MAC."""

    packet: Packet
    station: int
    ac: int
    status: str  # "delivered", "overflow", "deadline", "retry"
    time: int  # ns
    channel_losses: int = 0


class Station:
    """Per-station contention bookkeeping on top of its ``MacState``."""

    def __init__(self, index: int, configs, backoff_rng):
        self.index = index
        self.state = MacState(configs)
        self.backoff_rng = backoff_rng
        self.count_start: list[int | None] = [None] * 4
        self.channel_losses = [0] * 4


class EdcaSimulator:
    """Event loop for EDCA stations sharing one medium.

    Station 0 is the video sender; its arrivals without a fixed
    ``target_ac`` are routed by ``classify(packet, state)``, called after
    expired packets are purged and immediately before enqueue. Further
    stations carry background flows and contend through the same
    AIFS/backoff rules. Backoff expiries of different stations in the same
    instant collide and all frames involved fail; inside one station the
    higher AC wins (virtual collision). ``on_outcome`` receives a
    ``MacOutcome`` whenever a packet leaves a MAC for good.
    """

    def __init__(
        self,
        configs,
        channel: ChannelModel | None = None,
        *,
        classify: Callable[[Packet, MacState], int] | None = None,
        on_outcome: Callable[[MacOutcome], None] | None = None,
        backoff_rng,
        loss_rng=None,
        busy_rng=None,
        phy_rate: float = 6e6,
        tx_overhead_us: float = 0.0,
        sifs_us: float = SIFS_US,
        slot_us: float = SLOT_US,
        retry_limit: int = DEFAULT_RETRY_LIMIT,
        sample_period_ns: int | None = None,
        sample_until_ns: int = 0,
        check_invariants: bool = False,
    ):
        self.stations = [Station(0, configs, backoff_rng)]
        self.channel = channel or ChannelModel()
        self.classify = classify
        self.on_outcome = on_outcome
        self.loss_rng = loss_rng
        self.busy_rng = busy_rng
        self.phy_rate = phy_rate
        self.tx_overhead_us = tx_overhead_us
        self.sifs_us = sifs_us
        self.slot_us = slot_us
        self.slot_ns = round(slot_us * NS_PER_US)
        self.retry_limit = retry_limit
        self.check_invariants = check_invariants

        self.now = 0
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self._medium_busy = False
        self._contention_gen = 0
        self._deferred_busy_ns: int | None = None
        self.external_busy_ns = 0
        self.own_busy_ns = 0  # airtime of station 0
        self.collisions = 0
        self.end_ns: int | None = None

        self.samples: list[QueueSample] = []
        self._sample_period = sample_period_ns
        self._sample_until = sample_until_ns
        self._next_sample = 0 if sample_period_ns else None

    @property
    def state(self) -> MacState:
        return self.stations[0].state

    def add_station(self, configs, backoff_rng) -> Station:
        station = Station(len(self.stations), configs, backoff_rng)
        self.stations.append(station)
        return station

    def _aifs_ns(self, station: Station, ac: int) -> int:
        return round(station.state.configs[ac].aifs_us(self.sifs_us, self.slot_us) * NS_PER_US)

    # -- scheduling -------------------------------------------------------

    def push(self, time_ns: int, kind: EventKind, payload=None) -> SimEvent:
        event = SimEvent(time_ns, kind, next(self._seq), payload)
        heapq.heappush(self._heap, event)
        return event

    def add_arrivals(self, packets, station: int = 0) -> None:
        for p in packets:
            if station and p.target_ac is None:
                raise ValueError("packets for background stations need a target_ac")
            self.push(round(p.arrival_time * NS_PER_MS), EventKind.PACKET_ARRIVAL, (station, p))

    def start_occupancy(self) -> None:
        self._schedule_external(0)

    def _schedule_external(self, now_ns: int) -> None:
        interval = next_busy_interval(self.channel, self.busy_rng, now_ns / NS_PER_MS)
        if interval is None:
            return
        start, end = (round(t * NS_PER_MS) for t in interval)
        if self.end_ns is not None and start > self.end_ns:
            return
        self.push(start, EventKind.CHANNEL_BUSY_START, end - start)

    # -- contention -------------------------------------------------------

    def _expiry(self, station: Station, ac: int) -> int | None:
        start = station.count_start[ac]
        st = station.state
        if start is None or st.backoff[ac] is None or not st.queues[ac]:
            return None
        return start + self._aifs_ns(station, ac) + st.backoff[ac] * self.slot_ns

    def _draw_backoff(self, station: Station, ac: int) -> None:
        st = station.state
        st.backoff[ac] = station.backoff_rng.randint(0, st.cw[ac])
        station.count_start[ac] = None if self._medium_busy else self.now

    def _freeze(self) -> None:
        for station in self.stations:
            st = station.state
            for ac in range(4):
                start = station.count_start[ac]
                b = st.backoff[ac]
                if start is not None and b is not None:
                    elapsed = self.now - start - self._aifs_ns(station, ac)
                    if elapsed > 0:
                        st.backoff[ac] = b - min(b, elapsed // self.slot_ns)
                station.count_start[ac] = None

    def _medium_idle(self) -> None:
        self._medium_busy = False
        for station in self.stations:
            for ac in range(4):
                if station.state.backoff[ac] is not None:
                    station.count_start[ac] = self.now
        self.contend_and_transmit()

    def contend_and_transmit(self) -> list[SimEvent]:
        """Schedule the next backoff expiry on an idle medium.

        Returns the events put on the queue (empty when the medium is busy or
        nothing is backlogged). Earlier expiry events are invalidated.
        """
        self._contention_gen += 1
        if self._medium_busy:
            return []
        expiries = [
            e
            for station in self.stations
            for e in (self._expiry(station, ac) for ac in range(4))
            if e is not None
        ]
        if not expiries:
            return []
        return [self.push(min(expiries), EventKind.BACKOFF_EXPIRY, self._contention_gen)]

    # -- event handlers ---------------------------------------------------

    def _purge(self) -> None:
        now_ms = self.now / NS_PER_MS
        for station in self.stations:
            dropped: list = []
            purge_expired(station.state, now_ms, dropped)
            for ac, p in dropped:
                self._emit(station, p, ac, "deadline")

    def _emit(self, station: Station, packet: Packet, ac: int, status: str) -> None:
        losses = station.channel_losses[ac] if status in ("delivered", "retry") else 0
        if status in ("delivered", "retry"):
            station.channel_losses[ac] = 0
        if self.on_outcome is not None:
            self.on_outcome(MacOutcome(packet, station.index, ac, status, self.now, losses))

    def _on_arrival(self, payload) -> None:
        index, packet = payload
        station = self.stations[index]
        self._purge()
        if packet.target_ac is not None:
            ac = packet.target_ac
        else:
            ac = self.classify(packet, station.state)
        outcome = enqueue(station.state, ac, packet)
        if outcome is EnqueueOutcome.DROPPED_OVERFLOW:
            self._emit(station, packet, ac, "overflow")
            return
        st = station.state
        if st.backoff[ac] is None and st.in_flight != ac:
            self._draw_backoff(station, ac)
            self.contend_and_transmit()

    def _fail(self, station: Station, ac: int) -> None:
        """Internal loss of the head packet: grow CW, drop past the retry limit."""
        st = station.state
        st.retries[ac] += 1
        st.grow_cw(ac)
        if st.retries[ac] > self.retry_limit:
            p = st.queues[ac].popleft()
            st.stats[ac].dropped_retry += 1
            st.reset_contention(ac)
            self._emit(station, p, ac, "retry")

    def _on_backoff_expiry(self, gen: int) -> None:
        if gen != self._contention_gen or self._medium_busy:
            return
        self._purge()
        due = [
            (station, ac)
            for station in self.stations
            for ac in range(4)
            if self._expiry(station, ac) == self.now
        ]
        if not due:
            self.contend_and_transmit()
            return
        self._medium_busy = True
        self._freeze()
        transmitters = []
        for station in self.stations:
            mine = [ac for s, ac in due if s is station]
            if not mine:
                continue
            winner = max(mine)
            st = station.state
            for ac in mine:
                if ac == winner:
                    continue
                self._fail(station, ac)
                if st.queues[ac]:
                    self._draw_backoff(station, ac)
                else:
                    st.backoff[ac] = None
            st.backoff[winner] = None
            st.in_flight = winner
            packet = st.queues[winner][0]
            duration = round(
                transmission_duration(packet.payload_size, self.phy_rate, self.tx_overhead_us) * NS_PER_US
            )
            transmitters.append((station.index, winner, duration))
            if station.index == 0:
                self.own_busy_ns += duration
        if len(transmitters) > 1:
            self.collisions += 1
        busy = max(d for _, _, d in transmitters)
        for station in self.stations:
            station.state.channel_busy_until = self.now + busy
        collided = len(transmitters) > 1
        self.push(self.now + busy, EventKind.TX_COMPLETE, [(i, ac, collided) for i, ac, _ in transmitters])

    def _on_tx_complete(self, transmissions) -> None:
        for index, ac, collided in transmissions:
            station = self.stations[index]
            st = station.state
            st.in_flight = None
            if collided or sample_loss(self.channel, self.loss_rng):
                station.channel_losses[ac] += 1
                self._fail(station, ac)
            else:
                p = st.queues[ac].popleft()
                st.stats[ac].transmitted += 1
                st.reset_contention(ac)
                self._emit(station, p, ac, "delivered")
            if st.queues[ac]:
                self._draw_backoff(station, ac)
            else:
                st.backoff[ac] = None
        if self._deferred_busy_ns is not None:
            duration, self._deferred_busy_ns = self._deferred_busy_ns, None
            self._begin_external(duration)
        else:
            self._medium_idle()

    def _begin_external(self, duration: int) -> None:
        self._medium_busy = True
        self._contention_gen += 1
        self.external_busy_ns += duration
        self.push(self.now + duration, EventKind.CHANNEL_BUSY_END)

    def _on_busy_start(self, duration: int) -> None:
        if self._medium_busy:
            # A station frame is on the air; the external source defers.
            self._deferred_busy_ns = duration
            return
        self._freeze()
        self._begin_external(duration)

    def _on_busy_end(self, _payload=None) -> None:
        self._medium_idle()
        self._schedule_external(self.now)

    # -- main loop --------------------------------------------------------

    def _sample_through(self, limit_ns: int) -> None:
        while self._next_sample is not None and self._next_sample <= limit_ns:
            if self._next_sample > self._sample_until:
                self._next_sample = None
                return
            qlen = tuple(len(q) for q in self.state.queues)
            self.samples.append(QueueSample(self._next_sample, qlen))
            self._next_sample += self._sample_period

    def _check(self) -> None:
        for station in self.stations:
            st = station.state
            for ac in range(4):
                assert 0 <= len(st.queues[ac]) <= st.capacity(ac), (
                    f"station {station.index} AC{ac} over capacity"
                )
            if st.in_flight is not None:
                assert st.queues[st.in_flight], "in-flight packet missing from its queue"

    def run(self, end_ns: int) -> None:
        """Process events up to and including ``end_ns``, then purge."""
        self.end_ns = end_ns
        handlers = {
            EventKind.PACKET_ARRIVAL: self._on_arrival,
            EventKind.BACKOFF_EXPIRY: self._on_backoff_expiry,
            EventKind.TX_COMPLETE: self._on_tx_complete,
            EventKind.CHANNEL_BUSY_START: self._on_busy_start,
            EventKind.CHANNEL_BUSY_END: self._on_busy_end,
        }
        heap = self._heap
        while heap and heap[0].time <= end_ns:
            event = heapq.heappop(heap)
            if self._next_sample is not None and self._next_sample < event.time:
                self._sample_through(event.time - 1)
            self.now = event.time
            handlers[event.kind](event.payload)
            if self.check_invariants:
                self._check()
        self._sample_through(max(end_ns, self._sample_until))
        self.now = max(self.now, end_ns)
        self._purge()
