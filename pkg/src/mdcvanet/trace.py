"""Video trace ingestion, odd/even frame splitting and MTU packetization.

A trace file holds one frame per line::

    frame_index capture_time_ms size_bytes [mse_if_lost] [mse_if_received]

Fields are whitespace separated ASCII decimals; lines starting with ``#``
(and blank lines) are ignored.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

from .errors import TraceError

DEFAULT_MTU = 1024
DEFAULT_LATENCY_BUDGET_MS = 100.0


class Description(enum.Enum):
    D1 = "D1"  # odd frames, protected
    D2 = "D2"  # even frames, sacrificed first

    @classmethod
    def of_frame(cls, frame_index: int) -> "Description":
        return cls.D1 if frame_index % 2 else cls.D2


@dataclass(frozen=True)
class VideoTraceFrame:
    frame_index: int
    capture_time: float  # ms
    size: int  # bytes
    mse_if_lost: float | None = None
    mse_if_received: float | None = None

    @property
    def description(self) -> Description:
        return Description.of_frame(self.frame_index)


@dataclass(frozen=True)
class Packet:
    packet_id: int
    frame_index: int
    description: Description | None
    payload_size: int
    fragment_index: int
    fragment_count: int
    arrival_time: float  # ms, time handed to the MAC
    deadline: float  # ms
    target_ac: int | None = None  # fixed AC for background traffic

    @property
    def is_video(self) -> bool:
        return self.description is not None


def _parse_number(token: str, kind, lineno: int, name: str):
    try:
        return kind(token)
    except ValueError:
        raise TraceError(f"line {lineno}: bad {name} {token!r}", line=lineno) from None


def parse_trace(stream: Iterable[str]) -> list[VideoTraceFrame]:
    """Parse a trace from any iterable of text lines.

    Raises TraceError carrying the offending line number on malformed input,
    and on gaps or duplicates in the frame numbering.
    """
    frames = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if not 3 <= len(fields) <= 5:
            raise TraceError(
                f"line {lineno}: expected 3 to 5 fields, got {len(fields)}", line=lineno
            )
        index = _parse_number(fields[0], int, lineno, "frame_index")
        capture = _parse_number(fields[1], float, lineno, "capture_time_ms")
        size = _parse_number(fields[2], int, lineno, "size_bytes")
        extra = [_parse_number(f, float, lineno, "mse") for f in fields[3:]]
        if index < 0:
            raise TraceError(f"line {lineno}: negative frame_index", line=lineno)
        if size < 1:
            raise TraceError(f"line {lineno}: frame size must be >= 1 byte", line=lineno)
        if not math.isfinite(capture) or any(not math.isfinite(v) or v < 0 for v in extra):
            raise TraceError(f"line {lineno}: invalid time or distortion value", line=lineno)
        frames.append(
            VideoTraceFrame(
                frame_index=index,
                capture_time=capture,
                size=size,
                mse_if_lost=extra[0] if len(extra) > 0 else None,
                mse_if_received=extra[1] if len(extra) > 1 else None,
            )
        )

    frames.sort(key=lambda f: f.frame_index)
    for expected, frame in enumerate(frames):
        if frame.frame_index != expected:
            raise TraceError(
                f"frame indices must be consecutive from 0: expected {expected}, "
                f"found {frame.frame_index}"
            )
        if expected and frame.capture_time < frames[expected - 1].capture_time:
            raise TraceError(f"capture_time decreases at frame {expected}")
    return frames


def load_trace(path: str | Path) -> list[VideoTraceFrame]:
    path = Path(path)
    try:
        with path.open("r", encoding="ascii") as fh:
            return parse_trace(fh)
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc.strerror}", path=str(path)) from exc
    except TraceError as exc:
        exc.path = str(path)
        raise


def write_trace(frames: Iterable[VideoTraceFrame], out: TextIO) -> None:
    out.write("# frame_index capture_time_ms size_bytes mse_if_lost mse_if_received\n")
    for f in frames:
        fields = [str(f.frame_index), f"{f.capture_time:.4f}", str(f.size)]
        if f.mse_if_lost is not None:
            fields.append(f"{f.mse_if_lost:.2f}")
            if f.mse_if_received is not None:
                fields.append(f"{f.mse_if_received:.2f}")
        out.write(" ".join(fields) + "\n")


def split_mdc(frames: list[VideoTraceFrame]) -> tuple[list[VideoTraceFrame], list[VideoTraceFrame]]:
    """Return ``(d1, d2)``: odd-indexed frames and even-indexed frames."""
    d1 = [f for f in frames if f.frame_index % 2 == 1]
    d2 = [f for f in frames if f.frame_index % 2 == 0]
    return d1, d2


def packetize(
    frame: VideoTraceFrame,
    mtu: int = DEFAULT_MTU,
    latency_budget: float = DEFAULT_LATENCY_BUDGET_MS,
    first_packet_id: int = 0,
) -> list[Packet]:
    if mtu < 1:
        raise ValueError("mtu must be >= 1")
    count = -(-frame.size // mtu)
    description = frame.description
    packets = []
    for i in range(count):
        payload = mtu if i < count - 1 else frame.size - mtu * (count - 1)
        packets.append(
            Packet(
                packet_id=first_packet_id + i,
                frame_index=frame.frame_index,
                description=description,
                payload_size=payload,
                fragment_index=i,
                fragment_count=count,
                arrival_time=frame.capture_time,
                deadline=frame.capture_time + latency_budget,
            )
        )
    return packets


def packetize_all(
    frames: Iterable[VideoTraceFrame],
    mtu: int = DEFAULT_MTU,
    latency_budget: float = DEFAULT_LATENCY_BUDGET_MS,
) -> list[Packet]:
    packets: list[Packet] = []
    for frame in frames:
        packets.extend(packetize(frame, mtu, latency_budget, first_packet_id=len(packets)))
    return packets


def trace_duration_ms(frames: list[VideoTraceFrame]) -> float:
    """Play time covered by the trace: last capture time plus one frame interval."""
    if not frames:
        return 0.0
    if len(frames) == 1:
        return frames[0].capture_time
    span = frames[-1].capture_time - frames[0].capture_time
    # Capture times are stored rounded, so snap to microseconds; otherwise
    # 600 frames at 60 fps come out a hair under 10 s.
    return round(frames[-1].capture_time + span / (len(frames) - 1), 3)


def synthesize_trace(
    n_frames: int = 600,
    fps: float = 60.0,
    mean_size: int = 6000,
    size_jitter: float = 0.12,
    mean_mse_lost: float = 300.0,
    mean_mse_received: float = 12.0,
    seed: int = 0,
) -> list[VideoTraceFrame]:
    """Build an all-intra style trace with a slowly varying activity level.

    Frame sizes and concealment distortion both follow a smoothed random
    "scene activity" walk, so busy passages are both larger and harder to
    conceal. Deterministic for a given seed.
    """
    rng = random.Random(seed)
    activity = 1.0
    frames = []
    for k in range(n_frames):
        activity = min(2.0, max(0.4, activity + 0.85 * (1.0 - activity) * 0.02 + rng.gauss(0, 0.05)))
        size = max(1, int(round(mean_size * (0.75 + 0.25 * activity) * rng.lognormvariate(0, size_jitter))))
        mse_lost = mean_mse_lost * activity * rng.lognormvariate(0, 0.25)
        mse_recv = mean_mse_received * rng.lognormvariate(0, 0.1)
        frames.append(
            VideoTraceFrame(
                frame_index=k,
                capture_time=round(k * 1000.0 / fps, 4),
                size=size,
                mse_if_lost=round(mse_lost, 2),
                mse_if_received=round(mse_recv, 2),
            )
        )
    return frames
