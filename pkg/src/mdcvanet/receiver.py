"""Receiver side: frame reassembly, deadline enforcement, frame-copy concealment."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DistortionModeError, IntegrityError
from .trace import Packet, VideoTraceFrame

GRAY_FRAME = -1


class DeliveryStatus(enum.Enum):
    DELIVERED = "Delivered"
    LOST_CHANNEL = "LostChannel"
    DROPPED_OVERFLOW = "DroppedOverflow"
    DROPPED_DEADLINE = "DroppedDeadline"
    LATE_DISCARD = "LateDiscard"


@dataclass(frozen=True)
class DeliveryRecord:
    packet_id: int
    delivery_time: float | None  # ms; None when the packet never reached the receiver
    status: DeliveryStatus


def classify_delivery(packet: Packet, delivery_time: float) -> DeliveryRecord:
    status = DeliveryStatus.DELIVERED if delivery_time <= packet.deadline else DeliveryStatus.LATE_DISCARD
    return DeliveryRecord(packet.packet_id, delivery_time, status)


class FrameSource(enum.Enum):
    OWN = "Own"
    COPIED_FROM_OTHER = "CopiedFromOther"
    COPIED_PREVIOUS = "CopiedPrevious"


@dataclass(frozen=True)
class ReconstructedFrame:
    frame_index: int
    source: FrameSource
    reference_index: int  # frame actually displayed, GRAY_FRAME for the sentinel


def assemble_frames(
    records: Iterable[DeliveryRecord],
    packets: Sequence[Packet],
    n_frames: int | None = None,
) -> list[bool]:
    """Per-frame received flags, indexed by frame.

    A frame counts as received only when every one of its fragments was
    delivered before its deadline. Frames with no packets at all (none of
    the given packets carry them) are reported lost.
    """
    by_id = {p.packet_id: p for p in packets if p.is_video}
    seen: dict[int, DeliveryRecord] = {}
    for rec in records:
        if rec.packet_id not in by_id:
            raise IntegrityError(f"delivery record for unknown packet_id {rec.packet_id}")
        seen[rec.packet_id] = rec
    missing = by_id.keys() - seen.keys()
    if missing:
        raise IntegrityError(f"{len(missing)} video packets have no delivery record")

    if n_frames is None:
        n_frames = 1 + max((p.frame_index for p in by_id.values()), default=-1)
    delivered = [0] * n_frames
    expected = [0] * n_frames
    for pid, packet in by_id.items():
        expected[packet.frame_index] = packet.fragment_count
        rec = seen[pid]
        if rec.status is DeliveryStatus.DELIVERED and rec.delivery_time <= packet.deadline:
            delivered[packet.frame_index] += 1
    return [e > 0 and d == e for d, e in zip(delivered, expected)]


def conceal(received: Sequence[bool]) -> list[ReconstructedFrame]:
    """Frame-copy concealment over the displayed sequence.

    A lost frame shows its predecessor (which belongs to the other
    description) when that predecessor arrived. Otherwise it repeats
    whatever the predecessor displayed. Frame 0 has no predecessor and
    borrows frame 1 instead, falling back to the gray sentinel.
    """
    out: list[ReconstructedFrame] = []
    for k, ok in enumerate(received):
        if ok:
            out.append(ReconstructedFrame(k, FrameSource.OWN, k))
        elif k == 0:
            if len(received) > 1 and received[1]:
                out.append(ReconstructedFrame(0, FrameSource.COPIED_FROM_OTHER, 1))
            else:
                out.append(ReconstructedFrame(0, FrameSource.COPIED_PREVIOUS, GRAY_FRAME))
        elif received[k - 1]:
            out.append(ReconstructedFrame(k, FrameSource.COPIED_FROM_OTHER, k - 1))
        else:
            out.append(ReconstructedFrame(k, FrameSource.COPIED_PREVIOUS, out[k - 1].reference_index))
    return out


def has_distortion(frames: Sequence[VideoTraceFrame]) -> bool:
    return bool(frames) and all(f.mse_if_lost is not None for f in frames)


def distortion_of_reconstruction(
    recon: Sequence[ReconstructedFrame],
    frames: Sequence[VideoTraceFrame],
    peak: float = 255.0,
) -> list[float]:
    if not has_distortion(frames):
        raise DistortionModeError(
            "trace has no mse_if_lost column; run in loss-count-only mode "
            "(PSNR and sigma_MSE are unavailable)"
        )
    if len(recon) != len(frames):
        raise IntegrityError("reconstruction and trace lengths differ")
    series = []
    for r, f in zip(recon, frames):
        if r.source is FrameSource.OWN:
            series.append(f.mse_if_received or 0.0)
        elif r.reference_index == GRAY_FRAME:
            series.append(peak * peak)
        else:
            series.append(f.mse_if_lost)
    return series
