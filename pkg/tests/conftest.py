import pytest

from mdcvanet.trace import Description, Packet, VideoTraceFrame, write_trace


def video_packet(pid=0, frame=1, size=1000, arrival=0.0, deadline=100.0, frag=0, count=1):
    return Packet(
        packet_id=pid,
        frame_index=frame,
        description=Description.of_frame(frame),
        payload_size=size,
        fragment_index=frag,
        fragment_count=count,
        arrival_time=arrival,
        deadline=deadline,
    )


@pytest.fixture
def write_frames(tmp_path):
    """Write a list of frames as a trace file and return its path."""

    def _write(frames, name="t.trace"):
        path = tmp_path / name
        with path.open("w") as fh:
            write_trace(frames, fh)
        return path

    return _write


def light_frames(n=600, size=800, fps=60.0, mse_lost=200.0):
    return [VideoTraceFrame(k, round(k * 1000.0 / fps, 4), size, mse_lost, 5.0) for k in range(n)]


# Acceptance criteria append (number, passed, detail) here; printed at the end of the session.
ACCEPTANCE_RESULTS: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
