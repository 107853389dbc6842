"""Scenario orchestration and report emission."""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ScenarioConfig
from .edca import NS_PER_MS
from .errors import OutputError
from .metrics import MetricsReport, average_psnr, frame_psnr, loss_accounting, sigma_mse
from .receiver import ReconstructedFrame, assemble_frames, conceal, distortion_of_reconstruction, has_distortion
from .sim import SimResult, simulate
from .trace import load_trace

AC_NAMES = ("BK", "BE", "VI", "VO")
QUEUES_HEADER = ["time_s", "ac0", "ac1", "ac2", "ac3"]
PSNR_HEADER = ["time_s", "frame_index", "psnr_db"]
RECON_HEADER = ["frame_index", "source", "reference_index", "mse"]


@dataclass
class RunReport:
    scenario: str
    mapper: str
    seed: int
    metrics: MetricsReport
    reconstruction: list[ReconstructedFrame]
    mse_series: list[float] | None
    frame_times_ms: list[float]
    sim: SimResult

    @property
    def frames_concealed(self) -> int:
        return sum(r.source.value != "Own" for r in self.reconstruction)

    def summary_row(self) -> dict:
        m = self.metrics
        return {
            "mapper": self.mapper,
            "seed": self.seed,
            "sigma_mse": m.sigma_mse,
            "avg_ssim": m.ssim_mean,
            "avg_psnr_db": m.psnr_avg,
            "transmitted_packets": m.transmitted_packets,
            "lost_d1": m.lost_packets["D1"],
            "lost_d2": m.lost_packets["D2"],
            "lost_total": m.lost_packets["total"],
            "frames_concealed": self.frames_concealed,
        }


def run_scenario(config: ScenarioConfig, *, write: bool = True, check_invariants: bool = False) -> RunReport:
    """Run trace -> MDC split -> mapping -> EDCA -> receiver -> metrics.

    When ``write`` is set and the config names an output directory, the
    plot data and reconstruction log are written there.
    """
    config.validate()
    frames = load_trace(config.trace_path)
    sim = simulate(config, frames, check_invariants=check_invariants)

    received = assemble_frames(sim.records, sim.packets, n_frames=len(frames))
    recon = conceal(received)
    mse = psnr = psnr_avg = sig = None
    if has_distortion(frames):
        mse = distortion_of_reconstruction(recon, frames)
        psnr = [frame_psnr(x) for x in mse]
        psnr_avg = average_psnr(mse)
        sig = sigma_mse(mse) if len(mse) > 1 else None

    metrics = MetricsReport(
        per_frame_psnr=psnr,
        psnr_avg=psnr_avg,
        sigma_mse=sig,
        ssim_mean=None,  # needs decoded raw frames, see `metrics score`
        lost_packets=loss_accounting(sim.records, sim.packets),
        transmitted_packets=len(sim.packets),
        queue_fill_series=[(s.time / NS_PER_MS / 1000.0, s.qlen) for s in sim.samples],
    )
    report = RunReport(
        scenario=config.name,
        mapper=config.mapper,
        seed=config.seed,
        metrics=metrics,
        reconstruction=recon,
        mse_series=mse,
        frame_times_ms=[f.capture_time for f in frames],
        sim=sim,
    )
    if write and config.output_dir is not None:
        emit_plot_data(report, config.output_dir)
    return report


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def summary_text(report: RunReport) -> str:
    m = report.metrics
    sim = report.sim
    lines = [
        f"scenario: {report.scenario}",
        f"mapper: {report.mapper}",
        f"seed: {report.seed}",
        f"frames: {len(report.reconstruction)}",
        f"frames_concealed: {report.frames_concealed}",
        f"video_packets: {m.transmitted_packets}",
        f"lost_packets: D1={m.lost_packets['D1']} D2={m.lost_packets['D2']} total={m.lost_packets['total']}",
        f"avg_psnr_db: {_fmt(m.psnr_avg) or 'n/a'}",
        f"sigma_mse: {_fmt(m.sigma_mse) or 'n/a'}",
        f"avg_ssim: {_fmt(m.ssim_mean) or 'n/a'}",
        f"duration_s: {sim.duration_ms / 1000.0:.3f}",
        f"airtime_own_s: {sim.own_busy_ms / 1000.0:.6f}",
        f"airtime_external_s: {sim.external_busy_ms / 1000.0:.6f}",
        "",
        "ac  name  enqueued  transmitted  dropped_overflow  dropped_deadline  dropped_retry  still_queued",
    ]
    for ac, st in enumerate(sim.mac_stats):
        lines.append(
            f"{ac:<3} {AC_NAMES[ac]:<5} {st.enqueued:>8}  {st.transmitted:>11}  {st.dropped_overflow:>16}"
            f"  {st.dropped_deadline:>16}  {st.dropped_retry:>13}  {sim.still_queued[ac]:>12}"
        )
    video_by_ac = [0, 0, 0, 0]
    for ac in sim.assignments.values():
        video_by_ac[ac] += 1
    lines.append("")
    lines.append("video_packets_by_ac: " + " ".join(f"ac{i}={n}" for i, n in enumerate(video_by_ac)))
    return "\n".join(lines) + "\n"


def emit_plot_data(report: RunReport, out: str | Path) -> list[Path]:
    """Write ``queues.csv``, ``psnr.csv``, ``reconstruction.csv`` and ``summary.txt``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc.strerror}") from exc

    queues = [[f"{t:.3f}", *q] for t, q in report.metrics.queue_fill_series]
    psnr = report.metrics.per_frame_psnr
    psnr_rows = [
        [f"{t / 1000.0:.6f}", k, _fmt(psnr[k]) if psnr else ""]
        for k, t in enumerate(report.frame_times_ms)
    ]
    mse = report.mse_series
    recon_rows = [
        [r.frame_index, r.source.value, r.reference_index, _fmt(mse[r.frame_index]) if mse else ""]
        for r in report.reconstruction
    ]
    files = {
        "queues.csv": _csv(queues, QUEUES_HEADER),
        "psnr.csv": _csv(psnr_rows, PSNR_HEADER),
        "reconstruction.csv": _csv(recon_rows, RECON_HEADER),
        "summary.txt": summary_text(report),
    }
    paths = []
    for name, text in files.items():
        _write(out / name, text)
        paths.append(out / name)
    return paths


# -- multi-run comparison -------------------------------------------------

COMPARE_FIELDS = ("avg_psnr_db", "sigma_mse", "lost_d1", "lost_d2", "lost_total")


def _one_run(args) -> dict:
    config, mapper, seed = args
    report = run_scenario(config.replace(mapper=mapper, seed=seed), write=False)
    return report.summary_row()


def _mean_std(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


@dataclass
class Comparison:
    runs: list[dict]  # one summary row per (mapper, seed)
    table: list[dict]  # one aggregated row per mapper

    def to_csv(self) -> str:
        header = ["mapper", "runs"]
        for f in COMPARE_FIELDS:
            header += [f"{f}_mean", f"{f}_std"]
        rows = [[r["mapper"], r["runs"], *(_fmt(r[h]) for h in header[2:])] for r in self.table]
        return _csv(rows, header)

    def to_text(self) -> str:
        header = ["mapper", "runs", "avg_psnr_db", "sigma_mse", "lost_d1", "lost_d2", "lost_total"]
        body = []
        for r in self.table:
            cells = [r["mapper"], str(r["runs"])]
            for f in COMPARE_FIELDS:
                mean, std = r[f"{f}_mean"], r[f"{f}_std"]
                cells.append("n/a" if mean is None else f"{mean:.2f} ± {std:.2f}")
            body.append(cells)
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header, *body]]
        return "\n".join(lines) + "\n"

    def runs_csv(self) -> str:
        header = list(self.runs[0].keys()) if self.runs else []
        return _csv([[_fmt(r[h]) for h in header] for r in self.runs], header)


def compare_mappers(config: ScenarioConfig, mappers, seeds, jobs: int = 1, out: str | Path | None = None) -> Comparison:
    """Run every (mapper, seed) pair and aggregate mean and sample std per mapper."""
    mappers, seeds = list(mappers), list(seeds)
    if not mappers or not seeds:
        raise ValueError("compare_mappers needs at least one mapper and one seed")
    config.validate()
    work = [(config, m, s) for m in mappers for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_one_run, work))
    else:
        runs = [_one_run(w) for w in work]
    runs.sort(key=lambda r: (mappers.index(r["mapper"]), r["seed"]))

    table = []
    for mapper in mappers:
        mine = [r for r in runs if r["mapper"] == mapper]
        row = {"mapper": mapper, "runs": len(mine)}
        for f in COMPARE_FIELDS:
            row[f"{f}_mean"], row[f"{f}_std"] = _mean_std(r[f] for r in mine)
        table.append(row)
    comparison = Comparison(runs, table)
    if out is not None:
        out = Path(out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {out}: {exc.strerror}") from exc
        _write(out / "compare.csv", comparison.to_csv())
        _write(out / "compare_runs.csv", comparison.runs_csv())
        _write(out / "compare.txt", comparison.to_text())
    return comparison
