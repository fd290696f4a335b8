"""
Link Simulator

Runs source → drift → channel → compensator in fixed-size pulse windows
("chunks"). Both ends of a simulated session construct the same simulator
from the same seed; Alice reads the pulses, Bob reads the clicks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from qkdlink.exceptions import ParameterError
from qkdlink.sim.channel import transmit_and_detect
from qkdlink.sim.drift import HISTORY_WINDOW, DriftState, compensate, step_drift
from qkdlink.sim.params import NUM_DETECTORS, SystemParams
from qkdlink.sim.records import ClickTrain, PulseTrain, write_records
from qkdlink.sim.source import emit_pulses
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_count


DEFAULT_CHUNK_PULSES = 1 << 20

RECORD_MODES = ("clicked", "all", "none")


@dataclass
class LinkChunk:
    index: int
    pulses: PulseTrain
    clicks: ClickTrain
    scanning: bool
    qber: float
    drift_qber: float


@dataclass
class SimulationSummary:
    pulses: int = 0
    clicks: int = 0
    dark_clicks: int = 0
    matched_clicks: int = 0
    matched_errors: int = 0
    scans: int = 0
    discarded_chunks: int = 0
    duration_s: float = 0.0
    files: List[str] = field(default_factory=list)

    @property
    def click_rate_hz(self) -> float:
        return self.clicks / self.duration_s if self.duration_s else 0.0

    @property
    def qber(self) -> float:
        return self.matched_errors / self.matched_clicks if self.matched_clicks else 0.0

    @property
    def sift_fraction(self) -> float:
        return self.matched_clicks / self.clicks if self.clicks else 0.0

    def to_dict(self) -> dict:
        return {
            "pulses": self.pulses,
            "duration_s": self.duration_s,
            "clicks": self.clicks,
            "dark_clicks": self.dark_clicks,
            "click_rate_hz": self.click_rate_hz,
            "matched_clicks": self.matched_clicks,
            "qber": self.qber,
            "scans": self.scans,
            "discarded_chunks": self.discarded_chunks,
        }


def matched_errors(pulses: PulseTrain, clicks: ClickTrain):
    """(matched-basis clicks, errors among them), from simulation truth."""
    if len(clicks) == 0:
        return 0, 0
    sent = pulses.at(clicks.pulse_index)
    matched = clicks.basis == sent.basis
    errors = matched & (clicks.bit != sent.bit)
    return int(matched.sum()), int(errors.sum())


class LinkSimulator:
    """
    Chunked link simulation

    Usage:
        sim = LinkSimulator(params, seed=7)
        for chunk in sim.run(n_chunks=10):
            ...
    """

    def __init__(
        self,
        params: SystemParams,
        seed: int,
        chunk_pulses: int = DEFAULT_CHUNK_PULSES,
        drift: Optional[DriftState] = None,
        compensation: bool = True,
    ):
        self.params = params
        self.seed = int(seed)
        self.chunk_pulses = validate_count("chunk_pulses", chunk_pulses, minimum=1)
        self.drift = drift if drift is not None else DriftState(seed=self.seed)
        self.compensation = compensation
        self.history: List[Tuple[int, int]] = []
        self._last_click = np.full(NUM_DETECTORS, -np.inf)
        self._next_index = 0

    @property
    def chunk_duration_s(self) -> float:
        return self.chunk_pulses * self.params.pulse_period_s

    def next_chunk(self) -> LinkChunk:
        """Simulate the next pulse window."""
        index = self._next_index
        start = index * self.chunk_pulses

        pulses = emit_pulses(self.params, self.chunk_pulses, self.seed, start_index=start)
        self.drift = step_drift(self.drift, self.chunk_duration_s)
        scanning = self.drift.scanning
        drift_qber = self.drift.qber_contribution()

        clicks = transmit_and_detect(pulses, self.params, self.drift, self.seed, self._last_click)
        self._last_click = clicks.last_click_s

        n_matched, n_err = matched_errors(pulses, clicks)
        qber = n_err / n_matched if n_matched else 0.0

        if self.compensation:
            # scan windows say nothing about the settled compensator
            if not scanning:
                self.history.append((n_matched, n_err))
            self.drift = compensate(self.drift, self.history, baseline_qber=self.params.misalignment_qber)
            if len(self.history) >= HISTORY_WINDOW:
                self.history.clear()

        self._next_index += 1
        return LinkChunk(index=index, pulses=pulses, clicks=clicks, scanning=scanning,
                         qber=qber, drift_qber=drift_qber)

    def run(self, n_chunks: int) -> Iterator[LinkChunk]:
        for _ in range(validate_count("n_chunks", n_chunks, minimum=0)):
            yield self.next_chunk()


def simulate_to_files(
    params: SystemParams,
    n_pulses: int,
    seed: int,
    out_dir: Optional[Path] = None,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
    drift: Optional[DriftState] = None,
    record_mode: str = "clicked",
) -> SimulationSummary:
    """
    Run the link for n_pulses (rounded up to whole chunks) and optionally
    write record files

    record_mode selects which pulse records go to pulses.bin: "clicked"
    (slots with a registered click), "all", or "none". clicks.bin always
    holds every registered click when out_dir is given.
    """
    validate_count("n_pulses", n_pulses, minimum=1)
    if record_mode not in RECORD_MODES:
        raise ParameterError(f"record_mode must be one of {RECORD_MODES}, got {record_mode!r}")

    chunk_pulses = min(chunk_pulses, n_pulses)
    n_chunks = -(-n_pulses // chunk_pulses)
    sim = LinkSimulator(params, seed, chunk_pulses=chunk_pulses, drift=drift)
    summary = SimulationSummary()

    pulse_path = click_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        click_path = out_dir / "clicks.bin"
        click_path.write_bytes(b"")
        summary.files.append(str(click_path))
        if record_mode != "none":
            pulse_path = out_dir / "pulses.bin"
            pulse_path.write_bytes(b"")
            summary.files.append(str(pulse_path))

    for chunk in sim.run(n_chunks):
        summary.pulses += len(chunk.pulses)
        summary.clicks += len(chunk.clicks)
        summary.dark_clicks += int(chunk.clicks.is_dark.sum())
        n_matched, n_err = matched_errors(chunk.pulses, chunk.clicks)
        summary.matched_clicks += n_matched
        summary.matched_errors += n_err
        summary.discarded_chunks += int(chunk.scanning)

        if click_path is not None:
            write_records(click_path, chunk.clicks.to_records(), append=True)
        if pulse_path is not None:
            if record_mode == "all":
                write_records(pulse_path, chunk.pulses.to_records(), append=True)
            else:
                slots = np.unique(chunk.clicks.pulse_index)
                write_records(pulse_path, chunk.pulses.at(slots).to_records(), append=True)

    summary.scans = sim.drift.scan_count
    summary.duration_s = summary.pulses * params.pulse_period_s

    logger.info(
        "simulation_complete",
        pulses=summary.pulses,
        clicks=summary.clicks,
        click_rate_hz=round(summary.click_rate_hz, 1),
        qber=round(summary.qber, 5),
    )
    return summary
