"""
qkdlink - Main API

One object per experiment: the configuration goes in, and simulation
runs, key-exchange sessions, loss sweeps and leakage reports come out.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from qkdlink.exceptions import ConfigError, ParameterError
from qkdlink.ldpc.adapt import CodeSet
from qkdlink.net.report import (
    LeakageReport,
    SessionReport,
    leakage_report,
    read_frame_log,
    write_frame_log,
)
from qkdlink.net.session import Role, build_code_set, run_loopback, run_session
from qkdlink.net.transport import TcpTransport
from qkdlink.security.curves import (
    CurvePoint,
    QberModel,
    load_overlay,
    parse_loss_range,
    rate_vs_loss_curve,
    write_curve_csv,
    write_overlay_csv,
)
from qkdlink.sim.link import SimulationSummary, simulate_to_files
from qkdlink.utils.config import ExperimentConfig, parse_endpoint
from qkdlink.utils.logger import logger


class QKDLink:
    """
    qkdlink experiment runner

    Features:
    - simulate()       - Run the link and write pulse/click records
    - run_role()       - One side of a session against a live peer
    - run_loopback()   - Both sides in-process
    - sweep()          - Finite and asymptotic key rate over channel loss
    - report()         - Leakage breakdown of a session frame log

    Args:
        config: Experiment configuration (defaults if None)

    Examples:
        link = QKDLink.from_file("day1.conf")
        summary = link.simulate()
        alice, bob = await link.run_loopback()
        points = link.sweep("0:30:2")
    """

    def __init__(self, config: Optional[ExperimentConfig] = None):
        self.config = config if config is not None else ExperimentConfig()
        self._code_set: Optional[CodeSet] = None
        logger.info("qkdlink_initialized", digest=self.config.digest()[:16], frame_size=self.config.frame_size)

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> "QKDLink":
        """Load a config file; keyword overrides are applied on top (None values ignored)."""
        config = ExperimentConfig.from_file(path)
        changes = {k: v for k, v in overrides.items() if v is not None}
        return cls(config.replace(**changes) if changes else config)

    @property
    def code_set(self) -> CodeSet:
        """Base codes for the configured frame size, built or loaded on first use."""
        if self._code_set is None:
            self._code_set = build_code_set(self.config)
        return self._code_set

    # ===== SIMULATION =====

    def simulate(self, out_dir: Optional[Union[str, Path]] = None) -> SimulationSummary:
        """
        Run the simulated link for the configured duration

        Writes clicks.bin, pulses.bin (per record_mode) and summary.json to
        out_dir (config.out_dir if None).
        """
        out = Path(out_dir) if out_dir is not None else Path(self.config.out_dir)
        summary = simulate_to_files(
            self.config.system_params(),
            self.config.n_pulses,
            self.config.seed,
            out_dir=out,
            chunk_pulses=self.config.chunk_pulses,
            drift=self.config.drift_state(),
            record_mode=self.config.record_mode,
        )
        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
        summary.files.append(str(summary_path))
        return summary

    # ===== SESSIONS =====

    async def run_role(
        self,
        role: str,
        connect: Optional[str] = None,
        listen: Optional[str] = None,
    ) -> SessionReport:
        """
        Run one role of a session over TCP

        Exactly one of connect/listen may be given; if neither is, Bob
        listens on config.endpoint and Alice connects to it.
        """
        role = Role(role)
        if connect and listen:
            raise ConfigError("give either a listen or a connect endpoint, not both")
        if not connect and not listen:
            if role is Role.BOB:
                listen = self.config.endpoint
            else:
                connect = self.config.endpoint

        # all base codes built before the peer connects
        await asyncio.to_thread(self.code_set.warm)

        if listen:
            host, port = parse_endpoint(listen)
            transport = await TcpTransport.accept_one(host, port)
        else:
            host, port = parse_endpoint(connect)
            transport = await TcpTransport.connect(host, port)
        logger.info("peer_connected", role=role.value, host=host, port=port)
        return await run_session(role.value, transport, self.config, code_set=self.code_set)

    async def run_loopback(self) -> Tuple[SessionReport, SessionReport]:
        """Alice and Bob in this process over an in-memory transport."""
        alice, bob = await run_loopback(self.config, code_set=self.code_set)
        return alice.report, bob.report

    def write_session_outputs(self, report: SessionReport, out_dir: Optional[Union[str, Path]] = None) -> List[Path]:
        """frames_<role>.csv and summary_<role>.txt under out_dir."""
        out = Path(out_dir) if out_dir is not None else Path(self.config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / f"frames_{report.role}.csv"
        write_frame_log(log_path, report.frames)
        summary_path = out / f"summary_{report.role}.txt"
        summary_path.write_text(report.summary() + "\n")
        return [log_path, summary_path]

    # ===== ANALYSIS =====

    def sweep(
        self,
        loss_range: Optional[Union[str, Sequence[float]]] = None,
        jobs: Optional[int] = None,
    ) -> List[CurvePoint]:
        """
        Secret key rate over a loss sweep

        Args:
            loss_range: "A:B:STEP" or explicit losses (config.loss_range if None)
            jobs: Worker threads (config.jobs if None)
        """
        requested = self.config.loss_range if loss_range is None else loss_range
        losses = parse_loss_range(requested) if isinstance(requested, str) else [float(x) for x in requested]
        if not losses:
            raise ParameterError("loss sweep is empty")
        return rate_vs_loss_curve(
            self.config.system_params(),
            QberModel(intrinsic=self.config.q_intrinsic),
            losses,
            jobs=jobs if jobs is not None else self.config.jobs,
            efficiency=self.config.f_target,
            n=self.config.frame_size,
            sample_fraction=self.config.sample_fraction,
            budget=self.config.security_budget(),
            reference_raw_rate_hz=self.config.reference_raw_rate_hz,
            reference_loss_db=self.config.reference_loss_db,
        )

    def write_sweep(self, points: Sequence[CurvePoint], out_dir: Optional[Union[str, Path]] = None) -> List[Path]:
        """sweep.csv plus the shipped literature overlay."""
        out = Path(out_dir) if out_dir is not None else Path(self.config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        sweep_path, overlay_path = out / "sweep.csv", out / "overlay.csv"
        write_curve_csv(sweep_path, points)
        write_overlay_csv(overlay_path, load_overlay())
        return [sweep_path, overlay_path]

    @staticmethod
    def report(frame_log: Union[str, Path]) -> LeakageReport:
        """Leakage breakdown of a frame log written by a session."""
        return leakage_report(read_frame_log(frame_log))
