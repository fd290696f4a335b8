"""
qkdlink CLI

Reproducible experiment commands: (config, seed) determine every output
file byte for byte.

    qkdlink simulate --config day1.conf --out out/
    qkdlink bob --listen 0.0.0.0:7700 --frames 20
    qkdlink alice --connect 10.0.0.2:7700 --frames 20
    qkdlink sweep --loss-db 0:30:2 --jobs 4
    qkdlink report out/frames_alice.csv
"""
import argparse
import asyncio
import sys
from typing import Optional, Sequence

from qkdlink.exceptions import QKDError
from qkdlink.main import QKDLink
from qkdlink.security.curves import crossing_loss
from qkdlink.utils.config import ExperimentConfig


def _load(args: argparse.Namespace) -> QKDLink:
    """Config file (or defaults) with the command-line overrides applied."""
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "frames", None) is not None:
        overrides["frames"] = args.frames
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    return QKDLink(config.replace(**overrides) if overrides else config)


def cmd_simulate(link: QKDLink, args: argparse.Namespace) -> int:
    print(f"\n🔭 Simulating {link.config.n_pulses} pulses (seed {link.config.seed})")
    print("=" * 60)
    summary = link.simulate()
    print(f"   Clicks:         {summary.clicks}  ({summary.dark_clicks} dark)")
    print(f"   Click rate:     {summary.click_rate_hz:.1f} /s")
    print(f"   QBER (truth):   {100 * summary.qber:.3f} %")
    print(f"   Sift fraction:  {summary.sift_fraction:.4f}")
    print(f"   Scans:          {summary.scans}  (discarded chunks: {summary.discarded_chunks})")
    for path in summary.files:
        print(f"   📄 {path}")
    return 0


def cmd_session(link: QKDLink, args: argparse.Namespace) -> int:
    role = args.command
    print(f"\n🔑 {role.capitalize()}: {link.config.frames} frames, config {link.config.digest()[:16]}")
    print("=" * 60)
    report = asyncio.run(link.run_role(role, connect=args.connect, listen=args.listen))
    for path in link.write_session_outputs(report):
        print(f"   📄 {path}")
    print(report.summary())
    if report.aborted:
        print(f"❌ Session aborted: {report.abort_reason}")
        return 1
    print(f"✅ {report.secret_bits} secret bits, key digest {report.key_digest}")
    return 0


def cmd_sweep(link: QKDLink, args: argparse.Namespace) -> int:
    points = link.sweep(args.loss_db)
    paths = link.write_sweep(points)
    print(f"\n📈 Key rate vs loss ({len(points)} points)")
    print("=" * 60)
    print(f"{'LOSS dB':>8} {'CLICKS/s':>12} {'QBER %':>8} {'FINITE b/s':>12} {'ASYMPT b/s':>12}")
    for p in points:
        print(f"{p.loss_db:>8g} {p.click_rate_hz:>12.1f} {100 * p.qber:>8.3f} "
              f"{p.skr_finite_bps:>12.1f} {p.skr_asymptotic_bps:>12.1f}")
    for column in ("skr_finite_bps", "skr_asymptotic_bps"):
        loss = crossing_loss(points, column)
        print(f"   {column} reaches zero at: {'beyond sweep' if loss is None else f'{loss:g} dB'}")
    for path in paths:
        print(f"   📄 {path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = QKDLink.report(args.frame_log)
    print(f"\n📊 Leakage breakdown: {args.frame_log}")
    print("=" * 60)
    if not report.frames:
        print("   (No frames reached the key-length computation)")
        return 0
    print(report.render())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdlink", description="BB84 link simulation and key post-processing")
    parser.add_argument("--config", help="Experiment config file (key = value lines)")
    parser.add_argument("--seed", type=int, help="Simulation seed (overrides the config)")
    parser.add_argument("--out", help="Output directory (overrides the config)")

    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    subparsers.add_parser("simulate", help="Simulate the link and write record files")

    for role in ("alice", "bob"):
        session_parser = subparsers.add_parser(role, help=f"Run the {role} side of a key-exchange session")
        endpoint = session_parser.add_mutually_exclusive_group()
        endpoint.add_argument("--listen", metavar="HOST:PORT", help="Wait for the peer on this address")
        endpoint.add_argument("--connect", metavar="HOST:PORT", help="Connect to the peer at this address")
        session_parser.add_argument("--frames", type=int, help="Frames to process (overrides the config)")

    sweep_parser = subparsers.add_parser("sweep", help="Secret key rate versus channel loss")
    sweep_parser.add_argument("--loss-db", metavar="A:B:STEP", help="Loss range in dB (default from config)")
    sweep_parser.add_argument("--jobs", type=int, help="Parallel loss points")

    report_parser = subparsers.add_parser("report", help="Leakage breakdown of a session frame log")
    report_parser.add_argument("frame_log", help="frames_<role>.csv written by alice/bob")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    try:
        if args.command == "report":
            return cmd_report(args)
        link = _load(args)
        if args.command == "simulate":
            return cmd_simulate(link, args)
        if args.command in ("alice", "bob"):
            return cmd_session(link, args)
        return cmd_sweep(link, args)
    except (QKDError, OSError) as exc:
        print(f"❌ Error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
