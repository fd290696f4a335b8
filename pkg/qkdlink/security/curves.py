"""
Key Rate versus Channel Loss

Sweeps the fiber loss, recomputes the click rate and the dark-count QBER
floor at every point, and evaluates both the finite-key and the asymptotic
GLLP secret key rate. Results go to a versioned CSV.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np

from qkdlink.exceptions import ParameterError, SchemaError
from qkdlink.protocol.estimation import qber_upper_bound
from qkdlink.protocol.frames import DEFAULT_FRAME_SIZE, DEFAULT_SAMPLE_FRACTION, sample_size
from qkdlink.security.bounds import (
    asymptotic_gllp_rate,
    binary_entropy,
    finite_key_length,
    gllp_factor,
    multi_photon_prob,
)
from qkdlink.security.budget import SecurityBudget
from qkdlink.sim.params import MISALIGNMENT_QBER, SystemParams
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_count, validate_fraction, validate_non_negative


SWEEP_SCHEMA = "qkdlink.sweep/1"
OVERLAY_SCHEMA = "qkdlink.overlay/1"
SWEEP_COLUMNS = ("loss_db", "click_rate_hz", "qber", "skr_finite_bps", "skr_asymptotic_bps")

# Best-frame operating point used to calibrate the raw rate of the curve.
REFERENCE_RAW_RATE_HZ = 47.9e3
REFERENCE_LOSS_DB = 9.6

DEFAULT_EFFICIENCY = 1.17
DEFAULT_SIFT_FACTOR = 0.5


@dataclass(frozen=True)
class QberModel:
    """
    QBER(loss) = intrinsic + dark_error · dark_rate / click_rate

    A dark click lands on a random detector, so half of the sifted dark
    clicks are errors.
    """

    intrinsic: float = MISALIGNMENT_QBER
    dark_error: float = 0.5

    def __post_init__(self):
        validate_fraction("intrinsic", self.intrinsic)
        validate_fraction("dark_error", self.dark_error)

    def qber(self, click_rate_hz: float, dark_rate_hz: float) -> float:
        if click_rate_hz <= 0.0:
            return 0.5
        return min(0.5, self.intrinsic + self.dark_error * dark_rate_hz / click_rate_hz)


@dataclass(frozen=True)
class CurvePoint:
    loss_db: float
    click_rate_hz: float
    qber: float
    skr_finite_bps: float
    skr_asymptotic_bps: float


@dataclass(frozen=True)
class OverlayPoint:
    label: str
    source: str
    loss_db: float
    qber: float
    skr_bps: float


def parse_loss_range(text: str) -> List[float]:
    """
    "A:B:STEP" → [A, A+STEP, ..., B] (B included when it lies on the grid)

    Raises:
        ParameterError: On a malformed range or a non-positive step
    """
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise ParameterError(f"loss range must be A:B:STEP, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ParameterError(f"loss range needs STEP > 0 and B >= A, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


class RateCurveModel:
    """
    Evaluates one loss point

    The signal click rate follows the analytic chain of SystemParams. When
    `reference_raw_rate_hz` is set, it is scaled so the total click rate at
    `reference_loss_db` equals the reference.
    """

    def __init__(
        self,
        params: SystemParams,
        q_model: Optional[QberModel] = None,
        *,
        efficiency: float = DEFAULT_EFFICIENCY,
        sift_factor: float = DEFAULT_SIFT_FACTOR,
        n: int = DEFAULT_FRAME_SIZE,
        sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
        budget: Optional[SecurityBudget] = None,
        reference_raw_rate_hz: Optional[float] = REFERENCE_RAW_RATE_HZ,
        reference_loss_db: float = REFERENCE_LOSS_DB,
    ):
        self.params = params
        self.q_model = q_model or QberModel(intrinsic=params.misalignment_qber)
        self.efficiency = validate_non_negative("efficiency", efficiency)
        self.sift_factor = validate_fraction("sift_factor", sift_factor, open_low=True)
        self.n = validate_count("n", n, minimum=1)
        self.m = sample_size(n, sample_fraction)
        validate_count("m", self.m, minimum=1)
        self.budget = (budget or SecurityBudget()).resolved(self.n)

        p_m = multi_photon_prob(params.g2, params.eta_source_cband, params.eta_encoder)
        self.A = gllp_factor(p_m, params.detector_efficiency)
        self.dark_rate_hz = params.source_rate_hz * params.dark_probability()

        self.scale = 1.0
        if reference_raw_rate_hz is not None:
            validate_non_negative("reference_raw_rate_hz", reference_raw_rate_hz)
            signal = self._signal_rate(reference_loss_db)
            if signal <= 0.0 or reference_raw_rate_hz <= self.dark_rate_hz:
                raise ParameterError("reference raw rate cannot be matched at the reference loss")
            self.scale = (reference_raw_rate_hz - self.dark_rate_hz) / signal

    def _signal_rate(self, loss_db: float) -> float:
        p = self.params.with_loss(loss_db)
        return p.source_rate_hz * p.detection_probability()

    def finite_fraction(self, q: float) -> float:
        """Secret bits per sifted bit at block length n, estimation sample included."""
        q_tilde = qber_upper_bound(q, self.m, self.budget.eps_pe)
        leak_ec = int(math.ceil(self.efficiency * self.n * binary_entropy(q)))
        result = finite_key_length(
            self.n, q_tilde, leak_ec, self.budget.leak_ev, self.budget.nu_auth, self.A, self.budget, q_hat=q,
        )
        return result.secret_fraction(self.m)

    def point(self, loss_db: float) -> CurvePoint:
        validate_non_negative("loss_db", loss_db)
        click_rate = self.scale * self._signal_rate(loss_db) + self.dark_rate_hz
        q = self.q_model.qber(click_rate, self.dark_rate_hz)
        sifted_rate = click_rate * self.sift_factor
        return CurvePoint(
            loss_db=float(loss_db),
            click_rate_hz=click_rate,
            qber=q,
            skr_finite_bps=sifted_rate * self.finite_fraction(q),
            skr_asymptotic_bps=asymptotic_gllp_rate(click_rate, self.sift_factor, q, self.efficiency, self.A),
        )


def rate_vs_loss_curve(
    params: SystemParams,
    q_model: Optional[QberModel] = None,
    losses: Sequence[float] = (),
    *,
    jobs: int = 1,
    **model_options,
) -> List[CurvePoint]:
    """
    Finite and asymptotic secret key rate over a loss sweep

    Args:
        params: System parameters (channel loss is overridden per point)
        q_model: QBER model; intrinsic QBER defaults to params.misalignment_qber
        losses: Loss points in dB
        jobs: Worker threads evaluating loss points
        **model_options: Forwarded to RateCurveModel

    Returns:
        One CurvePoint per loss, in input order
    """
    validate_count("jobs", jobs, minimum=1)
    model = RateCurveModel(params, q_model, **model_options)
    losses = [float(x) for x in losses]

    if jobs == 1 or len(losses) < 2:
        points = [model.point(x) for x in losses]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(model.point, losses))

    logger.info(
        "rate_curve_computed",
        points=len(points),
        A=model.A,
        scale=round(model.scale, 6),
    )
    return points


# =====================================================
# CSV
# =====================================================

def write_curve_csv(target: Union[str, Path, TextIO], points: Iterable[CurvePoint]) -> None:
    """Write the sweep CSV (schema comment line, header, one row per point)."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as handle:
            write_curve_csv(handle, points)
        return

    target.write(f"# schema: {SWEEP_SCHEMA}\n")
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for p in points:
        writer.writerow([
            f"{p.loss_db:g}", f"{p.click_rate_hz:.6g}", f"{p.qber:.6f}",
            f"{p.skr_finite_bps:.6g}", f"{p.skr_asymptotic_bps:.6g}",
        ])


def _read_versioned(handle: TextIO, schema: str, columns: Sequence[str]) -> List[dict]:
    first = handle.readline().strip()
    if first != f"# schema: {schema}":
        raise SchemaError(f"expected schema {schema!r}, found {first!r}")
    reader = csv.DictReader(handle)
    if tuple(reader.fieldnames or ()) != tuple(columns):
        raise SchemaError(f"expected columns {list(columns)}, found {reader.fieldnames}")
    return list(reader)


def read_curve_csv(source: Union[str, Path, TextIO]) -> List[CurvePoint]:
    """
    Read a sweep CSV written by write_curve_csv

    Raises:
        SchemaError: If the schema line or the columns differ
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as handle:
            return read_curve_csv(handle)
    rows = _read_versioned(source, SWEEP_SCHEMA, SWEEP_COLUMNS)
    return [CurvePoint(**{k: float(v) for k, v in row.items()}) for row in rows]


def load_overlay() -> List[OverlayPoint]:
    """Literature reference points shipped with the package."""
    text = resources.files("qkdlink.security").joinpath("data/overlay.csv").read_text()
    columns = tuple(f.name for f in fields(OverlayPoint))
    rows = _read_versioned(io.StringIO(text), OVERLAY_SCHEMA, columns)
    return [
        OverlayPoint(label=r["label"], source=r["source"], loss_db=float(r["loss_db"]),
                     qber=float(r["qber"]), skr_bps=float(r["skr_bps"]))
        for r in rows
    ]


def write_overlay_csv(target: Union[str, Path], points: Iterable[OverlayPoint]) -> None:
    columns = [f.name for f in fields(OverlayPoint)]
    with open(target, "w", newline="") as handle:
        handle.write(f"# schema: {OVERLAY_SCHEMA}\n")
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for p in points:
            writer.writerow(asdict(p))


def crossing_loss(points: Sequence[CurvePoint], column: str = "skr_asymptotic_bps") -> Optional[float]:
    """First loss at which `column` drops to zero, or None if it never does."""
    values = np.array([getattr(p, column) for p in points])
    zero = np.flatnonzero(values <= 0.0)
    return float(points[int(zero[0])].loss_db) if zero.size else None
