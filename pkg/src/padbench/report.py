"""Stable file emission: DET curve CSVs, breakdown tables, summary JSON.

Output is byte-stable for identical inputs: keys are sorted, floats are
rendered with Python's shortest round-trip repr (so parsing an emitted DET
file reproduces thresholds and rates exactly), and files end with a single
trailing newline.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .fileio import atomic_write_text
from .metrics import DetCurve, OperatingPoint, format_percent

DET_HEADER = "threshold,apcer,bpcer,apcer_probit,bpcer_probit"

_RATE_CLAMP = 1e-6

# Coefficients of Acklam's rational approximation to the inverse standard
# normal CDF; one Halley refinement below brings it to full double precision.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inverse_normal_cdf(p: float) -> float:
    """Quantile of the standard normal distribution for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            (((( _D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((( _A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            ((((( _B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            (((( _D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # one Halley step against the exact CDF
    e = _normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def probit(rate: float) -> float:
    """Normal-deviate coordinate of an error rate, clamped away from 0 and 1."""
    return inverse_normal_cdf(min(max(rate, _RATE_CLAMP), 1.0 - _RATE_CLAMP))


def emit_det(curve: DetCurve, path: str | Path) -> None:
    buf = io.StringIO()
    buf.write(DET_HEADER + "\n")
    for point in sorted(curve.points, key=lambda p: p.threshold):
        buf.write(
            f"{point.threshold!r},{point.apcer!r},{point.bpcer!r},"
            f"{probit(point.apcer)!r},{probit(point.bpcer)!r}\n"
        )
    atomic_write_text(path, buf.getvalue())


def parse_det(path: str | Path) -> list[tuple[float, float, float]]:
    """(threshold, apcer, bpcer) rows of an emitted DET file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != DET_HEADER:
        raise ValueError(f"DET file header must be {DET_HEADER!r}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append((float(cells[0]), float(cells[1]), float(cells[2])))
    return rows


def emit_breakdown(tables: Mapping[str, Mapping[str, int]], path: str | Path,
                   fusion_id: str | None = None) -> None:
    """Breakdown CSV: key column, one count column per algorithm (sorted,
    fusion last when named), and a trailing total row."""
    algorithms = sorted(tables)
    if fusion_id is not None and fusion_id in tables:
        algorithms = [a for a in algorithms if a != fusion_id] + [fusion_id]
    keys = sorted({key for table in tables.values() for key in table})
    buf = io.StringIO()
    buf.write(",".join(["key"] + algorithms) + "\n")
    for key in keys:
        counts = [str(tables[a].get(key, 0)) for a in algorithms]
        buf.write(",".join([key] + counts) + "\n")
    totals = [str(sum(tables[a].get(key, 0) for key in keys)) for a in algorithms]
    buf.write(",".join(["total"] + totals) + "\n")
    atomic_write_text(path, buf.getvalue())


@dataclass
class ExperimentReport:
    partition_name: str
    target_bpcer: float
    operating_points: dict[str, OperatingPoint] = field(default_factory=dict)
    det_files: dict[str, str] = field(default_factory=dict)
    breakdown_files: dict[str, str] = field(default_factory=dict)
    fusion: dict | None = None

    def to_dict(self) -> dict:
        algorithms = {}
        for algorithm_id in sorted(self.operating_points):
            point = self.operating_points[algorithm_id]
            algorithms[algorithm_id] = {
                "threshold": point.threshold,
                "apce_count": point.apce_count,
                "bf_error_count": point.bf_error_count,
                "n_attacks": point.n_attacks,
                "n_bonafides": point.n_bonafides,
                "apcer": point.apcer,
                "bpcer": point.bpcer,
                "apcer_percent": format_percent(point.apce_count, point.n_attacks),
                "bpcer_percent": format_percent(point.bf_error_count, point.n_bonafides),
                "det_file": self.det_files.get(algorithm_id),
            }
        return {
            "partition": self.partition_name,
            "target_bpcer": self.target_bpcer,
            "algorithms": algorithms,
            "breakdown_files": dict(sorted(self.breakdown_files.items())),
            "fusion": self.fusion,
        }


def emit_summary(report: ExperimentReport, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
