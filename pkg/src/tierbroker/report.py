"""Run metrics and their CSV/JSON serializations.

Output files are byte-stable: fixed column order, floats at 6
significant digits, LF line endings, trailing newline, and nothing
time-of-day dependent. wall_ms reports the simulated duration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from statistics import fmean

from .arbitrator import percentile

CSV_COLUMNS = [
    "row",
    "policy",
    "seed",
    "service_id",
    "tier",
    "invocations",
    "completed",
    "rejected",
    "dropped",
    "in_flight",
    "mean_latency_ms",
    "p95_latency_ms",
    "energy_j_total",
    "charge_total",
    "reschedules",
    "arbitration_events",
    "security_violations",
    "wall_ms",
]


@dataclass
class ServiceRow:
    service_id: str
    tier: str
    invocations: int
    completed: int
    rejected: int
    dropped: int
    in_flight: int
    mean_latency_ms: float
    p95_latency_ms: float
    energy_j_total: float
    charge_total: float
    reschedules: int


@dataclass
class RunRow:
    arrivals: int
    completed: int
    rejected: int
    dropped: int
    in_flight: int
    mean_latency_ms: float
    p95_latency_ms: float
    energy_j_total: float
    charge_total: float
    reschedules: int
    arbitration_events: int
    security_violations: int
    wall_ms: float


@dataclass
class MetricsReport:
    policy: str
    seed: int
    services: list[ServiceRow] = field(default_factory=list)
    run: RunRow | None = None


def latency_stats(latencies: list[float]) -> tuple[float, float]:
    """(mean, p95) of a latency sample; empty samples read as zero."""
    if not latencies:
        return 0.0, 0.0
    return fmean(latencies), percentile(latencies, 95.0)


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def round6(value: float) -> float:
    return float(format(value, ".6g"))


def _service_cells(report: MetricsReport, row: ServiceRow) -> dict:
    return {
        "row": "service",
        "policy": report.policy,
        "seed": report.seed,
        "service_id": row.service_id,
        "tier": row.tier,
        "invocations": row.invocations,
        "completed": row.completed,
        "rejected": row.rejected,
        "dropped": row.dropped,
        "in_flight": row.in_flight,
        "mean_latency_ms": row.mean_latency_ms,
        "p95_latency_ms": row.p95_latency_ms,
        "energy_j_total": row.energy_j_total,
        "charge_total": row.charge_total,
        "reschedules": row.reschedules,
        "arbitration_events": "",
        "security_violations": "",
        "wall_ms": "",
    }


def _run_cells(report: MetricsReport) -> dict:
    run = report.run
    return {
        "row": "run",
        "policy": report.policy,
        "seed": report.seed,
        "service_id": "",
        "tier": "",
        "invocations": run.arrivals,
        "completed": run.completed,
        "rejected": run.rejected,
        "dropped": run.dropped,
        "in_flight": run.in_flight,
        "mean_latency_ms": run.mean_latency_ms,
        "p95_latency_ms": run.p95_latency_ms,
        "energy_j_total": run.energy_j_total,
        "charge_total": run.charge_total,
        "reschedules": run.reschedules,
        "arbitration_events": run.arbitration_events,
        "security_violations": run.security_violations,
        "wall_ms": run.wall_ms,
    }


def _write_rows(path: str, reports: list[MetricsReport]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            for row in report.services:
                cells = _service_cells(report, row)
                writer.writerow([fmt(cells[c]) if cells[c] != "" else "" for c in CSV_COLUMNS])
            cells = _run_cells(report)
            writer.writerow([fmt(cells[c]) if cells[c] != "" else "" for c in CSV_COLUMNS])


def write_metrics_csv(report: MetricsReport, path: str):
    _write_rows(path, [report])


def write_compare_csv(reports: list[MetricsReport], path: str):
    """One block of service rows plus a summary row per policy."""
    _write_rows(path, reports)


def report_to_dict(report: MetricsReport) -> dict:
    run = report.run
    return {
        "policy": report.policy,
        "seed": report.seed,
        "services": [
            {
                "service_id": r.service_id,
                "tier": r.tier,
                "invocations": r.invocations,
                "completed": r.completed,
                "rejected": r.rejected,
                "dropped": r.dropped,
                "in_flight": r.in_flight,
                "mean_latency_ms": round6(r.mean_latency_ms),
                "p95_latency_ms": round6(r.p95_latency_ms),
                "energy_j_total": round6(r.energy_j_total),
                "charge_total": round6(r.charge_total),
                "reschedules": r.reschedules,
            }
            for r in report.services
        ],
        "run": {
            "arrivals": run.arrivals,
            "completed": run.completed,
            "rejected": run.rejected,
            "dropped": run.dropped,
            "in_flight": run.in_flight,
            "mean_latency_ms": round6(run.mean_latency_ms),
            "p95_latency_ms": round6(run.p95_latency_ms),
            "energy_j_total": round6(run.energy_j_total),
            "charge_total": round6(run.charge_total),
            "reschedules": run.reschedules,
            "arbitration_events": run.arbitration_events,
            "security_violations": run.security_violations,
            "wall_ms": round6(run.wall_ms),
        },
    }


def write_metrics_json(report: MetricsReport, path: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_compare_json(reports: list[MetricsReport], path: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump([report_to_dict(r) for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")
