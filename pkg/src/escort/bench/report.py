"""Run reports: per-seed rows, aggregates and CSV/JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..metrics import MetricSummary

REPORT_VERSION = 1
KEY_COLUMNS = ("suite", "method", "case", "seed")
METRIC_COLUMNS = ("mmd", "sw", "coverage", "corr_error", "rmse", "position_error", "final_position_error")
# wall-clock derived, so they differ between otherwise identical runs
TIMING_COLUMNS = ("frac_kernel", "frac_svgd", "frac_gswd", "frac_temporal", "total_time")
COLUMNS = KEY_COLUMNS + METRIC_COLUMNS + TIMING_COLUMNS


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else format(float(v), ".17g")
    return str(v)


@dataclass
class RunReport:
    """Everything one experiment produced.

    ``rows`` hold one dict per (method, case, seed) keyed by :data:`COLUMNS`;
    missing metrics are simply absent. ``extras`` carries suite-level
    derived numbers such as gap ratios or scaling exponents.
    """

    config: dict
    data_hash: str
    rows: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def groups(self) -> list[tuple[str, str]]:
        seen = []
        for r in self.rows:
            key = (r["method"], r["case"])
            if key not in seen:
                seen.append(key)
        return seen

    def values(self, column: str, method: str | None = None, case: str | None = None) -> list[float]:
        return [
            float(r[column])
            for r in self.rows
            if column in r
            and (method is None or r["method"] == method)
            and (case is None or r["case"] == case)
            and not math.isnan(float(r[column]))
        ]

    def summary(self, column: str, method: str | None = None, case: str | None = None) -> MetricSummary:
        return MetricSummary(column, tuple(self.values(column, method, case)))

    def aggregates(self) -> dict:
        """``{method: {case: {column: (mean, stderr)}}}`` recomputed from the rows."""
        out: dict = {}
        for method, case in self.groups():
            cols = {}
            for c in METRIC_COLUMNS + TIMING_COLUMNS:
                vals = self.values(c, method, case)
                if vals:
                    s = MetricSummary(c, tuple(vals))
                    cols[c] = (s.mean, s.stderr)
            out.setdefault(method, {})[case] = cols
        return out

    def timing_fractions(self, method: str | None = None) -> dict:
        """Mean phase fractions over all rows (of ``method``) that recorded timings."""
        out = {}
        for c in TIMING_COLUMNS[:4]:
            vals = self.values(c, method)
            out[c[len("frac_"):]] = float(np.mean(vals)) if vals else 0.0
        return out

    def header_lines(self) -> list[str]:
        lines = [f"# report_version={REPORT_VERSION}", f"# data_hash={self.data_hash}"]
        lines += [f"# {k}={v}" for k, v in self.config.items()]
        return lines

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.header_lines():
            buf.write(line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(r.get(c)) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, (float, np.floating)):
                return None if math.isnan(v) else float(v)
            if isinstance(v, np.integer):
                return int(v)
            return v

        doc = {
            "report_version": REPORT_VERSION,
            "data_hash": self.data_hash,
            "config": self.config,
            "columns": list(COLUMNS),
            "rows": [{c: clean(r.get(c)) for c in COLUMNS} for r in self.rows],
            "aggregates": self.aggregates(),
            "timing_fractions": self.timing_fractions(),
            "extras": {k: clean(v) for k, v in self.extras.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=False)

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def parse_csv(text: str) -> list[dict]:
    """Rows of a CSV report as ``{column: str}`` dicts (header comments skipped)."""
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


def strip_timing(text: str) -> str:
    """CSV body with the wall-clock derived columns blanked, for determinism checks."""
    rows = parse_csv(text)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keep = [c for c in COLUMNS if c not in TIMING_COLUMNS]
    writer.writerow(keep)
    for r in rows:
        writer.writerow([r[c] for c in keep])
    return buf.getvalue()
