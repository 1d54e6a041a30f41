"""Preprocessing of daily rainfall records into per-region wet-day series.

The pipeline keeps the monsoon months (June-September), drops zero-rain
days, averages multi-pixel rows per (region, date) if present, and removes
outliers with the medcouple-adjusted boxplot whose fences widen on the
skewed side.  All steps preserve input row order and are idempotent.

Input CSV schema: header ``date,region,rainfall_mm`` with ISO-8601 dates;
unparseable rows are rejected with their line number.  Output schema:
``year,rainfall_mm``.
"""

from __future__ import annotations

import csv
import datetime
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DailyRecord",
    "WetDaySeries",
    "SchemaError",
    "read_daily_csv",
    "write_series_csv",
    "read_series_csv",
    "filter_jjas",
    "drop_dry_days",
    "medcouple",
    "adjusted_fences",
    "adjusted_keep_mask",
    "adjusted_boxplot_filter",
    "build_series",
]

JJAS_MONTHS = (6, 7, 8, 9)


class SchemaError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class DailyRecord:
    date: datetime.date
    region: str
    rainfall_mm: float

    def __post_init__(self) -> None:
        if self.rainfall_mm < 0:
            raise ValueError(f"negative rainfall {self.rainfall_mm} on {self.date}")


@dataclass(frozen=True)
class WetDaySeries:
    """Wet-day rainfall rows (year, mm) for one region, in input order."""

    region: str
    year: np.ndarray
    rainfall_mm: np.ndarray

    def __len__(self) -> int:
        return self.year.size


def read_daily_csv(path) -> list[DailyRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(1, "empty file")
        if [h.strip() for h in header] != ["date", "region", "rainfall_mm"]:
            raise SchemaError(1, f"expected header 'date,region,rainfall_mm', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise SchemaError(lineno, f"expected 3 fields, got {len(row)}")
            raw_date, region, raw_rain = (f.strip() for f in row)
            try:
                date = datetime.date.fromisoformat(raw_date)
            except ValueError as exc:
                raise SchemaError(lineno, f"bad date {raw_date!r}") from exc
            if not region:
                raise SchemaError(lineno, "empty region label")
            try:
                rain = float(raw_rain)
            except ValueError as exc:
                raise SchemaError(lineno, f"bad rainfall value {raw_rain!r}") from exc
            if not np.isfinite(rain) or rain < 0:
                raise SchemaError(lineno, f"rainfall must be finite and >= 0, got {raw_rain}")
            records.append(DailyRecord(date, region, rain))
    return records


def filter_jjas(records: list[DailyRecord]) -> list[DailyRecord]:
    """Keep the monsoon months June through September."""
    return [r for r in records if r.date.month in JJAS_MONTHS]


def drop_dry_days(records: list[DailyRecord]) -> list[DailyRecord]:
    """Keep strictly positive rainfall; negative values are invalid input."""
    for r in records:
        if r.rainfall_mm < 0:
            raise ValueError(f"negative rainfall {r.rainfall_mm} on {r.date}")
    return [r for r in records if r.rainfall_mm > 0]


def medcouple(sample) -> float:
    """Robust skewness statistic in [-1, 1], by full O(n^2) kernel enumeration.

    Over distinct observation pairs with x_i <= m <= x_j (m the sample
    median) the kernel is ``((x_j - m) - (m - x_i)) / (x_j - x_i)``; pairs
    of distinct observations tied at the median use the sign kernel -1/0/+1
    by rank position.  An observation is never paired with itself, so e.g.
    {0, 1, 3} enumerates kernels {-1, 1/3, 1} and gives 1/3.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3:
        raise ValueError("medcouple needs at least 3 observations")
    m = float(np.median(x))
    lower = x[x <= m] - m  # <= 0, ascending (zeros last)
    upper = x[x >= m] - m  # >= 0, ascending (zeros first)
    q = lower.size
    h = upper[:, None] + lower[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        h /= upper[:, None] - lower[None, :]
    k = int(np.sum(lower == 0.0))
    if k == 0:
        return float(np.median(h, overwrite_input=True))
    # the 0/0 tie block: sign kernel, -1 below the anti-diagonal, 0 on it,
    # +1 above; then drop the k self-pair cells (rank a with itself)
    i = np.arange(k)
    h[:k, q - k:] = np.sign(i[:, None] + i[None, :] - (k - 1))
    self_cells = i * q + (q - k) + i
    return float(np.median(np.delete(h.ravel(), self_cells)))


def adjusted_fences(sample, mc: float | None = None) -> tuple[float, float]:
    """Skewness-adjusted boxplot fences; mc=0 gives the classical 1.5*IQR rule."""
    x = np.asarray(sample, dtype=float)
    if mc is None:
        mc = medcouple(x)
    q1, q3 = np.percentile(x, [25.0, 75.0])
    iqr = q3 - q1
    if mc >= 0:
        return q1 - 1.5 * np.exp(-4.0 * mc) * iqr, q3 + 1.5 * np.exp(3.0 * mc) * iqr
    return q1 - 1.5 * np.exp(-3.0 * mc) * iqr, q3 + 1.5 * np.exp(4.0 * mc) * iqr


def adjusted_keep_mask(sample, mc: float | None = None) -> np.ndarray:
    """Boolean mask of in-fence values; all True (with a warning) when IQR = 0."""
    x = np.asarray(sample, dtype=float)
    if x.size < 5:
        raise ValueError("adjusted boxplot needs at least 5 observations")
    q1, q3 = np.percentile(x, [25.0, 75.0])
    if q3 - q1 == 0.0:
        warnings.warn("degenerate IQR = 0: no outlier removal applied", RuntimeWarning)
        return np.ones(x.size, dtype=bool)
    lo, hi = adjusted_fences(x, mc)
    return (x >= lo) & (x <= hi)


def adjusted_boxplot_filter(sample, mc: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(kept, removed) partition of the sample, preserving input order."""
    x = np.asarray(sample, dtype=float)
    keep = adjusted_keep_mask(x, mc)
    return x[keep], x[~keep]


def build_series(records: list[DailyRecord], region: str) -> WetDaySeries:
    """(year, rainfall) rows for one region, averaging same-date pixel rows."""
    picked = [r for r in records if r.region == region]
    if not picked:
        known = sorted({r.region for r in records})
        raise ValueError(f"unknown region {region!r}; input has {known}")
    totals: dict[datetime.date, list[float]] = {}
    order: list[datetime.date] = []
    for r in picked:
        if r.date not in totals:
            totals[r.date] = [0.0, 0]
            order.append(r.date)
        totals[r.date][0] += r.rainfall_mm
        totals[r.date][1] += 1
    years = np.array([d.year for d in order], dtype=int)
    rain = np.array([totals[d][0] / totals[d][1] for d in order])
    return WetDaySeries(region=region, year=years, rainfall_mm=rain)


def write_series_csv(path, series: WetDaySeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "rainfall_mm"])
        for year, rain in zip(series.year, series.rainfall_mm):
            writer.writerow([int(year), repr(float(rain))])


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a wet-day series CSV; returns (years, rainfall_mm)."""
    years, rain = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(1, "empty file")
        if [h.strip() for h in header] != ["year", "rainfall_mm"]:
            raise SchemaError(1, f"expected header 'year,rainfall_mm', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise SchemaError(lineno, f"expected 2 fields, got {len(row)}")
            try:
                years.append(int(row[0]))
                rain.append(float(row[1]))
            except ValueError as exc:
                raise SchemaError(lineno, f"bad row {row!r}") from exc
            if rain[-1] <= 0 or not np.isfinite(rain[-1]):
                raise SchemaError(lineno, f"wet-day rainfall must be positive, got {row[1]}")
    return np.asarray(years, dtype=float), np.asarray(rain, dtype=float)
