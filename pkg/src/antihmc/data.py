"""CSV ingestion and preprocessing for the two built-in models."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models.jump_diffusion import ReturnSeries
from .models.logistic import ClassificationData


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True)
class PriceSeries:
    prices: np.ndarray
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float).reshape(-1)
        if prices.size < 2:
            raise DataError(f"need at least 2 prices, got {prices.size}")
        bad = np.nonzero(~(np.isfinite(prices) & (prices > 0)))[0]
        if bad.size:
            raise DataError(f"prices must be positive and finite; first bad index {int(bad[0])}")
        object.__setattr__(self, "prices", prices)


def _parse_float(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path} is empty")
    return rows


def _resolve_column(header, column, n_cols, default):
    if column is None:
        column = default
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if header is None:
            raise DataError(f"column {column!r} requested by name but the file has no header")
        names = [h.strip().lower() for h in header]
        if column.strip().lower() not in names:
            raise DataError(f"column {column!r} not in header {header}")
        return names.index(column.strip().lower())
    idx = int(column)
    if not -n_cols <= idx < n_cols:
        raise DataError(f"column index {idx} out of range for {n_cols} columns")
    return idx % n_cols


def _detect_header(rows):
    """A first row is a header when it is non-numeric wherever the second row is numeric."""
    first = rows[0]
    if len(rows) < 2:
        return all(_parse_float(c) is None for c in first)
    numeric_cols = [j for j, c in enumerate(rows[1]) if _parse_float(c) is not None]
    if not numeric_cols:
        return all(_parse_float(c) is None for c in first)
    return all(j >= len(first) or _parse_float(first[j]) is None for j in numeric_cols)


def load_price_csv(path, column=None) -> PriceSeries:
    """Read a price column from a CSV file.

    ``column`` is a header name or zero-based index. By default a column named
    ``close``, ``adj close`` or ``price`` is used when present, else the last
    column. A first row that is non-numeric wherever the second row is numeric
    is treated as a header.
    Row numbers in errors are 1-based file lines.
    """
    rows = _read_rows(path)
    n_cols = len(rows[0])
    header = rows[0] if _detect_header(rows) else None
    default = -1
    if header is not None:
        names = [h.strip().lower() for h in header]
        for candidate in ("adj close", "close", "price"):
            if candidate in names:
                default = names.index(candidate)
                break
    col = _resolve_column(header, column, n_cols, default)
    body = rows[1:] if header is not None else rows
    offset = 2 if header is not None else 1
    date_col = None
    if header is not None:
        names = [h.strip().lower() for h in header]
        if "date" in names:
            date_col = names.index("date")

    prices, dates = [], []
    for i, row in enumerate(body):
        line = i + offset
        if len(row) != n_cols:
            raise DataError(f"row {line}: expected {n_cols} fields, got {len(row)}")
        value = _parse_float(row[col].strip())
        if value is None or not math.isfinite(value):
            raise DataError(f"row {line}: missing or non-numeric price {row[col]!r}")
        if value <= 0:
            raise DataError(f"row {line}: non-positive price {value}")
        prices.append(value)
        if date_col is not None:
            dates.append(row[date_col].strip())
    if len(prices) < 2:
        raise DataError(f"need at least 2 valid price rows, got {len(prices)}")
    return PriceSeries(np.array(prices), tuple(dates) if date_col is not None else None)


def to_log_returns(series: PriceSeries, tau: float = 1.0) -> ReturnSeries:
    prices = series.prices
    return ReturnSeries(np.log(prices[1:] / prices[:-1]), tau=tau)


def _map_labels(raw, label_map, offset):
    if label_map is not None:
        lookup = {str(k).strip(): int(v) for k, v in label_map.items()}
        out = []
        for i, value in enumerate(raw):
            key = value.strip()
            if key not in lookup:
                num = _parse_float(key)
                # allow numeric keys such as "1" to match "1.0"
                key = next((k for k in lookup if _parse_float(k) == num), None) if num is not None else None
                if key is None:
                    raise DataError(f"row {i + offset}: label {value!r} not in label map")
            out.append(lookup[key])
        y = np.array(out, dtype=float)
    else:
        nums = []
        for i, value in enumerate(raw):
            num = _parse_float(value.strip())
            if num is None:
                raise DataError(
                    f"row {i + offset}: non-numeric label {value!r}; supply a label map"
                )
            nums.append(num)
        y = np.array(nums, dtype=float)
        if set(np.unique(y)) <= {-1.0, 1.0} and -1.0 in y:
            y = (y > 0).astype(float)
    bad = np.nonzero((y != 0.0) & (y != 1.0))[0]
    if bad.size:
        raise DataError(f"row {int(bad[0]) + offset}: label {y[bad[0]]:g} is not 0/1; supply a label map")
    return y


def load_classification_csv(path, label_column=-1, label_map=None) -> ClassificationData:
    """Read features and binary labels; no standardization or bias column yet.

    Labels already in {0, 1} pass through, {-1, +1} map to {0, 1}; anything
    else needs ``label_map`` (e.g. ``{"1": 0, "2": 1}``).
    """
    rows = _read_rows(path)
    n_cols = len(rows[0])
    if n_cols < 2:
        raise DataError("classification file needs at least one feature column and a label column")
    header = rows[0] if _detect_header(rows) else None
    col = _resolve_column(header, label_column, n_cols, -1)
    body = rows[1:] if header is not None else rows
    offset = 2 if header is not None else 1
    features, raw_labels = [], []
    for i, row in enumerate(body):
        line = i + offset
        if len(row) != n_cols:
            raise DataError(f"row {line}: expected {n_cols} fields, got {len(row)}")
        vals = []
        for j, cell in enumerate(row):
            if j == col:
                continue
            v = _parse_float(cell.strip())
            if v is None or not math.isfinite(v):
                raise DataError(f"row {line}, column {j}: non-numeric feature {cell!r}")
            vals.append(v)
        features.append(vals)
        raw_labels.append(row[col])
    if not features:
        raise DataError("no data rows")
    y = _map_labels(raw_labels, label_map, offset)
    return ClassificationData(np.array(features, dtype=float), y)


def standardize_and_bias(data: ClassificationData, ddof: int = 0) -> ClassificationData:
    """Center and scale every feature, then prepend an all-ones bias column."""
    X = np.asarray(data.X, dtype=float)
    means = X.mean(axis=0)
    scales = X.std(axis=0, ddof=ddof)
    const = np.nonzero(~(scales > 0))[0]
    if const.size:
        raise DataError(f"constant feature column(s) {const.tolist()} cannot be standardized")
    Z = (X - means) / scales
    Xb = np.hstack([np.ones((X.shape[0], 1)), Z])
    return ClassificationData(Xb, data.y, feature_means=means, feature_scales=scales)


def destandardize(data: ClassificationData) -> np.ndarray:
    """Recover the raw feature matrix from a standardized, biased dataset."""
    if data.feature_means is None or data.feature_scales is None:
        raise ValueError("dataset carries no standardization record")
    return data.X[:, 1:] * data.feature_scales + data.feature_means
