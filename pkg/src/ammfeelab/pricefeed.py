"""Per-block fair-price sources: synthetic GBM paths and historical CSVs.

CSV schema (UTF-8, header required): ``timestamp,p_a,p_b`` with integer
epoch-millisecond timestamps, strictly increasing, and positive finite
prices.  A two-file mode accepts one ``timestamp,price`` file per asset,
joined on exact timestamp equality.  One row is one simulation block.
Whether the price column is a kline close or an order-book mid is up to
the data supplier; the schema does not care.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .amm import PriceTick
from .rng import Stream


class DataError(Exception):
    """Input price data is missing or malformed."""


# Placeholder per-block (one-minute) GBM parameters for the four named
# market regimes: (mu_a, sigma_a, mu_b, sigma_b).  Refit them from real
# data with gbm_estimate; they are defaults, not published calibrations.
REGIMES = {
    "high_vol": (0.0, 0.0015, 0.0, 0.0025),
    "low_vol": (0.0, 0.0003, 0.0, 0.0005),
    "bull": (1e-5, 0.001, 2e-5, 0.0015),
    "bear": (-1e-5, 0.001, -2e-5, 0.0015),
}


@dataclass(frozen=True)
class PricePath:
    """An ordered block-indexed series of fair prices for both tokens."""

    prices_a: np.ndarray
    prices_b: np.ndarray
    source_label: str = "synthetic"
    timestamps: Optional[np.ndarray] = None
    gbm_params: Optional[dict] = None

    def __post_init__(self):
        if len(self.prices_a) != len(self.prices_b):
            raise ValueError("price series lengths differ")
        if len(self.prices_a) == 0:
            raise ValueError("price path is empty")

    def __len__(self) -> int:
        return len(self.prices_a)

    def tick(self, block_index: int) -> PriceTick:
        return PriceTick(block_index,
                         float(self.prices_a[block_index]),
                         float(self.prices_b[block_index]))

    def ticks(self) -> Iterator[PriceTick]:
        for i in range(len(self)):
            yield self.tick(i)


def gbm_generate(p0: float, mu: float, sigma: float, n_blocks: int,
                 stream: Stream) -> np.ndarray:
    """Geometric Brownian motion series of ``n_blocks`` steps from ``p0``.

    Each step multiplies by ``exp((mu - sigma^2/2) + sigma * z)`` with
    the normals taken from ``stream`` in block order; ``p0`` itself is
    the seed value and is not part of the returned series.
    """
    if not p0 > 0.0:
        raise ValueError("p0 must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    z = stream.normals(n_blocks)
    steps = np.exp((mu - 0.5 * sigma * sigma) + sigma * z)
    return p0 * np.cumprod(steps)


def gbm_estimate(series: np.ndarray) -> tuple[float, float]:
    """Per-block (mu, sigma) from a price series.

    ``sigma`` is the sample standard deviation of log returns (0 when
    there is only one return); ``mu`` adds back the Ito correction.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < 2:
        raise ValueError("need at least two prices to estimate GBM parameters")
    if not np.all(series > 0.0):
        raise ValueError("prices must be positive")
    log_returns = np.diff(np.log(series))
    sigma = float(np.std(log_returns, ddof=1)) if len(log_returns) >= 2 else 0.0
    mu = float(np.mean(log_returns)) + 0.5 * sigma * sigma
    return mu, sigma


def make_path(series_a: np.ndarray, series_b: np.ndarray,
              source_label: str = "synthetic",
              gbm_params: Optional[dict] = None) -> PricePath:
    """Pair two per-asset series into one path of joint ticks."""
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if len(a) != len(b):
        raise ValueError(f"series lengths differ: {len(a)} vs {len(b)}")
    return PricePath(a, b, source_label=source_label, gbm_params=gbm_params)


def _parse_rows(path: Path, expected_header: list[str]):
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != expected_header:
            raise DataError(
                f"{path}: header must be {','.join(expected_header)!r}, "
                f"got {','.join(header)!r}")
        rows = []
        prev_ts = None
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(expected_header):
                raise DataError(f"{path}: row {line_no}: expected "
                                f"{len(expected_header)} fields, got {len(row)}")
            try:
                ts = int(row[0])
            except ValueError:
                raise DataError(f"{path}: row {line_no}: timestamp "
                                f"{row[0]!r} is not an integer") from None
            if prev_ts is not None and ts <= prev_ts:
                raise DataError(f"{path}: row {line_no}: timestamp {ts} not "
                                f"strictly increasing (previous {prev_ts})")
            prev_ts = ts
            prices = []
            for col, text in zip(expected_header[1:], row[1:]):
                try:
                    value = float(text)
                except ValueError:
                    raise DataError(f"{path}: row {line_no}: {col} "
                                    f"{text!r} is not a number") from None
                if not (value > 0.0 and math.isfinite(value)):
                    raise DataError(f"{path}: row {line_no}: {col} must be "
                                    f"positive and finite, got {text}")
                prices.append(value)
            rows.append((ts, *prices))
        if not rows:
            raise DataError(f"{path}: no data rows")
        return rows


def load_historical(file_path) -> PricePath:
    """Load a joint ``timestamp,p_a,p_b`` file; one row per block."""
    path = Path(file_path)
    rows = _parse_rows(path, ["timestamp", "p_a", "p_b"])
    ts = np.array([r[0] for r in rows], dtype=np.int64)
    a = np.array([r[1] for r in rows], dtype=float)
    b = np.array([r[2] for r in rows], dtype=float)
    return PricePath(a, b, source_label=f"historical:{path.name}", timestamps=ts)


def load_historical_pair(file_a, file_b) -> PricePath:
    """Load two per-asset ``timestamp,price`` files, joined on timestamps."""
    path_a, path_b = Path(file_a), Path(file_b)
    rows_a = dict((r[0], r[1]) for r in _parse_rows(path_a, ["timestamp", "price"]))
    rows_b = dict((r[0], r[1]) for r in _parse_rows(path_b, ["timestamp", "price"]))
    joint = sorted(set(rows_a) & set(rows_b))
    if not joint:
        raise DataError(f"{path_a} and {path_b} share no timestamps")
    ts = np.array(joint, dtype=np.int64)
    a = np.array([rows_a[t] for t in joint], dtype=float)
    b = np.array([rows_b[t] for t in joint], dtype=float)
    return PricePath(a, b, source_label=f"historical:{path_a.name}+{path_b.name}",
                     timestamps=ts)


def save_path(path: PricePath, file_path) -> None:
    """Write a path in the joint CSV schema (synthetic timestamps are minutes)."""
    ts = path.timestamps
    if ts is None:
        ts = np.arange(len(path), dtype=np.int64) * 60_000
    with open(file_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "p_a", "p_b"])
        for i in range(len(path)):
            writer.writerow([int(ts[i]),
                             repr(float(path.prices_a[i])),
                             repr(float(path.prices_b[i]))])
