"""Price-panel ingestion, missing-data repair, and normalized log returns."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConflictError, LeadingGapError, ParseError, ZeroVarianceError

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "NA"}


@dataclass(frozen=True)
class PricePanel:
    """Aligned panel of price levels: one row per ticker, one column per date.

    ``prices[i, t]`` is the price of ``tickers[i]`` on ``dates[t]``; NaN marks
    a missing observation awaiting repair. All present prices are strictly
    positive and finite, and every ticker has at least two observations.
    """

    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    prices: np.ndarray
    market_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        n, d = len(self.tickers), len(self.dates)
        if n == 0:
            raise ValueError("panel has no tickers")
        if any(not t for t in self.tickers):
            raise ValueError("empty ticker identifier")
        if len(set(self.tickers)) != n:
            raise ConflictError("duplicate tickers in panel")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ConflictError("dates are not strictly increasing")
        if self.prices.shape != (n, d):
            raise ValueError(f"prices shape {self.prices.shape} != ({n}, {d})")
        present = ~np.isnan(self.prices)
        vals = self.prices[present]
        if vals.size and (np.any(vals <= 0.0) or np.any(~np.isfinite(vals))):
            raise ValueError("panel contains non-positive or non-finite prices")
        short = np.flatnonzero(present.sum(axis=1) < 2)
        if short.size:
            raise ValueError(f"ticker {self.tickers[short[0]]} has fewer than 2 observations")
        if self.market_tags is not None and len(self.market_tags) != n:
            raise ValueError("market_tags length does not match tickers")

    @property
    def n_stocks(self) -> int:
        return len(self.tickers)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def has_gaps(self) -> bool:
        return bool(np.isnan(self.prices).any())


@dataclass(frozen=True)
class ReturnPanel:
    """Normalized log returns with the per-ticker statistics used to build them.

    Each row of ``returns`` has sample mean 0 and population standard
    deviation 1 (both to 1e-10); ``raw_returns`` holds the log returns before
    centering and scaling.
    """

    tickers: tuple[str, ...]
    returns: np.ndarray
    raw_returns: np.ndarray
    sigmas: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        n = len(self.tickers)
        if self.returns.shape != self.raw_returns.shape or self.returns.shape[0] != n:
            raise ValueError("return matrices do not match the ticker list")
        if self.sigmas.shape != (n,) or self.means.shape != (n,):
            raise ValueError("per-ticker statistics have wrong shape")
        if np.any(self.sigmas <= 0.0):
            raise ZeroVarianceError("non-positive sigma in normalized panel")
        if np.max(np.abs(self.returns.mean(axis=1))) > 1e-10:
            raise ValueError("normalized rows are not mean-zero within 1e-10")
        if np.max(np.abs(self.returns.std(axis=1) - 1.0)) > 1e-10:
            raise ValueError("normalized rows do not have unit std within 1e-10")

    @property
    def n_obs(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    """Either ``count`` equal windows, or explicit half-open date ranges."""

    count: int | None = None
    ranges: tuple[tuple[date, date], ...] | None = None

    def __post_init__(self):
        if (self.count is None) == (self.ranges is None):
            raise ValueError("specify exactly one of count or ranges")
        if self.count is not None and self.count < 1:
            raise ValueError("window count must be >= 1")
        if self.ranges is not None:
            for start, end in self.ranges:
                if start >= end:
                    raise ValueError(f"empty window range {start}..{end}")
            for (_, prev_end), (next_start, _) in zip(self.ranges, self.ranges[1:]):
                if next_start < prev_end:
                    raise ValueError("window ranges overlap or are out of order")


def _parse_date(token: str, line: int) -> date:
    try:
        return date.fromisoformat(token.strip())
    except ValueError as exc:
        raise ParseError(f"bad date {token!r}: {exc}", line) from None


def _parse_price(token: str, line: int) -> float:
    token = token.strip()
    if token in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad price {token!r}", line) from None
    if not math.isfinite(value) or value <= 0.0:
        raise ParseError(f"non-positive or non-finite price {token!r}", line)
    return value


def load_prices(source: str | Path, layout: str = "wide", delimiter: str = ",") -> PricePanel:
    """Read a delimiter-separated price file into a :class:`PricePanel`.

    ``layout="wide"``: header row is ``date,<ticker>,...``; each data row is a
    date followed by one price per ticker. ``layout="long"``: header row is
    ``date,ticker,price``; one observation per row. Empty fields and the
    literal token ``NA`` mark missing prices; absent (ticker, date) rows in
    the long layout are likewise gaps.
    """
    path = Path(source)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if not rows:
        raise ParseError("empty file", 1)

    if layout == "wide":
        tickers, cells = _parse_wide(rows)
    elif layout == "long":
        tickers, cells = _parse_long(rows)
    else:
        raise ValueError(f"unknown layout {layout!r}")

    dates = sorted(cells)
    if len(tickers) < 2:
        raise ParseError(f"need at least 2 tickers, found {len(tickers)}")
    if len(dates) < 3:
        raise ParseError(f"need at least 3 dates, found {len(dates)}")

    order = sorted(range(len(tickers)), key=lambda i: tickers[i])
    sorted_tickers = tuple(tickers[i] for i in order)
    prices = np.full((len(tickers), len(dates)), np.nan)
    for t, d in enumerate(dates):
        row = cells[d]
        for out_i, src_i in enumerate(order):
            prices[out_i, t] = row[src_i]
    return PricePanel(sorted_tickers, tuple(dates), prices)


def _parse_wide(rows: list[list[str]]) -> tuple[list[str], dict[date, list[float]]]:
    header = rows[0]
    if len(header) < 2:
        raise ParseError("wide header needs a date column plus at least one ticker", 1)
    tickers = [h.strip() for h in header[1:]]
    if any(not t for t in tickers):
        raise ParseError("empty ticker name in header", 1)
    seen: set[str] = set()
    for t in tickers:
        if t in seen:
            raise ConflictError(f"duplicate ticker column {t!r}")
        seen.add(t)
    cells: dict[date, list[float]] = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line_no)
        d = _parse_date(row[0], line_no)
        if d in cells:
            raise ConflictError(f"duplicate date {d.isoformat()}")
        cells[d] = [_parse_price(tok, line_no) for tok in row[1:]]
    return tickers, cells


def _parse_long(rows: list[list[str]]) -> tuple[list[str], dict[date, list[float]]]:
    header = [h.strip().lower() for h in rows[0]]
    if header != ["date", "ticker", "price"]:
        raise ParseError("long header must be date,ticker,price", 1)
    obs: dict[tuple[str, date], float] = {}
    tickers: list[str] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line_no)
        d = _parse_date(row[0], line_no)
        ticker = row[1].strip()
        if not ticker:
            raise ParseError("empty ticker", line_no)
        key = (ticker, d)
        if key in obs:
            raise ConflictError(f"duplicate observation for ({ticker}, {d.isoformat()})")
        obs[key] = _parse_price(row[2], line_no)
        if ticker not in tickers:
            tickers.append(ticker)
    dates = sorted({d for _, d in obs})
    cells = {d: [obs.get((t, d), math.nan) for t in tickers] for d in dates}
    return tickers, cells


def fill_missing(panel: PricePanel, on_leading_gap: str = "error") -> tuple[PricePanel, int]:
    """Forward-fill gaps with the most recent preceding price.

    Returns the repaired panel and the number of cells filled. A ticker whose
    first covered date is missing has nothing to fill from: with
    ``on_leading_gap="error"`` this raises :class:`LeadingGapError`, with
    ``"drop"`` the ticker is removed with a warning.
    """
    if on_leading_gap not in {"error", "drop"}:
        raise ValueError(f"unknown on_leading_gap mode {on_leading_gap!r}")
    prices = panel.prices.copy()
    keep = np.ones(panel.n_stocks, dtype=bool)
    fills = 0
    for i in range(panel.n_stocks):
        row = prices[i]
        if np.isnan(row[0]):
            if on_leading_gap == "error":
                raise LeadingGapError(
                    f"ticker {panel.tickers[i]} has no price at {panel.dates[0].isoformat()}"
                )
            logger.warning(
                "dropping %s: no price at window start %s",
                panel.tickers[i],
                panel.dates[0].isoformat(),
            )
            keep[i] = False
            continue
        gaps = np.flatnonzero(np.isnan(row))
        for t in gaps:
            row[t] = row[t - 1]
        fills += len(gaps)
    if not keep.all():
        idx = np.flatnonzero(keep)
        tags = panel.market_tags
        panel = PricePanel(
            tuple(panel.tickers[i] for i in idx),
            panel.dates,
            prices[idx],
            tuple(tags[i] for i in idx) if tags is not None else None,
        )
        return panel, fills
    return PricePanel(panel.tickers, panel.dates, prices, panel.market_tags), fills


def log_returns(panel: PricePanel, dt: int = 1) -> np.ndarray:
    """Log price ratios over a lag of ``dt`` observations (default 1).

    Entry ``[i, t]`` is ``ln(P_i at dates[t + dt]) - ln(P_i at dates[t])``.
    The panel must be gap-free; run :func:`fill_missing` first.
    """
    if dt < 1:
        raise ValueError("dt must be >= 1")
    if panel.n_dates <= dt:
        raise ValueError(f"need more than {dt} dates, have {panel.n_dates}")
    if panel.has_gaps:
        raise ValueError("panel has unrepaired gaps; call fill_missing first")
    logp = np.log(panel.prices)
    return logp[:, dt:] - logp[:, :-dt]


def normalize(raw_returns: np.ndarray, tickers: Sequence[str]) -> ReturnPanel:
    """Center each return row and scale it to unit population standard deviation."""
    raw = np.asarray(raw_returns, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != len(tickers):
        raise ValueError("raw_returns must be N x T with one row per ticker")
    means = raw.mean(axis=1)
    sigmas = raw.std(axis=1)
    flat = np.flatnonzero(sigmas <= 0.0)
    if flat.size:
        raise ZeroVarianceError(f"ticker {tickers[flat[0]]} has zero return variance")
    normalized = (raw - means[:, None]) / sigmas[:, None]
    return ReturnPanel(tuple(tickers), normalized, raw, sigmas, means)


def returns_panel(panel: PricePanel, dt: int = 1, on_zero_variance: str = "error") -> ReturnPanel:
    """Convenience: log returns plus normalization in one step.

    ``on_zero_variance="drop"`` removes constant-price tickers with a warning
    instead of raising, which is the windowed-pipeline behaviour.
    """
    if on_zero_variance not in {"error", "drop"}:
        raise ValueError(f"unknown on_zero_variance mode {on_zero_variance!r}")
    raw = log_returns(panel, dt)
    if on_zero_variance == "drop":
        sigmas = raw.std(axis=1)
        keep = sigmas > 0.0
        if not keep.all():
            for i in np.flatnonzero(~keep):
                logger.warning("dropping %s: zero return variance in window", panel.tickers[i])
            raw = raw[keep]
            tickers = tuple(t for t, k in zip(panel.tickers, keep) if k)
            return normalize(raw, tickers)
    return normalize(raw, panel.tickers)


def split_windows(panel: PricePanel, spec: WindowSpec) -> list[PricePanel]:
    """Slice the panel into consecutive date windows.

    Equal splitting divides the date axis into ``count`` runs, with the
    remainder observations going to the last window. Returns are meant to be
    recomputed per window, so only prices are sliced.
    """
    if spec.count is not None:
        k = spec.count
        base = panel.n_dates // k
        if base < 3:
            raise ValueError(f"{k} windows over {panel.n_dates} dates leaves fewer than 3 dates each")
        bounds = [i * base for i in range(k)] + [panel.n_dates]
        slices = [(bounds[i], bounds[i + 1]) for i in range(k)]
    else:
        date_arr = list(panel.dates)
        slices = []
        for start, end in spec.ranges:
            idx = [t for t, d in enumerate(date_arr) if start <= d < end]
            if len(idx) < 3:
                raise ValueError(f"window {start}..{end} covers fewer than 3 dates")
            slices.append((idx[0], idx[-1] + 1))
    out = []
    for lo, hi in slices:
        out.append(
            PricePanel(
                panel.tickers,
                panel.dates[lo:hi],
                panel.prices[:, lo:hi].copy(),
                panel.market_tags,
            )
        )
    return out


def combine_universes(
    a: PricePanel,
    b: PricePanel,
    tag_a: str = "A",
    tag_b: str = "B",
) -> PricePanel:
    """Merge two market panels on their common dates.

    Tickers are prefixed with their market tag (``tag:ticker``) so the union
    is collision-free, and every row records its market of origin.
    """
    if tag_a == tag_b:
        raise ValueError("market tags must differ")
    common = sorted(set(a.dates) & set(b.dates))
    if not common:
        raise ValueError("panels share no dates; cannot combine")
    out_rows = []
    for panel, tag in ((a, tag_a), (b, tag_b)):
        pos = {d: t for t, d in enumerate(panel.dates)}
        cols = np.array([pos[d] for d in common])
        sub = panel.prices[:, cols]
        for i, ticker in enumerate(panel.tickers):
            out_rows.append((f"{tag}:{ticker}", tag, sub[i]))
    out_rows.sort(key=lambda r: r[0])
    tickers = tuple(r[0] for r in out_rows)
    tags = tuple(r[1] for r in out_rows)
    prices = np.vstack([r[2] for r in out_rows])
    return PricePanel(tickers, tuple(common), prices, tags)
