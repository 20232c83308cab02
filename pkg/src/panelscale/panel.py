"""Panel container, CSV ingestion/serialization and preprocessing.

Two CSV layouts are supported:

* long: header ``unit,time,y,x1,...,xD``; every unit must carry a complete
  time sequence 1..T, and the covariate columns must agree across units at
  each time (covariates are common to all units).
* wide: header ``time,y_<label>,...,x_1,...,x_D`` with one row per time.

Files are UTF-8 with '.' as decimal separator. Numeric values are written
back with repr() so that a write/read round trip is bit-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import PanelFormatError, SingularDesignError


@dataclass(frozen=True, eq=False)
class Panel:
    """Immutable balanced panel: responses y (N x T), common covariates x (T x D)."""

    y: np.ndarray
    x: np.ndarray
    unit_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 2:
            raise PanelFormatError(f"y must be 2-D (N x T), got shape {y.shape}")
        if x.ndim != 2:
            raise PanelFormatError(f"x must be 2-D (T x D), got shape {x.shape}")
        if y.shape[1] != x.shape[0]:
            raise PanelFormatError(
                f"time dimensions disagree: y has T={y.shape[1]}, x has T={x.shape[0]}"
            )
        if y.shape[0] < 1 or x.shape[1] < 1 or y.shape[1] < 1:
            raise PanelFormatError("panel dimensions must be positive")
        if not np.all(np.isfinite(y)):
            raise PanelFormatError("y contains non-finite entries")
        if not np.all(np.isfinite(x)):
            raise PanelFormatError("x contains non-finite entries")
        if len(self.unit_labels) != y.shape[0]:
            raise PanelFormatError(
                f"{len(self.unit_labels)} labels for {y.shape[0]} units"
            )
        if len(set(self.unit_labels)) != len(self.unit_labels):
            raise PanelFormatError("unit labels must be distinct")
        y = y.copy()
        x = x.copy()
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "unit_labels", tuple(str(s) for s in self.unit_labels))

    @property
    def n_units(self) -> int:
        return self.y.shape[0]

    @property
    def n_time(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    def require_pairs(self) -> None:
        """Pairwise comparison requires at least two units."""
        if self.n_units < 2:
            raise PanelFormatError(
                "pairwise comparison requires at least two units (N >= 2)"
            )


@dataclass(frozen=True, eq=False)
class CoefficientCurve:
    """Per-unit coefficient estimates over a set of locations at one bandwidth.

    Rows of ``values`` whose localized design was singular are NaN and listed
    in ``gaps`` together with the reason.
    """

    unit: int
    grid_locations: tuple[float, ...]
    bandwidth: float
    values: np.ndarray
    gaps: tuple[tuple[int, str], ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape[0] != len(self.grid_locations):
            raise PanelFormatError("one row per location required")
        h = self.bandwidth
        for u in self.grid_locations:
            if u - h < -1e-12 or u + h > 1.0 + 1e-12:
                raise PanelFormatError(
                    f"window [u-h, u+h] leaves [0, 1] at (u={u}, h={h})"
                )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _parse_float(token: str, row: int, col: str) -> float:
    token = token.strip()
    if token == "":
        raise PanelFormatError(f"missing value in row {row}, column {col!r}")
    try:
        value = float(token)
    except ValueError:
        raise PanelFormatError(
            f"non-numeric value {token!r} in row {row}, column {col!r}"
        ) from None
    if not np.isfinite(value):
        raise PanelFormatError(f"non-finite value in row {row}, column {col!r}")
    return value


def _parse_int(token: str, row: int, col: str) -> int:
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        raise PanelFormatError(
            f"non-integer value {token!r} in row {row}, column {col!r}"
        ) from None


def _read_rows(path) -> list[list[str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise PanelFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise PanelFormatError(f"{path} is empty")
    return rows


def _from_long(rows: list[list[str]], path) -> Panel:
    header = [c.strip() for c in rows[0]]
    if header[:3] != ["unit", "time", "y"]:
        raise PanelFormatError(
            f"{path}: long layout header must start with unit,time,y; got {header[:3]}"
        )
    x_cols = header[3:]
    expected = [f"x{d + 1}" for d in range(len(x_cols))]
    if x_cols != expected:
        raise PanelFormatError(
            f"{path}: covariate columns must be {expected}, got {x_cols}"
        )
    if not x_cols:
        raise PanelFormatError(f"{path}: long layout needs at least one x column")
    D = len(x_cols)

    units: list[str] = []
    data: dict[str, dict[int, float]] = {}
    xdata: dict[int, tuple[float, ...]] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 3 + D:
            raise PanelFormatError(
                f"{path}: row {r} has {len(row)} cells, expected {3 + D}"
            )
        unit = row[0].strip()
        if unit == "":
            raise PanelFormatError(f"{path}: empty unit label in row {r}")
        t = _parse_int(row[1], r, "time")
        yv = _parse_float(row[2], r, "y")
        xv = tuple(_parse_float(row[3 + d], r, x_cols[d]) for d in range(D))
        if unit not in data:
            units.append(unit)
            data[unit] = {}
        if t in data[unit]:
            raise PanelFormatError(
                f"{path}: duplicate (unit={unit}, time={t}) at row {r}"
            )
        data[unit][t] = yv
        if t in xdata:
            if xdata[t] != xv:
                raise PanelFormatError(
                    f"{path}: covariates differ across units at time {t} (row {r}); "
                    "covariates must be common to all units"
                )
        else:
            xdata[t] = xv

    lengths = {u: len(ts) for u, ts in data.items()}
    T = lengths[units[0]]
    for u, n in lengths.items():
        if n != T:
            raise PanelFormatError(
                f"{path}: ragged series: unit {units[0]!r} has {T} rows, "
                f"unit {u!r} has {n}"
            )
    for u in units:
        times = sorted(data[u])
        if times != list(range(1, T + 1)):
            raise PanelFormatError(
                f"{path}: unit {u!r} does not cover a complete time sequence 1..{T}"
            )

    y = np.array([[data[u][t] for t in range(1, T + 1)] for u in units])
    x = np.array([xdata[t] for t in range(1, T + 1)])
    return Panel(y=y, x=x, unit_labels=tuple(units))


def _from_wide(rows: list[list[str]], path) -> Panel:
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "time":
        raise PanelFormatError(f"{path}: wide layout header must start with 'time'")
    y_cols = [c for c in header[1:] if c.startswith("y_")]
    x_cols = [c for c in header[1:] if not c.startswith("y_")]
    if header[1:] != y_cols + x_cols:
        raise PanelFormatError(
            f"{path}: wide layout columns must be time, y_<label>..., x_1..x_D"
        )
    expected = [f"x_{d + 1}" for d in range(len(x_cols))]
    if x_cols != expected:
        raise PanelFormatError(
            f"{path}: covariate columns must be {expected}, got {x_cols}"
        )
    if not y_cols or not x_cols:
        raise PanelFormatError(f"{path}: wide layout needs y_<label> and x_ columns")
    labels = [c[2:] for c in y_cols]
    if len(set(labels)) != len(labels):
        raise PanelFormatError(f"{path}: duplicate unit labels in header")

    seen: dict[int, int] = {}
    yrows: dict[int, list[float]] = {}
    xrows: dict[int, list[float]] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise PanelFormatError(
                f"{path}: row {r} has {len(row)} cells, expected {len(header)}"
            )
        t = _parse_int(row[0], r, "time")
        if t in seen:
            raise PanelFormatError(f"{path}: duplicate time {t} at row {r}")
        seen[t] = r
        yrows[t] = [_parse_float(row[1 + i], r, y_cols[i]) for i in range(len(y_cols))]
        xrows[t] = [
            _parse_float(row[1 + len(y_cols) + d], r, x_cols[d])
            for d in range(len(x_cols))
        ]
    T = len(yrows)
    if sorted(yrows) != list(range(1, T + 1)):
        raise PanelFormatError(f"{path}: time column does not cover 1..{T}")

    y = np.array([[yrows[t][i] for t in range(1, T + 1)] for i in range(len(labels))])
    x = np.array([xrows[t] for t in range(1, T + 1)])
    return Panel(y=y, x=x, unit_labels=tuple(labels))


def panel_from_csv(path, layout: str = "long") -> Panel:
    """Read a panel from CSV; unit order follows first appearance in the file."""
    rows = _read_rows(path)
    if layout == "long":
        return _from_long(rows, path)
    if layout == "wide":
        return _from_wide(rows, path)
    raise PanelFormatError(f"unknown layout {layout!r}; use 'long' or 'wide'")


def panel_to_csv(panel: Panel, path, layout: str = "long") -> None:
    """Write a panel as CSV; exact inverse of panel_from_csv for both layouts."""
    if layout not in ("long", "wide"):
        raise PanelFormatError(f"unknown layout {layout!r}; use 'long' or 'wide'")
    N, T, D = panel.n_units, panel.n_time, panel.n_covariates
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if layout == "long":
            writer.writerow(["unit", "time", "y"] + [f"x{d + 1}" for d in range(D)])
            for i, label in enumerate(panel.unit_labels):
                for t in range(T):
                    writer.writerow(
                        [label, t + 1, repr(float(panel.y[i, t]))]
                        + [repr(float(panel.x[t, d])) for d in range(D)]
                    )
        else:
            writer.writerow(
                ["time"]
                + [f"y_{label}" for label in panel.unit_labels]
                + [f"x_{d + 1}" for d in range(D)]
            )
            for t in range(T):
                writer.writerow(
                    [t + 1]
                    + [repr(float(panel.y[i, t])) for i in range(N)]
                    + [repr(float(panel.x[t, d])) for d in range(D)]
                )


def demean_units(panel: Panel) -> Panel:
    """Subtract each unit's time mean from its responses (fixed-effect removal)."""
    y = panel.y - panel.y.mean(axis=1, keepdims=True)
    return Panel(y=y, x=panel.x, unit_labels=panel.unit_labels)


def deseasonalize(series, lag: int, trend_degree: int) -> np.ndarray:
    """OLS residuals of series_t on (series_{t-lag}, 1, t, ..., t^trend_degree).

    The first ``lag`` observations are dropped (no pre-sample padding), so the
    output has length len(series) - lag. Residuals are orthogonal to the
    regressors by construction.
    """
    s = np.asarray(series, dtype=float).ravel()
    if lag < 1:
        raise ValueError(f"lag={lag} must be a positive integer")
    if trend_degree < 0:
        raise ValueError(f"trend_degree={trend_degree} must be nonnegative")
    n = s.size
    if n <= lag + trend_degree + 1:
        raise ValueError(
            f"series of length {n} too short for lag={lag}, degree={trend_degree}"
        )
    if not np.all(np.isfinite(s)):
        raise PanelFormatError("series contains non-finite entries")
    response = s[lag:]
    # trend rescaled to [0, 1] for conditioning; same column space as raw powers
    t = np.arange(lag + 1, n + 1, dtype=float) / n
    design = np.column_stack(
        [s[:-lag]] + [t**k for k in range(trend_degree + 1)]
    )
    # minimum-norm least squares: residuals stay well-defined even when the
    # lagged series is collinear with the trend (e.g. an exactly polynomial
    # input), in which case they are identically zero
    coef, _, _, _ = np.linalg.lstsq(design, response, rcond=None)
    resid = response - design @ coef
    if not np.all(np.isfinite(resid)):
        raise SingularDesignError("deseasonalize: least-squares solve failed")
    return resid
