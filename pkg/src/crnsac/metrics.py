"""Per-step metric logs, smoothing and CSV output."""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path

import numpy as np

EWMA_FACTOR = 0.2
TRAILING_WINDOW = 100

# column -> unit shown in the CSV header as "name [unit]"
UNITS = {
    "step": "",
    "reward": "",
    "rate_sum": "bit/s/Hz",
    "omega_idle": "",
    "omega_occupied": "",
    "collisions": "SUs",
    "critic_loss": "",
    "actor_loss": "",
    "alpha_d": "",
    "alpha_c": "",
}


def _header(name: str) -> str:
    base = re.sub(r"_(ewma|mean\d+)$", "", name)
    unit = UNITS.get(base, "W" if base.startswith("power_") else "")
    return f"{name} [{unit}]" if unit else name


def _parse_header(cell: str) -> str:
    return cell.split(" [", 1)[0]


def ewma(x, factor: float = EWMA_FACTOR) -> np.ndarray:
    """``s_t = factor * x_t + (1 - factor) * s_{t-1}`` seeded with ``s_0 = x_0``.

    NaN entries carry the previous value forward.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    prev = math.nan
    for i, v in enumerate(x):
        if math.isnan(v):
            out[i] = prev
            continue
        prev = v if math.isnan(prev) else factor * v + (1.0 - factor) * prev
        out[i] = prev
    return out


def trailing_mean(x, window: int = TRAILING_WINDOW) -> np.ndarray:
    """Mean of the ``window`` rows ending at each row; NaN until a full window exists."""
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, np.nan)
    if x.size >= window:
        csum = np.cumsum(np.insert(x, 0, 0.0))
        out[window - 1 :] = (csum[window:] - csum[:-window]) / window
    return out


class MetricsLog:
    """Rows of floats under a fixed column list."""

    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        self.rows: list[list[float]] = []

    @classmethod
    def for_agents(cls, n_sus: int) -> "MetricsLog":
        base = ["step", "reward", "rate_sum", "omega_idle", "omega_occupied", "collisions"]
        tail = ["critic_loss", "actor_loss", "alpha_d", "alpha_c"]
        return cls(base + [f"power_{n}" for n in range(n_sus)] + tail)

    def append(self, **values) -> None:
        missing = set(self.columns) - set(values)
        if missing:
            raise KeyError(f"missing log columns: {sorted(missing)}")
        self.rows.append([float(values[c]) for c in self.columns])

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), len(self.columns))

    def summary(self, window: int = 1000) -> dict[str, float]:
        """Means over the last ``window`` rows, ignoring steps without a value."""
        data = self.as_array()[-window:]
        out = {}
        for i, c in enumerate(self.columns):
            if c == "step":
                continue
            col = data[:, i]
            col = col[~np.isnan(col)]
            out[c] = float(col.mean()) if col.size else math.nan
        return out

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([_header(c) for c in self.columns])
            for row in self.rows:
                writer.writerow([_fmt(v) for v in row])
        return path

    @classmethod
    def from_csv(cls, path) -> "MetricsLog":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            log = cls([_parse_header(h) for h in next(reader)])
            for row in reader:
                log.rows.append([float(v) if v != "" else math.nan for v in row])
        return log


def _fmt(v: float) -> str:
    if math.isnan(v):
        return ""
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def emit_metrics(log: MetricsLog, raw_path, smoothed_path=None) -> tuple[Path, Path]:
    """Write the raw log and a smoothed companion with EWMA and trailing columns."""
    if not len(log):
        raise ValueError("cannot emit an empty log")
    raw_path = Path(raw_path)
    if smoothed_path is None:
        smoothed_path = raw_path.with_name(raw_path.stem + "_smoothed" + raw_path.suffix)
    log.to_csv(raw_path)
    cols = ["step"]
    data = [log.column("step")]
    for c in log.columns:
        if c == "step":
            continue
        x = log.column(c)
        cols += [c, f"{c}_ewma", f"{c}_mean{TRAILING_WINDOW}"]
        data += [x, ewma(x), trailing_mean(x)]
    smooth = MetricsLog(cols)
    smooth.rows = np.column_stack(data).tolist()
    smooth.to_csv(smoothed_path)
    return raw_path, Path(smoothed_path)
