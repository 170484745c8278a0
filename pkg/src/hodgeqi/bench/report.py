"""Convergence reports: RMSE rows, trailing-window slopes, CSV round trip."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

COLUMNS = ("error_div", "error_curl", "error_full")


def rmse(approx, exact) -> float:
    """sqrt of the mean over points and components of squared errors."""
    diff = np.asarray(approx, dtype=float) - np.asarray(exact, dtype=float)
    return float(np.sqrt(np.mean(diff * diff)))


def fit_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if h.size < 2:
        raise ValueError("need at least two points to fit a slope")
    if np.any(err <= 0) or np.any(~np.isfinite(err)):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


@dataclass
class ConvergenceReport:
    experiment: str
    rows: list = field(default_factory=list)  # (h, error_div, error_curl, error_full)
    window: int = 5
    meta: dict = field(default_factory=dict)

    def add(self, h: float, error_div: float, error_curl: float = math.nan, error_full: float = math.nan):
        self.rows.append((float(h), float(error_div), float(error_curl), float(error_full)))

    def column(self, name: str) -> np.ndarray:
        idx = 1 + COLUMNS.index(name)
        return np.array([r[idx] for r in self.rows])

    @property
    def hs(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    def slopes(self) -> dict:
        w = min(self.window, len(self.rows))
        out = {}
        for name in COLUMNS:
            col = self.column(name)[-w:]
            if w < 2 or np.all(np.isnan(col)):
                out[name] = math.nan
            else:
                out[name] = fit_slope(self.hs[-w:], col)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("h",) + COLUMNS)
            for row in self.rows:
                w.writerow(["%.12e" % v for v in row])
            s = self.slopes()
            w.writerow([f"# slope window={min(self.window, len(self.rows))}"] + ["%.12e" % s[c] for c in COLUMNS])

    @classmethod
    def read_csv(cls, path, experiment: str = "report") -> "ConvergenceReport":
        rep = cls(experiment)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != ("h",) + COLUMNS:
            raise ValueError(f"{path}: not a convergence report")
        for r in rows[1:]:
            if r and r[0].startswith("# slope window="):
                rep.window = int(r[0].split("=")[1])
                continue
            rep.add(*[float(v) for v in r])
        return rep
