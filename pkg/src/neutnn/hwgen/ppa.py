"""Synapse-count linear models for leakage power and die area.

The reference data are post-layout results for twelve time-series
clustering designs in three cell libraries.  Units are kept as published:
the 45 nm library reports leakage in mW, the 7 nm libraries in uW; area is
always um^2.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

__all__ = ["Pdk", "PpaRow", "PPA_TABLE", "PPAModel", "Forecast", "fit_ppa", "fit_line",
           "forecast", "compare_pdks", "table_csv", "fits_csv"]


class Pdk(str, Enum):
    FREEPDK45 = "FreePDK45"
    ASAP7 = "ASAP7"
    TNN7 = "TNN7"


LEAKAGE_UNIT = {Pdk.FREEPDK45: "mW", Pdk.ASAP7: "uW", Pdk.TNN7: "uW"}
AREA_UNIT = "um2"
_TO_UW = {"mW": 1000.0, "uW": 1.0}


@dataclass(frozen=True)
class PpaRow:
    benchmark: str
    synapses: int
    leakage: float
    area: float


# benchmark, synapses, leakage (FreePDK45 mW, ASAP7 uW, TNN7 uW), area um^2 (same order)
_RAW = (
    ("SonyAIBORobotSurface2", 130, (0.32, 0.94, 0.74), (15156.68, 997.13, 830.54)),
    ("ECG200", 192, (0.45, 1.39, 1.06), (21884.31, 1462.53, 1200.73)),
    ("Wafer", 304, (0.73, 2.21, 1.68), (34769.06, 2402.54, 1919.28)),
    ("TwoPattern", 512, (1.22, 3.79, 2.85), (58558.41, 4046.38, 3232.47)),
    ("Coffee", 572, (1.33, 4.22, 3.25), (65420.72, 4520.56, 3611.28)),
    ("ToeSegmentation2", 686, (1.66, 4.92, 3.79), (74064.40, 5344.52, 4426.00)),
    ("Plane", 1008, (2.44, 7.32, 5.56), (108829.33, 7853.17, 6503.51)),
    ("Lightning2", 1274, (2.93, 9.08, 6.99), (138006.45, 10419.41, 8385.73)),
    ("Meat", 1344, (3.02, 9.57, 7.42), (145589.22, 10991.91, 8846.49)),
    ("Beef", 2350, (5.79, 16.12, 12.54), (262614.44, 18178.67, 15281.87)),
    ("OSULeaf", 2562, (6.31, 17.57, 13.67), (286305.61, 19818.62, 16660.49)),
    ("WordSynonyms", 6750, (19.8, 49.37, 40.27), (870555.73, 54856.83, 49478.29)),
)

PPA_TABLE: dict[Pdk, tuple[PpaRow, ...]] = {
    pdk: tuple(PpaRow(name, s, leak[i], area[i]) for name, s, leak, area in _RAW)
    for i, pdk in enumerate(Pdk)
}


def fit_line(x, y, method: str = "ols") -> tuple[float, float]:
    """Slope and intercept of a line through (x, y).

    ``ols`` minimizes squared error; ``minimax`` minimizes the largest
    relative error |fit - y| / |y| (a small linear program).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or len(x) != len(y):
        raise ValueError("need at least two (x, y) points")
    if np.all(x == x[0]):
        raise ValueError("degenerate fit: all synapse counts are equal")
    if method == "ols":
        a = np.column_stack([x, np.ones_like(x)])
        (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
        return float(slope), float(intercept)
    if method == "minimax":
        if np.any(y == 0):
            raise ValueError("minimax relative fit needs non-zero targets")
        scale = np.abs(y)
        # variables: slope, intercept, e ; minimize e subject to |slope*x + b - y| <= e*|y|
        a_ub = np.vstack([np.column_stack([x, np.ones_like(x), -scale]),
                          np.column_stack([-x, -np.ones_like(x), -scale])])
        b_ub = np.concatenate([y, -y])
        res = linprog([0, 0, 1], A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * 3, method="highs")
        if not res.success:
            raise RuntimeError(f"minimax fit failed: {res.message}")
        return float(res.x[0]), float(res.x[1])
    raise ValueError(f"unknown fit method {method!r}; choose 'ols' or 'minimax'")


@dataclass(frozen=True)
class PPAModel:
    pdk: Pdk
    leak_slope: float
    leak_intercept: float
    area_slope: float
    area_intercept: float
    leak_unit: str
    area_unit: str
    method: str
    fit_range: tuple[int, int]
    leak_max_rel_error: float
    area_max_rel_error: float
    leak_rmse: float
    area_rmse: float


def fit_ppa(pdk: Pdk | str = Pdk.TNN7, table=None, method: str = "ols") -> PPAModel:
    pdk = Pdk(pdk)
    rows = PPA_TABLE[pdk] if table is None else table
    if len(rows) < 2:
        raise ValueError("need at least two table rows")
    s = np.array([r.synapses for r in rows], dtype=float)
    leak = np.array([r.leakage for r in rows], dtype=float)
    area = np.array([r.area for r in rows], dtype=float)
    la, lb = fit_line(s, leak, method)
    aa, ab = fit_line(s, area, method)

    def stats(a, b, y):
        r = a * s + b - y
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(y != 0, np.abs(r) / np.abs(y), 0.0)
        return float(rel.max()), float(np.sqrt(np.mean(r ** 2)))

    lmax, lrmse = stats(la, lb, leak)
    amax, armse = stats(aa, ab, area)
    if la <= 0 or aa <= 0:
        warnings.warn(f"{pdk.value}: non-positive slope fitted", RuntimeWarning, stacklevel=2)
    return PPAModel(pdk, la, lb, aa, ab, LEAKAGE_UNIT[pdk], AREA_UNIT, method,
                    (int(s.min()), int(s.max())), lmax, amax, lrmse, armse)


@dataclass(frozen=True)
class Forecast:
    pdk: Pdk
    synapses: int
    leakage: float
    area: float
    leak_unit: str
    area_unit: str
    extrapolated: bool

    @property
    def leakage_uw(self) -> float:
        return self.leakage * _TO_UW[self.leak_unit]


def forecast(ppa: PPAModel, synapses: int) -> Forecast:
    if synapses < 0:
        raise ValueError(f"synapse count must be >= 0, got {synapses}")
    leak = ppa.leak_slope * synapses + ppa.leak_intercept
    area = ppa.area_slope * synapses + ppa.area_intercept
    if leak < 0 or area < 0:
        warnings.warn(f"{ppa.pdk.value}: negative forecast at {synapses} synapses clamped to 0",
                      RuntimeWarning, stacklevel=2)
        leak, area = max(leak, 0.0), max(area, 0.0)
    lo, hi = ppa.fit_range
    outside = not lo <= synapses <= hi
    if synapses > hi:
        warnings.warn(f"{ppa.pdk.value}: {synapses} synapses is beyond the fitted range [{lo}, {hi}]",
                      RuntimeWarning, stacklevel=2)
    return Forecast(ppa.pdk, synapses, leak, area, ppa.leak_unit, ppa.area_unit, outside)


def compare_pdks(synapses: int, method: str = "ols", fits: dict | None = None) -> list[Forecast]:
    """Forecast for every library, sorted by leakage in a common unit."""
    fits = fits or {pdk: fit_ppa(pdk, method=method) for pdk in Pdk}
    return sorted((forecast(fits[p], synapses) for p in Pdk), key=lambda f: f.leakage_uw)


def table_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pdk", "benchmark", "synapses", "leakage", "leakage_unit", "area", "area_unit"])
    for pdk, rows in PPA_TABLE.items():
        for r in rows:
            w.writerow([pdk.value, r.benchmark, r.synapses, r.leakage, LEAKAGE_UNIT[pdk], r.area, AREA_UNIT])
    return buf.getvalue()


def fits_csv(models) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pdk", "method", "leak_slope", "leak_intercept", "leak_unit", "area_slope",
                "area_intercept", "area_unit", "leak_max_rel_error", "area_max_rel_error"])
    for m in models:
        w.writerow([m.pdk.value, m.method, f"{m.leak_slope:.9g}", f"{m.leak_intercept:.9g}", m.leak_unit,
                    f"{m.area_slope:.9g}", f"{m.area_intercept:.9g}", m.area_unit,
                    f"{m.leak_max_rel_error:.6f}", f"{m.area_max_rel_error:.6f}"])
    return buf.getvalue()
