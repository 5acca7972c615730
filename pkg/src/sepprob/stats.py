"""Mergeable binned counters, binomial ratio estimation with confidence
intervals, chi-square flatness testing and radial-density model fitting.

Binning convention: bins are half-open [lo + i*w, lo + (i+1)*w) except the
last, which is closed so the pure-state boundary (radius 1) is
representable.  Values outside [lo, hi] go to overflow tallies and are
never silently dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy.special import gammaincc


class AxisMismatch(ValueError):
    """Histogram operation across incompatible axes."""


class EmptyCell(ValueError):
    """Ratio requested for a bin with zero total count."""


class InsufficientData(ValueError):
    """Too few qualifying bins for the requested analysis."""


# default axis specs: (lo, hi, bins)
DEFAULT_AXES = {
    "r_A": (0.0, 1.0, 100),
    "R_B": (0.0, 1.0, 100),
    "c2_A": (0.0, 1.0, 100),
    "c2_B": (0.0, 1.0, 100),
    "c3_A": (-1.0, 1.0, 100),
    "c3_B": (-1.0, 1.0, 100),
    "C002": (0.0, 3.0, 100),
}


@dataclass(frozen=True)
class Axis:
    label: str
    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis bounds must satisfy lo < hi, got {self.lo}, {self.hi}")
        if self.bins < 1:
            raise ValueError("axis needs at least one bin")

    @classmethod
    def default(cls, label: str, bins: int | None = None) -> "Axis":
        lo, hi, nb = DEFAULT_AXES[label]
        return cls(label=label, lo=lo, hi=hi, bins=bins or nb)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins

    def edges(self) -> np.ndarray:
        return self.lo + np.arange(self.bins + 1) * self.width

    def midpoints(self) -> np.ndarray:
        return self.lo + (np.arange(self.bins) + 0.5) * self.width

    def indices(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(bin indices, in-range mask); values == hi land in the last bin."""
        values = np.asarray(values, dtype=float)
        ok = (values >= self.lo) & (values <= self.hi)
        idx = np.floor((values - self.lo) / self.width).astype(np.int64)
        np.clip(idx, 0, self.bins - 1, out=idx)
        return idx, ok


@dataclass
class HistogramPair:
    """Bin counts of (all, PPT-positive) samples over one invariant axis."""
    axis: Axis
    total: np.ndarray = None
    hits: np.ndarray = None
    out_total: int = 0
    out_hits: int = 0

    def __post_init__(self):
        if self.total is None:
            self.total = np.zeros(self.axis.bins, dtype=np.int64)
        if self.hits is None:
            self.hits = np.zeros(self.axis.bins, dtype=np.int64)

    def accumulate(self, value: float, ppt: bool) -> None:
        self.accumulate_many(np.array([value]), np.array([bool(ppt)]))

    def accumulate_many(self, values: np.ndarray, ppt: np.ndarray) -> None:
        idx, ok = self.axis.indices(values)
        ppt = np.asarray(ppt, dtype=bool)
        self.total += np.bincount(idx[ok], minlength=self.axis.bins)
        self.hits += np.bincount(idx[ok & ppt], minlength=self.axis.bins)
        self.out_total += int((~ok).sum())
        self.out_hits += int((~ok & ppt).sum())

    def merge(self, other: "HistogramPair") -> "HistogramPair":
        if self.axis != other.axis:
            raise AxisMismatch(f"cannot merge {self.axis} with {other.axis}")
        return HistogramPair(axis=self.axis,
                             total=self.total + other.total,
                             hits=self.hits + other.hits,
                             out_total=self.out_total + other.out_total,
                             out_hits=self.out_hits + other.out_hits)

    def n_accumulated(self) -> int:
        return int(self.total.sum()) + self.out_total

    def to_csv(self, path, level: float = 0.95, method: str = "wilson") -> None:
        edges = self.axis.edges()
        with open(path, "w", newline="") as fh:
            fh.write(f"# axis={self.axis.label} lo={self.axis.lo} hi={self.axis.hi}"
                     f" bins={self.axis.bins}\n")
            fh.write(f"# out_total={self.out_total} out_hits={self.out_hits}\n")
            w = csv.writer(fh)
            w.writerow(["bin_lo", "bin_hi", "total", "hits", "p_hat", "ci_lo", "ci_hi"])
            for i in range(self.axis.bins):
                row = [f"{edges[i]:.10g}", f"{edges[i + 1]:.10g}",
                       int(self.total[i]), int(self.hits[i])]
                if self.total[i] > 0:
                    est = ratio_with_ci(int(self.hits[i]), int(self.total[i]),
                                        level, method)
                    row += [f"{est.p_hat:.10g}", f"{est.ci_lo:.10g}", f"{est.ci_hi:.10g}"]
                else:
                    row += ["", "", ""]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path, label: str | None = None) -> "HistogramPair":
        with open(path) as fh:
            lines = fh.read().splitlines()
        meta = {}
        for ln in lines:
            if ln.startswith("#"):
                meta.update(kv.split("=") for kv in ln[1:].split())
        rows = [r for r in csv.reader(ln for ln in lines if not ln.startswith("#"))]
        body = rows[1:]
        lo = float(body[0][0])
        hi = float(body[-1][1])
        axis = Axis(label=label or meta.get("axis", "?"), lo=lo, hi=hi, bins=len(body))
        return cls(axis=axis,
                   total=np.array([int(r[2]) for r in body], dtype=np.int64),
                   hits=np.array([int(r[3]) for r in body], dtype=np.int64),
                   out_total=int(meta.get("out_total", 0)),
                   out_hits=int(meta.get("out_hits", 0)))

    def to_dict(self) -> dict:
        return {"axis": {"label": self.axis.label, "lo": self.axis.lo,
                         "hi": self.axis.hi, "bins": self.axis.bins},
                "total": self.total.tolist(), "hits": self.hits.tolist(),
                "out_total": self.out_total, "out_hits": self.out_hits}

    @classmethod
    def from_dict(cls, d: dict) -> "HistogramPair":
        return cls(axis=Axis(**d["axis"]),
                   total=np.array(d["total"], dtype=np.int64),
                   hits=np.array(d["hits"], dtype=np.int64),
                   out_total=d["out_total"], out_hits=d["out_hits"])


@dataclass
class JointHistogram:
    """2-D bin counts of (all, PPT-positive) samples over two invariant axes."""
    axis_x: Axis
    axis_y: Axis
    total: np.ndarray = None
    hits: np.ndarray = None
    out_total: int = 0
    out_hits: int = 0

    def __post_init__(self):
        shape = (self.axis_x.bins, self.axis_y.bins)
        if self.total is None:
            self.total = np.zeros(shape, dtype=np.int64)
        if self.hits is None:
            self.hits = np.zeros(shape, dtype=np.int64)

    def accumulate_many(self, xs: np.ndarray, ys: np.ndarray, ppt: np.ndarray) -> None:
        ix, okx = self.axis_x.indices(xs)
        iy, oky = self.axis_y.indices(ys)
        ok = okx & oky
        ppt = np.asarray(ppt, dtype=bool)
        flat = ix[ok] * self.axis_y.bins + iy[ok]
        size = self.axis_x.bins * self.axis_y.bins
        self.total += np.bincount(flat, minlength=size).reshape(self.total.shape)
        flat_hit = ix[ok & ppt] * self.axis_y.bins + iy[ok & ppt]
        self.hits += np.bincount(flat_hit, minlength=size).reshape(self.hits.shape)
        self.out_total += int((~ok).sum())
        self.out_hits += int((~ok & ppt).sum())

    def merge(self, other: "JointHistogram") -> "JointHistogram":
        if self.axis_x != other.axis_x or self.axis_y != other.axis_y:
            raise AxisMismatch("cannot merge joint histograms with different axes")
        return JointHistogram(axis_x=self.axis_x, axis_y=self.axis_y,
                              total=self.total + other.total,
                              hits=self.hits + other.hits,
                              out_total=self.out_total + other.out_total,
                              out_hits=self.out_hits + other.out_hits)

    def symmetrize(self) -> "JointHistogram":
        """j + j^T on both layers; axes must have identical bounds and bins."""
        if (self.axis_x.lo, self.axis_x.hi, self.axis_x.bins) != \
                (self.axis_y.lo, self.axis_y.hi, self.axis_y.bins):
            raise AxisMismatch("symmetrize needs identically specified axes")
        return JointHistogram(axis_x=self.axis_x, axis_y=self.axis_y,
                              total=self.total + self.total.T,
                              hits=self.hits + self.hits.T,
                              out_total=2 * self.out_total,
                              out_hits=2 * self.out_hits)

    def cell_ratio(self, i: int, j: int, level: float = 0.95,
                   method: str = "wilson") -> "RatioEstimate":
        if self.total[i, j] == 0:
            raise EmptyCell(f"joint cell ({i}, {j}) has no samples")
        return ratio_with_ci(int(self.hits[i, j]), int(self.total[i, j]), level, method)

    def marginal(self, axis: str) -> HistogramPair:
        if axis == "x":
            return HistogramPair(axis=self.axis_x, total=self.total.sum(axis=1),
                                 hits=self.hits.sum(axis=1),
                                 out_total=self.out_total, out_hits=self.out_hits)
        if axis == "y":
            return HistogramPair(axis=self.axis_y, total=self.total.sum(axis=0),
                                 hits=self.hits.sum(axis=0),
                                 out_total=self.out_total, out_hits=self.out_hits)
        raise ValueError("axis must be 'x' or 'y'")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# axis_x={self.axis_x.label} axis_y={self.axis_y.label}"
                     f" bins={self.axis_x.bins}x{self.axis_y.bins}\n")
            fh.write(f"# out_total={self.out_total} out_hits={self.out_hits}\n")
            w = csv.writer(fh)
            w.writerow(["xbin", "ybin", "total", "hits"])
            for i in range(self.axis_x.bins):
                for j in range(self.axis_y.bins):
                    if self.total[i, j] or self.hits[i, j]:
                        w.writerow([i, j, int(self.total[i, j]), int(self.hits[i, j])])

    def to_dict(self) -> dict:
        return {"axis_x": {"label": self.axis_x.label, "lo": self.axis_x.lo,
                           "hi": self.axis_x.hi, "bins": self.axis_x.bins},
                "axis_y": {"label": self.axis_y.label, "lo": self.axis_y.lo,
                           "hi": self.axis_y.hi, "bins": self.axis_y.bins},
                "total": self.total.ravel().tolist(),
                "hits": self.hits.ravel().tolist(),
                "out_total": self.out_total, "out_hits": self.out_hits}

    @classmethod
    def from_dict(cls, d: dict) -> "JointHistogram":
        ax = Axis(**d["axis_x"])
        ay = Axis(**d["axis_y"])
        shape = (ax.bins, ay.bins)
        return cls(axis_x=ax, axis_y=ay,
                   total=np.array(d["total"], dtype=np.int64).reshape(shape),
                   hits=np.array(d["hits"], dtype=np.int64).reshape(shape),
                   out_total=d["out_total"], out_hits=d["out_hits"])


@dataclass(frozen=True)
class RatioEstimate:
    p_hat: float
    ci_lo: float
    ci_hi: float
    level: float
    method: str


def ratio_with_ci(hits: int, total: int, level: float = 0.95,
                  method: str = "wilson") -> RatioEstimate:
    """Binomial proportion with a Wald or Wilson score interval.

    Wilson is the default (well-behaved near p = 0); Wald reproduces
    plainly-printed z*sqrt(p(1-p)/n) intervals.
    """
    if total <= 0:
        raise EmptyCell("ratio undefined for total = 0")
    if not 0 <= hits <= total:
        raise ValueError(f"need 0 <= hits <= total, got {hits}/{total}")
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must be in (0, 1)")
    p = hits / total
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    if method == "wald":
        half = z * np.sqrt(p * (1.0 - p) / total)
        return RatioEstimate(p, float(p - half), float(p + half), level, method)
    if method == "wilson":
        z2 = z * z
        denom = 1.0 + z2 / total
        center = (p + z2 / (2 * total)) / denom
        half = z * np.sqrt(p * (1.0 - p) / total + z2 / (4 * total * total)) / denom
        return RatioEstimate(p, float(max(center - half, 0.0)),
                             float(min(center + half, 1.0)), level, method)
    raise ValueError(f"unknown method {method!r}")


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return float(gammaincc(dof / 2.0, x / 2.0))


def flatness_test(h: HistogramPair, min_total: int = 1000,
                  exclude_last_bin: bool = True) -> tuple[float, int, float]:
    """Pearson chi-square homogeneity test of the per-bin proportions.

    Restricted to bins with total >= min_total; the top boundary bin is
    excluded by default (the invariance claim is for the half-open
    interval below the pure-state boundary).  Returns (chi2, dof, p_value).
    """
    total = h.total.astype(float)
    hits = h.hits.astype(float)
    mask = h.total >= min_total
    if exclude_last_bin:
        mask = mask.copy()
        mask[-1] = False
    if mask.sum() < 2:
        raise InsufficientData("need at least 2 bins with total >= min_total")
    t = total[mask]
    s = hits[mask]
    p = s.sum() / t.sum()
    if p <= 0.0 or p >= 1.0:
        raise InsufficientData("pooled proportion is degenerate (0 or 1)")
    chi2 = float((((s - t * p) ** 2) / (t * p * (1.0 - p))).sum())
    dof = int(mask.sum()) - 1
    return chi2, dof, chi2_sf(chi2, dof)


def fit_scale(h: HistogramPair, a: float, b: float,
              fit_range: tuple[float, float] | None = None,
              min_total: int = 100) -> tuple[float, float]:
    """Least-squares scale of the radial model x^a (1 - x^2)^b to bin totals.

    The model is evaluated at bin midpoints (exact integration differs by
    far less than Monte Carlo noise at 100 bins).  Returns (scale,
    max_rel_residual) where the residual is max |t_i - s*m_i| / (s*m_i)
    over fitted bins with total >= min_total.
    """
    lo, hi = fit_range if fit_range is not None else (h.axis.lo, h.axis.hi)
    x = h.axis.midpoints()
    in_range = (x >= lo) & (x <= hi)
    m = np.zeros_like(x)
    valid = in_range & (np.abs(x) ** 2 < 1.0)
    m[valid] = np.abs(x[valid]) ** a * (1.0 - x[valid] ** 2) ** b
    sel = valid & (m > 0)
    if sel.sum() < 2:
        raise InsufficientData("fewer than 2 bins in the fit range")
    t = h.total[sel].astype(float)
    mm = m[sel]
    scale = float((t * mm).sum() / (mm * mm).sum())
    resid_sel = sel & (h.total >= min_total)
    if not resid_sel.any():
        raise InsufficientData(f"no bins with total >= {min_total} in range")
    tr = h.total[resid_sel].astype(float)
    mr = scale * m[resid_sel]
    max_rel = float(np.max(np.abs(tr - mr) / mr))
    return scale, max_rel
