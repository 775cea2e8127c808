"""Waiting-time statistics: histograms, survival curves, and tail fits.

The estimation pipeline mirrors how the lifetime figures are usually
produced: bin the waiting times on a fixed-width grid, form the survival
curve from cumulative counts, then fit straight lines in the appropriate
log coordinates to read off the power-law exponent, the exponential tail
rate, and the crossover time between the two regimes.

Two point-set conventions coexist here on purpose.  The plotted curves
use the left bin edge shifted by one time unit on the abscissa,
``log(width*(i-1)+1)``, and bin probabilities on the ordinate -- faithful
to how the log-log figures are drawn, but biased for least-squares slope
estimation at coarse widths (a left edge lags its bin's mass by half a
width, which is a lot when the width is 100).  The fitting routines
therefore consume bin centers and proper densities (``fit_points``).
Both sets are exposed; CSV outputs keep the plotted convention.

Everything in this module is a deterministic, pure function of its
inputs; no randomness, no hidden state, safe under any concurrency.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DomainError,
    EmptyEstimateError,
    InsufficientDataError,
    UnsupportedDataError,
)

DEFAULT_BIN_WIDTH = 100.0  # time units; the coarse grid for long-horizon runs
MIN_FIT_POINTS = 5
TRANSITION_MIN_GAIN = 0.05  # two segments must beat one by 5% combined RMS
TRANSITION_CANDIDATES = 60  # log-spaced split-point grid size
TAIL_MIN_SURVIVORS = 30  # drop survival points backed by fewer samples
RMS_FLOOR = 1e-12  # below this a single line already explains the curve
KS_COEFF_99 = 1.6276  # sqrt(-0.5*ln(0.005)): asymptotic 99% KS critical coeff

SCHEMA_VERSION = 1


class LineFit(NamedTuple):
    """A least-squares line together with the RMS of its residuals."""

    slope: float
    intercept: float
    residual: float


def _fit_line(x: np.ndarray, y: np.ndarray) -> LineFit:
    # centered normal equations: well conditioned and exactly
    # shift-invariant in x, which is what makes fit_power_law
    # scale-equivariant under t -> c*t
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    denom = float(dx @ dx)
    if denom == 0.0:
        raise DomainError("all abscissae coincide; slope is undefined")
    slope = float(dx @ (y - ym)) / denom
    intercept = float(ym - slope * xm)
    r = y - (slope * x + intercept)
    return LineFit(slope, intercept, float(np.sqrt(np.mean(r * r))))


def _select_window(
    points: Sequence, window: Tuple[float, float]
) -> Tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be an (n, 2) array of (t, y) pairs")
    t_a, t_b = float(window[0]), float(window[1])
    if not (math.isfinite(t_a) and math.isfinite(t_b) and t_a < t_b):
        raise DomainError(f"bad fit window [{t_a}, {t_b}]")
    mask = (pts[:, 0] >= t_a) & (pts[:, 0] <= t_b)
    sel = pts[mask]
    if sel.shape[0] < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"{sel.shape[0]} points in window [{t_a}, {t_b}]; "
            f"need at least {MIN_FIT_POINTS}"
        )
    if not np.all(np.isfinite(sel)):
        raise DomainError("non-finite values inside the fit window")
    if np.any(sel[:, 1] <= 0.0):
        raise DomainError("nonpositive ordinates inside the fit window")
    return sel[:, 0], sel[:, 1]


def fit_power_law(
    points: Sequence, window: Tuple[float, float]
) -> LineFit:
    """Least-squares line through (log t, log y) restricted to t in window.

    `points` are raw (t, y) pairs; the logs happen here.  The returned
    residual is the RMS of the log-ordinate deviations.  Fewer than
    MIN_FIT_POINTS points in the window raises InsufficientDataError;
    nonpositive t or y inside the window raises DomainError.
    """
    t, y = _select_window(points, window)
    if np.any(t <= 0.0):
        raise DomainError("power-law fit needs strictly positive abscissae")
    return _fit_line(np.log(t), np.log(y))


def fit_exponential_tail(
    points: Sequence, window: Tuple[float, float]
) -> LineFit:
    """Least-squares line through (t, log y) restricted to t in window.

    The slope is the exponential decay rate (negative for a decaying
    tail).  Same preconditions and errors as fit_power_law.
    """
    t, y = _select_window(points, window)
    return _fit_line(t, np.log(y))


# ---------------------------------------------------------------------------
# domain types


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True)
class HistogramPDF:
    """Fixed-width histogram of the uncensored waiting times.

    `total` is the FULL sample count including censored outcomes, so the
    densities integrate (as a step function) to the uncensored fraction
    and censored mass shows up as missing area rather than being
    silently renormalized away.
    """

    bin_width: float
    counts: np.ndarray
    total: int
    densities: np.ndarray

    def __post_init__(self):
        counts = _frozen_array(self.counts, dtype=np.int64)
        densities = _frozen_array(self.densities)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "densities", densities)
        if not (self.bin_width > 0.0 and math.isfinite(self.bin_width)):
            raise DomainError(f"bin width must be positive, got {self.bin_width}")
        if counts.ndim != 1 or counts.size == 0:
            raise DomainError("counts must be a nonempty 1-D array")
        if np.any(counts < 0):
            raise DomainError("negative bin count")
        if self.total < int(counts.sum()):
            raise DomainError("bin counts exceed the total sample count")
        expected = counts / (self.total * self.bin_width)
        if not np.allclose(densities, expected, rtol=0.0, atol=1e-15):
            raise DomainError("densities != counts/(total*width)")

    @property
    def edges(self) -> np.ndarray:
        """Bin edges 0, w, 2w, ...; the final bin is closed on the right."""
        return self.bin_width * np.arange(self.counts.size + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.bin_width * (np.arange(self.counts.size) + 0.5)

    def plot_points(self) -> np.ndarray:
        """(log(width*(i-1)+1), log(count_i/total)) over occupied bins.

        This is the plotted convention -- left edges shifted by one time
        unit, bin probabilities on the ordinate.  Keep it for figures and
        CSV fidelity; use fit_points() when estimating slopes.
        """
        occ = np.nonzero(self.counts)[0]
        x = np.log(self.bin_width * occ + 1.0)
        y = np.log(self.counts[occ] / self.total)
        return np.column_stack([x, y])

    def fit_points(self) -> np.ndarray:
        """(bin center, density) over occupied bins -- unbiased for fits."""
        occ = np.nonzero(self.counts)[0]
        return np.column_stack([self.centers[occ], self.densities[occ]])

    def density_se(self) -> np.ndarray:
        """Poisson standard error of each density (counts floored at 1)."""
        return np.sqrt(np.maximum(self.counts, 1)) / (self.total * self.bin_width)


@dataclasses.dataclass(frozen=True)
class SurvivalCurve:
    """Empirical survival S(t) = P(tau >= t) on a sorted time grid.

    `censored_mass` records whether right-censored outcomes are present;
    evaluate() then keeps S flat beyond the last grid point instead of
    dropping it to zero.  `sample_count` (when the curve comes from
    samples rather than a PDE) lets tail analysis discard points backed
    by too few survivors.
    """

    times: np.ndarray
    survival: np.ndarray
    censored_mass: bool
    sample_count: Optional[int] = None

    def __post_init__(self):
        times = _frozen_array(self.times)
        survival = _frozen_array(self.survival)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "survival", survival)
        if times.ndim != 1 or times.size == 0 or times.shape != survival.shape:
            raise DomainError("times and survival must be matching 1-D arrays")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(survival)):
            raise DomainError("non-finite survival curve data")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("times must be strictly increasing")
        if np.any(survival < -1e-12) or np.any(survival > 1.0 + 1e-12):
            raise DomainError("survival values outside [0, 1]")
        if np.any(np.diff(survival) > 1e-12):
            raise DomainError("survival curve must be nonincreasing")

    def evaluate(self, t):
        """Step-function lookup of S(t).

        Exact for curves built on the observed values: S(t) counts the
        samples at or beyond t.  Before the first grid point S is 1;
        beyond the last it stays flat when censored mass is present and
        drops to zero when every outcome was observed.
        """
        t_arr = np.asarray(t, dtype=float)
        tail = float(self.survival[-1]) if self.censored_mass else 0.0
        padded = np.concatenate([[1.0], self.survival, [tail]])
        idx = np.searchsorted(self.times, t_arr, side="left")
        out = padded[idx + 1]
        out = np.where(t_arr < self.times[0], 1.0, out)
        if np.isscalar(t) or getattr(t, "ndim", 0) == 0:
            return float(out)
        return out

    def plot_points(self) -> np.ndarray:
        """(log(t+1), log S) where S > 0 -- the plotted CDF convention."""
        keep = self.survival > 0.0
        return np.column_stack(
            [np.log(self.times[keep] + 1.0), np.log(self.survival[keep])]
        )

    def fit_points(self) -> np.ndarray:
        """Raw (t, S) pairs with t > 0 and S > 0, ready for the fitters."""
        keep = (self.times > 0.0) & (self.survival > 0.0)
        return np.column_stack([self.times[keep], self.survival[keep]])


@dataclasses.dataclass(frozen=True)
class TailReport:
    """Two-regime summary of a survival curve.

    When `transitioned` is True the power-law fit covers
    [power_window[0], transition_time] and the exponential fit covers
    [transition_time, exp_window[1]]; the windows share exactly the
    transition point.  When no transition is detected the two fields
    hold the single-segment power and exponential fits over the full
    analysis range and `transition_time` is None.
    """

    transitioned: bool
    transition_time: Optional[float]
    power_slope: float
    power_window: Tuple[float, float]
    power_residual: float
    exp_slope: float
    exp_window: Tuple[float, float]
    exp_residual: float
    diagnostics: dict

    def __post_init__(self):
        if self.transitioned:
            if self.transition_time is None:
                raise DomainError("transitioned report needs a transition time")
            if not (
                self.power_window[1]
                <= self.transition_time
                <= self.exp_window[0]
            ):
                raise DomainError(
                    "fit windows must bracket the transition point"
                )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "transitioned": self.transitioned,
            "transition_time": self.transition_time,
            "power_law": {
                "slope": self.power_slope,
                "window": list(self.power_window),
                "rms_residual": self.power_residual,
            },
            "exponential_tail": {
                "slope": self.exp_slope,
                "window": list(self.exp_window),
                "rms_residual": self.exp_residual,
            },
            "diagnostics": dict(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# estimators


def freedman_diaconis_width(taus: np.ndarray) -> float:
    """Freedman-Diaconis bin width: 2*IQR/n^(1/3).

    The 'auto' mode for desk-scale runs where the 100-unit default is
    far too coarse.  This deviates from the fixed-grid convention the
    long-horizon figures use, so it is opt-in, never silent.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0:
        raise EmptyEstimateError("no samples to choose a bin width from")
    q75, q25 = np.percentile(taus, [75.0, 25.0])
    iqr = float(q75 - q25)
    if iqr <= 0.0:
        span = float(taus.max() - taus.min())
        return span / 50.0 if span > 0.0 else 1.0
    return 2.0 * iqr / taus.size ** (1.0 / 3.0)


def _resolve_width(bin_width, taus: np.ndarray) -> float:
    if isinstance(bin_width, str):
        if bin_width != "auto":
            raise DomainError(f"unknown bin width mode {bin_width!r}")
        return freedman_diaconis_width(taus)
    w = float(bin_width)
    if not (w > 0.0 and math.isfinite(w)):
        raise DomainError(f"bin width must be positive and finite, got {w}")
    return w


def histogram_pdf(
    data, bin_width: Union[float, str] = DEFAULT_BIN_WIDTH
) -> HistogramPDF:
    """Bin the uncensored waiting times on a fixed-width grid from 0.

    Bins are [k*w, (k+1)*w) with the final bin closed so the largest
    waiting time lands inside it.  Densities divide by the FULL sample
    count; an all-censored dataset raises EmptyEstimateError.
    `bin_width` may be the string "auto" for Freedman-Diaconis.
    """
    taus = data.taus[~data.censored]
    if taus.size == 0:
        raise EmptyEstimateError("every outcome is censored; nothing to bin")
    total = int(data.taus.size)
    w = _resolve_width(bin_width, taus)
    t_top = float(taus.max())
    n_bins = max(1, int(math.ceil(t_top / w)))
    if n_bins * w < t_top:  # guard against roundoff in the division
        n_bins += 1
    counts, _ = np.histogram(taus, bins=w * np.arange(n_bins + 1))
    return HistogramPDF(
        bin_width=w,
        counts=counts,
        total=total,
        densities=counts / (total * w),
    )


def survival_curve(data, bin_width: Union[float, str, None] = None) -> SurvivalCurve:
    """Empirical survival S(t) = #{tau >= t}/total.

    With `bin_width` None the grid is the set of observed values (plus
    t=0), making evaluate() exact.  With a width, the grid is the left
    bin edges 0, w, 2w, ... covering the data -- the cumulative-count
    convention the log-log CDF figures use.  Censored outcomes enter at
    their censoring time and are counted as tau >= t up to there, which
    is exactly what right censoring licenses.
    """
    taus = data.taus
    if taus.size == 0:
        raise EmptyEstimateError("empty dataset")
    total = int(taus.size)
    if bin_width is None:
        grid = np.unique(taus)
        if grid[0] > 0.0:
            grid = np.concatenate([[0.0], grid])
    else:
        w = _resolve_width(bin_width, taus)
        t_top = float(taus.max())
        n_bins = max(1, int(math.ceil(t_top / w)))
        if n_bins * w < t_top:
            n_bins += 1
        grid = w * np.arange(n_bins)
    srt = np.sort(taus)
    surv = (total - np.searchsorted(srt, grid, side="left")) / total
    return SurvivalCurve(
        times=grid,
        survival=surv,
        censored_mass=bool(np.any(data.censored)),
        sample_count=total,
    )


def detect_transition(
    curve: SurvivalCurve,
    window: Optional[Tuple[float, float]] = None,
    min_gain: float = TRANSITION_MIN_GAIN,
    candidates: int = TRANSITION_CANDIDATES,
) -> TailReport:
    """Segmented least squares on a survival curve: power law, then tail.

    The split point t* ranges over a log-spaced candidate grid snapped
    to curve points, each leaving at least MIN_FIT_POINTS on both sides;
    the winner minimizes the combined RMS of log residuals (power law in
    log-log on [t_low, t*], exponential in lin-log on [t*, end]).  If no
    split beats the better single-segment fit by `min_gain` (relative),
    the result reports no transition -- that is an answer, not an error.

    `window` optionally clips the analysis range first; acceptance runs
    fix it in config so reproduction is exact.  Points with fewer than
    TAIL_MIN_SURVIVORS backing samples are dropped (empirical log-counts
    that small are shot noise), as is the t=0 edge.  The curve must span
    at least two decades after clipping.
    """
    t = np.asarray(curve.times, dtype=float)
    s = np.asarray(curve.survival, dtype=float)
    keep = (t > 0.0) & (s > 0.0)
    if curve.sample_count is not None:
        keep &= s * curve.sample_count >= TAIL_MIN_SURVIVORS
    if window is not None:
        keep &= (t >= float(window[0])) & (t <= float(window[1]))
    t, s = t[keep], s[keep]
    if t.size < 2 * MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"{t.size} usable survival points; need {2 * MIN_FIT_POINTS}"
        )
    if t[-1] / t[0] < 100.0:
        raise InsufficientDataError(
            f"curve spans {t[-1] / t[0]:.1f}x in t; need two decades"
        )
    logt = np.log(t)
    logs = np.log(s)

    single_pow = _fit_line(logt, logs)
    single_exp = _fit_line(t, logs)
    single_rms = min(single_pow.residual, single_exp.residual)

    lo = MIN_FIT_POINTS - 1
    hi = t.size - MIN_FIT_POINTS
    cand = np.unique(
        np.clip(np.searchsorted(t, np.geomspace(t[lo], t[hi], candidates)), lo, hi)
    )
    best = None
    for i in cand:
        left = _fit_line(logt[: i + 1], logs[: i + 1])
        right = _fit_line(t[i:], logs[i:])
        sse = left.residual**2 * (i + 1) + right.residual**2 * (t.size - i)
        rms = math.sqrt(sse / (t.size + 1))
        if best is None or rms < best[0]:
            best = (rms, int(i), left, right)
    two_rms, i_star, fit_pow, fit_exp = best

    diagnostics = {
        "points_used": int(t.size),
        "candidate_splits": int(cand.size),
        "single_power_rms": single_pow.residual,
        "single_exponential_rms": single_exp.residual,
        "two_segment_rms": two_rms,
        "min_gain": float(min_gain),
        "analysis_range": [float(t[0]), float(t[-1])],
    }
    improved = single_rms > RMS_FLOOR and two_rms < (1.0 - min_gain) * single_rms
    if not improved:
        return TailReport(
            transitioned=False,
            transition_time=None,
            power_slope=single_pow.slope,
            power_window=(float(t[0]), float(t[-1])),
            power_residual=single_pow.residual,
            exp_slope=single_exp.slope,
            exp_window=(float(t[0]), float(t[-1])),
            exp_residual=single_exp.residual,
            diagnostics=diagnostics,
        )
    t_star = float(t[i_star])
    return TailReport(
        transitioned=True,
        transition_time=t_star,
        power_slope=fit_pow.slope,
        power_window=(float(t[0]), t_star),
        power_residual=fit_pow.residual,
        exp_slope=fit_exp.slope,
        exp_window=(t_star, float(t[-1])),
        exp_residual=fit_exp.residual,
        diagnostics=diagnostics,
    )


def ks_distance(data, cdf: Callable[[float], float]) -> float:
    """Sup-norm distance between the empirical CDF and a reference CDF.

    Censored outcomes have no defined empirical CDF, so their presence
    raises UnsupportedDataError.  `cdf` is evaluated pointwise and must
    return values in [0, 1].
    """
    if bool(np.any(data.censored)):
        raise UnsupportedDataError(
            "KS distance needs fully observed samples; dataset has censored outcomes"
        )
    x = np.sort(data.taus)
    n = x.size
    if n == 0:
        raise EmptyEstimateError("empty dataset")
    f = np.array([float(cdf(v)) for v in x])
    if not np.all(np.isfinite(f)) or np.any(f < -1e-12) or np.any(f > 1.0 + 1e-12):
        raise DomainError("reference cdf must return values in [0, 1]")
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    return max(d_plus, d_minus, 0.0)
