"""The scalar color-to-gray projection and its estimation from samples.

A projection maps an RGB triple to a gray level through a weighted channel
mix followed by a monotone scalar curve. The curve is normally stored as an
increasing piecewise-linear table; closed-form curves are supported as
synthetic distortions for experiments.

``estimate`` recovers the weights and the curve from (color, gray) sample
pairs by exhaustive search over a coarse weight simplex, binning the mixed
abscissas and enforcing monotonicity of the binned ordinates by
pool-adjacent-violators. The fit quality is the mean squared residual of
the observed ordinates about the fitted curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError, OutOfRangeError

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class AnalyticCurve:
    """Closed-form scalar curve with its derivative, used as a test distortion."""

    value: Callable[[np.ndarray], np.ndarray]
    slope: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NonlinearProjection:
    """Channel weights plus a scalar curve; the map rgb -> curve(w . rgb).

    Exactly one curve representation is present: a piecewise-linear table
    (``knots_x`` strictly increasing, ``knots_y`` non-decreasing) or an
    ``analytic`` closed form. Table evaluation clamps results to [0, 1];
    analytic curves are evaluated as-is.
    """

    weights: np.ndarray
    knots_x: np.ndarray | None = None
    knots_y: np.ndarray | None = None
    analytic: AnalyticCurve | None = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (3,):
            raise ValueError("weights must be a length-3 vector")
        if (weights < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        weights = weights.copy()
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

        if self.analytic is not None:
            if self.knots_x is not None or self.knots_y is not None:
                raise ValueError("give either a table or an analytic curve, not both")
            return
        xs = np.asarray(self.knots_x, dtype=np.float64)
        ys = np.asarray(self.knots_y, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("curve table needs matching 1-d knot arrays, length >= 2")
        if not (np.diff(xs) > 0).all():
            raise ValueError("curve abscissas must be strictly increasing")
        if (np.diff(ys) < 0).any():
            raise ValueError("curve ordinates must be non-decreasing")
        xs, ys = xs.copy(), ys.copy()
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "knots_x", xs)
        object.__setattr__(self, "knots_y", ys)

    @property
    def is_analytic(self) -> bool:
        return self.analytic is not None


@dataclass(frozen=True)
class FitReport:
    """Result of a projection fit: the projection, its residual variance, and n."""

    projection: NonlinearProjection
    variance: float
    sample_count: int

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")


# ---------------------------------------------------------------------------
# Constructors


def mean_projection() -> NonlinearProjection:
    """Equal weights through the identity curve: rgb -> (r + g + b) / 3."""
    return NonlinearProjection(
        weights=np.array([1.0, 1.0, 1.0]) / 3.0,
        knots_x=np.array([0.0, 1.0]),
        knots_y=np.array([0.0, 1.0]),
    )


def identity_projection(weights) -> NonlinearProjection:
    """Identity curve with caller-chosen channel weights."""
    return NonlinearProjection(
        weights=np.asarray(weights, dtype=np.float64),
        knots_x=np.array([0.0, 1.0]),
        knots_y=np.array([0.0, 1.0]),
    )


def quartic_curve() -> AnalyticCurve:
    """The non-monotone quartic distortion 1.8 (x+1)^2 (x-1/2)^2.

    Decreasing on [0, 1/2] and increasing beyond; used to exercise the
    solvers against a genuinely nonlinear, non-invertible distortion.
    """

    def value(x):
        x = np.asarray(x, dtype=np.float64)
        return 1.8 * (x + 1.0) ** 2 * (x - 0.5) ** 2

    def slope(x):
        x = np.asarray(x, dtype=np.float64)
        return 3.6 * (x + 1.0) * (x - 0.5) * (2.0 * x + 0.5)

    return AnalyticCurve(value=value, slope=slope)


def quartic_projection(weights=None) -> NonlinearProjection:
    """Mean-weight (by default) projection through the quartic test curve."""
    if weights is None:
        weights = np.array([1.0, 1.0, 1.0]) / 3.0
    return NonlinearProjection(weights=np.asarray(weights, np.float64), analytic=quartic_curve())


# ---------------------------------------------------------------------------
# Curve evaluation


def curve_value(p: NonlinearProjection, s):
    """Evaluate the scalar curve at abscissa(s) s.

    Table curves clamp the result to [0, 1]; analytic curves do not.
    """
    s = np.asarray(s, dtype=np.float64)
    if p.is_analytic:
        return p.analytic.value(s)
    return np.clip(np.interp(s, p.knots_x, p.knots_y), 0.0, 1.0)


def curve_slope(p: NonlinearProjection, s):
    """One-sided derivative of the curve: the active segment's slope.

    At an interior breakpoint the left segment's slope is used; at the first
    breakpoint only the right segment exists.
    """
    s = np.asarray(s, dtype=np.float64)
    if p.is_analytic:
        return p.analytic.slope(s)
    xs, ys = p.knots_x, p.knots_y
    seg = np.clip(np.searchsorted(xs, s, side="left"), 1, xs.size - 1)
    return (ys[seg] - ys[seg - 1]) / (xs[seg] - xs[seg - 1])


def apply(p: NonlinearProjection, rgb):
    """Project rgb (shape (..., 3)) to gray: curve(w . rgb)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    w = p.weights
    s = rgb[..., 0] * w[0] + rgb[..., 1] * w[1] + rgb[..., 2] * w[2]
    return curve_value(p, s)


def channel_derivative(p: NonlinearProjection, rgb, k: int):
    """Partial derivative of the projection in channel k (1-based, 1..3).

    By the chain rule this is curve'(w . rgb) * w_k.
    """
    if k not in (1, 2, 3):
        raise ValueError("channel index k must be 1, 2 or 3")
    rgb = np.asarray(rgb, dtype=np.float64)
    w = p.weights
    s = rgb[..., 0] * w[0] + rgb[..., 1] * w[1] + rgb[..., 2] * w[2]
    return curve_slope(p, s) * w[k - 1]


def section(p: NonlinearProjection, gl):
    """Achromatic right inverse: the (t, t, t) with curve(t) = gl.

    Only defined for table curves and for gl inside the curve's range;
    callers must clamp out-of-range gray values first.
    """
    if p.is_analytic:
        raise OutOfRangeError("section is defined for table curves only")
    gl_arr = np.asarray(gl, dtype=np.float64)
    xs, ys = p.knots_x, p.knots_y
    lo, hi = float(ys[0]), float(ys[-1])
    if gl_arr.size and (gl_arr.min() < lo - 1e-12 or gl_arr.max() > hi + 1e-12):
        raise OutOfRangeError(
            f"gray value outside curve range [{lo}, {hi}]; clamp before calling section"
        )
    g = np.clip(gl_arr, lo, hi)
    # first knot with ys[j] >= g; the segment (j-1, j) then has ys[j-1] < g <= ys[j],
    # so its slope is strictly positive and inversion is well posed
    j = np.searchsorted(ys, g, side="left")
    at_start = j == 0
    jj = np.clip(j, 1, ys.size - 1)
    denom = ys[jj] - ys[jj - 1]
    frac = np.zeros_like(g)
    np.divide(g - ys[jj - 1], denom, out=frac, where=(denom != 0) & ~at_start)
    t = np.where(at_start, xs[0], xs[jj - 1] + frac * (xs[jj] - xs[jj - 1]))
    return np.stack([t, t, t], axis=-1)


def curve_range(p: NonlinearProjection) -> tuple[float, float]:
    """The [min, max] of a table curve over its knots."""
    if p.is_analytic:
        raise OutOfRangeError("curve_range is defined for table curves only")
    return float(p.knots_y[0]), float(p.knots_y[-1])


# ---------------------------------------------------------------------------
# Estimation


def _weight_candidates() -> np.ndarray:
    """Simplex grid with step 0.05 plus the exact barycenter, ordered by (a, b)."""
    cands = []
    for i in range(21):
        for j in range(21 - i):
            cands.append((i / 20.0, j / 20.0, (20 - i - j) / 20.0))
    cands.append((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
    return np.array(sorted(cands), dtype=np.float64)


def _pool_adjacent_violators(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Non-decreasing fit of `values` under `weights` (zero weights allowed)."""
    # blocks of (weighted sum, weight, plain sum, count)
    sums: list[float] = []
    wts: list[float] = []
    plain: list[float] = []
    counts: list[int] = []

    def mean(idx: int) -> float:
        if wts[idx] > 0:
            return sums[idx] / wts[idx]
        return plain[idx] / counts[idx]

    for v, w in zip(values, weights):
        sums.append(v * w)
        wts.append(w)
        plain.append(v)
        counts.append(1)
        while len(sums) >= 2 and mean(-2) > mean(-1):
            sums[-2] += sums[-1]
            wts[-2] += wts[-1]
            plain[-2] += plain[-1]
            counts[-2] += counts[-1]
            del sums[-1], wts[-1], plain[-1], counts[-1]
    out = np.empty(len(values))
    pos = 0
    for idx in range(len(sums)):
        out[pos : pos + counts[idx]] = mean(idx)
        pos += counts[idx]
    return out


def _fill_empty_bins(ordinates: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Give empty bins the nearest non-empty bin's ordinate (ties go left)."""
    nonempty = np.flatnonzero(counts > 0)
    pos = np.arange(counts.size)
    j = np.searchsorted(nonempty, pos)
    left = nonempty[np.clip(j - 1, 0, nonempty.size - 1)]
    right = nonempty[np.clip(j, 0, nonempty.size - 1)]
    dist_left = np.where(j > 0, pos - left, np.iinfo(np.int64).max)
    dist_right = np.where(j < nonempty.size, right - pos, np.iinfo(np.int64).max)
    nearest = np.where(dist_left <= dist_right, left, right)
    filled = ordinates.copy()
    empty = counts == 0
    filled[empty] = ordinates[nearest[empty]]
    return filled


def _fit_candidate(s: np.ndarray, gray: np.ndarray, bins: int):
    """Bin, fill, pool; return (knots_x, knots_y, sigma^2) for one weight choice."""
    idx = np.clip((s * bins).astype(np.int64), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    sums = np.bincount(idx, weights=gray, minlength=bins)
    return _fit_candidate_binned(s, gray, counts, sums, bins)


def _fit_candidate_binned(s, gray, counts, sums, bins: int):
    ordinates = np.zeros(bins)
    np.divide(sums, counts, out=ordinates, where=counts > 0)
    if not counts.all():
        ordinates = _fill_empty_bins(ordinates, counts)
    if (np.diff(ordinates) >= 0).all():
        pooled = ordinates
    else:
        pooled = _pool_adjacent_violators(ordinates, counts)
    centers = (np.arange(bins) + 0.5) / bins
    xs = np.concatenate(([0.0], centers, [1.0]))
    ys = np.concatenate(([pooled[0]], pooled, [pooled[-1]]))
    resid = gray - np.interp(s, xs, ys)
    return xs, ys, float(np.mean(resid * resid))


def estimate(rgb, gray, bins: int = 32) -> FitReport:
    """Fit weights and a monotone curve to (rgb, gray) sample pairs.

    Searches the 0.05-step weight simplex (plus the exact barycenter),
    fitting an isotonic piecewise-linear table per candidate and keeping the
    candidate with the smallest mean squared ordinate residual. Ties prefer
    the lexicographically smallest (alpha, beta). The result is invariant
    under permutation of the input pairs: samples are canonicalized by
    sorting before any accumulation.

    Raises InsufficientDataError for fewer than 8 pairs and
    DegenerateDataError when every rgb triple is identical.
    """
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    gray = np.asarray(gray, dtype=np.float64).reshape(-1)
    if rgb.shape[0] != gray.shape[0]:
        raise ValueError("rgb and gray must pair up one to one")
    n = rgb.shape[0]
    if n < 8:
        raise InsufficientDataError(f"need at least 8 pairs to estimate, got {n}")
    if bins < 1:
        raise ValueError("bins must be positive")
    if np.ptp(rgb, axis=0).max() == 0.0:
        raise DegenerateDataError("all rgb samples identical; abscissas carry no spread")

    order = np.lexsort((gray, rgb[:, 2], rgb[:, 1], rgb[:, 0]))
    rgb = rgb[order]
    gray = gray[order]

    # abscissas and bin histograms for every candidate at once
    candidates = _weight_candidates()
    n_cand = candidates.shape[0]
    abscissas = (
        rgb[:, 0:1] * candidates[None, :, 0]
        + rgb[:, 1:2] * candidates[None, :, 1]
        + rgb[:, 2:3] * candidates[None, :, 2]
    )  # (n, n_cand)
    idx = np.clip((abscissas * bins).astype(np.int64), 0, bins - 1)
    flat = idx + bins * np.arange(n_cand)[None, :]
    counts_all = np.bincount(flat.ravel(), minlength=n_cand * bins).astype(np.float64)
    sums_all = np.bincount(
        flat.ravel(), weights=np.repeat(gray, n_cand), minlength=n_cand * bins
    )

    best = None
    for c in range(n_cand):
        w = candidates[c]
        xs, ys, sigma2 = _fit_candidate_binned(
            abscissas[:, c],
            gray,
            counts_all[c * bins : (c + 1) * bins],
            sums_all[c * bins : (c + 1) * bins],
            bins,
        )
        if best is None or sigma2 < best[0]:
            best = (sigma2, w, xs, ys)
    sigma2, w, xs, ys = best
    projection = NonlinearProjection(weights=w, knots_x=xs, knots_y=ys)
    return FitReport(projection=projection, variance=sigma2, sample_count=n)


# ---------------------------------------------------------------------------
# Plain-text serialization of fits (weights + breakpoints + variance)


def fit_report_to_text(report: FitReport) -> str:
    p = report.projection
    if p.is_analytic:
        raise ValueError("only table-curve fits are serializable")
    lines = [
        "projection-fit v1",
        "weights " + " ".join(repr(float(v)) for v in p.weights),
        f"variance {report.variance!r}",
        f"samples {report.sample_count}",
        f"breakpoints {p.knots_x.size}",
    ]
    for x, y in zip(p.knots_x, p.knots_y):
        lines.append(f"{float(x)!r} {float(y)!r}")
    return "\n".join(lines) + "\n"


def fit_report_from_text(text: str) -> FitReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "projection-fit v1":
        raise ValueError("not a projection-fit table")
    fields = {}
    for ln in lines[1:5]:
        key, _, rest = ln.partition(" ")
        fields[key] = rest
    weights = np.array([float(v) for v in fields["weights"].split()])
    variance = float(fields["variance"])
    samples = int(fields["samples"])
    count = int(fields["breakpoints"])
    knots = [tuple(float(v) for v in ln.split()) for ln in lines[5 : 5 + count]]
    if len(knots) != count:
        raise ValueError("breakpoint table shorter than promised")
    xs = np.array([k[0] for k in knots])
    ys = np.array([k[1] for k in knots])
    projection = NonlinearProjection(weights=weights, knots_x=xs, knots_y=ys)
    return FitReport(projection=projection, variance=variance, sample_count=samples)


def save_fit_report(report: FitReport, path) -> None:
    Path(path).write_text(fit_report_to_text(report), encoding="ascii")


def load_fit_report(path) -> FitReport:
    return fit_report_from_text(Path(path).read_text(encoding="ascii"))
