"""Explicit steepest descent for 1D signal restoration.

The observed signal is trusted on its Known indices and assumed to be a
nonlinear distortion of the truth on the Distorted ones. Descent integrates
the negative gradient of

    F(v) = mu * sum_Known (v - u)^2 + lam * sum_Distorted (L(v) - u)^2
           + 1/2 * sum (v[i+1] - v[i])^2

with synchronous (Jacobi) sweeps: every interior sample is updated from the
previous iterate, endpoints stay fixed. Grid spacing is 1, so mu and lam
are mesh-dependent constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import projection as proj
from .errors import DivergenceError, ParameterError

# explicit Euler can blow up for large steps; signals live near [0, 1]
_DIVERGENCE_BOUND = 10.0


@dataclass(frozen=True)
class Signal1D:
    """Samples plus a per-index Known/Distorted partition (True = distorted)."""

    samples: np.ndarray
    distorted: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).copy()
        distorted = np.asarray(self.distorted, dtype=bool).copy()
        if samples.ndim != 1 or samples.size < 3:
            raise ValueError("signal needs at least 3 samples")
        if distorted.shape != samples.shape:
            raise ValueError("region labels must match the samples")
        if distorted.all():
            raise ValueError("at least one index must be Known")
        samples.flags.writeable = False
        distorted.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "distorted", distorted)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Descent1DConfig:
    mu: float = 10.0
    lam: float = 10.0
    dt: float = 0.1
    eps_stop: float = 1e-6
    max_iters: int = 10_000

    def __post_init__(self):
        if self.mu < 0 or self.lam < 0:
            raise ParameterError("mu and lam must be nonnegative")
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.eps_stop <= 0:
            raise ParameterError("eps_stop must be positive")
        if self.max_iters < 0:
            raise ParameterError("max_iters must be nonnegative")


@dataclass(frozen=True)
class Descent1DResult:
    signal: np.ndarray
    sweeps: int
    trace: np.ndarray  # max interior |residual| after each evaluation
    cap_reached: bool


def laplacian1d(v, i: int) -> float:
    """Three-point second difference v[i-1] - 2 v[i] + v[i+1] at interior i."""
    v = np.asarray(v, dtype=np.float64)
    if not 1 <= i <= v.size - 2:
        raise IndexError(f"index {i} is not interior to a length-{v.size} vector")
    return float(v[i - 1] - 2.0 * v[i] + v[i + 1])


def residual1d(
    p: proj.NonlinearProjection,
    v,
    signal: Signal1D,
    cfg: Descent1DConfig,
    i: int,
) -> float:
    """Descent direction at interior index i (the negative functional gradient).

    Known indices pull v toward the observation with weight 2*mu; Distorted
    indices pull the curve value L(v) toward the observation with weight
    2*lam, through the curve's derivative.
    """
    v = np.asarray(v, dtype=np.float64)
    if not 1 <= i <= v.size - 2:
        raise IndexError(f"index {i} is not interior to a length-{v.size} vector")
    out = laplacian1d(v, i)
    u = signal.samples[i]
    if signal.distorted[i]:
        lv = float(proj.curve_value(p, v[i]))
        out -= 2.0 * cfg.lam * (lv - u) * float(proj.curve_slope(p, v[i]))
    else:
        out -= 2.0 * cfg.mu * (v[i] - u)
    return float(out)


def _residual_interior(p, v, signal: Signal1D, cfg: Descent1DConfig) -> np.ndarray:
    lap = v[:-2] - 2.0 * v[1:-1] + v[2:]
    u = signal.samples[1:-1]
    vi = v[1:-1]
    dist = signal.distorted[1:-1]
    res = lap.copy()
    if dist.any():
        lv = np.asarray(proj.curve_value(p, vi), dtype=np.float64)
        slope = np.asarray(proj.curve_slope(p, vi), dtype=np.float64)
        res -= np.where(dist, 2.0 * cfg.lam * (lv - u) * slope, 0.0)
    res -= np.where(~dist, 2.0 * cfg.mu * (vi - u), 0.0)
    return res


def energy(p: proj.NonlinearProjection, v, signal: Signal1D, cfg: Descent1DConfig) -> float:
    """The discrete functional the descent minimizes (used by tests and demos)."""
    v = np.asarray(v, dtype=np.float64)
    u = signal.samples
    dist = signal.distorted
    fid_known = cfg.mu * float(np.sum((v[~dist] - u[~dist]) ** 2))
    lv = np.asarray(proj.curve_value(p, v[dist]), dtype=np.float64)
    fid_dist = cfg.lam * float(np.sum((lv - u[dist]) ** 2))
    smooth = 0.5 * float(np.sum(np.diff(v) ** 2))
    return fid_known + fid_dist + smooth


def steep_desc(
    p: proj.NonlinearProjection,
    signal: Signal1D,
    v0,
    cfg: Descent1DConfig = Descent1DConfig(),
) -> Descent1DResult:
    """Jacobi sweeps v[i] += dt * residual until the residual is small.

    Stops when the max interior |residual| of the current iterate is at most
    eps_stop (checked before each sweep, so an already-converged v0 returns
    after 0 sweeps) or when max_iters sweeps have run. Endpoints are never
    modified. Raises DivergenceError if the iterate leaves [-10, 10] or
    goes non-finite.
    """
    v = np.asarray(v0, dtype=np.float64).copy()
    if v.shape != signal.samples.shape:
        raise ValueError("v0 must match the signal length")
    trace: list[float] = []
    sweeps = 0
    cap_reached = False
    while True:
        res = _residual_interior(p, v, signal, cfg)
        m = float(np.max(np.abs(res))) if res.size else 0.0
        trace.append(m)
        if m <= cfg.eps_stop:
            break
        if sweeps >= cfg.max_iters:
            cap_reached = True
            break
        v[1:-1] += cfg.dt * res
        sweeps += 1
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > _DIVERGENCE_BOUND:
            raise DivergenceError(
                f"iterate blew up at sweep {sweeps}; reduce dt", iteration=sweeps
            )
    return Descent1DResult(
        signal=v, sweeps=sweeps, trace=np.asarray(trace), cap_reached=cap_reached
    )


# ---------------------------------------------------------------------------
# Signal text format: one sample per line, then a K/D region tag.


def parse_signal_text(text: str) -> Signal1D:
    samples = []
    tags = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("K", "D"):
            raise ValueError(f"line {lineno}: expected '<value> K|D', got {raw!r}")
        samples.append(float(parts[0]))
        tags.append(parts[1] == "D")
    return Signal1D(np.asarray(samples), np.asarray(tags, dtype=bool))


def format_signal_text(signal: Signal1D) -> str:
    lines = [
        f"{float(v)!r} {'D' if d else 'K'}"
        for v, d in zip(signal.samples, signal.distorted)
    ]
    return "\n".join(lines) + "\n"
