"""The combined interpolation-then-descent pipeline and its surroundings.

A few rounds of the Voronoi restoration both enlarge the set of trusted
colors and refine the learned color-to-gray curve; the enlarged scene and
the achromatic embedding of the remaining gray pixels then seed the
curvature descent, which completes the reconstruction. Synthetic scene
generation and quality metrics live here too, so the whole experiment loop
is scriptable.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import projection as proj
from .descent2d import Descent2DConfig, Descent2DResult, steep_desc_2d
from .errors import ParameterError
from .image import (
    GRAY_ONLY,
    KNOWN_COLOR,
    UNKNOWN,
    ColorImage,
    GrayImage,
    ObservedScene,
    PixelMask,
)
from .voronoi import RestoreParams, RestoreResult, restore


@dataclass(frozen=True)
class PipelineConfig:
    """Schedule of the combined method plus the seed for synthetic inputs."""

    interp_iters: int = 3
    restore_params: RestoreParams = RestoreParams()
    descent_cfg: Descent2DConfig = Descent2DConfig()
    dump_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.interp_iters < 0:
            raise ParameterError("interp_iters must be nonnegative")
        if self.dump_every < 0:
            raise ParameterError("dump_every must be nonnegative")


@dataclass(frozen=True)
class RegionMetrics:
    rmse: float
    psnr: float
    exact: bool
    pixels: int


@dataclass(frozen=True)
class QualityReport:
    """Aggregate and per-region reconstruction error against a ground truth."""

    rmse: float
    psnr: float
    exact: bool
    channel_rmse: tuple[float, float, float]
    regions: dict[str, RegionMetrics | None]


@dataclass(frozen=True)
class CombinedResult:
    image: ColorImage
    fit: proj.FitReport
    interp: RestoreResult | None
    descent: Descent2DResult
    report: QualityReport | None


def _metrics(diff2: np.ndarray) -> tuple[float, float, bool]:
    mse = float(np.mean(diff2))
    rmse = math.sqrt(mse)
    if rmse == 0.0:
        return 0.0, float("inf"), True
    return rmse, 20.0 * math.log10(1.0 / rmse), False


def quality(result: ColorImage, truth: ColorImage, mask: PixelMask) -> QualityReport:
    """RMSE and PSNR (on the [0, 1] convention), overall and per mask region."""
    if result.planes.shape != truth.planes.shape:
        raise ParameterError("result and truth dimensions differ")
    if mask.states.shape != result.planes.shape[:2]:
        raise ParameterError("mask dimensions differ from the images")
    diff2 = (result.planes - truth.planes) ** 2
    rmse, psnr, exact = _metrics(diff2)
    channel_rmse = tuple(math.sqrt(float(np.mean(diff2[..., k]))) for k in range(3))
    regions: dict[str, RegionMetrics | None] = {}
    for name, state in (("known_color", KNOWN_COLOR), ("gray_only", GRAY_ONLY), ("unknown", UNKNOWN)):
        sel = mask.states == state
        count = int(np.count_nonzero(sel))
        if count == 0:
            regions[name] = None
            continue
        r_rmse, r_psnr, r_exact = _metrics(diff2[sel])
        regions[name] = RegionMetrics(rmse=r_rmse, psnr=r_psnr, exact=r_exact, pixels=count)
    return QualityReport(
        rmse=rmse, psnr=psnr, exact=exact, channel_rmse=channel_rmse, regions=regions
    )


def distort(truth: ColorImage, mask: PixelMask, p: proj.NonlinearProjection) -> ObservedScene:
    """Synthesize the observation of a known truth under a projection.

    Colors survive only on KNOWN_COLOR pixels. The gray plane is the
    projection of the truth over the whole domain (clipped into [0, 1] for
    raster representability), mirroring a reference photograph that covers
    fragments and missing parts alike.
    """
    if mask.states.shape != truth.planes.shape[:2]:
        raise ParameterError("mask dimensions differ from the truth")
    gray = np.clip(np.asarray(proj.apply(p, truth.planes), dtype=np.float64), 0.0, 1.0)
    color = np.where((mask.states == KNOWN_COLOR)[..., None], truth.planes, 0.0)
    return ObservedScene(ColorImage(color), GrayImage(gray), mask)


def disk_mask(width: int, height: int, disk_count: int, radius: int, seed: int) -> PixelMask:
    """KNOWN_COLOR on a union of seeded random disks, GRAY_ONLY elsewhere.

    A pixel is inside a disk when its squared distance to the center is at
    most radius squared. Identical seeds give identical masks.
    """
    if radius < 1:
        raise ParameterError("radius must be at least 1")
    if disk_count < 1:
        raise ParameterError("disk_count must be at least 1")
    if radius > min(width, height) / 2:
        raise ParameterError("radius too large for the image")
    rng = np.random.default_rng(seed)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    inside = np.zeros((height, width), dtype=bool)
    for _ in range(disk_count):
        cr = int(rng.integers(0, height))
        cc = int(rng.integers(0, width))
        inside |= (rows - cr) ** 2 + (cols - cc) ** 2 <= radius * radius
    states = np.where(inside, KNOWN_COLOR, GRAY_ONLY).astype(np.uint8)
    return PixelMask(states)


def initial_guess(scene: ObservedScene, p: proj.NonlinearProjection) -> ColorImage:
    """Known colors where accepted, achromatic embedding of gray elsewhere.

    Gray values are clamped into the curve's range before inversion.
    """
    lo, hi = proj.curve_range(p)
    gl = np.clip(scene.gray.plane, lo, hi)
    embedded = np.asarray(proj.section(p, gl), dtype=np.float64)
    known = (scene.mask.states == KNOWN_COLOR)[..., None]
    return ColorImage(np.where(known, scene.color.planes, np.clip(embedded, 0.0, 1.0)))


def run_combined(
    scene: ObservedScene,
    cfg: PipelineConfig = PipelineConfig(),
    truth: ColorImage | None = None,
    dump_dir=None,
    projection_override: proj.NonlinearProjection | None = None,
) -> CombinedResult:
    """Interpolation rounds, then curvature descent from the enlarged scene.

    Runs the Voronoi restoration for at most ``interp_iters`` rounds (zero
    rounds still fits the curve once, from the fragments alone), builds the
    initial descent guess from the accepted colors plus the achromatic
    embedding of the remaining gray, and descends under the fitted curve.
    ``projection_override`` substitutes a user-supplied projection for the
    fitted one in the descent stage.
    """
    interp: RestoreResult | None = None
    if cfg.interp_iters > 0:
        params = dataclasses.replace(cfg.restore_params, max_outer_iters=cfg.interp_iters)
        interp = restore(scene, params, dump_dir=dump_dir)
        fit = interp.fit
        enlarged = ObservedScene(interp.color, scene.gray, interp.mask)
    else:
        sel = scene.mask.states == KNOWN_COLOR
        fit = proj.estimate(
            scene.color.planes[sel], scene.gray.plane[sel], cfg.restore_params.estim_bins
        )
        enlarged = scene
    descent_proj = projection_override if projection_override is not None else fit.projection
    # analytic overrides have no section; embed gray through the fitted table then
    embed_proj = fit.projection if descent_proj.is_analytic else descent_proj
    u0 = initial_guess(enlarged, embed_proj)
    descent = steep_desc_2d(
        descent_proj,
        enlarged,
        u0,
        cfg.descent_cfg,
        truth=truth,
        dump_every=cfg.dump_every,
        dump_dir=dump_dir,
    )
    report = quality(descent.image, truth, scene.mask) if truth is not None else None
    return CombinedResult(
        image=descent.image, fit=fit, interp=interp, descent=descent, report=report
    )
