"""Iterative color extension over a nearest-known-pixel decomposition.

The restoration loop alternates four steps: fit the color-to-gray curve on
the currently known pixels, derive an acceptance threshold from the fit
variance, paint every pixel with the color of its nearest known pixel, and
accept the painted color wherever its projection matches the observed gray
level within the threshold. Accepted pixels become nodes of the next round,
so color information spreads cell by cell until nothing more is compatible
with the gray datum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import projection as proj
from .errors import NoSeedError, ParameterError
from .image import (
    GRAY_ONLY,
    KNOWN_COLOR,
    UNKNOWN,
    ColorImage,
    GrayImage,
    ObservedScene,
    PixelMask,
    save_mask,
)

# cap on the element count of one squared-distance block
_CHUNK_ELEMENTS = 1 << 24


@dataclass(frozen=True)
class VoronoiLabels:
    """Per-pixel index of the nearest node; nodes are (row, col) coordinates."""

    label: np.ndarray
    nodes: np.ndarray

    def __post_init__(self):
        label = np.asarray(self.label, dtype=np.int64).copy()
        nodes = np.asarray(self.nodes, dtype=np.int64).copy()
        if label.ndim != 2 or nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("label must be (h, w), nodes must be (k, 2)")
        label.flags.writeable = False
        nodes.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "nodes", nodes)


@dataclass(frozen=True)
class RestoreParams:
    """Knobs of the iterative restoration.

    ``threshold_scale`` is the c in threshold = c * sqrt(variance). With
    ``freeze_estimate_after_first`` left True, pixels stay accepted once
    accepted even though the curve is refitted every round (this keeps the
    accepted set monotone and guarantees termination); setting it False
    re-tests every non-original pixel against each round's threshold, with
    the iteration cap as the only termination guarantee.
    """

    threshold_scale: float = 2.0
    estim_bins: int = 32
    max_outer_iters: int = 1000
    freeze_estimate_after_first: bool = True

    def __post_init__(self):
        if self.threshold_scale <= 0:
            raise ParameterError("threshold_scale must be positive")
        if self.max_outer_iters < 1:
            raise ParameterError("max_outer_iters must be at least 1")
        if self.estim_bins < 1:
            raise ParameterError("estim_bins must be positive")


@dataclass(frozen=True)
class RestoreResult:
    color: ColorImage
    mask: PixelMask
    fit: proj.FitReport
    iterations: int
    cap_reached: bool
    accepted_counts: tuple[int, ...]


def voronoi_assign(mask: PixelMask) -> VoronoiLabels:
    """Label every pixel with the index of its nearest KNOWN_COLOR pixel.

    Distances are squared Euclidean on (row, col); ties resolve to the
    smallest node index, nodes being enumerated in row-major order. Node
    pixels label themselves.
    """
    states = mask.states
    nodes = np.argwhere(states == KNOWN_COLOR).astype(np.int64)
    if nodes.shape[0] == 0:
        raise NoSeedError("mask has no KNOWN_COLOR pixel to seed the decomposition")
    label = np.empty(states.shape, dtype=np.int64)
    label[nodes[:, 0], nodes[:, 1]] = np.arange(nodes.shape[0])
    others = np.argwhere(states != KNOWN_COLOR).astype(np.int64)
    if others.shape[0]:
        rows_per_chunk = max(1, _CHUNK_ELEMENTS // nodes.shape[0])
        for start in range(0, others.shape[0], rows_per_chunk):
            block = others[start : start + rows_per_chunk]
            d2 = (block[:, 0:1] - nodes[None, :, 0]) ** 2 + (
                block[:, 1:2] - nodes[None, :, 1]
            ) ** 2
            label[block[:, 0], block[:, 1]] = np.argmin(d2, axis=1)
    return VoronoiLabels(label=label, nodes=nodes)


def extend(scene: ObservedScene, labels: VoronoiLabels) -> ColorImage:
    """Paint every pixel with the color of its labeled node."""
    expected = np.argwhere(scene.mask.states == KNOWN_COLOR)
    if not np.array_equal(expected, labels.nodes):
        raise ValueError("labels were not built from this scene's KNOWN_COLOR set")
    node_colors = scene.color.planes[labels.nodes[:, 0], labels.nodes[:, 1]]
    return ColorImage(node_colors[labels.label])


def thrs(
    candidate: ColorImage,
    scene: ObservedScene,
    p: proj.NonlinearProjection,
    eps: float,
) -> PixelMask:
    """Accept candidate colors whose projection matches the gray plane.

    KNOWN_COLOR pixels stay accepted unconditionally. Any other pixel is
    promoted to KNOWN_COLOR iff |projection(candidate) - gray| <= eps;
    rejected pixels keep their prior state (the mask carries the rejection,
    the candidate image is left alone).
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if candidate.planes.shape[:2] != scene.mask.states.shape:
        raise ValueError("candidate dimensions do not match the scene")
    residual = np.abs(proj.apply(p, candidate.planes) - scene.gray.plane)
    states = scene.mask.states.copy()
    promote = (states != KNOWN_COLOR) & (residual <= eps)
    states[promote] = KNOWN_COLOR
    return PixelMask(states)


def _known_pairs(colors: np.ndarray, gray: np.ndarray, states: np.ndarray):
    sel = states == KNOWN_COLOR
    return colors[sel], gray[sel]


def restore(
    scene: ObservedScene,
    params: RestoreParams = RestoreParams(),
    dump_dir=None,
) -> RestoreResult:
    """Run the fit / extend / threshold loop to its fixed point or the cap.

    Returns the final painted image (colors are observation-grade only on
    the accepted set), the accepted mask, and the last curve fit. With the
    default retention mode the accepted set grows monotonically, so the
    loop stops after at most one iteration per pixel; re-running restore on
    its own output reproduces the output exactly.
    """
    states = scene.mask.states.copy()
    colors = scene.color.planes.copy()
    gray = scene.gray.plane
    original_known = states == KNOWN_COLOR

    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)

    fit = None
    extended = colors
    accepted_counts: list[int] = []
    cap_reached = True
    iterations = 0
    for it in range(1, params.max_outer_iters + 1):
        iterations = it
        rgb, gl = _known_pairs(colors, gray, states)
        fit = proj.estimate(rgb, gl, params.estim_bins)
        eps = params.threshold_scale * math.sqrt(fit.variance)
        working = ObservedScene(ColorImage(colors), scene.gray, PixelMask(states))
        labels = voronoi_assign(working.mask)
        extended = extend(working, labels).planes
        residual = np.abs(proj.apply(fit.projection, extended) - gray)
        ok = residual <= eps
        if params.freeze_estimate_after_first:
            new_states = states.copy()
            new_states[(states != KNOWN_COLOR) & ok] = KNOWN_COLOR
        else:
            new_states = scene.mask.states.copy()
            new_states[original_known] = KNOWN_COLOR
            new_states[~original_known & ok] = KNOWN_COLOR
        accepted_counts.append(int(np.count_nonzero(new_states == KNOWN_COLOR)))
        if dump_dir is not None:
            save_mask(PixelMask(new_states), Path(dump_dir) / f"mask_iter{it:03d}.p5")
        # fixed point: the round changed neither the mask nor the painted image
        fixed = np.array_equal(new_states, states) and np.array_equal(extended, colors)
        colors = extended
        states = new_states
        if fixed:
            cap_reached = False
            break
    return RestoreResult(
        color=ColorImage(extended),
        mask=PixelMask(states),
        fit=fit,
        iterations=iterations,
        cap_reached=cap_reached,
        accepted_counts=tuple(accepted_counts),
    )
