"""Shape-consistent flow calibration.

Corrupted flow pixels are refilled by minimising the second-order
smoothness energy with the known pixels held fixed (biharmonic
interpolation). Stencils that straddle the edge of the shape guidance mask
are scaled by ``boundary_weight`` so that motion does not bleed across the
silhouette of the edited object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidParams, LengthMismatch, NoKnownPixels, NonConvergence, ShapeflowError
from .fields import BinaryMask, FlowField, FlowSequence, MaskSequence, check_shapes
from .solver import Monitor, solve_pyramid, stencil_operator, weighted_energy
from .warp import _bilinear


@dataclass(frozen=True)
class CorruptionParams:
    seed: int = 0
    stroke_count_range: tuple[int, int] = (1, 4)
    rectangle_count_range: tuple[int, int] = (0, 2)
    stroke_width_range: tuple[float, float] = (4.0, 12.0)
    target_corruption_fraction: tuple[float, float] = (0.1, 0.5)

    def __post_init__(self):
        for name in ("stroke_count_range", "rectangle_count_range", "stroke_width_range", "target_corruption_fraction"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidParams(f"{name} is empty: {lo} > {hi}")
            object.__setattr__(self, name, (lo, hi))
        if min(self.stroke_count_range + self.rectangle_count_range) < 0:
            raise InvalidParams("shape counts must be non-negative")
        if self.stroke_width_range[0] <= 0:
            raise InvalidParams("stroke widths must be positive")
        lo, hi = self.target_corruption_fraction
        if not 0.0 < lo <= hi < 1.0:
            raise InvalidParams(f"target_corruption_fraction must lie within (0, 1), got {(lo, hi)}")


@dataclass(frozen=True, eq=False)
class KeepMask(BinaryMask):
    """True where the flow is known, False where it was corrupted."""

    def __post_init__(self):
        super().__post_init__()
        if not self.bits.any():
            raise NoKnownPixels("keep mask has no known pixels")


@dataclass(frozen=True)
class CalibrationParams:
    max_iterations: int = 10000
    tolerance: float = 1e-6
    pyramid_levels: int = 4
    boundary_weight: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParams("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidParams("tolerance must be positive")
        if self.pyramid_levels < 1:
            raise InvalidParams("pyramid_levels must be >= 1")
        if not self.boundary_weight >= 0:
            raise InvalidParams("boundary_weight must be >= 0")


@dataclass(frozen=True)
class ConvergenceReport:
    iterations: int
    final_update: float
    residual_energy: float
    converged: bool = True
    coarse_iterations: int = 0


# ---------------------------------------------------------------- corruption

def _stroke(canvas, rng, width_range):
    h, w = canvas.shape
    scale = max(h, w)
    x, y = rng.uniform(0, w), rng.uniform(0, h)
    heading = rng.uniform(0, 2 * math.pi)
    radius = rng.uniform(*width_range) / 2.0
    for _ in range(int(rng.integers(5, 13)) - 1):
        heading += rng.uniform(-math.pi, math.pi)
        length = rng.uniform(0.05, 0.2) * scale
        nx, ny = x + length * math.cos(heading), y + length * math.sin(heading)
        x0 = max(int(math.floor(min(x, nx) - radius)), 0)
        x1 = min(int(math.ceil(max(x, nx) + radius)) + 1, w)
        y0 = max(int(math.floor(min(y, ny) - radius)), 0)
        y1 = min(int(math.ceil(max(y, ny) + radius)) + 1, h)
        if x0 < x1 and y0 < y1:
            gy, gx = np.mgrid[y0:y1, x0:x1].astype(np.float64)
            dx, dy = nx - x, ny - y
            t = np.clip(((gx - x) * dx + (gy - y) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
            d2 = (gx - x - t * dx) ** 2 + (gy - y - t * dy) ** 2
            canvas[y0:y1, x0:x1] |= d2 <= radius * radius
        x, y = nx, ny


def _rectangle(canvas, rng):
    h, w = canvas.shape
    rw = max(1, int(rng.uniform(0.1, 0.35) * w))
    rh = max(1, int(rng.uniform(0.1, 0.35) * h))
    x0 = int(rng.integers(0, w - rw + 1))
    y0 = int(rng.integers(0, h - rh + 1))
    canvas[y0:y0 + rh, x0:x0 + rw] = True


def generate_corruption_masks(width: int, height: int, frame_count: int, params: CorruptionParams) -> list[KeepMask]:
    """Random stroke-and-rectangle corruption, one keep mask per frame.

    Each frame is redrawn (up to 100 attempts) until its corrupted fraction
    lands inside ``params.target_corruption_fraction``. With both shape
    count ranges at zero nothing is corrupted and the fraction target is
    not enforced.
    """
    if width < 8 or height < 8:
        raise InvalidParams(f"corruption masks need at least 8x8 pixels, got {width}x{height}")
    if frame_count < 1:
        raise InvalidParams("frame_count must be >= 1")
    rng = np.random.default_rng(params.seed)
    disabled = params.stroke_count_range[1] == 0 and params.rectangle_count_range[1] == 0
    lo, hi = params.target_corruption_fraction
    masks = []
    for frame in range(frame_count):
        for _ in range(100):
            corrupted = np.zeros((height, width), bool)
            for _ in range(int(rng.integers(params.stroke_count_range[0], params.stroke_count_range[1] + 1))):
                _stroke(corrupted, rng, params.stroke_width_range)
            for _ in range(int(rng.integers(params.rectangle_count_range[0], params.rectangle_count_range[1] + 1))):
                _rectangle(corrupted, rng)
            fraction = np.count_nonzero(corrupted) / corrupted.size
            if disabled or lo <= fraction <= hi:
                break
        else:
            raise InvalidParams(
                f"frame {frame}: no mask within corruption fraction {params.target_corruption_fraction} after 100 attempts"
            )
        masks.append(KeepMask(~corrupted))
    return masks


def corrupt_flow(flow: FlowField, keep: BinaryMask) -> FlowField:
    """Zero the flow wherever ``keep`` is False."""
    check_shapes(flow, keep)
    k = keep.bits
    return FlowField(np.where(k, flow.u, np.float32(0)), np.where(k, flow.v, np.float32(0)))


# --------------------------------------------------------------- calibration

def calibrate(
    corrupted: FlowField,
    keep: BinaryMask,
    shape_guidance: BinaryMask,
    params: CalibrationParams = CalibrationParams(),
    monitor: Optional[Monitor] = None,
    strict: bool = False,
) -> tuple[FlowField, ConvergenceReport]:
    """Fill the unknown pixels of ``corrupted`` with the smoothest completion.

    Known pixels are copied bit for bit. ``monitor(iteration, energy)`` is
    called every 100 solver iterations of the finest level. When the budget
    runs out the best iterate is returned with ``converged=False``, or
    NonConvergence is raised if ``strict``.
    """
    check_shapes(corrupted, keep, shape_guidance)
    known = np.asarray(keep.bits)
    if not known.any():
        raise NoKnownPixels("calibration needs at least one known pixel")
    guidance = shape_guidance.bits
    D, wt = stencil_operator(corrupted.shape, guidance, params.boundary_weight)
    if known.all():
        energy = weighted_energy(D, wt, corrupted.u.astype(np.float64)) + weighted_energy(
            D, wt, corrupted.v.astype(np.float64)
        )
        return corrupted, ConvergenceReport(0, 0.0, energy)

    out, iterations, coarse, update, converged, energy = [], 0, 0, 0.0, True, 0.0
    for comp in (corrupted.u, corrupted.v):
        level, coarse_its = solve_pyramid(
            comp, known, guidance, params.boundary_weight, params.tolerance,
            params.max_iterations, params.pyramid_levels, monitor,
        )
        filled = np.where(known, comp, level.values.astype(np.float32))
        out.append(filled)
        iterations = max(iterations, level.iterations)
        coarse += coarse_its
        update = max(update, level.final_update)
        converged = converged and level.converged
        energy += weighted_energy(D, wt, filled.astype(np.float64))

    flow = FlowField(out[0], out[1])
    report = ConvergenceReport(iterations, update, energy, converged, coarse)
    if strict and not converged:
        raise NonConvergence(
            f"no convergence after {params.max_iterations} iterations (last update {update:.3g})",
            flow=flow, report=report,
        )
    return flow, report


def sequence_calibrate(
    flows: FlowSequence,
    keeps: Sequence[BinaryMask],
    shape_guidance: Union[BinaryMask, MaskSequence, Sequence[BinaryMask]],
    params: CalibrationParams = CalibrationParams(),
) -> tuple[FlowSequence, list[ConvergenceReport]]:
    """Calibrate every frame; ``shape_guidance`` may be one mask or one per frame."""
    if len(keeps) != len(flows):
        raise LengthMismatch(f"{len(flows)} flows but {len(keeps)} keep masks")
    if isinstance(shape_guidance, BinaryMask):
        guides = [shape_guidance] * len(flows)
    else:
        guides = list(shape_guidance)
        if len(guides) != len(flows):
            raise LengthMismatch(f"{len(flows)} flows but {len(guides)} guidance masks")
    fields, reports = [], []
    for i, (flow, keep, guide) in enumerate(zip(flows, keeps, guides)):
        try:
            f, rep = calibrate(flow, keep, guide, params)
        except ShapeflowError as exc:
            raise type(exc)(f"frame {i}: {exc}") from exc
        fields.append(f)
        reports.append(rep)
    return FlowSequence(fields, flows.direction), reports


def forward_backward_consistency(forward: FlowField, backward: FlowField, tau: float) -> BinaryMask:
    """Flag pixels whose forward flow is not undone by the backward flow.

    A pixel is occluded when ``|F_f(p) + F_b(p + F_f(p))| > tau`` or the
    backward sample falls outside the frame.
    """
    check_shapes(forward, backward)
    if not tau > 0:
        raise InvalidParams(f"tau must be positive, got {tau}")
    h, w = forward.shape
    ys, xs = np.mgrid[0:h, 0:w]
    fu = forward.u.astype(np.float64)
    fv = forward.v.astype(np.float64)
    bu, valid = _bilinear(backward.u, xs + fu, ys + fv)
    bv, _ = _bilinear(backward.v, xs + fu, ys + fv)
    residual = np.hypot(fu + bu, fv + bv)
    return BinaryMask((residual > tau) | ~valid)


# ------------------------------------------------------------ inference gate

def mask_overlap(a: BinaryMask, b: BinaryMask) -> float:
    check_shapes(a, b)
    union = np.count_nonzero(a.bits | b.bits)
    return 1.0 if union == 0 else np.count_nonzero(a.bits & b.bits) / union


def should_calibrate(edited_first: BinaryMask, original_first: BinaryMask, iou_threshold: float = 0.7):
    """Apply calibration only to edits with a clear change of shape.

    Returns ``(apply, iou)``.
    """
    iou = mask_overlap(edited_first, original_first)
    return iou < iou_threshold, iou


def inference_keep_mask(edited: BinaryMask, original: BinaryMask) -> KeepMask:
    """Known everywhere except where the edited and source silhouettes disagree."""
    return KeepMask(~(edited.bits ^ original.bits))
