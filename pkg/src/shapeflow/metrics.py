"""Warping error, endpoint error and mask IoU, plus per-sequence reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMask, EmptyUnion, LengthMismatch, NoValidPixels
from .fields import BinaryMask, FlowField, FlowSequence, Frame, MaskSequence, check_shapes, ordered_sum
from .warp import backward_warp


def warping_error_pair(current: Frame, following: Frame, flow: FlowField, occlusion: Optional[BinaryMask] = None):
    """Warp ``following`` back onto ``current`` and average the absolute difference.

    Intensities are scaled to [0, 1], averaged over the three channels and
    over valid, non-occluded pixels, then multiplied by 100. Returns
    ``(error, valid_fraction)``.
    """
    check_shapes(current, following, flow)
    warped, valid = backward_warp(following, flow)
    use = valid.bits
    if occlusion is not None:
        check_shapes(flow, occlusion)
        use = use & ~occlusion.bits
    n = int(np.count_nonzero(use))
    if n == 0:
        raise NoValidPixels("no valid pixel left to compare")
    diff = np.abs(warped - current.pixels.astype(np.float64)) / 255.0
    per_pixel = diff.mean(axis=-1)
    return 100.0 * ordered_sum(per_pixel[use]) / n, n / use.size


def warping_error(
    frames: Sequence[Frame], flows: FlowSequence, occlusion: Optional[MaskSequence] = None
) -> tuple[list[float], float]:
    """Per-pair warping errors for a sequence and their mean."""
    if len(frames) != len(flows) + 1:
        raise LengthMismatch(f"{len(frames)} frames need {len(frames) - 1} flows, got {len(flows)}")
    if occlusion is not None and len(occlusion) != len(flows):
        raise LengthMismatch(f"{len(flows)} flows but {len(occlusion)} occlusion masks")
    values = []
    for i, flow in enumerate(flows):
        occ = occlusion[i] if occlusion is not None else None
        values.append(warping_error_pair(frames[i], frames[i + 1], flow, occ)[0])
    return values, ordered_sum(np.array(values)) / len(values)


def endpoint_error(estimated: FlowField, ground_truth: FlowField, region: Optional[BinaryMask] = None) -> float:
    """Mean Euclidean distance between flow vectors, optionally over a region."""
    check_shapes(estimated, ground_truth)
    du = estimated.u.astype(np.float64) - ground_truth.u.astype(np.float64)
    dv = estimated.v.astype(np.float64) - ground_truth.v.astype(np.float64)
    epe = np.sqrt(du * du + dv * dv)
    if region is None:
        return ordered_sum(epe) / epe.size
    check_shapes(estimated, region)
    n = region.count()
    if n == 0:
        raise EmptyMask("endpoint error region is empty")
    return ordered_sum(epe[region.bits]) / n


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    check_shapes(a, b)
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        raise EmptyUnion("IoU undefined for two empty masks")
    return int(np.count_nonzero(a.bits & b.bits)) / union


@dataclass(frozen=True)
class FrameMetrics:
    frame_index: int
    warping_error: Optional[float] = None
    valid_fraction: Optional[float] = None
    epe: Optional[float] = None
    mask_iou: Optional[float] = None

    def values(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_KEYS if getattr(self, k) is not None}


METRIC_KEYS = ("warping_error", "valid_fraction", "epe", "mask_iou")


@dataclass(frozen=True)
class MetricsReport:
    per_frame: tuple[FrameMetrics, ...]
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.per_frame:
            raise ValueError("a metrics report covers at least one frame")
        for rec in self.per_frame:
            for key, value in rec.values().items():
                if not np.isfinite(value) or value < 0:
                    raise ValueError(f"frame {rec.frame_index}: {key}={value} is not a finite non-negative value")

    def aggregates(self) -> dict:
        out = {"mean": {}, "max": {}}
        for key in METRIC_KEYS:
            vals = [getattr(r, key) for r in self.per_frame if getattr(r, key) is not None]
            if vals:
                out["mean"][key] = ordered_sum(np.array(vals)) / len(vals)
                out["max"][key] = max(vals)
        return out


def evaluate_sequence(
    frames: Sequence[Frame],
    flows: FlowSequence,
    ground_truth: Optional[FlowSequence] = None,
    masks: Optional[MaskSequence] = None,
    oracle_masks: Optional[MaskSequence] = None,
    occlusion: Optional[MaskSequence] = None,
) -> MetricsReport:
    """Warping error per frame pair, plus EPE and IoU when references are given.

    Mask IoU is indexed by flow pair ``i`` and compares ``masks[i]`` with
    ``oracle_masks[i]``.
    """
    if len(frames) != len(flows) + 1:
        raise LengthMismatch(f"{len(frames)} frames need {len(frames) - 1} flows, got {len(flows)}")
    for seq, name in ((ground_truth, "ground truth"), (occlusion, "occlusion")):
        if seq is not None and len(seq) != len(flows):
            raise LengthMismatch(f"{len(flows)} flows but {len(seq)} {name} entries")
    if (masks is None) != (oracle_masks is None):
        raise ValueError("masks and oracle_masks must be given together")
    if masks is not None and (len(masks) < len(flows) or len(oracle_masks) < len(flows)):
        raise LengthMismatch("need at least one mask per flow for IoU")
    records = []
    for i, flow in enumerate(flows):
        occ = occlusion[i] if occlusion is not None else None
        we, valid = warping_error_pair(frames[i], frames[i + 1], flow, occ)
        epe = endpoint_error(flow, ground_truth[i]) if ground_truth is not None else None
        iou = mask_iou(masks[i], oracle_masks[i]) if masks is not None else None
        records.append(FrameMetrics(i, we, valid, epe, iou))
    return MetricsReport(tuple(records))
