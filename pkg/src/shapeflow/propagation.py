"""Iterative motion propagation.

Given the source video's forward flows, its per-frame object masks and an
edited first-frame mask, build a pseudo flow sequence whose object region
follows the edited shape: each frame's flow is replaced by the object's mean
motion inside the edited mask, and the edited mask is carried to the next
frame by warping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

from .errors import EmptyMask, LengthMismatch
from .fields import BinaryMask, FlowField, FlowSequence, MaskSequence, MeanFlow, check_shapes
from .ops import composite_flow, mean_flow_over_mask
from .warp import FillPolicy, backward_sample_mask, forward_splat_mask

WarpSource = Literal["pseudo-flow", "original-flow"]
WarpMode = Literal["forward-splat", "backward-sample"]
MeanSource = Literal["original-per-frame", "propagated-edited"]
EmptyPolicy = Literal["error", "carry-previous-mean"]

_CHOICES = {
    "warp_source": ("pseudo-flow", "original-flow"),
    "warp_mode": ("forward-splat", "backward-sample"),
    "mean_source_mask": ("original-per-frame", "propagated-edited"),
    "empty_mask_policy": ("error", "carry-previous-mean"),
    "fill": ("closing", "none"),
}


@dataclass(frozen=True)
class PropagationOptions:
    """Choices the propagation recipe leaves open.

    ``warp_source="pseudo-flow"`` moves the edited mask with the composite
    flow, so parts of the edited shape lying outside the source object still
    travel with the object. ``"original-flow"`` uses the source flow as is.
    """

    warp_source: WarpSource = "pseudo-flow"
    warp_mode: WarpMode = "forward-splat"
    mean_source_mask: MeanSource = "original-per-frame"
    empty_mask_policy: EmptyPolicy = "error"
    fill: FillPolicy = "closing"
    threshold: float = 0.5

    def __post_init__(self):
        for name, allowed in _CHOICES.items():
            value = getattr(self, name)
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass(frozen=True)
class PropagationResult:
    pseudo_flows: FlowSequence
    edited_masks: MaskSequence
    mean_flows: tuple[MeanFlow, ...]

    def __post_init__(self):
        n = len(self.pseudo_flows)
        if len(self.edited_masks) != n + 1 or len(self.mean_flows) != n:
            raise LengthMismatch("pseudo flows, masks and means have inconsistent lengths")


def propagate_step(
    flow: FlowField,
    original_mask: BinaryMask,
    edited_mask: BinaryMask,
    opts: PropagationOptions = PropagationOptions(),
    previous_mean: Optional[MeanFlow] = None,
) -> tuple[FlowField, BinaryMask, MeanFlow]:
    """One frame of propagation: composite the flow, then warp the edited mask."""
    check_shapes(flow, original_mask, edited_mask)
    source = original_mask if opts.mean_source_mask == "original-per-frame" else edited_mask
    if source.any():
        mean = mean_flow_over_mask(flow, source)
    elif opts.empty_mask_policy == "carry-previous-mean" and previous_mean is not None:
        mean = previous_mean
    else:
        raise EmptyMask(f"{opts.mean_source_mask} mask is empty; no object motion to average")

    pseudo = composite_flow(flow, edited_mask, mean)
    carrier = pseudo if opts.warp_source == "pseudo-flow" else flow
    if opts.warp_mode == "forward-splat":
        next_mask = forward_splat_mask(edited_mask, carrier, opts.fill)
    else:
        next_mask = backward_sample_mask(edited_mask, carrier, opts.threshold)
    return pseudo, next_mask, mean


def propagate_sequence(
    flows: FlowSequence,
    original_masks: MaskSequence,
    edited_first_mask: BinaryMask,
    opts: PropagationOptions = PropagationOptions(),
) -> PropagationResult:
    """Run :func:`propagate_step` from the first frame to the last."""
    if flows.direction != "forward":
        raise ValueError("propagation needs a forward flow sequence")
    if len(flows) != len(original_masks) - 1:
        raise LengthMismatch(
            f"{len(flows)} flows need {len(flows) + 1} masks, got {len(original_masks)}"
        )
    check_shapes(flows, original_masks, edited_first_mask)

    pseudo_flows, masks, means = [], [edited_first_mask], []
    previous = None
    for i, flow in enumerate(flows):
        try:
            pseudo, nxt, mean = propagate_step(flow, original_masks[i], masks[-1], opts, previous)
        except EmptyMask as exc:
            raise EmptyMask(f"frame {i}: {exc}", frame_index=i) from exc
        pseudo_flows.append(pseudo)
        masks.append(nxt)
        means.append(mean)
        previous = mean
    return PropagationResult(FlowSequence(pseudo_flows, "forward"), MaskSequence(masks), tuple(means))
