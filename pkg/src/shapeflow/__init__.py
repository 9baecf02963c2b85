"""Shape-aware optical flow propagation and calibration for edited video objects."""

from .calibration import (
    CalibrationParams,
    ConvergenceReport,
    CorruptionParams,
    KeepMask,
    calibrate,
    corrupt_flow,
    forward_backward_consistency,
    generate_corruption_masks,
    inference_keep_mask,
    sequence_calibrate,
    should_calibrate,
)
from .errors import *  # noqa: F401,F403
from .fields import BinaryMask, FlowField, FlowSequence, Frame, MaskSequence, MeanFlow
from .metrics import MetricsReport, endpoint_error, evaluate_sequence, mask_iou, warping_error, warping_error_pair
from .ops import composite_flow, mean_flow_over_mask, second_order_smoothness, smoothness_energy, smoothness_gradient
from .propagation import PropagationOptions, PropagationResult, propagate_sequence, propagate_step
from .synth import SceneSpec, ObjectSpec, SyntheticScene, generate, rotating_square, scale_mask, translating_disk, two_objects
from .warp import backward_sample_mask, backward_warp, forward_splat_mask

__version__ = "0.1.0"
