import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from shapeflow import BinaryMask, FlowField, Frame
from shapeflow.errors import EmptyMask, EmptyUnion, LengthMismatch, NoValidPixels
from shapeflow.fields import FlowSequence, MaskSequence
from shapeflow.metrics import (
    FrameMetrics,
    MetricsReport,
    endpoint_error,
    evaluate_sequence,
    mask_iou,
    warping_error,
    warping_error_pair,
)
from shapeflow.synth import generate, translating_disk


def rand_frame(rng, h, w):
    return Frame(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def test_warping_error_against_oracle(rng):
    for _ in range(20):
        h, w = rng.integers(2, 9, 2)
        a, b = rand_frame(rng, h, w), rand_frame(rng, h, w)
        f = FlowField(rng.normal(0, 0.8, (h, w)), rng.normal(0, 0.8, (h, w)))
        occ = BinaryMask(rng.random((h, w)) < 0.2)
        try:
            ref = oracles.warping_error(a.pixels.tolist(), b.pixels.tolist(), f.u.tolist(), f.v.tolist(), occ.bits.tolist())
        except ZeroDivisionError:
            with pytest.raises(NoValidPixels):
                warping_error_pair(a, b, f, occ)
            continue
        we, _ = warping_error_pair(a, b, f, occ)
        assert we == pytest.approx(ref, rel=1e-12)


def test_identical_frames_zero_flow_give_exact_zero(rng):
    a = rand_frame(rng, 6, 7)
    assert warping_error_pair(a, a, FlowField.zeros(6, 7)) == (0.0, 1.0)


def test_integer_shift_invariance(rng):
    # shifting both frames by an integer offset leaves WE over the shared region unchanged
    big = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    nxt = np.roll(big, 2, axis=1)
    flow = FlowField.constant(12, 12, 2, 0)
    we1, _ = warping_error_pair(Frame(big[2:14, 2:14]), Frame(nxt[2:14, 2:14]), flow)
    we2, _ = warping_error_pair(Frame(big[5:17, 3:15]), Frame(nxt[5:17, 3:15]), flow)
    assert we1 == we2 == 0.0


def test_all_invalid_raises():
    a = Frame(np.zeros((3, 3, 3), np.uint8))
    with pytest.raises(NoValidPixels):
        warping_error_pair(a, a, FlowField.constant(3, 3, 10, 0))


def test_warping_error_sequence(rng):
    frames = [rand_frame(rng, 5, 5) for _ in range(3)]
    flows = FlowSequence([FlowField.zeros(5, 5)] * 2)
    values, mean = warping_error(frames, flows)
    assert len(values) == 2 and mean == pytest.approx(sum(values) / 2)
    with pytest.raises(LengthMismatch):
        warping_error(frames[:2], flows)


def test_epe_and_iou_against_oracles(rng):
    for _ in range(30):
        h, w = rng.integers(1, 9, 2)
        a = FlowField(rng.normal(size=(h, w)), rng.normal(size=(h, w)))
        b = FlowField(rng.normal(size=(h, w)), rng.normal(size=(h, w)))
        region = rng.random((h, w)) < 0.5
        region[0, 0] = True
        assert endpoint_error(a, b) == pytest.approx(oracles.epe(a.u, a.v, b.u, b.v), rel=1e-12)
        assert endpoint_error(a, b, BinaryMask(region)) == pytest.approx(
            oracles.epe(a.u, a.v, b.u, b.v, region.tolist()), rel=1e-12
        )
        m1, m2 = BinaryMask(rng.random((h, w)) < 0.5), BinaryMask(region)
        assert mask_iou(m1, m2) == oracles.iou(m1.bits.tolist(), m2.bits.tolist())


def test_epe_region_and_iou_errors():
    with pytest.raises(EmptyMask):
        endpoint_error(FlowField.zeros(3, 3), FlowField.zeros(3, 3), BinaryMask.empty(3, 3))
    with pytest.raises(EmptyUnion):
        mask_iou(BinaryMask.empty(3, 3), BinaryMask.empty(3, 3))


@given(st.integers(0, 2**31 - 1))
def test_iou_symmetry_and_bounds(seed):
    rng = np.random.default_rng(seed)
    a = BinaryMask(rng.random((6, 6)) < 0.5) | BinaryMask(np.eye(6, dtype=bool))
    b = BinaryMask(rng.random((6, 6)) < 0.5)
    assert mask_iou(a, b) == mask_iou(b, a)
    assert 0.0 <= mask_iou(a, b) <= 1.0 and mask_iou(a, a) == 1.0


def test_report_validation_and_aggregates():
    rep = MetricsReport((FrameMetrics(0, 1.0, 1.0), FrameMetrics(1, 3.0, 0.5, epe=0.25)))
    agg = rep.aggregates()
    assert agg["mean"]["warping_error"] == 2.0 and agg["max"]["warping_error"] == 3.0
    assert agg["mean"]["epe"] == 0.25
    with pytest.raises(ValueError):
        MetricsReport(())
    with pytest.raises(ValueError):
        MetricsReport((FrameMetrics(0, -1.0),))


def test_evaluate_sequence_on_synth():
    scene = generate(translating_disk(48, 32, 5, (12.0, 16.0), 5.0, (2.0, 0.0)))
    rep = evaluate_sequence(scene.frames, scene.flows, scene.flows, scene.masks, scene.masks, scene.occlusions)
    for r in rep.per_frame:
        assert r.epe == 0.0 and r.mask_iou == 1.0 and r.warping_error == 0.0
    with pytest.raises(ValueError):
        evaluate_sequence(scene.frames, scene.flows, masks=scene.masks)
    with pytest.raises(LengthMismatch):
        evaluate_sequence(scene.frames, scene.flows, occlusion=MaskSequence(scene.occlusions.masks[:2]))
