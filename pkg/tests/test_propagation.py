import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapeflow import BinaryMask, FlowField, PropagationOptions, propagate_sequence, propagate_step
from shapeflow.errors import DimensionMismatch, EmptyMask, LengthMismatch
from shapeflow.fields import FlowSequence, MaskSequence
from shapeflow.metrics import mask_iou
from shapeflow.synth import generate, scale_mask, translating_disk


def disk_scene(frames=6):
    return generate(translating_disk(48, 32, frames, (12.0, 16.0), 5.0, (2.0, 0.0)))


def test_identity_edit_follows_object():
    scene = disk_scene()
    res = propagate_sequence(scene.flows, scene.masks, scene.masks[0])
    for got, want in zip(res.edited_masks, scene.masks):
        assert got == want
    for mean in res.mean_flows:
        assert (mean.u_mean, mean.v_mean) == (2.0, 0.0)


def test_step_partition(rng):
    h, w = 10, 12
    flow = FlowField(rng.normal(size=(h, w)), rng.normal(size=(h, w)))
    orig = BinaryMask(rng.random((h, w)) < 0.3)
    edit = BinaryMask(rng.random((h, w)) < 0.3)
    pseudo, nxt, mean = propagate_step(flow, orig, edit)
    inside = edit.bits
    assert np.array_equal(pseudo.u[~inside], flow.u[~inside])
    assert (pseudo.u[inside] == np.float32(mean.u_mean)).all()
    assert nxt.shape == (h, w)


def test_options_select_warp():
    scene = disk_scene(3)
    edit = scale_mask(scene.masks[0], 1.5, scene.center(0))
    a = propagate_sequence(scene.flows, scene.masks, edit, PropagationOptions(warp_mode="forward-splat"))
    b = propagate_sequence(scene.flows, scene.masks, edit, PropagationOptions(warp_mode="backward-sample"))
    # translation by (2, 0) is reproduced by the forward splat only
    assert mask_iou(a.edited_masks[1], scale_mask(scene.masks[1], 1.5, scene.center(1))) == 1.0
    assert a.edited_masks[1] != b.edited_masks[1]


def test_invalid_options():
    with pytest.raises(ValueError):
        PropagationOptions(warp_mode="sideways")
    with pytest.raises(ValueError):
        PropagationOptions(threshold=1.0)


def test_length_and_direction_checks():
    scene = disk_scene(4)
    with pytest.raises(LengthMismatch):
        propagate_sequence(scene.flows, MaskSequence(scene.masks.masks[:3]), scene.masks[0])
    with pytest.raises(ValueError):
        propagate_sequence(scene.backward_flows, scene.masks, scene.masks[0])
    with pytest.raises(DimensionMismatch):
        propagate_sequence(scene.flows, scene.masks, BinaryMask.empty(5, 5))


def _vanishing_object():
    h = w = 8
    flows = FlowSequence([FlowField.constant(h, w, 1, 0)] * 3)
    bits = np.zeros((h, w), bool)
    bits[2:4, 2:4] = True
    masks = MaskSequence([BinaryMask(bits), BinaryMask.empty(h, w), BinaryMask(bits), BinaryMask(bits)])
    return flows, masks, BinaryMask(bits)


def test_empty_mask_reports_frame_index():
    flows, masks, edit = _vanishing_object()
    with pytest.raises(EmptyMask) as info:
        propagate_sequence(flows, masks, edit)
    assert info.value.frame_index == 1 and "frame 1" in str(info.value)


def test_carry_previous_mean_policy():
    flows, masks, edit = _vanishing_object()
    res = propagate_sequence(flows, masks, edit, PropagationOptions(empty_mask_policy="carry-previous-mean"))
    assert res.mean_flows[1] == res.mean_flows[0]


@given(st.integers(0, 2**31 - 1), st.integers(4, 20), st.integers(4, 20))
def test_partition_property(seed, h, w):
    rng = np.random.default_rng(seed)
    n = 3
    flows = FlowSequence([FlowField(rng.normal(size=(h, w)), rng.normal(size=(h, w))) for _ in range(n)])
    masks = MaskSequence([BinaryMask(rng.random((h, w)) < 0.5) | BinaryMask(np.eye(h, w, dtype=bool)) for _ in range(n + 1)])
    edit = BinaryMask(rng.random((h, w)) < 0.4)
    res = propagate_sequence(flows, masks, edit, PropagationOptions(mean_source_mask="original-per-frame"))
    for i in range(n):
        m = res.edited_masks[i].bits
        p, f, mean = res.pseudo_flows[i], flows[i], res.mean_flows[i]
        assert np.array_equal(p.u[~m], f.u[~m]) and np.array_equal(p.v[~m], f.v[~m])
        assert (p.u[m] == np.float32(mean.u_mean)).all() and (p.v[m] == np.float32(mean.v_mean)).all()


def test_step_with_dilated_disk_edit():
    ys, xs = np.mgrid[0:8, 0:8]
    disk = (xs - 3) ** 2 + (ys - 3) ** 2 <= 2
    flow = FlowField(np.where(disk, 2.0, 0.0), np.zeros((8, 8)))
    grown = disk.copy()
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        grown |= np.roll(np.roll(disk, dy, 0), dx, 1)
    pseudo, nxt, mean = propagate_step(flow, BinaryMask(disk), BinaryMask(grown))
    assert (mean.u_mean, mean.v_mean) == (2.0, 0.0)
    assert (pseudo.u[grown] == 2.0).all()
    want = np.zeros_like(grown)
    want[:, 2:] = grown[:, :-2]
    assert np.array_equal(nxt.bits, want)


def test_zero_flow_fixpoint(rng):
    m = BinaryMask(rng.random((6, 6)) < 0.5) | BinaryMask(np.eye(6, dtype=bool))
    e = BinaryMask(rng.random((6, 6)) < 0.5)
    pseudo, nxt, _ = propagate_step(FlowField.zeros(6, 6), m, e)
    assert pseudo.equals(FlowField.zeros(6, 6)) and nxt == e


def test_identity_editing_with_constant_flow(rng):
    h, w = 12, 10
    flows = FlowSequence([FlowField.constant(h, w, *rng.normal(size=2)) for _ in range(4)])
    masks = MaskSequence([BinaryMask(rng.random((h, w)) < 0.5) | BinaryMask(np.eye(h, w, dtype=bool)) for _ in range(5)])
    res = propagate_sequence(flows, masks, masks[0], PropagationOptions(warp_source="original-flow"))
    assert all(p.equals(f) for p, f in zip(res.pseudo_flows, flows))


def test_edited_mask_leaving_frame_continues():
    h, w = 8, 8
    bits = np.zeros((h, w), bool)
    bits[3:5, 6:8] = True
    flows = FlowSequence([FlowField.constant(h, w, 3, 0)] * 3)
    masks = MaskSequence([BinaryMask.full(h, w)] * 4)
    res = propagate_sequence(flows, masks, BinaryMask(bits))
    assert not res.edited_masks[1].any() and not res.edited_masks[3].any()
    assert res.pseudo_flows[2].equals(flows[2])
