import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from shapeflow import BinaryMask, FlowField, Frame, MeanFlow
from shapeflow.errors import DimensionMismatch, EmptyMask, FieldTooSmall
from shapeflow.fields import FlowSequence, MaskSequence, check_shapes, ordered_sum
from shapeflow.ops import (
    composite_flow,
    mean_flow_over_mask,
    second_order_smoothness,
    smoothness_energy,
    smoothness_gradient,
)


def random_flow(rng, h, w, scale=3.0):
    return FlowField(rng.normal(0, scale, (h, w)), rng.normal(0, scale, (h, w)))


def random_mask(rng, h, w, p=0.4, nonempty=True):
    bits = rng.random((h, w)) < p
    if nonempty and not bits.any():
        bits[rng.integers(h), rng.integers(w)] = True
    return BinaryMask(bits)


class TestContainers:
    def test_flow_is_float32_copy_and_read_only(self):
        u = np.zeros((3, 4))
        f = FlowField(u, u)
        u[0, 0] = 5
        assert f.u.dtype == np.float32 and f.u[0, 0] == 0
        with pytest.raises(ValueError):
            f.u[0, 0] = 1

    def test_flow_rejects_non_finite_and_shape_mismatch(self):
        with pytest.raises(ValueError):
            FlowField(np.full((2, 2), np.nan), np.zeros((2, 2)))
        with pytest.raises(DimensionMismatch):
            FlowField(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_flow_array_roundtrip(self, rng):
        f = random_flow(rng, 5, 7)
        g = FlowField.from_array(f.as_array())
        assert f.equals(g) and f == g and f.shape == (5, 7)

    def test_mask_algebra(self, rng):
        a, b = random_mask(rng, 6, 6), random_mask(rng, 6, 6)
        assert np.array_equal((a & b).bits, a.bits & b.bits)
        assert np.array_equal((a | b).bits, a.bits | b.bits)
        assert np.array_equal((a ^ b).bits, a.bits ^ b.bits)
        assert np.array_equal((a - b).bits, a.bits & ~b.bits)
        assert (~a).count() == 36 - a.count()
        assert BinaryMask.empty(2, 3).count() == 0 and BinaryMask.full(2, 3).count() == 6

    def test_frame_requires_three_channels(self):
        Frame(np.zeros((2, 2, 3), np.uint8))
        with pytest.raises((DimensionMismatch, ValueError)):
            Frame(np.zeros((2, 2), np.uint8))

    def test_mean_flow_rejects_empty_support(self):
        with pytest.raises(EmptyMask):
            MeanFlow(0.0, 0.0, 0)

    def test_check_shapes(self, rng):
        assert check_shapes(random_flow(rng, 3, 4), BinaryMask.empty(3, 4)) == (3, 4)
        with pytest.raises(DimensionMismatch):
            check_shapes(random_flow(rng, 3, 4), BinaryMask.empty(4, 3))

    def test_sequences(self, rng):
        seq = FlowSequence([random_flow(rng, 4, 4) for _ in range(3)])
        assert len(seq) == 3 and seq.shape == (4, 4) and seq.direction == "forward"
        with pytest.raises(DimensionMismatch):
            MaskSequence([BinaryMask.empty(4, 4), BinaryMask.empty(3, 4)])

    def test_ordered_sum_is_sequential(self):
        vals = np.array([1e16, 1.0, -1e16, 1.0])
        assert ordered_sum(vals) == ((1e16 + 1.0) - 1e16) + 1.0
        assert ordered_sum(np.array([])) == 0.0


class TestMeanAndComposite:
    def test_against_loop_oracle(self, rng):
        for _ in range(50):
            h, w = rng.integers(1, 12, 2)
            f, m = random_flow(rng, h, w), random_mask(rng, h, w)
            mean = mean_flow_over_mask(f, m)
            mu, mv, n = oracles.mean_over(f.u.tolist(), f.v.tolist(), m.bits.tolist())
            assert mean.support_count == n
            assert mean.u_mean == float(np.float32(mu)) and mean.v_mean == float(np.float32(mv))
            comp = composite_flow(f, m, mean)
            cu, cv = oracles.composite(f.u.tolist(), f.v.tolist(), m.bits.tolist(), mean.u_mean, mean.v_mean)
            assert np.array_equal(comp.u, np.float32(cu)) and np.array_equal(comp.v, np.float32(cv))

    def test_empty_mask_raises(self, rng):
        with pytest.raises(EmptyMask):
            mean_flow_over_mask(random_flow(rng, 4, 4), BinaryMask.empty(4, 4))

    def test_constant_region_mean_is_the_constant(self):
        f = FlowField.constant(5, 5, 1.25, -0.5)
        mean = mean_flow_over_mask(f, BinaryMask.full(5, 5))
        assert (mean.u_mean, mean.v_mean) == (1.25, -0.5)

    @given(st.integers(0, 2**31 - 1))
    def test_composite_is_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        f, m = random_flow(rng, 7, 9), random_mask(rng, 7, 9)
        mean = mean_flow_over_mask(f, m)
        once = composite_flow(f, m, mean)
        again = composite_flow(once, m, mean_flow_over_mask(once, m))
        assert once.equals(again)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            mean_flow_over_mask(random_flow(rng, 4, 4), BinaryMask.full(4, 5))


class TestSmoothness:
    def test_energy_against_loop_oracle(self, rng):
        for _ in range(20):
            h, w = rng.integers(3, 10, 2)
            f = random_flow(rng, h, w)
            energy, emap = second_order_smoothness(f)
            ref = oracles.smoothness(f.u.tolist(), f.v.tolist())
            assert energy == pytest.approx(ref, rel=1e-12)
            assert emap.shape == (h, w) and (emap >= 0).all()

    @given(st.integers(0, 2**31 - 1))
    def test_affine_fields_have_zero_energy(self, seed):
        rng = np.random.default_rng(seed)
        # dyadic coefficients keep every value exact in float32
        a, b, c, d, e, g = rng.integers(-64, 65, 6) / 16.0
        ys, xs = np.mgrid[0:12, 0:15]
        f = FlowField(a + b * xs + c * ys, d + e * xs + g * ys)
        energy, emap = second_order_smoothness(f)
        assert energy == 0.0 and not emap.any()

    def test_energy_positive_for_curved_field(self):
        ys, xs = np.mgrid[0:6, 0:6]
        assert second_order_smoothness(FlowField(xs * xs, np.zeros((6, 6))))[0] > 0

    def test_gradient_matches_central_differences(self, rng):
        u, v = rng.normal(size=(2, 7, 6))
        gu, gv = smoothness_gradient(u, v)
        eps = 1e-4
        for comp, grad in ((u, gu), (v, gv)):
            for y, x in [(0, 0), (3, 2), (6, 5), (2, 4)]:
                plus = comp.copy()
                plus[y, x] += eps
                minus = comp.copy()
                minus[y, x] -= eps
                args_p = (plus, v) if comp is u else (u, plus)
                args_m = (minus, v) if comp is u else (u, minus)
                fd = (smoothness_energy(*args_p) - smoothness_energy(*args_m)) / (2 * eps)
                assert fd == pytest.approx(grad[y, x], rel=1e-6, abs=1e-8)

    @pytest.mark.parametrize("shape", [(2, 5), (5, 2), (1, 1)])
    def test_too_small(self, shape):
        with pytest.raises(FieldTooSmall):
            second_order_smoothness(FlowField.zeros(*shape))
