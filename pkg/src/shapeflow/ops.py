"""Region means, mean-flow compositing and second-order smoothness."""

from __future__ import annotations

import numpy as np

from .errors import EmptyMask, FieldTooSmall
from .fields import BinaryMask, FlowField, MeanFlow, check_shapes, ordered_sum


def mean_flow_over_mask(flow: FlowField, mask: BinaryMask) -> MeanFlow:
    """Component-wise mean of ``flow`` over the set pixels of ``mask``."""
    check_shapes(flow, mask)
    n = mask.count()
    if n == 0:
        raise EmptyMask("cannot average flow over an empty mask")
    return MeanFlow(
        ordered_sum(flow.u[mask.bits]) / n,
        ordered_sum(flow.v[mask.bits]) / n,
        n,
    )


def composite_flow(flow: FlowField, edited_mask: BinaryMask, mean: MeanFlow) -> FlowField:
    """Mean flow inside ``edited_mask``, the untouched input flow elsewhere."""
    check_shapes(flow, edited_mask)
    m = edited_mask.bits
    return FlowField(
        np.where(m, np.float32(mean.u_mean), flow.u),
        np.where(m, np.float32(mean.v_mean), flow.v),
    )


def _check_size(shape):
    h, w = shape
    if h < 3 or w < 3:
        raise FieldTooSmall(f"second differences need at least 3x3 pixels, got {w}x{h}")


def second_differences(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered second differences along x (shape H x W-2) and y (H-2 x W)."""
    a = np.asarray(a, np.float64)
    dxx = a[:, :-2] - 2.0 * a[:, 1:-1] + a[:, 2:]
    dyy = a[:-2, :] - 2.0 * a[1:-1, :] + a[2:, :]
    return dxx, dyy


def smoothness_energy_map(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-pixel energy, each squared second difference booked at its stencil centre."""
    _check_size(np.shape(u))
    emap = np.zeros(np.shape(u), np.float64)
    for comp in (u, v):
        dxx, dyy = second_differences(comp)
        emap[:, 1:-1] += dxx * dxx
        emap[1:-1, :] += dyy * dyy
    return emap


def smoothness_energy(u: np.ndarray, v: np.ndarray) -> float:
    return ordered_sum(smoothness_energy_map(u, v))


def smoothness_gradient(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`smoothness_energy` w.r.t. every u and v value."""
    _check_size(np.shape(u))
    grads = []
    for comp in (u, v):
        dxx, dyy = second_differences(comp)
        g = np.zeros(np.shape(comp), np.float64)
        g[:, :-2] += 2.0 * dxx
        g[:, 1:-1] -= 4.0 * dxx
        g[:, 2:] += 2.0 * dxx
        g[:-2, :] += 2.0 * dyy
        g[1:-1, :] -= 4.0 * dyy
        g[2:, :] += 2.0 * dyy
        grads.append(g)
    return grads[0], grads[1]


def second_order_smoothness(flow: FlowField) -> tuple[float, np.ndarray]:
    """Total second-order smoothness energy and its per-pixel map.

    Zero exactly when both components are affine in ``(x, y)``.
    """
    emap = smoothness_energy_map(flow.u, flow.v)
    return ordered_sum(emap), emap
