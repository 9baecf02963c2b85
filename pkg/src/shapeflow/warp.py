"""Sampling and warping kernels.

Backward warps read the source at ``(x + u, y + v)`` with bilinear
interpolation and clamp-to-edge borders; a validity mask reports which
samples fell inside ``[0, W-1] x [0, H-1]``. Forward splatting moves each
set mask pixel to its rounded destination.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, InvalidParams
from .fields import BinaryMask, FlowField, Frame, check_shapes

FillPolicy = Literal["none", "closing"]

_STRUCT = np.ones((3, 3), bool)


def _bilinear(channel: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    h, w = channel.shape
    xs = np.asarray(xs, np.float64)
    ys = np.asarray(ys, np.float64)
    valid = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    xc = np.clip(xs, 0, w - 1)
    yc = np.clip(ys, 0, h - 1)
    x0 = np.minimum(np.floor(xc).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(yc).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    c = np.asarray(channel, np.float64)
    top = (1.0 - fx) * c[y0, x0] + fx * c[y0, x1]
    bottom = (1.0 - fx) * c[y1, x0] + fx * c[y1, x1]
    return (1.0 - fy) * top + fy * bottom, valid


def bilinear_sample(channel, x: float, y: float) -> tuple[float, bool]:
    """Sample a 2-D array (or a flow component) at real coordinates.

    Returns the interpolated value and whether all four neighbours were
    inside the frame. Out-of-frame coordinates are clamped to the border.
    """
    channel = np.asarray(channel)
    if channel.ndim != 2:
        raise DimensionMismatch(f"expected a single 2-D channel, got shape {channel.shape}")
    value, valid = _bilinear(channel, np.array(x), np.array(y))
    return float(value), bool(valid)


def _displaced_coords(flow: FlowField):
    h, w = flow.shape
    ys, xs = np.mgrid[0:h, 0:w]
    return xs + flow.u.astype(np.float64), ys + flow.v.astype(np.float64)


def backward_warp(source, flow: FlowField):
    """Resample ``source`` at ``p + flow(p)`` for every pixel ``p``.

    ``source`` may be a 2-D array, an ``(H, W, C)`` array, a FlowField or a
    Frame. Floating arrays keep their dtype; Frames and integer arrays come
    back as float64 arrays. Returns ``(warped, validity_mask)``.
    """
    if isinstance(source, FlowField):
        check_shapes(source, flow)
        xs, ys = _displaced_coords(flow)
        u, valid = _bilinear(source.u, xs, ys)
        v, _ = _bilinear(source.v, xs, ys)
        return FlowField(u, v), BinaryMask(valid)

    data = source.pixels if isinstance(source, Frame) else np.asarray(source)
    if data.ndim not in (2, 3):
        raise DimensionMismatch(f"source must be 2-D or 3-D, got shape {data.shape}")
    if data.shape[:2] != flow.shape:
        raise DimensionMismatch(f"source {data.shape[:2]} vs flow {flow.shape}")
    out_dtype = data.dtype if np.issubdtype(data.dtype, np.floating) else np.float64
    xs, ys = _displaced_coords(flow)
    if data.ndim == 2:
        out, valid = _bilinear(data, xs, ys)
        return out.astype(out_dtype), BinaryMask(valid)
    channels = []
    for c in range(data.shape[2]):
        sampled, valid = _bilinear(data[..., c], xs, ys)
        channels.append(sampled)
    return np.stack(channels, axis=-1).astype(out_dtype), BinaryMask(valid)


def _round_half_up(a: np.ndarray) -> np.ndarray:
    return np.floor(a + 0.5).astype(np.intp)


def forward_splat_mask(mask: BinaryMask, flow: FlowField, fill: FillPolicy = "closing") -> BinaryMask:
    """Move every set pixel to ``round(p + flow(p))``.

    Destinations outside the frame are dropped. With ``fill="closing"`` the
    3x3 morphological closing proposes hole pixels, and a proposal is only
    accepted if tracing it back with the flow of an adjacent landed splat
    hits a set source pixel. Gaps that already existed in the source (and
    any gap under a pure integer translation) are therefore left alone.
    """
    check_shapes(mask, flow)
    if fill not in ("none", "closing"):
        raise InvalidParams(f"unknown fill policy {fill!r}")
    h, w = mask.shape
    sy, sx = np.nonzero(mask.bits)
    du = flow.u[sy, sx].astype(np.float64)
    dv = flow.v[sy, sx].astype(np.float64)
    tx = _round_half_up(sx + du)
    ty = _round_half_up(sy + dv)
    inside = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
    out = np.zeros((h, w), bool)
    out[ty[inside], tx[inside]] = True
    if fill == "none" or not out.any():
        return BinaryMask(out)

    # displacement that arrived at each target; first source in row-major order wins
    lin = ty[inside] * w + tx[inside]
    targets, first = np.unique(lin, return_index=True)
    landed_u = np.zeros(h * w)
    landed_v = np.zeros(h * w)
    landed_u[targets] = du[inside][first]
    landed_v[targets] = dv[inside][first]
    landed_u = landed_u.reshape(h, w)
    landed_v = landed_v.reshape(h, w)

    closed = ndimage.binary_erosion(
        ndimage.binary_dilation(out, _STRUCT), _STRUCT, border_value=1
    )
    cy, cx = np.nonzero(closed & ~out)
    accept = np.zeros(cy.shape, bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            qy, qx = cy + dy, cx + dx
            ok = (qy >= 0) & (qy < h) & (qx >= 0) & (qx < w)
            ok[ok] = out[qy[ok], qx[ok]]
            if not ok.any():
                continue
            bx = _round_half_up(cx[ok] - landed_u[qy[ok], qx[ok]])
            by = _round_half_up(cy[ok] - landed_v[qy[ok], qx[ok]])
            hit = (bx >= 0) & (bx < w) & (by >= 0) & (by < h)
            hit[hit] = mask.bits[by[hit], bx[hit]]
            idx = np.flatnonzero(ok)
            accept[idx[hit]] = True
    out[cy[accept], cx[accept]] = True
    return BinaryMask(out)


def backward_sample_mask(mask: BinaryMask, flow: FlowField, threshold: float = 0.5) -> BinaryMask:
    """Literal backward form: ``out(p) = mask(p + flow(p)) >= threshold``."""
    check_shapes(mask, flow)
    if not 0.0 < threshold < 1.0:
        raise InvalidParams(f"threshold must lie in (0, 1), got {threshold}")
    xs, ys = _displaced_coords(flow)
    sampled, _ = _bilinear(mask.bits.astype(np.float64), xs, ys)
    return BinaryMask(sampled >= threshold)
