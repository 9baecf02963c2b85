"""Dense field containers: flows, masks, frames and region means.

Arrays are stored row-major with shape ``(height, width)``; index ``[y, x]``
is the pixel at column ``x`` and row ``y``. ``u`` is the horizontal
displacement (+x to the right), ``v`` the vertical one (+y downward).
All containers copy their inputs and mark the copies read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyMask, LengthMismatch

Direction = Literal["forward", "backward"]


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


def ordered_sum(values: np.ndarray) -> float:
    """Sequential row-major sum accumulated in float64."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        return 0.0
    return float(np.add.accumulate(flat)[-1])


def check_shapes(*items) -> tuple[int, int]:
    """Return the common ``(height, width)`` or raise DimensionMismatch."""
    shapes = {item.shape for item in items}
    if len(shapes) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(shapes)}")
    return shapes.pop()


@dataclass(frozen=True, eq=False)
class FlowField:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u)
        v = np.asarray(self.v)
        if u.ndim != 2 or u.shape != v.shape:
            raise DimensionMismatch(f"u {u.shape} and v {v.shape} must be equal 2-D shapes")
        if u.shape[0] < 1 or u.shape[1] < 1:
            raise DimensionMismatch("flow field needs at least one pixel")
        u = _frozen(u, np.float32)
        v = _frozen(v, np.float32)
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise ValueError("flow field contains NaN or Inf")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        z = np.zeros((height, width), np.float32)
        return cls(z, z)

    @classmethod
    def constant(cls, height: int, width: int, u: float, v: float) -> "FlowField":
        return cls(np.full((height, width), u, np.float32), np.full((height, width), v, np.float32))

    @classmethod
    def from_array(cls, uv: np.ndarray) -> "FlowField":
        """Build from an ``(H, W, 2)`` array."""
        uv = np.asarray(uv)
        if uv.ndim != 3 or uv.shape[2] != 2:
            raise DimensionMismatch(f"expected (H, W, 2) array, got {uv.shape}")
        return cls(uv[..., 0], uv[..., 1])

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.v], axis=-1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    def equals(self, other: "FlowField") -> bool:
        """Bit-level equality of both components."""
        return (
            self.shape == other.shape
            and self.u.tobytes() == other.u.tobytes()
            and self.v.tobytes() == other.v.tobytes()
        )

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return self.equals(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise DimensionMismatch(f"mask must be a non-empty 2-D array, got {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits, bool))

    @classmethod
    def empty(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.zeros((height, width), bool))

    @classmethod
    def full(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.ones((height, width), bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def any(self) -> bool:
        return bool(self.bits.any())

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.bits)

    def _binary(self, other, op):
        check_shapes(self, other)
        return BinaryMask(op(self.bits, other.bits))

    def __and__(self, other):
        return self._binary(other, np.logical_and)

    def __or__(self, other):
        return self._binary(other, np.logical_or)

    def __xor__(self, other):
        return self._binary(other, np.logical_xor)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a & ~b)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Frame:
    """8-bit RGB image, ``pixels`` has shape ``(H, W, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionMismatch(f"frame must be (H, W, 3), got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255) or np.any(px != np.round(px)):
                raise ValueError("frame values must be integers in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(px, np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True)
class MeanFlow:
    """Average displacement over a region.

    Means are rounded to float32 so that a composite filled with them
    averages back to exactly the same values.
    """

    u_mean: float
    v_mean: float
    support_count: int

    def __post_init__(self):
        if self.support_count < 1:
            raise EmptyMask("mean flow needs a support of at least one pixel")
        object.__setattr__(self, "u_mean", float(np.float32(self.u_mean)))
        object.__setattr__(self, "v_mean", float(np.float32(self.v_mean)))


class _Sequence:
    _items: tuple

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def __iter__(self) -> Iterator:
        return iter(self._items)

    @property
    def shape(self) -> tuple[int, int]:
        return self._items[0].shape


class FlowSequence(_Sequence):
    def __init__(self, fields: Sequence[FlowField], direction: Direction = "forward"):
        fields = tuple(fields)
        if not fields:
            raise LengthMismatch("flow sequence needs at least one field")
        if direction not in ("forward", "backward"):
            raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
        check_shapes(*fields)
        self._items = fields
        self.direction = direction

    @property
    def fields(self) -> tuple[FlowField, ...]:
        return self._items

    def __repr__(self):
        return f"FlowSequence(len={len(self)}, shape={self.shape}, direction={self.direction!r})"


class MaskSequence(_Sequence):
    def __init__(self, masks: Sequence[BinaryMask]):
        masks = tuple(masks)
        if not masks:
            raise LengthMismatch("mask sequence needs at least one mask")
        check_shapes(*masks)
        self._items = masks

    @property
    def masks(self) -> tuple[BinaryMask, ...]:
        return self._items

    def __repr__(self):
        return f"MaskSequence(len={len(self)}, shape={self.shape})"
