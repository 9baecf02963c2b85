"""Rigid-motion test scenes with exact ground-truth flow.

Every object moves rigidly: its centre advances by ``velocity`` pixels and it
turns by ``angular_velocity`` radians per frame about that centre. Frames
carry a low-amplitude speckle texture fixed to each surface, so warping the
next frame back with the true flow reproduces the current one away from
occlusions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidParams, InvalidSpec
from .fields import BinaryMask, FlowField, FlowSequence, Frame, MaskSequence

SceneKind = Literal["translating-disk", "rotating-square", "two-object"]


@dataclass(frozen=True)
class ObjectSpec:
    shape: Literal["disk", "square"] = "disk"
    center: tuple[float, float] = (16.0, 16.0)
    size: float = 6.0  # radius for disks, half-width for squares
    velocity: tuple[float, float] = (0.0, 0.0)
    angular_velocity: float = 0.0
    color: tuple[int, int, int] = (200, 120, 60)


@dataclass(frozen=True)
class SceneSpec:
    kind: SceneKind = "translating-disk"
    width: int = 64
    height: int = 64
    frame_count: int = 8
    objects: tuple[ObjectSpec, ...] = field(default_factory=lambda: (ObjectSpec(),))
    background: tuple[int, int, int] = (40, 60, 90)
    speckle: int = 8
    seed: int = 0

    def validate(self) -> None:
        if self.frame_count < 2:
            raise InvalidSpec(f"frame_count must be >= 2, got {self.frame_count}")
        if self.width < 1 or self.height < 1:
            raise InvalidSpec(f"frame size must be positive, got {self.width}x{self.height}")
        if not 0 <= self.speckle <= 255:
            raise InvalidSpec(f"speckle amplitude must lie in [0, 255], got {self.speckle}")
        expected = {"translating-disk": 1, "rotating-square": 1, "two-object": 2}
        if self.kind not in expected:
            raise InvalidSpec(f"unknown scene kind {self.kind!r}")
        if len(self.objects) != expected[self.kind]:
            raise InvalidSpec(f"{self.kind} needs {expected[self.kind]} object(s), got {len(self.objects)}")
        if self.kind == "translating-disk" and (self.objects[0].shape != "disk" or self.objects[0].angular_velocity != 0):
            raise InvalidSpec("translating-disk needs a single non-rotating disk")
        if self.kind == "rotating-square" and self.objects[0].shape != "square":
            raise InvalidSpec("rotating-square needs a single square object")
        for obj in self.objects:
            if obj.shape not in ("disk", "square"):
                raise InvalidSpec(f"unknown object shape {obj.shape!r}")
            if obj.size <= 0:
                raise InvalidSpec(f"object size must be positive, got {obj.size}")
            cx, cy = obj.center
            if not (0 <= cx <= self.width - 1 and 0 <= cy <= self.height - 1):
                raise InvalidSpec(f"object centre {obj.center} lies outside the first frame")
            if any(not 0 <= c <= 255 for c in obj.color):
                raise InvalidSpec(f"object colour {obj.color} outside [0, 255]")
        if any(not 0 <= c <= 255 for c in self.background):
            raise InvalidSpec(f"background colour {self.background} outside [0, 255]")


@dataclass(frozen=True)
class SyntheticScene:
    spec: SceneSpec
    frames: tuple[Frame, ...]
    flows: FlowSequence
    masks: MaskSequence
    backward_flows: FlowSequence
    occlusions: MaskSequence  # frame-i pixels whose forward target is not visible in frame i+1
    surface_ids: tuple[np.ndarray, ...]  # 0 background, k+1 where object k is on top

    def center(self, t: int, k: int = 0) -> tuple[float, float]:
        return _center(self.spec.objects[k], t)

    def object_mask(self, t: int, k: int) -> BinaryMask:
        return BinaryMask(self.surface_ids[t] == k + 1)

    def scaled_masks(self, factor: float) -> MaskSequence:
        """Every object's visible mask scaled about its own centre, per frame."""
        out = []
        for t in range(self.spec.frame_count):
            bits = np.zeros((self.spec.height, self.spec.width), bool)
            for k in range(len(self.spec.objects)):
                bits |= scale_mask(self.object_mask(t, k), factor, self.center(t, k)).bits
            out.append(BinaryMask(bits))
        return MaskSequence(out)


def translating_disk(
    width=64, height=64, frame_count=8, center=(16.0, 16.0), radius=6.0, velocity=(2.0, 0.0), seed=0, speckle=8
) -> SceneSpec:
    return SceneSpec(
        "translating-disk", width, height, frame_count,
        (ObjectSpec("disk", tuple(center), radius, tuple(velocity)),), seed=seed, speckle=speckle,
    )


def rotating_square(
    width=64, height=64, frame_count=12, center=(32.0, 32.0), half_width=12.0,
    angular_velocity=math.radians(5.0), velocity=(0.0, 0.0), seed=0, speckle=8,
) -> SceneSpec:
    obj = ObjectSpec("square", tuple(center), half_width, tuple(velocity), angular_velocity)
    return SceneSpec("rotating-square", width, height, frame_count, (obj,), seed=seed, speckle=speckle)


def two_objects(width=96, height=64, frame_count=8, seed=0, speckle=8) -> SceneSpec:
    s = min(width, height)
    disk = ObjectSpec("disk", (0.2 * width, 0.3 * height), 0.11 * s, (2.0, 1.0), 0.0, (210, 90, 70))
    square = ObjectSpec(
        "square", (0.73 * width, 0.66 * height), 0.125 * s, (-2.0, 0.0), math.radians(4.0), (80, 200, 110)
    )
    return SceneSpec("two-object", width, height, frame_count, (disk, square), seed=seed, speckle=speckle)


def _center(obj: ObjectSpec, t: float) -> tuple[float, float]:
    return obj.center[0] + t * obj.velocity[0], obj.center[1] + t * obj.velocity[1]


def _rotate(x, y, theta):
    c, s = math.cos(theta), math.sin(theta)
    return c * x - s * y, s * x + c * y


def _local(obj: ObjectSpec, t: int, xs, ys):
    cx, cy = _center(obj, t)
    return _rotate(xs - cx, ys - cy, -t * obj.angular_velocity)


def _inside(obj: ObjectSpec, qx, qy):
    if obj.shape == "disk":
        return qx * qx + qy * qy <= obj.size * obj.size
    return np.maximum(np.abs(qx), np.abs(qy)) <= obj.size


def _surface_ids(spec: SceneSpec, t: int, xs, ys) -> np.ndarray:
    """0 for background, k+1 where object k is the topmost surface."""
    ids = np.zeros(np.shape(xs), np.int32)
    for k, obj in enumerate(spec.objects):
        qx, qy = _local(obj, t, xs, ys)
        ids[_inside(obj, qx, qy)] = k + 1
    return ids


def _rigid_displacement(obj: ObjectSpec, t: int, xs, ys, step: int):
    """Displacement of points of ``obj`` at time ``t`` to time ``t + step``."""
    cx, cy = _center(obj, t)
    nx, ny = _center(obj, t + step)
    rx, ry = _rotate(xs - cx, ys - cy, step * obj.angular_velocity)
    return nx + rx - xs, ny + ry - ys


def generate(spec: SceneSpec) -> SyntheticScene:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h, w, n = spec.height, spec.width, spec.frame_count
    a = spec.speckle
    bg_tex = rng.integers(-a, a + 1, size=(h, w))
    tex = []
    for obj in spec.objects:
        half = int(math.ceil(obj.size * math.sqrt(2))) + 1
        tex.append((half, rng.integers(-a, a + 1, size=(2 * half + 1, 2 * half + 1))))

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    ids = [_surface_ids(spec, t, xs, ys) for t in range(n)]
    for a in ids:
        a.setflags(write=False)

    frames = []
    for t in range(n):
        img = np.empty((h, w, 3), np.int64)
        img[:] = np.asarray(spec.background)
        img += bg_tex[..., None]
        for k, obj in enumerate(spec.objects):
            sel = ids[t] == k + 1
            if not sel.any():
                continue
            qx, qy = _local(obj, t, xs[sel], ys[sel])
            half, pattern = tex[k]
            ix = np.clip(np.floor(qx + 0.5).astype(int) + half, 0, 2 * half)
            iy = np.clip(np.floor(qy + 0.5).astype(int) + half, 0, 2 * half)
            img[sel] = np.asarray(obj.color) + pattern[iy, ix][:, None]
        frames.append(Frame(np.clip(img, 0, 255).astype(np.uint8)))

    fwd, bwd, occ = [], [], []
    for t in range(n - 1):
        u = np.zeros((h, w))
        v = np.zeros((h, w))
        bu = np.zeros((h, w))
        bv = np.zeros((h, w))
        for k, obj in enumerate(spec.objects):
            sel = ids[t] == k + 1
            u[sel], v[sel] = _rigid_displacement(obj, t, xs[sel], ys[sel], 1)
            sel = ids[t + 1] == k + 1
            bu[sel], bv[sel] = _rigid_displacement(obj, t + 1, xs[sel], ys[sel], -1)
        fwd.append(FlowField(u, v))
        bwd.append(FlowField(bu, bv))

        tx, ty = xs + u, ys + v
        outside = (tx < 0) | (tx > w - 1) | (ty < 0) | (ty > h - 1)
        occ.append(BinaryMask(outside | (_surface_ids(spec, t + 1, tx, ty) != ids[t])))

    masks = MaskSequence([BinaryMask(i > 0) for i in ids])
    return SyntheticScene(
        spec, tuple(frames), FlowSequence(fwd, "forward"), masks,
        FlowSequence(bwd, "backward"), MaskSequence(occ), tuple(ids),
    )


def scale_mask(mask: BinaryMask, factor: float, about: tuple[float, float]) -> BinaryMask:
    """Nearest-neighbour rescaling of ``mask`` about the point ``about = (x, y)``."""
    if not factor > 0:
        raise InvalidParams(f"scale factor must be positive, got {factor}")
    h, w = mask.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = about
    sx = np.floor(cx + (xs - cx) / factor + 0.5).astype(np.intp)
    sy = np.floor(cy + (ys - cy) / factor + 0.5).astype(np.intp)
    inside = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros((h, w), bool)
    out[inside] = mask.bits[sy[inside], sx[inside]]
    return BinaryMask(out)
