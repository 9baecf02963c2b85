"""File formats and the on-disk sequence layout.

* ``.flo`` (Middlebury): float32 magic 202021.25, int32 width and height,
  then interleaved (u, v) float32 rows, all little-endian.
* masks: binary PGM (P5, maxval 255); values >= 128 read as set.
* frames: binary PPM (P6, maxval 255).
* reports: JSON with ``schema_version``, ``per_frame`` and ``aggregates``;
  floats rounded to six significant digits, keys in a fixed order.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    FormatError,
    IoFailure,
    LayoutError,
    NonFiniteValue,
    TruncatedFile,
    UnsupportedMaxval,
)
from .fields import BinaryMask, FlowField, FlowSequence, Frame, MaskSequence, ordered_sum

FLO_MAGIC = 202021.25
SCHEMA_VERSION = 1


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, data: bytes) -> None:
    try:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------------- .flo

def encode_flo(field: FlowField) -> bytes:
    header = np.array([FLO_MAGIC], "<f4").tobytes() + np.array([field.width, field.height], "<i4").tobytes()
    payload = np.stack([field.u, field.v], axis=-1).astype("<f4")
    return header + payload.tobytes()


def decode_flo(data: bytes) -> FlowField:
    if len(data) < 12:
        raise TruncatedFile(f".flo header needs 12 bytes, got {len(data)}")
    magic = np.frombuffer(data, "<f4", 1, 0)[0]
    if magic != np.float32(FLO_MAGIC):
        raise BadMagic(f"bad .flo magic {float(magic)!r}, expected {FLO_MAGIC}")
    width, height = (int(x) for x in np.frombuffer(data, "<i4", 2, 4))
    if width < 1 or height < 1:
        raise BadHeader(f"bad .flo dimensions {width}x{height}")
    expected = 12 + width * height * 8
    if len(data) < expected:
        raise TruncatedFile(f".flo payload needs {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FormatError(f".flo has {len(data) - expected} trailing bytes")
    uv = np.frombuffer(data, "<f4", width * height * 2, 12).reshape(height, width, 2)
    if not np.isfinite(uv).all():
        raise NonFiniteValue(".flo contains NaN or Inf")
    return FlowField(uv[..., 0], uv[..., 1])


def write_flo(field: FlowField, path) -> None:
    _write_bytes(path, encode_flo(field))


def read_flo(path) -> FlowField:
    return decode_flo(_read_bytes(path))


# --------------------------------------------------------------- PGM / PPM

_WS = b" \t\n\r\v\f"


def _parse_netpbm(data: bytes, magic: bytes, channels: int) -> np.ndarray:
    if data[:2] != magic:
        raise BadHeader(f"expected binary {magic.decode()} header, got {data[:2]!r}")
    pos = 2
    tokens = []
    while len(tokens) < 3:
        if pos >= len(data):
            raise TruncatedFile("header ends early")
        c = data[pos]
        if c == ord("#"):
            end = data.find(b"\n", pos)
            if end < 0:
                raise TruncatedFile("unterminated header comment")
            pos = end + 1
        elif c in _WS:
            pos += 1
        else:
            start = pos
            while pos < len(data) and data[pos] not in _WS and data[pos:pos + 1] != b"#":
                pos += 1
            tok = data[start:pos]
            if not tok.isdigit():
                raise BadHeader(f"non-numeric header field {tok!r}")
            tokens.append(int(tok))
    if pos >= len(data) or data[pos] not in _WS:
        raise BadHeader("header must end with a single whitespace byte")
    pos += 1
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise BadHeader(f"bad image dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxval(f"only maxval 255 is supported, got {maxval}")
    expected = width * height * channels
    payload = data[pos:]
    if len(payload) < expected:
        raise TruncatedFile(f"image payload needs {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise FormatError(f"image has {len(payload) - expected} trailing bytes")
    px = np.frombuffer(payload, np.uint8, expected)
    return px.reshape(height, width, channels) if channels > 1 else px.reshape(height, width)


def encode_mask(mask: BinaryMask) -> bytes:
    header = b"P5\n%d %d\n255\n" % (mask.width, mask.height)
    return header + np.where(mask.bits, 255, 0).astype(np.uint8).tobytes()


def decode_mask(data: bytes) -> BinaryMask:
    return BinaryMask(_parse_netpbm(data, b"P5", 1) >= 128)


def encode_frame(frame: Frame) -> bytes:
    return b"P6\n%d %d\n255\n" % (frame.width, frame.height) + frame.pixels.tobytes()


def decode_frame(data: bytes) -> Frame:
    return Frame(_parse_netpbm(data, b"P6", 3))


def write_mask(mask: BinaryMask, path) -> None:
    _write_bytes(path, encode_mask(mask))


def read_mask(path) -> BinaryMask:
    return decode_mask(_read_bytes(path))


def write_frame(frame: Frame, path) -> None:
    _write_bytes(path, encode_frame(frame))


def read_frame(path) -> Frame:
    return decode_frame(_read_bytes(path))


# ----------------------------------------------------------------- reports

def _number(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"reports hold finite numbers only, got {x}")
    return float(f"{x:.6g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    return _number(obj)


def _aggregate(records: Sequence[dict]) -> dict:
    out = {"mean": {}, "max": {}}
    keys = []
    for rec in records:
        for k, v in rec.items():
            if k in ("frame_index", "frame") or k in keys:
                continue
            if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, (bool, np.bool_)):
                keys.append(k)
    for k in keys:
        vals = [float(r[k]) for r in records if r.get(k) is not None and not isinstance(r.get(k), bool)]
        out["mean"][k] = ordered_sum(np.array(vals)) / len(vals)
        out["max"][k] = max(vals)
    return out


def report_document(report, kind: Optional[str] = None, extra: Optional[dict] = None) -> dict:
    """Turn a report into the ordered dictionary that gets serialised.

    ``report`` is a MetricsReport, a ConvergenceReport, a sequence of
    ConvergenceReports, or a sequence of per-frame dictionaries.
    """
    from .calibration import ConvergenceReport
    from .metrics import MetricsReport

    if isinstance(report, MetricsReport):
        kind = kind or "metrics"
        records = [{"frame_index": r.frame_index, **r.values()} for r in report.per_frame]
        aggregates = report.aggregates()
        extra = {**report.extra, **(extra or {})}
    else:
        if isinstance(report, ConvergenceReport):
            report = [report]
        report = list(report)
        if report and all(isinstance(r, ConvergenceReport) for r in report):
            kind = kind or "convergence"
            records = [
                {
                    "frame_index": i,
                    "iterations": r.iterations,
                    "final_update": r.final_update,
                    "residual_energy": r.residual_energy,
                    "converged": r.converged,
                    "coarse_iterations": r.coarse_iterations,
                }
                for i, r in enumerate(report)
            ]
        else:
            kind = kind or "records"
            records = [dict(r) for r in report]
        aggregates = _aggregate(records)
    if not records:
        raise ValueError("a report covers at least one frame")
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "per_frame": records, "aggregates": aggregates}
    doc.update(extra or {})
    return _clean(doc)


def dumps_report(report, kind: Optional[str] = None, extra: Optional[dict] = None) -> str:
    return json.dumps(report_document(report, kind, extra), indent=2) + "\n"


def write_report(report, path, kind: Optional[str] = None, extra: Optional[dict] = None) -> None:
    _write_bytes(path, dumps_report(report, kind, extra).encode("utf-8"))


def read_report(path) -> dict:
    return json.loads(_read_bytes(path).decode("utf-8"))


# ------------------------------------------------------------------ layout

@dataclass(frozen=True)
class SequenceLayout:
    """Zero-based, contiguously numbered files under ``root``.

    ``prefix`` is prepended to every name, e.g. ``"pseudo_"`` for the
    outputs of propagation.
    """

    root: Path
    prefix: str = ""

    FRAME = "frame_{:05d}.ppm"
    FLOW = {"forward": "flow_fwd_{:05d}.flo", "backward": "flow_bwd_{:05d}.flo"}
    MASK = "mask_{:05d}.pgm"
    EDITED = "edited_mask_00000.pgm"

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    def frame_path(self, i: int) -> Path:
        return self.root / (self.prefix + self.FRAME.format(i))

    def flow_path(self, i: int, direction: str = "forward") -> Path:
        return self.root / (self.prefix + self.FLOW[direction].format(i))

    def mask_path(self, i: int) -> Path:
        return self.root / (self.prefix + self.MASK.format(i))

    def edited_mask_path(self) -> Path:
        return self.root / (self.prefix + self.EDITED)

    def _count(self, template: str) -> int:
        stem, ext = template.split("{:05d}")
        pattern = re.compile(re.escape(self.prefix + stem) + r"(\d{5})" + re.escape(ext) + "$")
        if not self.root.is_dir():
            return 0
        indices = sorted(int(m.group(1)) for p in self.root.iterdir() if (m := pattern.match(p.name)))
        if indices != list(range(len(indices))):
            raise LayoutError(f"{self.root}: files {self.prefix + template} are not numbered 0..n-1 contiguously")
        return len(indices)

    def frame_count(self) -> int:
        return self._count(self.FRAME)

    def flow_count(self, direction: str = "forward") -> int:
        return self._count(self.FLOW[direction])

    def mask_count(self) -> int:
        return self._count(self.MASK)

    def read_frames(self) -> list[Frame]:
        return [read_frame(self.frame_path(i)) for i in range(self.frame_count())]

    def read_flows(self, direction: str = "forward") -> FlowSequence:
        n = self.flow_count(direction)
        if n == 0:
            raise LayoutError(f"{self.root}: no {direction} flows")
        return FlowSequence([read_flo(self.flow_path(i, direction)) for i in range(n)], direction)

    def read_masks(self) -> MaskSequence:
        n = self.mask_count()
        if n == 0:
            raise LayoutError(f"{self.root}: no masks")
        return MaskSequence([read_mask(self.mask_path(i)) for i in range(n)])

    def read_edited_mask(self) -> BinaryMask:
        return read_mask(self.edited_mask_path())

    def write_frames(self, frames: Iterable[Frame]) -> None:
        for i, f in enumerate(frames):
            write_frame(f, self.frame_path(i))

    def write_flows(self, flows: Union[FlowSequence, Iterable[FlowField]], direction: Optional[str] = None) -> None:
        direction = direction or getattr(flows, "direction", "forward")
        for i, f in enumerate(flows):
            write_flo(f, self.flow_path(i, direction))

    def write_masks(self, masks: Iterable[BinaryMask]) -> None:
        for i, m in enumerate(masks):
            write_mask(m, self.mask_path(i))

    def write_scene(self, scene) -> None:
        """Write frames, forward/backward flows and masks of a SyntheticScene."""
        self.write_frames(scene.frames)
        self.write_flows(scene.flows, "forward")
        self.write_flows(scene.backward_flows, "backward")
        self.write_masks(scene.masks)
