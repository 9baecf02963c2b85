"""Command-line driver: ``shapeflow {synth,propagate,calibrate,metrics,pipeline}``.

Exit codes: 0 success, 2 configuration or usage, 3 file I/O, 4 pipeline or
numerical failure. Reports never contain paths or timings, so repeated runs
with one config produce byte-identical output trees.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from .calibration import (
    corrupt_flow,
    forward_backward_consistency,
    generate_corruption_masks,
    inference_keep_mask,
    sequence_calibrate,
    should_calibrate,
)
from .config import RunConfig, SynthConfig, load_config
from .errors import (
    ConfigError,
    FormatError,
    InvalidSpec,
    IoFailure,
    LayoutError,
    NonConvergence,
    ShapeflowError,
)
from .fields import BinaryMask, FlowSequence, MaskSequence
from .io import SequenceLayout, read_report, write_mask, write_report
from .metrics import MetricsReport, endpoint_error, evaluate_sequence
from .propagation import propagate_sequence
from .synth import generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PIPELINE = 4

PSEUDO = "pseudo_"
CALIBRATED = "calibrated_"
ORACLE = "oracle_"
KEEP = "keep_"

log = logging.getLogger("shapeflow")


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, LayoutError, InvalidSpec)):
        return EXIT_USAGE
    if isinstance(exc, (IoFailure, FormatError, OSError)):
        return EXIT_IO
    return EXIT_PIPELINE


# ------------------------------------------------------------------ stages

def write_synth(cfg: SynthConfig, seed: int, root: Path) -> None:
    scene = generate(cfg.scene_spec(seed))
    layout = SequenceLayout(root)
    layout.write_scene(scene)
    if cfg.edit_scale is not None:
        oracle = scene.scaled_masks(cfg.edit_scale)
        write_mask(oracle[0], layout.edited_mask_path())
        SequenceLayout(root, ORACLE).write_masks(oracle)
    log.info("synth: %s, %d frames written", cfg.kind, cfg.frame_count)


def _edited_first(layout: SequenceLayout) -> BinaryMask:
    path = layout.edited_mask_path()
    if not path.is_file():
        raise ConfigError(f"edited first-frame mask not found: {path}")
    return layout.read_edited_mask()


def stage_propagate(cfg: RunConfig) -> dict:
    inp = SequenceLayout(cfg.input_path)
    flows = inp.read_flows("forward")
    masks = inp.read_masks()
    edited = _edited_first(inp)
    result = propagate_sequence(flows, masks, edited, cfg.propagation)

    out = SequenceLayout(cfg.output_root, PSEUDO)
    out.write_flows(result.pseudo_flows, "forward")
    out.write_masks(result.edited_masks)
    records = [
        {
            "frame_index": i,
            "mean_u": float(m.u_mean),
            "mean_v": float(m.v_mean),
            "support_count": m.support_count,
            "edited_pixels": result.edited_masks[i].count(),
        }
        for i, m in enumerate(result.mean_flows)
    ]
    write_report(records, Path(cfg.output_root) / "propagate_report.json", kind="propagation")
    log.info("propagate: %d pseudo flows written", len(records))
    return {"per_frame": records}


def stage_calibrate(cfg: RunConfig) -> dict:
    """Returns the report document; raises NonConvergence after writing output."""
    inp = SequenceLayout(cfg.input_path)
    out = SequenceLayout(cfg.output_root, CALIBRATED)
    report_path = Path(cfg.output_root) / "calibrate_report.json"
    params = cfg.calibration

    if cfg.calibrate_mode == "benchmark":
        truth = inp.read_flows("forward")
        h, w = truth.shape
        guides = inp.read_masks()[: len(truth)] if inp.mask_count() else [BinaryMask.full(h, w)] * len(truth)
        keeps = generate_corruption_masks(w, h, len(truth), cfg.corruption_params)
        corrupted = FlowSequence([corrupt_flow(f, k) for f, k in zip(truth, keeps)], "forward")
        calibrated, reports = sequence_calibrate(corrupted, keeps, guides, params)
        SequenceLayout(cfg.output_root, KEEP).write_masks(keeps)
        records = []
        for i, (est, gt, keep, rep) in enumerate(zip(calibrated, truth, keeps, reports)):
            hole = ~keep
            records.append({
                "frame_index": i,
                "iterations": rep.iterations,
                "final_update": rep.final_update,
                "converged": rep.converged,
                "corrupted_fraction": hole.count() / (h * w),
                "epe_unknown": endpoint_error(est, gt, hole) if hole.any() else 0.0,
            })
        extra = {"mode": "benchmark", "tolerance": params.tolerance}
    else:
        pseudo = SequenceLayout(cfg.output_root, PSEUDO)
        flows = pseudo.read_flows("forward")
        edited = pseudo.read_masks()
        original = inp.read_masks()
        apply, iou = should_calibrate(edited[0], original[0], cfg.scfc_iou_threshold)
        extra = {
            "mode": "gate",
            "gate": {"applied": apply, "iou": iou, "threshold": cfg.scfc_iou_threshold},
            "tolerance": params.tolerance,
        }
        if apply:
            keeps = [inference_keep_mask(edited[i], original[i]) for i in range(len(flows))]
            calibrated, reports = sequence_calibrate(flows, keeps, edited.masks[: len(flows)], params)
            records = [
                {
                    "frame_index": i,
                    "iterations": r.iterations,
                    "final_update": r.final_update,
                    "converged": r.converged,
                    "unknown_pixels": (~keeps[i]).count(),
                }
                for i, r in enumerate(reports)
            ]
        else:
            calibrated, reports = flows, []
            records = [{"frame_index": i, "iterations": 0} for i in range(len(flows))]
        log.info("calibrate: gate iou=%.4f threshold=%.2f -> %s", iou, cfg.scfc_iou_threshold,
                 "applied" if apply else "skipped")

    out.write_flows(calibrated, "forward")
    failed = [r["frame_index"] for r in records if r.get("converged") is False]
    extra["converged"] = not failed
    write_report(records, report_path, kind="calibration", extra=extra)
    if failed:
        raise NonConvergence(
            f"calibration did not converge on frame(s) {failed} within {params.max_iterations} iterations"
        )
    return read_report(report_path)


def stage_metrics(cfg: RunConfig) -> dict:
    inp = SequenceLayout(cfg.input_path)
    m = cfg.metrics
    frames = inp.read_frames()
    if not frames:
        raise LayoutError(f"{inp.root}: no frames")
    source = {"input": inp, "pseudo": SequenceLayout(cfg.output_root, PSEUDO),
              "calibrated": SequenceLayout(cfg.output_root, CALIBRATED)}[m.flow_source]
    flows = source.read_flows("forward")
    truth = inp.read_flows("forward") if m.epe and m.flow_source != "input" else None

    masks = oracle = None
    pseudo_masks = SequenceLayout(cfg.output_root, PSEUDO)
    oracle_layout = SequenceLayout(cfg.input_path, ORACLE)
    if m.mask_iou and pseudo_masks.mask_count() and oracle_layout.mask_count():
        masks, oracle = pseudo_masks.read_masks(), oracle_layout.read_masks()

    occlusion = None
    if m.occlusion_tau is not None and inp.flow_count("backward"):
        fwd, bwd = inp.read_flows("forward"), inp.read_flows("backward")
        occlusion = MaskSequence([forward_backward_consistency(f, b, m.occlusion_tau) for f, b in zip(fwd, bwd)])

    report = evaluate_sequence(frames, flows, truth, masks, oracle, occlusion)
    if not m.warping_error:
        report = MetricsReport(tuple(
            type(r)(r.frame_index, None, None, r.epe, r.mask_iou) for r in report.per_frame
        ))
    path = Path(cfg.output_root) / "metrics_report.json"
    write_report(report, path, extra={"flow_source": m.flow_source})
    log.info("metrics: %d frame pairs evaluated", len(report.per_frame))
    return read_report(path)


def stage_pipeline(cfg: RunConfig) -> dict:
    stages = []
    if cfg.synth is not None:
        write_synth(cfg.synth, cfg.synth_seed, cfg.input_path)
        stages.append("synth")
    prop = stage_propagate(cfg)
    cal = stage_calibrate(cfg)
    met = stage_metrics(cfg)
    stages += ["propagate", "calibrate", "metrics"]

    merged = []
    for i, rec in enumerate(prop["per_frame"]):
        row = {"frame_index": i, "mean_u": rec["mean_u"], "mean_v": rec["mean_v"]}
        row["calibration_iterations"] = cal["per_frame"][i]["iterations"]
        for k, v in met["per_frame"][i].items():
            if k != "frame_index":
                row[k] = v
        merged.append(row)
    extra = {"stages": stages, "seed": cfg.seed}
    if "gate" in cal:
        extra["gate"] = cal["gate"]
    path = Path(cfg.output_root) / "pipeline_report.json"
    write_report(merged, path, kind="pipeline", extra=extra)
    return read_report(path)


# --------------------------------------------------------------------- CLI

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapeflow", description="Shape-aware flow propagation and calibration.")
    p.add_argument("--verbose", "-v", action="store_true", help="log stage progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic scene layout")
    s.add_argument("--kind", default="translating-disk", choices=["translating-disk", "rotating-square", "two-object"])
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--frames", type=int, default=8)
    s.add_argument("--center", type=float, nargs=2, metavar=("X", "Y"))
    s.add_argument("--size", type=float, help="disk radius or square half-width")
    s.add_argument("--velocity", type=float, nargs=2, default=(2.0, 0.0), metavar=("U", "V"))
    s.add_argument("--angular-velocity", type=float, default=5.0, help="degrees per frame")
    s.add_argument("--speckle", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--edit-scale", type=float, default=1.5, help="scale of the edited first-frame mask")
    s.add_argument("--no-edit", action="store_true", help="skip the edited and oracle masks")
    s.add_argument("--output", required=True)
    s.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    for name, text in (
        ("propagate", "propagate the edited mask and build pseudo flows"),
        ("calibrate", "calibrate pseudo flows (gate) or benchmark on corrupted input"),
        ("metrics", "evaluate warping error, EPE and IoU"),
        ("pipeline", "run every stage in order"),
    ):
        c = sub.add_parser(name, help=text)
        c.add_argument("--config", required=True)
        c.add_argument("--output", help="override output_root")
        c.add_argument("--seed", type=int, help="override the global seed")
        c.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    return p


STAGES = {
    "propagate": stage_propagate,
    "calibrate": stage_calibrate,
    "metrics": stage_metrics,
    "pipeline": stage_pipeline,
}


def _run(args) -> None:
    if args.command == "synth":
        if args.edit_scale is not None and not args.edit_scale > 0:
            raise ConfigError(f"--edit-scale must be positive, got {args.edit_scale}")
        cfg = SynthConfig(
            args.kind, args.width, args.height, args.frames,
            tuple(args.center) if args.center else None, args.size, tuple(args.velocity),
            args.angular_velocity, args.speckle, None if args.no_edit else args.edit_scale,
        )
        write_synth(cfg, args.seed, Path(args.output))
        return
    cfg: RunConfig = load_config(args.config, {"output_root": args.output, "seed": args.seed})
    STAGES[args.command](cfg)


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _run(args)
    except (ShapeflowError, OSError) as exc:
        code = exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
