"""Batch pipeline: simulate phantom stacks, PPT-transform, rank frames by
metric curves, and consolidate reports.

Configuration comes from an optional JSON file (--config) with command-line
flags overriding file values; every run writes the fully resolved
"effective config" next to its outputs, and re-running from that file
reproduces the outputs byte for byte. Exit codes: 0 success, 2 config
error, 3 data error, 4 numeric failure.
"""

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import curves as curve_tools
from .core import (ConfigError, DataError, ImageSequence, NumericError, Rect,
                   crop_roi, exclude_frames, load_sequence, read_mask_pgm,
                   save_sequence, write_mask_pgm)
from .hi import HIConfig, hi_curve
from .phantom import (AIR, CFRP, FEP, DefectSpec, LayerSpec, PhantomSpec,
                      generate_phantom)
from .ppt import ppt_transform
from .rea_tve import rea_tve_curve
from .reference import filter_sequence, reference_curves
from .sampling import DEFAULT_NOS, SamplingPlan, size_schedule

WORKERS_ENV = "IRT_RANK_WORKERS"

DEFAULTS = {
    "input": None,
    "out": None,
    "roi": None,
    "keep_frames": None,
    "phi": 4,
    "segmentation_method": "kmeans1d",
    "minkowski_normalization": "raw",
    "sampling": {"strategy": "random", "nos": DEFAULT_NOS, "seed": 0, "stride": 1},
    "hi": {"bins": "auto", "cell_size": "auto", "mode": "static",
           "conv_rel_tol": 1e-3, "max_iters": 1000},
    "filter": {"order": 3, "cutoff": 0.05},
    "prominence": 0.1,
    "top_k": 3,
    "tail_tol": 0.05,
    "detector_quantile": 0.95,
    "background_filter": True,
    "masks": None,
    "workers": 1,
    "phantom": None,
}

_INT_PAIR = {"type": "array", "items": {"type": "integer", "minimum": 0},
             "minItems": 2, "maxItems": 2}
_AUTO_OR_INT = {"oneOf": [{"type": "integer", "minimum": 2}, {"const": "auto"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "input": {"type": ["string", "null"]},
        "out": {"type": ["string", "null"]},
        "roi": {"oneOf": [{"type": "null"},
                          {"type": "array", "items": {"type": "integer", "minimum": 0},
                           "minItems": 4, "maxItems": 4}]},
        "keep_frames": {"oneOf": [{"type": "null"},
                                  {"type": "array", "items": _INT_PAIR, "minItems": 1}]},
        "phi": {"type": "integer", "minimum": 2},
        "segmentation_method": {"enum": ["kmeans1d", "equal_width"]},
        "minkowski_normalization": {"enum": ["raw", "paper"]},
        "sampling": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "strategy": {"enum": ["random", "static_grid"]},
                "nos": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "stride": {"type": "integer", "minimum": 1},
            },
        },
        "hi": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "bins": _AUTO_OR_INT,
                "cell_size": _AUTO_OR_INT,
                "mode": {"enum": ["static", "dynamic"]},
                "conv_rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
            },
        },
        "filter": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "order": {"type": "integer", "minimum": 1},
                "cutoff": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "prominence": {"type": "number", "minimum": 0, "maximum": 1},
        "top_k": {"type": "integer", "minimum": 1},
        "tail_tol": {"type": "number", "exclusiveMinimum": 0},
        "detector_quantile": {"type": "number", "exclusiveMinimum": 0,
                              "exclusiveMaximum": 1},
        "background_filter": {"type": "boolean"},
        "masks": {"oneOf": [{"type": "null"},
                            {"type": "object", "additionalProperties": False,
                             "required": ["defect", "ref"],
                             "properties": {"defect": {"type": "string"},
                                            "ref": {"type": "string"}}}]},
        "workers": {"type": "integer", "minimum": 1},
        "phantom": {"oneOf": [{"type": "null"}, {"type": "object"}]},
    },
}

PHANTOM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["width", "height", "plate"],
    "properties": {
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "plate": {"type": "array", "minItems": 1, "items": {
            "type": "object", "additionalProperties": False,
            "required": ["thickness", "rho", "cp", "lam"],
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("thickness", "rho", "cp", "lam")}}},
        "defects": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["rect", "depth", "thickness", "rho", "cp", "lam"],
            "properties": {
                "rect": {"type": "array", "items": {"type": "integer", "minimum": 0},
                         "minItems": 4, "maxItems": 4},
                **{k: {"type": "number", "exclusiveMinimum": 0}
                   for k in ("depth", "thickness", "rho", "cp", "lam")}}}},
        "pixel_pitch": {"type": "number", "exclusiveMinimum": 0},
        "frame_rate": {"type": "number", "exclusiveMinimum": 0},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "fluence": {"type": "number", "exclusiveMinimum": 0},
        "heating_a1": {"type": "number"},
        "heating_a2": {"type": "number"},
        "noise_std": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _load_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    _validate_config(data, path)
    return data


def _validate_config(data, source="<config>"):
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
        if data.get("phantom") is not None:
            jsonschema.validate(data["phantom"], PHANTOM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: at {where}: {exc.message}") from exc


def _parse_roi(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--roi expects x0,y0,w,h, got {text!r}")
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"--roi expects integers, got {text!r}") from exc


def _parse_keep(text):
    ranges = []
    for chunk in text.split(","):
        bits = chunk.split(":")
        if len(bits) != 2:
            raise ConfigError(f"--keep-frames expects a:b[,c:d], got {text!r}")
        try:
            ranges.append([int(bits[0]), int(bits[1])])
        except ValueError as exc:
            raise ConfigError(f"--keep-frames expects integers, got {text!r}") from exc
    return ranges


def resolve_config(args):
    """Defaults <- config file <- command-line flags, then validate."""
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        cfg = _merge(cfg, _load_config_file(args.config))
    flags = {}
    if getattr(args, "input", None):
        flags["input"] = args.input
    if getattr(args, "out", None):
        flags["out"] = args.out
    if getattr(args, "roi", None):
        flags["roi"] = _parse_roi(args.roi)
    if getattr(args, "keep_frames", None):
        flags["keep_frames"] = _parse_keep(args.keep_frames)
    if getattr(args, "phi", None):
        flags["phi"] = args.phi
    if getattr(args, "nos", None):
        flags["sampling"] = {"nos": args.nos}
    if getattr(args, "seed", None) is not None:
        flags["sampling"] = {**flags.get("sampling", {}), "seed": args.seed}
    if getattr(args, "filter_order", None):
        flags["filter"] = {"order": args.filter_order}
    if getattr(args, "cutoff", None):
        flags["filter"] = {**flags.get("filter", {}), "cutoff": args.cutoff}
    if getattr(args, "masks", None):
        parts = args.masks.split(",")
        if len(parts) != 2:
            raise ConfigError(f"--masks expects defect.pgm,ref.pgm, got {args.masks!r}")
        flags["masks"] = {"defect": parts[0], "ref": parts[1]}
    if getattr(args, "workers", None):
        flags["workers"] = args.workers
    elif os.environ.get(WORKERS_ENV):
        try:
            flags["workers"] = int(os.environ[WORKERS_ENV])
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
    cfg = _merge(cfg, flags)
    _validate_config(cfg)
    return cfg


def write_effective_config(cfg, out_dir):
    path = Path(out_dir) / "effective_config.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

PLATE_CFRP_17 = {"thickness": 1.7e-3, **CFRP}
DEFECT_DEPTH_STEP = 0.135e-3       # six insert depths: 1..6 times this
DEFECT_SIDE_PX = 50                # 15 x 15 mm^2 at 0.3 mm per pixel
MATERIALS = {"fep": FEP, "air": AIR}


def phantom_spec_from_dict(d):
    plate = tuple(LayerSpec(**layer) for layer in d["plate"])
    defects = []
    for item in d.get("defects", []):
        rect = Rect(*item["rect"])
        layer = LayerSpec(thickness=item["thickness"], rho=item["rho"],
                          cp=item["cp"], lam=item["lam"])
        defects.append(DefectSpec(rect=rect, depth=item["depth"], layer=layer))
    return PhantomSpec(
        width=d["width"], height=d["height"], plate=plate, defects=tuple(defects),
        pixel_pitch=d.get("pixel_pitch", 3.0e-4),
        frame_rate=d.get("frame_rate", 60.0),
        duration=d.get("duration", 10.0),
        fluence=d.get("fluence", 2000.0),
        heating_a1=d.get("heating_a1", 0.0),
        heating_a2=d.get("heating_a2", 0.0),
        noise_std=d.get("noise_std", 0.020),
        seed=d.get("seed", 0),
    )


def _preset_phantom(name, args):
    material = MATERIALS[args.defect_material]
    common = {
        "plate": [PLATE_CFRP_17],
        "pixel_pitch": 3.0e-4,
        "frame_rate": args.fps,
        "duration": args.duration,
        "fluence": args.fluence,
        "heating_a1": args.heating,
        "heating_a2": args.heating,
        "noise_std": args.noise,
        "seed": args.seed if args.seed is not None else 0,
    }

    def defect(width, height, side, depth):
        return {"rect": [(width - side) // 2, (height - side) // 2, side, side],
                "depth": depth, "thickness": 50e-6, **material}

    if name == "blank":
        return {"": {"width": args.size, "height": args.size, "defects": [],
                     **common}}
    if name == "single":
        side = max(4, args.size // 3)
        return {"": {"width": args.size, "height": args.size,
                     "defects": [defect(args.size, args.size, side,
                                        DEFECT_DEPTH_STEP)], **common}}
    if name == "six-roi":
        out = {}
        for k in range(1, 7):
            out[f"roi{k}"] = {"width": 118, "height": 118,
                              "defects": [defect(118, 118, DEFECT_SIDE_PX,
                                                 k * DEFECT_DEPTH_STEP)],
                              **common, "seed": (common["seed"] or 0) + k}
        return out
    raise ConfigError(f"unknown preset {name!r}")


def cmd_simulate(args):
    if args.config:
        cfg = resolve_config(args)
        if cfg.get("phantom") is None:
            raise ConfigError("simulate needs a 'phantom' section or --preset")
        stacks = {"": cfg["phantom"]}
        out_dir = Path(cfg.get("out") or args.out or ".")
    else:
        if not args.preset:
            raise ConfigError("simulate needs --preset or --config with a phantom section")
        stacks = _preset_phantom(args.preset, args)
        out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    for name, spec_dict in stacks.items():
        jsonschema.validate(spec_dict, PHANTOM_SCHEMA)
        spec = phantom_spec_from_dict(spec_dict)
        seq, defect_mask, ref_mask = generate_phantom(spec)
        stack_dir = out_dir / name if name else out_dir
        stack_dir.mkdir(parents=True, exist_ok=True)
        save_sequence(seq, stack_dir / "stack")
        write_mask_pgm(defect_mask, stack_dir / "defect.pgm")
        write_mask_pgm(ref_mask, stack_dir / "ref.pgm")
        # each stack's effective config reruns that stack bit for bit
        effective = _merge(DEFAULTS, {"phantom": spec_dict, "out": str(stack_dir)})
        write_effective_config(effective, stack_dir)
        print(f"{name or 'stack'}: {seq.n_frames} frames "
              f"{seq.width}x{seq.height} -> {stack_dir}")
    return 0


# ---------------------------------------------------------------------------
# ppt
# ---------------------------------------------------------------------------

def cmd_ppt(args):
    if not args.input:
        raise ConfigError("ppt needs --input")
    out_dir = Path(args.out or ".")
    seq = load_sequence(args.input)
    pair = ppt_transform(seq)
    save_sequence(pair.amplitude, out_dir / "amplitude")
    save_sequence(pair.phase, out_dir / "phase")
    write_effective_config({"input": args.input, "out": str(out_dir)}, out_dir)
    print(f"{pair.frequencies.size} frequency bins "
          f"(0 .. {pair.frequencies[-1]:.6g} Hz) -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def _postprocess(curve, cfg):
    """Raw -> zero-phase filtered -> [0,1] normalized curve triple."""
    values = curve.values
    if not np.all(np.isfinite(values)):
        # -inf sentinels (no-contrast SNR frames) are floored to the finite min
        finite = values[np.isfinite(values)]
        floor = float(finite.min()) if finite.size else 0.0
        values = np.nan_to_num(values, nan=floor, neginf=floor, posinf=floor)
        curve = curve_tools.MetricCurve(name=curve.name, axis_values=curve.axis_values,
                                        values=values)
    filtered = curve_tools.butterworth_lowpass(curve, order=cfg["filter"]["order"],
                                               cutoff_frac=cfg["filter"]["cutoff"])
    normalized = curve_tools.normalize01(filtered)
    return curve, filtered, normalized


def cmd_rank(args):
    cfg = resolve_config(args)
    if not cfg.get("input"):
        raise ConfigError("rank needs an input stack (--input or config)")
    out_dir = Path(cfg.get("out") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    seq = load_sequence(cfg["input"])
    if cfg["roi"]:
        seq = crop_roi(seq, Rect(*cfg["roi"]))
    if cfg["keep_frames"]:
        seq = exclude_frames(seq, [tuple(r) for r in cfg["keep_frames"]])

    workers = cfg["workers"]
    if cfg["background_filter"]:
        seq = filter_sequence(seq, workers=workers)
    hi_cfg = HIConfig(bins=cfg["hi"]["bins"], cell_size=cfg["hi"]["cell_size"],
                      mode=cfg["hi"]["mode"], seed=cfg["sampling"]["seed"],
                      conv_rel_tol=cfg["hi"]["conv_rel_tol"],
                      max_iters=cfg["hi"]["max_iters"])
    curves = {"hi": hi_curve(seq, hi_cfg, workers=workers)}

    sizes = size_schedule(seq.width, seq.height, cfg["phi"],
                          stride=cfg["sampling"]["stride"])
    plan = SamplingPlan(strategy=cfg["sampling"]["strategy"],
                        nos_set=cfg["sampling"]["nos"],
                        seed=cfg["sampling"]["seed"], sizes=tuple(sizes))
    tve_curve, rea_curve = rea_tve_curve(
        seq, cfg["phi"], plan, method=cfg["segmentation_method"],
        normalization=cfg["minkowski_normalization"], tail_tol=cfg["tail_tol"],
        workers=workers)
    curves["tve"] = tve_curve
    curves["rea"] = rea_curve

    if cfg["masks"]:
        defect = read_mask_pgm(cfg["masks"]["defect"])
        ref = read_mask_pgm(cfg["masks"]["ref"])
        if defect.shape != (seq.height, seq.width):
            raise DataError(f"defect mask {defect.shape} does not match the "
                            f"(possibly cropped) stack {seq.height}x{seq.width}")
        snr_curve, tc_curve = reference_curves(
            seq, defect, ref, detector_quantile=cfg["detector_quantile"],
            workers=workers)
        curves["snr"] = snr_curve
        curves["tc"] = tc_curve
    else:
        print("note: no masks given, SNR/TC reference curves omitted")

    peaks = {}
    overlay = []
    ranges_by_name = {}
    for name, curve in curves.items():
        raw, filtered, normalized = _postprocess(curve, cfg)
        ranges = curve_tools.find_max_ranges(normalized, prominence_frac=cfg["prominence"],
                                             top_k=cfg["top_k"])
        ranges_by_name[name] = ranges
        curve_tools.write_curve_csv(out_dir / f"{name}.csv", name, curve.axis_values,
                                    raw.values, filtered.values, normalized.values)
        curve_tools.write_curves_svg(out_dir / f"{name}.svg",
                                     [(name, normalized.values)],
                                     {name: ranges}, title=f"{name} vs index")
        peaks[name] = [{"start": r.start, "stop": r.stop, "peak_index": r.peak_index,
                        "peak_value": r.peak_value, "is_global": r.is_global}
                       for r in ranges]
        overlay.append((name, normalized.values))

    overlap = _overlap_summary(ranges_by_name)
    (out_dir / "peaks.json").write_text(
        json.dumps({"ranges": peaks, "global_overlap": overlap},
                   indent=2, sort_keys=True) + "\n")
    curve_tools.write_curves_svg(out_dir / "overview.svg", overlay, ranges_by_name,
                                 title="normalized metric curves")
    write_effective_config(cfg, out_dir)
    for name, items in sorted(peaks.items()):
        g = next(r for r in items if r["is_global"])
        print(f"{name}: global max range [{g['start']}, {g['stop']}] "
              f"peak at {g['peak_index']}")
    return 0


def _overlap_summary(ranges_by_name):
    """Pairwise overlap of the global-maximum ranges across metrics."""
    summary = {}
    names = sorted(ranges_by_name)
    for i, a in enumerate(names):
        ga = next(r for r in ranges_by_name[a] if r.is_global)
        for b in names[i + 1:]:
            gb = next(r for r in ranges_by_name[b] if r.is_global)
            lo = max(ga.start, gb.start)
            hi = min(ga.stop, gb.stop)
            summary[f"{a}&{b}"] = {"overlap": bool(lo <= hi),
                                   "range": [lo, hi] if lo <= hi else None}
    return summary


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args):
    src = Path(args.input or ".")
    if not src.is_dir():
        raise DataError(f"report needs a directory of curve CSVs, got {src}")
    out_dir = Path(args.out or src)
    out_dir.mkdir(parents=True, exist_ok=True)

    groups = {}
    direct = sorted(src.glob("*.csv"))
    if direct:
        groups[""] = direct
    for sub in sorted(p for p in src.iterdir() if p.is_dir()):
        found = sorted(sub.glob("*.csv"))
        if found:
            groups[sub.name] = found
    if not groups:
        raise DataError(f"no metric-curve CSVs under {src}")

    rows = []
    for group, files in groups.items():
        overlay = []
        ranges = {}
        for path in files:
            cols = curve_tools.read_curve_csv(path)
            name = path.stem
            values = cols["value_normalized"]
            curve = curve_tools.MetricCurve(name=name, axis_values=cols["axis_value"],
                                            values=values)
            found = curve_tools.find_max_ranges(curve, prominence_frac=0.1, top_k=3)
            overlay.append((name, values))
            ranges[name] = found
            g = next(r for r in found if r.is_global)
            rows.append([group or ".", name, g.start, g.stop, g.peak_index])
        tag = f"report_{group}" if group else "report"
        curve_tools.write_curves_svg(out_dir / f"{tag}.svg", overlay, ranges,
                                     title=f"metric comparison {group}".strip())
    with open(out_dir / "report.csv", "w") as fh:
        fh.write("group,metric,global_start,global_stop,global_peak\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    print(f"{len(rows)} curves across {len(groups)} group(s) -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="irt-rank",
        description="Rank images in a thermographic sequence by anomaly metrics")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, with_input=True):
        p.add_argument("--config", help="JSON config file")
        if with_input:
            p.add_argument("--input", help="input stack directory")
        p.add_argument("--out", help="output directory")

    sim = sub.add_parser("simulate", help="generate a synthetic phantom stack")
    common(sim, with_input=False)
    sim.add_argument("--preset", choices=["blank", "single", "six-roi"])
    sim.add_argument("--defect-material", choices=sorted(MATERIALS), default="fep")
    sim.add_argument("--size", type=int, default=64, help="frame side in px (non six-roi)")
    sim.add_argument("--fps", type=float, default=60.0)
    sim.add_argument("--duration", type=float, default=10.0)
    sim.add_argument("--fluence", type=float, default=2000.0)
    sim.add_argument("--noise", type=float, default=0.020)
    sim.add_argument("--heating", type=float, default=0.0,
                     help="quadratic heating nonuniformity (1/px^2)")
    sim.add_argument("--seed", type=int, default=None)

    ppt = sub.add_parser("ppt", help="pixel-wise DFT into amplitude/phase stacks")
    common(ppt)

    rank = sub.add_parser("rank", help="compute metric curves and peak report")
    common(rank)
    rank.add_argument("--roi", help="crop rectangle x0,y0,w,h")
    rank.add_argument("--phi", type=int, help="number of intensity phases")
    rank.add_argument("--nos", type=int, help=f"windows per size (default {DEFAULT_NOS})")
    rank.add_argument("--seed", type=int)
    rank.add_argument("--keep-frames", help="inclusive index ranges a:b[,c:d]")
    rank.add_argument("--masks", help="defect.pgm,ref.pgm for SNR/TC")
    rank.add_argument("--filter-order", type=int)
    rank.add_argument("--cutoff", type=float)
    rank.add_argument("--workers", type=int)

    rep = sub.add_parser("report", help="consolidate curve CSVs into a comparison")
    common(rep)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "ppt": cmd_ppt,
                "rank": cmd_rank, "report": cmd_report}
    try:
        return handlers[args.cmd](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
