"""Command line interface.

Subcommands: generate, subsample, interpolate, evaluate, svdscan, compare.
Run ``lrfill <command> --help`` for per-command flags.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .fileio import read_volume, write_mask, write_volume
from .pipeline import (
    CANONICAL_AXES,
    PipelineConfig,
    config_from_dict,
    load_config,
    mask_volume,
    parse_kv_file,
    run_interpolation,
)
from .reporting import compare_reports, read_report, snr_db, write_comparison
from .sampling import SamplingMask, jittered_volume_mask, uniform_entry_mask
from .synthgen import EventSpec, PlantSpec, linear_events, plant_slice
from .transforms import MODES, Matricization, singular_decay
from .volume import ComplexVolume, dft_time_axis, freq_values_hz


def _parse_floats(text, n, what):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated values, got {text!r}")
    return parts


def cmd_generate(args) -> int:
    raw = parse_kv_file(args.spec)
    if args.kind == "plant":
        spec = PlantSpec(
            p=int(raw["p"]), q=int(raw["q"]), rank=int(raw["rank"]),
            profile=raw.get("profile", "flat"),
            decay_ratio=float(raw.get("decay_ratio", 0.5)),
            seed=int(raw.get("seed", 0)),
        )
        sl, _ = plant_slice(spec)
        vol = ComplexVolume(("f", "rx", "sx"), sl.data[None])
        write_volume(vol, args.out)
        print(f"wrote planted {spec.p}x{spec.q} rank-{spec.rank} slice to {args.out}")
        return 0
    events_raw = raw.get("event", [])
    if isinstance(events_raw, str):
        events_raw = [events_raw]
    events = [tuple(_parse_floats(e, 4, "event")) for e in events_raw]
    spec = EventSpec(
        n_rx=int(raw["n_rx"]), n_ry=int(raw["n_ry"]),
        n_sx=int(raw["n_sx"]), n_sy=int(raw["n_sy"]),
        spacing_m=float(raw.get("spacing_m", 25.0)),
        nt=int(raw["nt"]), dt=float(raw.get("dt", 0.004)),
        events=events,
        wavelet_peak_hz=float(raw.get("wavelet_peak_hz", 20.0)),
    )
    vol = linear_events(spec)
    write_volume(vol, args.out)
    print(f"wrote {len(events)}-event volume {vol.dims} to {args.out}")
    return 0


def cmd_subsample(args) -> int:
    vol = read_volume(args.input).reordered(CANONICAL_AXES)
    _, n_rx, n_ry, n_sx, n_sy = vol.dims
    if args.scheme == "jittered":
        mask = jittered_volume_mask(n_rx, n_ry, n_sx, n_sy, args.keep,
                                    seed=args.seed, axis=args.axis,
                                    per_axis=args.per_axis)
    else:
        flat = uniform_entry_mask(n_rx * n_ry, n_sx * n_sy, args.keep, seed=args.seed)
        acq = Matricization("srcpair", n_rx, n_ry, n_sx, n_sy)
        mask = SamplingMask(acq.fold(flat.grid), axes=("rx", "ry", "sx", "sy"),
                            scheme="uniform", keep_fraction=args.keep)
    write_mask(mask, args.out_mask)
    write_volume(mask_volume(vol, mask), args.out_volume)
    kept = mask.num_observed / mask.grid.size
    print(f"kept {mask.num_observed}/{mask.grid.size} grid points ({kept:.1%})")
    return 0


def cmd_interpolate(args) -> int:
    overrides = {
        key: getattr(args, key)
        for key in ("input", "output", "mask", "report", "truth", "solver",
                    "f_min", "f_max", "dt", "rank", "rank_schedule",
                    "eta_fraction", "alpha", "eta_mode", "outer_iters",
                    "inner_iters", "seed", "threads", "matricization")
    }
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = config_from_dict({k: v for k, v in overrides.items() if v is not None})
    result = run_interpolation(cfg)
    ok = len(result.rows) - result.failed
    print(f"solved {ok}/{len(result.rows)} slices in {result.wall_s:.1f}s")
    if not math.isnan(result.overall_snr_db):
        print(f"overall SNR {result.overall_snr_db:.2f} dB")
    if result.failed:
        print(f"{result.failed} slices failed", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    truth = read_volume(args.truth)
    estimate = read_volume(args.estimate).reordered(truth.axes)
    value = snr_db(truth.data, estimate.data)
    print(f"SNR {value:.2f} dB")
    return 0


def cmd_svdscan(args) -> int:
    vol = read_volume(args.input)
    if vol.has_axis("t"):
        vol = dft_time_axis(vol.reordered(CANONICAL_AXES))
    else:
        vol = vol.reordered(("f",) + CANONICAL_AXES[1:])
    nt = vol.dims[0]
    freqs = freq_values_hz(nt, args.dt)
    k = int(np.argmin(np.abs(np.abs(freqs) - args.freq)))
    tensor = vol.data[k]
    for mode in MODES:
        matric = Matricization(mode, *tensor.shape)
        decay = singular_decay(matric.unfold(tensor))
        path = f"{args.out}_{mode}.csv"
        with open(path, "w") as fh:
            fh.write("index,sigma_normalized\n")
            for i, s in enumerate(decay):
                fh.write(f"{i},{s:.12e}\n")
        print(f"bin {k} ({abs(freqs[k]):.2f} Hz) {mode}: wrote {path}")
    return 0


def cmd_compare(args) -> int:
    rows_a, _ = read_report(args.a)
    rows_b, _ = read_report(args.b)
    rows = compare_reports(rows_a, rows_b)
    if args.out:
        write_comparison(args.out, rows)
    deltas = [r["snr_delta_db"] for r in rows if not math.isnan(r["snr_delta_db"])]
    times = [(r["wall_s_a"], r["wall_s_b"]) for r in rows]
    print(f"{len(rows)} shared frequencies")
    if deltas:
        print(f"mean SNR delta (a - b): {np.mean(deltas):+.2f} dB")
    if times:
        ta = sum(t[0] for t in times)
        tb = sum(t[1] for t in times)
        print(f"total wall time: a = {ta:.1f}s, b = {tb:.1f}s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrfill",
                                     description="Low-rank frequency-slice interpolation")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a test volume")
    g.add_argument("--kind", choices=("plant", "events"), required=True)
    g.add_argument("--spec", required=True, help="flat key=value spec file")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("subsample", help="mask a volume")
    s.add_argument("--input", required=True)
    s.add_argument("--scheme", choices=("jittered", "uniform"), default="jittered")
    s.add_argument("--keep", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--axis", choices=("sources", "receivers"), default="sources")
    s.add_argument("--per-axis", action="store_true")
    s.add_argument("--out-volume", required=True)
    s.add_argument("--out-mask", required=True)
    s.set_defaults(func=cmd_subsample)

    i = sub.add_parser("interpolate", help="run the interpolation pipeline")
    i.add_argument("--config", help="flat key=value config file")
    i.add_argument("--input")
    i.add_argument("--output")
    i.add_argument("--mask")
    i.add_argument("--report")
    i.add_argument("--truth")
    i.add_argument("--solver", choices=("pd", "levelset"))
    i.add_argument("--f-min", dest="f_min", type=float)
    i.add_argument("--f-max", dest="f_max", type=float)
    i.add_argument("--dt", type=float)
    i.add_argument("--rank", type=int)
    i.add_argument("--rank-schedule", dest="rank_schedule")
    i.add_argument("--eta-fraction", dest="eta_fraction", type=float)
    i.add_argument("--alpha", type=float)
    i.add_argument("--eta-mode", dest="eta_mode", choices=("geometric", "as-printed"))
    i.add_argument("--outer-iters", dest="outer_iters", type=int)
    i.add_argument("--inner-iters", dest="inner_iters", type=int)
    i.add_argument("--seed", type=int)
    i.add_argument("--threads", type=int)
    i.add_argument("--matricization", choices=MODES)
    i.set_defaults(func=cmd_interpolate)

    e = sub.add_parser("evaluate", help="SNR between two volumes")
    e.add_argument("--truth", required=True)
    e.add_argument("--estimate", required=True)
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("svdscan", help="singular-value decay of one bin, both unfoldings")
    v.add_argument("--input", required=True)
    v.add_argument("--freq", type=float, required=True, help="Hz")
    v.add_argument("--dt", type=float, default=0.004)
    v.add_argument("--out", required=True, help="output path prefix")
    v.set_defaults(func=cmd_svdscan)

    c = sub.add_parser("compare", help="diff two run reports")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
