"""Command-line surface.

Eight subcommands tie the library together: analyze / synthesize /
denoise / detect / optimality over sequence files, plus the generators
simulate-dipole / gen-gaussian / gen-family.  Outputs are JSON files
(sequences, pyramids) and tidy CSV tables (one row per level and
index) meant to be consumed by any plotting tool; nothing is rendered
in-process.  All file writes go through a temp-file-and-rename so
partially written outputs never appear.

Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 solver
non-convergence.  The WMT_LOG environment variable (debug / info /
warning) controls log verbosity.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import IOFailure, SolverFailure, ValidationError, WmtError
from .experiments import (
    DipoleSpec,
    GaussianCurveSpec,
    JumpSpec,
    NoiseSpec,
    gen_gaussian_curve,
    gen_weighted_family,
    load_spec,
    simulate_dipole,
)
from .measures import (
    MeasureSequence,
    _atomic_write_text,
    default_level,
    read_sequence,
    write_sequence,
)
from .multiscale import (
    analyze,
    detect_anomalies,
    read_pyramid,
    synthesize,
    threshold_details,
    write_pyramid,
)
from .transport_ops import measure_distance

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    """What a command did: paths written, norms, optimality, anomalies."""

    command: str
    input_path: str | None = None
    output_paths: dict = field(default_factory=dict)
    norm_table: list = field(default_factory=list)
    optimality: float | None = None
    anomalies: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def print(self, stream=None):
        stream = stream if stream is not None else sys.stdout
        print(f"command: {self.command}", file=stream)
        if self.input_path:
            print(f"input: {self.input_path}", file=stream)
        for name, path in self.output_paths.items():
            print(f"wrote {name}: {path}", file=stream)
        for row in self.norm_table:
            print(
                f"level {row['level']}: one-norm {row['one_norm']:.6f} "
                f"inf-norm {row['inf_norm']:.6f}",
                file=stream,
            )
        for key, value in self.extras.items():
            print(f"{key}: {value}", file=stream)
        if self.anomalies:
            print(f"anomalies: {len(self.anomalies)}", file=stream)
            for level, index, norm, t in self.anomalies[:10]:
                print(
                    f"  level {level} index {index} time {t:.6f} norm {norm:.6f}",
                    file=stream,
                )
        if self.optimality is not None:
            print(f"omega: {self.optimality:.6f}", file=stream)
        print(f"wall_time: {self.wall_time:.3f}s", file=stream)


def _norm_table(pyr):
    return [
        {
            "level": layer.level,
            "one_norm": float(row.sum()),
            "inf_norm": float(row.max()),
            "per_index": row.tolist(),
        }
        for layer, row in zip(pyr.layers, pyr.norms)
    ]


def _write_norms_csv(pyr, grid_origin, path):
    lines = ["level,index,time,norm"]
    for layer, row in zip(pyr.layers, pyr.norms):
        spacing = 2.0 ** (-layer.level)
        for index, value in enumerate(row):
            t = grid_origin + index * spacing
            lines.append(f"{layer.level},{index},{float(t)!r},{float(value)!r}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _out(out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _resolve_levels(seq, levels):
    if levels is not None:
        return levels
    return min(seq.level, default_level(len(seq)))


def cmd_analyze(in_path, levels=None, p=2.0, out_dir=".", fmt=None) -> RunReport:
    start = time.perf_counter()
    seq = read_sequence(in_path, fmt)
    levels = _resolve_levels(seq, levels)
    pyr = analyze(seq, levels, p)
    pyramid_path = _out(out_dir, "pyramid.json")
    norms_path = _out(out_dir, "norms.csv")
    write_pyramid(pyr, pyramid_path)
    _write_norms_csv(pyr, seq.grid_origin, norms_path)
    return RunReport(
        command="analyze",
        input_path=str(in_path),
        output_paths={"pyramid": pyramid_path, "norms": norms_path},
        norm_table=_norm_table(pyr),
        optimality=float(sum(row.sum() for row in pyr.norms)),
        wall_time=time.perf_counter() - start,
    )


def cmd_synthesize(pyramid_path, out_dir=".", fmt=None) -> RunReport:
    start = time.perf_counter()
    pyr = read_pyramid(pyramid_path)
    seq = synthesize(pyr)
    out_path = _out(out_dir, "sequence.csv" if fmt == "csv" else "sequence.json")
    write_sequence(seq, out_path, fmt)
    return RunReport(
        command="synthesize",
        input_path=str(pyramid_path),
        output_paths={"sequence": out_path},
        extras={"elements": len(seq), "level": seq.level},
        wall_time=time.perf_counter() - start,
    )


def cmd_denoise(
    in_path, threshold, levels=None, p=2.0, out_dir=".", fmt=None, ground_truth=None
) -> RunReport:
    start = time.perf_counter()
    seq = read_sequence(in_path, fmt)
    levels = _resolve_levels(seq, levels)
    pyr = analyze(seq, levels, p)
    zeroed = int(sum((row > threshold).sum() for row in pyr.norms))
    denoised = synthesize(threshold_details(pyr, threshold))
    out_path = _out(out_dir, "denoised.json")
    write_sequence(denoised, out_path)
    extras = {
        "zeroed_details": zeroed,
        "max_deviation_from_input": max(
            measure_distance(a, b, p) for a, b in zip(denoised, seq)
        ),
    }
    if ground_truth is not None:
        truth = read_sequence(ground_truth)
        extras["max_distance_to_truth"] = max(
            measure_distance(a, b, p) for a, b in zip(denoised, truth)
        )
    return RunReport(
        command="denoise",
        input_path=str(in_path),
        output_paths={"denoised": out_path},
        norm_table=_norm_table(pyr),
        extras=extras,
        wall_time=time.perf_counter() - start,
    )


def cmd_detect(in_path, levels=None, p=2.0, k_sigma=3.0, out_dir=".", fmt=None) -> RunReport:
    start = time.perf_counter()
    seq = read_sequence(in_path, fmt)
    levels = _resolve_levels(seq, levels)
    pyr = analyze(seq, levels, p)
    flags = detect_anomalies(pyr, seq, k_sigma)
    flags_path = _out(out_dir, "flags.csv")
    lines = ["level,index,time,norm"]
    for level, index, norm, t in flags:
        lines.append(f"{level},{index},{float(t)!r},{float(norm)!r}")
    _atomic_write_text(flags_path, "\n".join(lines) + "\n")
    return RunReport(
        command="detect",
        input_path=str(in_path),
        output_paths={"flags": flags_path},
        norm_table=_norm_table(pyr),
        anomalies=flags,
        wall_time=time.perf_counter() - start,
    )


def cmd_optimality(
    in_path, levels=None, p=2.0, shift_averaged=False, fmt=None
) -> RunReport:
    start = time.perf_counter()
    seq = read_sequence(in_path, fmt)
    levels = _resolve_levels(seq, levels)
    from .multiscale import optimality_number

    omega = optimality_number(seq, levels, shift_averaged=shift_averaged, p=p)
    return RunReport(
        command="optimality",
        input_path=str(in_path),
        optimality=omega,
        extras={"levels": levels, "shift_averaged": shift_averaged},
        wall_time=time.perf_counter() - start,
    )


def cmd_simulate_dipole(
    particles=10,
    steps=640,
    timestep=0.15,
    spread=0.3,
    noise=0.0,
    seed=0,
    out_dir=".",
    spec_path=None,
) -> RunReport:
    start = time.perf_counter()
    if spec_path is not None:
        spec = load_spec(spec_path)
        if not isinstance(spec, DipoleSpec):
            raise ValidationError(f"{spec_path} is not a dipole spec")
    else:
        spec = DipoleSpec(
            n_particles=particles,
            start_spread=spread,
            timestep=timestep,
            n_steps=steps,
            field_noise_sigma=noise,
            rng_seed=seed,
        )
    seq = simulate_dipole(spec)
    seq_path = _out(out_dir, "sequence.json")
    write_sequence(seq, seq_path)
    pos_path = _out(out_dir, "positions.csv")
    lines = ["step,particle,x,y"]
    for step, measure in enumerate(seq.elements):
        for k, atom in enumerate(measure.atoms):
            lines.append(f"{step},{k},{float(atom[0])!r},{float(atom[1])!r}")
    _atomic_write_text(pos_path, "\n".join(lines) + "\n")
    return RunReport(
        command="simulate-dipole",
        output_paths={"sequence": seq_path, "positions": pos_path},
        extras={"elements": len(seq), "level": seq.level, "seed": spec.rng_seed},
        wall_time=time.perf_counter() - start,
    )


def cmd_gen_gaussian(
    samples=65,
    bump=1.0,
    noise_mean=0.0,
    noise_var=0.0,
    taper=True,
    jump_scale=None,
    seed=0,
    out_dir=".",
    spec_path=None,
) -> RunReport:
    start = time.perf_counter()
    if spec_path is not None:
        spec = load_spec(spec_path)
        if not isinstance(spec, GaussianCurveSpec):
            raise ValidationError(f"{spec_path} is not a Gaussian curve spec")
    else:
        noise = None
        if noise_mean > 0.0 or noise_var > 0.0:
            noise = NoiseSpec(noise_mean, noise_var, taper)
        jump = None if jump_scale is None else JumpSpec(jump_scale)
        spec = GaussianCurveSpec(
            n_samples=samples,
            bump_amplitude=bump,
            noise=noise,
            jump=jump,
            rng_seed=seed,
        )
    seq = gen_gaussian_curve(spec)
    seq_path = _out(out_dir, "sequence.json")
    write_sequence(seq, seq_path)
    params_path = _out(out_dir, "params.csv")
    lines = ["index,time,mean,variance"]
    for i, mu in enumerate(seq.elements):
        lines.append(f"{i},{seq.time_of(i)!r},{mu.mean!r},{mu.variance!r}")
    _atomic_write_text(params_path, "\n".join(lines) + "\n")
    return RunReport(
        command="gen-gaussian",
        output_paths={"sequence": seq_path, "params": params_path},
        extras={"elements": len(seq), "level": seq.level},
        wall_time=time.perf_counter() - start,
    )


def cmd_gen_family(in_path, k, out_dir=".", fmt=None) -> RunReport:
    start = time.perf_counter()
    smooth = read_sequence(in_path, fmt)
    member = gen_weighted_family(smooth, k)
    out_path = _out(out_dir, "family.json")
    write_sequence(member, out_path)
    return RunReport(
        command="gen-family",
        input_path=str(in_path),
        output_paths={"family": out_path},
        extras={"k": k},
        wall_time=time.perf_counter() - start,
    )


# -- argument parsing ---------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wmt",
        description="Multiscale transform for sequences of probability measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, levels=True):
        p.add_argument("--p", type=float, default=2.0, dest="cost_p")
        p.add_argument("--out-dir", default=".")
        p.add_argument("--format", choices=["json", "csv"], default=None)
        if levels:
            p.add_argument("--levels", type=int, default=None)

    p = sub.add_parser("analyze", help="decompose a sequence file into a pyramid")
    p.add_argument("input")
    common(p)

    p = sub.add_parser("synthesize", help="reconstruct a sequence from a pyramid file")
    p.add_argument("pyramid")
    common(p, levels=False)

    p = sub.add_parser("denoise", help="analyze, threshold details, reconstruct")
    p.add_argument("input")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--ground-truth", default=None)
    common(p)

    p = sub.add_parser("detect", help="flag anomalous detail coefficients")
    p.add_argument("input")
    p.add_argument("--k-sigma", type=float, default=3.0)
    common(p)

    p = sub.add_parser("optimality", help="print the optimality number")
    p.add_argument("input")
    p.add_argument("--shift-averaged", action="store_true")
    common(p)

    p = sub.add_parser("simulate-dipole", help="point cloud advected by a dipole field")
    p.add_argument("--particles", type=int, default=10)
    p.add_argument("--steps", type=int, default=640)
    p.add_argument("--timestep", type=float, default=0.15)
    p.add_argument("--spread", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", default=None)
    common(p, levels=False)

    p = sub.add_parser("gen-gaussian", help="synthetic curve of Gaussian measures")
    p.add_argument("--samples", type=int, default=65)
    p.add_argument("--bump", type=float, default=1.0)
    p.add_argument("--noise-mean", type=float, default=0.0)
    p.add_argument("--noise-var", type=float, default=0.0)
    p.add_argument("--no-taper", action="store_true")
    p.add_argument("--jump-scale", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", default=None)
    common(p, levels=False)

    p = sub.add_parser("gen-family", help="blend a curve with its endpoint geodesic")
    p.add_argument("input")
    p.add_argument("--k", type=float, required=True)
    common(p, levels=False)

    return parser


def _dispatch(args) -> RunReport:
    if args.command == "analyze":
        return cmd_analyze(args.input, args.levels, args.cost_p, args.out_dir, args.format)
    if args.command == "synthesize":
        return cmd_synthesize(args.pyramid, args.out_dir, args.format)
    if args.command == "denoise":
        return cmd_denoise(
            args.input,
            args.threshold,
            args.levels,
            args.cost_p,
            args.out_dir,
            args.format,
            args.ground_truth,
        )
    if args.command == "detect":
        return cmd_detect(
            args.input, args.levels, args.cost_p, args.k_sigma, args.out_dir, args.format
        )
    if args.command == "optimality":
        return cmd_optimality(
            args.input, args.levels, args.cost_p, args.shift_averaged, args.format
        )
    if args.command == "simulate-dipole":
        return cmd_simulate_dipole(
            args.particles,
            args.steps,
            args.timestep,
            args.spread,
            args.noise,
            args.seed,
            args.out_dir,
            args.spec,
        )
    if args.command == "gen-gaussian":
        return cmd_gen_gaussian(
            args.samples,
            args.bump,
            args.noise_mean,
            args.noise_var,
            not args.no_taper,
            args.jump_scale,
            args.seed,
            args.out_dir,
            args.spec,
        )
    if args.command == "gen-family":
        return cmd_gen_family(args.input, args.k, args.out_dir, args.format)
    raise ValidationError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    level = os.environ.get("WMT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        report = _dispatch(args)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except WmtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report.print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
