"""Command-line experiment runner emitting CSV artifacts and run manifests."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from . import __version__
from .convnets import (
    DIFFERENTIATOR,
    MOVING_AVERAGE,
    Kernel,
    fir_response,
    make_prototype_stack,
    run_prototype,
)
from .errors import ReluFreqError
from .multitone import DatasetSpec, harmonic_stack, sample_dataset, synthesize
from .relu_taylor import TaylorConfig, approximate_relu, relu
from .spectral import band_occupancy, energy_fraction_above, rrmse, spectrum
from .trainer import AdamHyper, default_dataset_spec, run_comparison, zero_train_eval

PRNG_ID = "numpy PCG64; normals via Box-Muller over two uniform draws"
RRMSE_DEFINITION = "l2_norm(estimate - reference) / l2_norm(reference)"
DFT_NORMALIZATION = "DFT / N; unit bin-aligned cosine -> magnitude 0.5 at +/- f"
OCCUPANCY_THRESHOLD = 0.01

PROBE_F0 = 5.0
PROBE_HARMONICS = 4

HEART_FS = 64.0
HEART_DURATION = 8.0
HEART_DEPTH = 3
HEART_AVG_LEN = 4
HEART_POOL = (2, 2)

ZERO_TRAIN_SPEC = dict(
    class_means=(3.0, 5.0, 10.0),
    freq_std=0.1,
    samples_per_class=100,
    sample_rate=64.0,
    duration=32.0,
)
DEFAULT_ZERO_KERNEL = (0.6, 0.4)
RESPONSE_POINTS = 257


@dataclass
class RunManifest:
    """Reproducibility envelope written next to every command's outputs."""

    command: str
    full_config: Dict[str, object]
    seed: int
    tool_version: str
    output_files: List[str]
    results: Dict[str, object] = field(default_factory=dict)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """UTF-8 comma-separated output with 17-significant-digit numerics."""
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError("rows must be rectangular and match the header width")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_manifest(path: str, manifest: RunManifest) -> None:
    payload = {
        "command": manifest.command,
        "full_config": _jsonable(manifest.full_config),
        "seed": manifest.seed,
        "tool_version": manifest.tool_version,
        "output_files": list(manifest.output_files),
        "results": _jsonable(manifest.results),
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_outputs(out_dir: str, manifest: RunManifest) -> None:
    emit_manifest(os.path.join(out_dir, "manifest.json"), manifest)


def _parse_kernel(text: str):
    try:
        taps = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad kernel {text!r}: {exc}") from None
    if len(taps) != 2:
        raise argparse.ArgumentTypeError("kernel must be two comma-separated taps")
    return taps


# ---------------------------------------------------------------------------
# subcommands


def _cmd_coeffs(args) -> int:
    from .relu_taylor import sqrt_taylor_coefficients

    if args.n < 1:
        raise ValueError("--n must be >= 1")
    for c in sqrt_taylor_coefficients(args.n):
        print(_fmt(c))
    return 0


def _cmd_approx(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    amplitudes = [1.0] * args.harmonics
    tones = harmonic_stack(args.f0, args.harmonics, amplitudes)
    x = synthesize(tones, args.fs, args.duration)
    y_relu = relu(x)
    cfg = TaylorConfig(args.terms, args.prescale)
    approx, report = approximate_relu(tones, args.fs, args.duration, cfg)
    err = rrmse(y_relu, approx)

    t = x.times
    emit_csv(
        os.path.join(args.out, "approx_time.csv"),
        ["t", "x", "relu_x", "approx"],
        list(zip(t, x.samples, y_relu.samples, approx.samples)),
    )
    freqs, x_mag = spectrum(x).one_sided()
    _, relu_mag = spectrum(y_relu).one_sided()
    _, approx_mag = spectrum(approx).one_sided()
    emit_csv(
        os.path.join(args.out, "approx_spectrum.csv"),
        ["f", "x_mag", "relu_mag", "approx_mag"],
        list(zip(freqs, x_mag, relu_mag, approx_mag)),
    )
    convergence = {
        "max_abs_g": report.max_abs_fluctuation,
        "fraction_violating": report.fraction_violating,
        "valid": report.valid,
    }
    with open(
        os.path.join(args.out, "convergence.json"), "w", encoding="utf-8", newline=""
    ) as fh:
        fh.write(json.dumps(_jsonable(convergence), indent=2, sort_keys=True) + "\n")

    manifest = RunManifest(
        command="approx",
        full_config={
            "f0_hz": args.f0,
            "harmonics": args.harmonics,
            "amplitudes": amplitudes,
            "sample_rate_hz": args.fs,
            "duration_s": args.duration,
            "n_terms": args.terms,
            "prescale": args.prescale,
            "rrmse_definition": RRMSE_DEFINITION,
            "dft_normalization": DFT_NORMALIZATION,
        },
        seed=0,
        tool_version=__version__,
        output_files=["approx_time.csv", "approx_spectrum.csv", "convergence.json"],
        results={"rrmse": err, **convergence},
    )
    _write_outputs(args.out, manifest)
    print(f"rrmse {_fmt(err)}")
    return 0


def _cmd_proto(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    kind = DIFFERENTIATOR if args.kind == "dif" else MOVING_AVERAGE
    stack = make_prototype_stack(kind, depth=args.depth, avg_len=args.avg_len)
    amplitudes = [1.0] * PROBE_HARMONICS
    tones = harmonic_stack(PROBE_F0, PROBE_HARMONICS, amplitudes)
    x = synthesize(tones, args.fs, 1.0)
    layers = run_prototype(stack, x)

    signals = [x] + layers
    spectra = [spectrum(sig) for sig in signals]
    freqs, _ = spectra[0].one_sided()
    columns = [sp.one_sided()[1] for sp in spectra]
    header = ["f"] + [f"layer_{i}" for i in range(len(signals))]
    emit_csv(
        os.path.join(args.out, "layer_spectra.csv"),
        header,
        list(zip(freqs, *columns)),
    )
    occupancies = [band_occupancy(sp, OCCUPANCY_THRESHOLD) for sp in spectra]
    emit_csv(
        os.path.join(args.out, "occupancy.csv"),
        ["layer", "occupancy"],
        list(enumerate(occupancies)),
    )
    results: Dict[str, object] = {"occupancy_per_layer": occupancies}
    if kind == MOVING_AVERAGE:
        first_null = args.fs / args.avg_len
        results["first_null_hz"] = first_null
        results["energy_above_first_null_per_layer"] = [
            energy_fraction_above(sp, first_null) for sp in spectra
        ]
    manifest = RunManifest(
        command="proto",
        full_config={
            "kind": kind,
            "depth": args.depth,
            "avg_len": args.avg_len,
            "kernel_taps": stack.kernel.taps,
            "sample_rate_hz": args.fs,
            "duration_s": 1.0,
            "input_f0_hz": PROBE_F0,
            "input_harmonics": PROBE_HARMONICS,
            "input_amplitudes": amplitudes,
            "occupancy_threshold": OCCUPANCY_THRESHOLD,
            "dft_normalization": DFT_NORMALIZATION,
        },
        seed=0,
        tool_version=__version__,
        output_files=["layer_spectra.csv", "occupancy.csv"],
        results=results,
    )
    _write_outputs(args.out, manifest)
    return 0


def _cmd_heart_demo(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    amplitudes = [1.0, 0.5]
    tones = harmonic_stack(args.hr, 2, amplitudes)
    x = synthesize(tones, HEART_FS, HEART_DURATION)
    stack = make_prototype_stack(
        MOVING_AVERAGE, depth=HEART_DEPTH, avg_len=HEART_AVG_LEN, pool=HEART_POOL
    )
    layers = run_prototype(stack, x)
    rows = []
    for i, sig in enumerate([x] + layers):
        freqs, mags = spectrum(sig).one_sided()
        rows.extend((i, f, m) for f, m in zip(freqs, mags))
    emit_csv(os.path.join(args.out, "heart_spectra.csv"), ["layer", "f", "magnitude"], rows)
    manifest = RunManifest(
        command="heart-demo",
        full_config={
            "heart_rate_hz": args.hr,
            "harmonics": 2,
            "amplitudes": amplitudes,
            "sample_rate_hz": HEART_FS,
            "duration_s": HEART_DURATION,
            "kind": MOVING_AVERAGE,
            "depth": HEART_DEPTH,
            "avg_len": HEART_AVG_LEN,
            "pool_width_stride": list(HEART_POOL),
            "dft_normalization": DFT_NORMALIZATION,
        },
        seed=0,
        tool_version=__version__,
        output_files=["heart_spectra.csv"],
        results={
            "layer_sample_rates_hz": [sig.sample_rate for sig in [x] + layers],
        },
    )
    _write_outputs(args.out, manifest)
    return 0


def _cmd_train_compare(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    hyper = AdamHyper()
    spec = default_dataset_spec()
    report = run_comparison(args.reps, args.seed, epochs=args.epochs, adam_hyper=hyper)
    net_order = ["relu", "linear", "linear_dc"]

    loss_rows = []
    for name in net_order:
        net = report.nets[name]
        for epoch in range(args.epochs):
            loss_rows.append(
                (
                    epoch + 1,
                    name,
                    net.loss_median[epoch],
                    net.loss_q25[epoch],
                    net.loss_q75[epoch],
                )
            )
    emit_csv(
        os.path.join(args.out, "loss_curves.csv"),
        ["epoch", "net", "median", "q25", "q75"],
        loss_rows,
    )
    dist_rows = []
    for name in net_order:
        net = report.nets[name]
        n_layers = net.distance_median.shape[0]
        for layer in range(n_layers):
            for epoch in range(args.epochs + 1):
                dist_rows.append(
                    (
                        epoch,
                        name,
                        layer,
                        net.distance_median[layer, epoch],
                        net.distance_q25[layer, epoch],
                        net.distance_q75[layer, epoch],
                    )
                )
    emit_csv(
        os.path.join(args.out, "distance_curves.csv"),
        ["epoch", "net", "layer", "median", "q25", "q75"],
        dist_rows,
    )
    manifest = RunManifest(
        command="train-compare",
        full_config={
            "repetitions": args.reps,
            "epochs": args.epochs,
            "batch_size": 32,
            "adam": {
                "lr": hyper.lr,
                "beta1": hyper.beta1,
                "beta2": hyper.beta2,
                "epsilon": hyper.epsilon,
            },
            "architecture": {
                "conv_layers": [
                    {"filters": 8, "kernel_size": 5, "activation": "per-variant"},
                    {"filters": 8, "kernel_size": 5, "activation": "per-variant"},
                ],
                "hidden_units": 16,
                "hidden_activation": "relu",
                "n_classes": spec.n_classes,
                "flatten_mode": "flatten",
                "input_length": int(round(spec.sample_rate * spec.duration)),
                "init": "uniform [-sqrt(1/fan_in), sqrt(1/fan_in)], biases zero",
            },
            "dataset": {
                "class_means_hz": spec.class_means,
                "freq_std_hz": spec.freq_std,
                "samples_per_class": spec.samples_per_class,
                "sample_rate_hz": spec.sample_rate,
                "duration_s": spec.duration,
            },
            "dc_levels": {0: 1.0, 1: 2.0, 2: 3.0},
            "networks": net_order,
            "seed_derivation": "PCG64(seed) integer matrix (reps, 7): data, init x3, shuffle x3",
            "prng": PRNG_ID,
        },
        seed=args.seed,
        tool_version=__version__,
        output_files=["loss_curves.csv", "distance_curves.csv"],
        results={
            name: {
                "median_final_loss": float(np.median(report.nets[name].final_losses)),
                "median_final_conv_distance": float(
                    np.median(report.nets[name].final_conv_distances)
                ),
                "median_final_accuracy": float(
                    np.median(report.nets[name].final_accuracies)
                ),
            }
            for name in net_order
        },
    )
    _write_outputs(args.out, manifest)
    return 0


def _cmd_zero_train(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    dataset_seed = seed + 1
    spec = DatasetSpec(**ZERO_TRAIN_SPEC)
    dataset = sample_dataset(spec, dataset_seed)
    if args.seed is not None:
        report = zero_train_eval(dataset, seed=args.seed)
        kernel_source = "random"
    else:
        taps = args.kernel if args.kernel is not None else DEFAULT_ZERO_KERNEL
        report = zero_train_eval(dataset, kernel=Kernel(np.array(taps)))
        kernel_source = "explicit" if args.kernel is not None else "default"

    grid = np.linspace(0.0, spec.sample_rate / 2.0, RESPONSE_POINTS)
    response = fir_response(Kernel(report.taps), grid, spec.sample_rate)
    emit_csv(
        os.path.join(args.out, "response.csv"),
        ["f", "b"],
        list(zip(response.frequencies, response.gains)),
    )
    emit_csv(
        os.path.join(args.out, "dc_by_class.csv"),
        ["f_i", "dc", "class"],
        list(zip(report.sample_freqs, report.sample_dcs, report.sample_labels)),
    )
    manifest = RunManifest(
        command="zero-train",
        full_config={
            "kernel_taps": report.taps,
            "kernel_source": kernel_source,
            "kernel_seed": seed if kernel_source == "random" else None,
            "dataset_seed": dataset_seed,
            "dataset": dict(ZERO_TRAIN_SPEC),
            "response_grid_points": RESPONSE_POINTS,
            "classifier": "nearest-class-mean of the per-sample DC",
            "prng": PRNG_ID,
        },
        seed=seed,
        tool_version=__version__,
        output_files=["response.csv", "dc_by_class.csv"],
        results={
            "accuracy": report.accuracy,
            "class_labels": report.class_labels,
            "class_mean_freqs_hz": report.class_mean_freqs,
            "class_mean_dcs": report.class_mean_dcs,
            "class_std_dcs": report.class_std_dcs,
            "class_gains": report.class_gains,
        },
    )
    _write_outputs(args.out, manifest)
    print(f"accuracy {_fmt(report.accuracy)}")
    return 0


# ---------------------------------------------------------------------------
# dispatcher


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relufreq",
        description="Frequency-domain experiments on the ReLU activation",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("coeffs", help="print square-root series coefficients")
    p.add_argument("--n", type=int, required=True, help="number of coefficients")
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("approx", help="series approximation of relu on a harmonic probe")
    p.add_argument("--f0", type=float, default=5.0)
    p.add_argument("--harmonics", type=int, default=4)
    p.add_argument("--fs", type=float, default=1024.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--terms", type=int, default=50)
    p.add_argument("--prescale", type=float, default=1e-4)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("proto", help="run a fixed-kernel conv/relu stack on the probe")
    p.add_argument("--kind", choices=["dif", "avg"], required=True)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--avg-len", type=int, default=8, dest="avg_len")
    p.add_argument("--fs", type=float, default=1024.0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_proto)

    p = sub.add_parser("heart-demo", help="two-tone heart probe through a pooled stack")
    p.add_argument("--hr", type=float, default=1.2)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_heart_demo)

    p = sub.add_parser("train-compare", help="relu vs linear vs linear+DC training runs")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_train_compare)

    p = sub.add_parser("zero-train", help="untrained 2-tap DC classifier evaluation")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--kernel", type=_parse_kernel, default=None, metavar="W0,W1")
    group.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_zero_train)

    return parser


def run(argv: Sequence[str]) -> int:
    """Dispatch a CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ReluFreqError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
