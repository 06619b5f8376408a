"""Command-line entry point.

Subcommands map one-to-one onto the harness campaigns plus two utilities:
``estimate`` runs the estimator once on a synthetic frame and prints its
internals, ``gen-training`` exports the training design as CSV.  Config
errors exit with status 2; everything else that succeeds exits 0.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, estimator, harness
from .channel import draw_channel, transmit_receive
from .numerics import RandomSource
from .training import ConfigError, build_training, export_training_csv


def _spec_from_args(args) -> tuple[harness.ExperimentSpec, dict]:
    """Resolve --config / --preset / --seed into a spec plus raw JSON extras."""
    raw: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    if args.preset:
        raw.setdefault("preset", args.preset)
    if args.seed is not None:
        raw["seed"] = args.seed
    if not raw:
        raise ConfigError("provide --config FILE and/or --preset NAME")
    extras = {"iotas": raw.pop("iotas", None)}
    return harness.spec_from_json(raw), extras


def _emit(rows, out_path: str | None) -> None:
    text = harness.rows_to_csv(rows)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_estimate(args) -> int:
    spec, _ = _spec_from_args(args)
    cfg = spec.config
    ts = build_training(cfg, "cbts")
    gen = RandomSource(spec.seed, harness._trial_stream(0)).generator()
    ch = draw_channel(spec.profile, cfg, gen)
    cfo = args.cfo
    clean = transmit_receive(ts, ch, cfo, 0.0, cfg)
    if args.snr_db is None:
        frame = clean
    else:
        nv = clean.stacked_power * cfg.n_tx / 10.0 ** (args.snr_db / 10.0)
        frame = transmit_receive(ts, ch, cfo, nv, cfg,
                                 RandomSource(spec.seed, harness._noise_stream(0, 1, 0)))
    sf = estimator.stack(frame, cfg)
    if args.diag_index is not None:
        idx = args.diag_index
    else:
        gamma = (10.0 ** (args.snr_db / 10.0) / cfg.n_tx) if args.snr_db is not None else 1e6
        idx = analysis.optimal_diag_indices(gamma, cfg)[0]
    res = estimator.estimate_simplified(sf, estimator.EstimatorParams(idx), cfg)
    print(f"true_cfo            {cfo:+.6f}")
    print(f"estimated_cfo       {res.value:+.6f}")
    print(f"diag_index          {idx}")
    print(f"diag_ratio          {res.diag_ratio.real:+.6e}{res.diag_ratio.imag:+.6e}j")
    print("candidates          " + " ".join(f"{c:+.4f}" for c in res.candidates))
    print("scores              " + " ".join(f"{s:.6e}" for s in res.scores))
    return 0


def _cmd_mse_vs_snr(args) -> int:
    spec, _ = _spec_from_args(args)
    _emit(harness.run_mse_vs_snr(spec), args.out)
    return 0


def _cmd_mse_vs_iota(args) -> int:
    spec, extras = _spec_from_args(args)
    if args.iotas:
        iotas = [int(v) for v in args.iotas.split(",")]
    elif extras["iotas"]:
        iotas = [int(v) for v in extras["iotas"]]
    else:
        iotas = list(range(1, spec.config.n_periods))
    _emit(harness.run_mse_vs_iota(spec, iotas), args.out)
    return 0


def _cmd_emcb(args) -> int:
    spec, _ = _spec_from_args(args)
    _emit(harness.run_emcb(spec), args.out)
    return 0


def _cmd_bench(args) -> int:
    spec, _ = _spec_from_args(args)
    bench = harness.run_bench(spec, repetitions=args.repetitions)
    print(f"{'estimator':<20} {'reps':>6} {'median_us':>12} {'mean_us':>12}")
    for row in bench:
        print(f"{row.estimator:<20} {row.repetitions:>6} "
              f"{row.median_us:>12.1f} {row.mean_us:>12.1f}")
    medians = {r.estimator: r.median_us for r in bench}
    simplified = [v for k, v in medians.items() if k.startswith("simplified")]
    if "ml_grid" in medians and simplified:
        print(f"speedup ml_grid/simplified: {medians['ml_grid'] / min(simplified):.1f}x")
    if args.out:
        rows = [harness.ResultRow(
            estimator=r.estimator, snr_db=spec.snr_points_db[0], iota=None,
            trials=r.repetitions, empirical_mse=None, analytic_mse=None,
            emcb=None, mean_runtime_us=r.mean_us, degenerate_count=0)
            for r in bench]
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            harness.write_csv(rows, fh)
    return 0


def _cmd_gen_training(args) -> int:
    spec, _ = _spec_from_args(args)
    rng = RandomSource(spec.seed, harness.STREAM_RS_TRAINING) if args.kind == "rs" else None
    ts = build_training(spec.config, args.kind, rng)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            export_training_csv(ts, spec.config, fh)
    else:
        export_training_csv(ts, spec.config, sys.stdout)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfolab",
        description="MIMO-OFDM carrier frequency offset estimation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment file")
        p.add_argument("--preset", choices=harness.PRESET_NAMES,
                       help="shipped reference campaign")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("estimate", help="run one frame and print the estimate")
    common(p)
    p.add_argument("--cfo", type=float, default=2.3, help="true offset in spacings")
    p.add_argument("--snr-db", type=float, default=15.0,
                   help="SNR in dB; omit noise with --noiseless")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--diag-index", type=int, default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mse-vs-snr", help="MSE-vs-SNR campaign")
    common(p)
    p.set_defaults(func=_cmd_mse_vs_snr)

    p = sub.add_parser("mse-vs-iota", help="diagonal-index sweep campaign")
    common(p)
    p.add_argument("--iotas", help="comma-separated indices (default: all)")
    p.set_defaults(func=_cmd_mse_vs_iota)

    p = sub.add_parser("emcb", help="bound-only campaign")
    common(p)
    p.set_defaults(func=_cmd_emcb)

    p = sub.add_parser("bench", help="runtime comparison of the estimators")
    common(p)
    p.add_argument("--repetitions", type=int, default=200)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("gen-training", help="export the training design as CSV")
    common(p)
    p.add_argument("--kind", choices=("cbts", "rs"), default="cbts")
    p.set_defaults(func=_cmd_gen_training)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "noiseless", False):
        args.snr_db = None
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
