"""Command-line front end.

Four subcommands: ``gen`` writes a test signal (BSFT1 binary plus a
JSON sidecar with the ground truth), ``run`` executes a batch of
recovery trials, ``sweep`` repeats a run over a ladder of signal
lengths, and ``oracle-check`` runs the cross-oracle agreement suite
on a small size.  Flags override values from ``--config`` files.

Exit codes: 0 success, 1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields

from .core import write_signal
from .harness import (
    GENERATORS,
    NOISE_MODELS,
    PROFILES,
    ExperimentConfig,
    gen_signal,
    git_version,
    oracle_check,
    run_experiment,
    sweep_sizes,
)
from .rng import stream

_CHECK_FAILURE = 1
_USAGE_ERROR = 2


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    parser.add_argument("--n", type=int, help="signal length (power of two)")
    parser.add_argument("--k0", type=int, help="number of blocks")
    parser.add_argument("--k1", type=int, help="block width (power of two)")
    parser.add_argument("--snr", type=float, help="target signal-to-noise ratio")
    parser.add_argument("--eps", type=float, help="recovery accuracy parameter")
    parser.add_argument("--delta", type=float, help="per-stage failure parameter")
    parser.add_argument("--trials", type=int, help="number of Monte-Carlo trials")
    parser.add_argument("--seed", type=int, help="master seed (64-bit)")
    parser.add_argument("--out", help="output path stem")
    parser.add_argument("--generator", choices=GENERATORS, help="signal family")
    parser.add_argument("--noise", choices=NOISE_MODELS, help="noise model")
    parser.add_argument(
        "--profile", choices=sorted(PROFILES), help="pipeline constants profile"
    )
    parser.add_argument("--workers", type=int, help="parallel trial workers")


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    base = (
        ExperimentConfig.from_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    merged = asdict(base)
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    return ExperimentConfig(**merged)


def _cmd_gen(config: ExperimentConfig) -> int:
    x, truth, mu2, snr_val = gen_signal(config, stream(config.seed, "gen", 0))
    signal_path = config.out + ".bsft"
    write_signal(signal_path, x)
    sidecar = {
        "config": asdict(config),
        "version": git_version(),
        "mu2": mu2,
        "snr": snr_val if snr_val != float("inf") else "inf",
        "truth": {str(f): [truth[f].real, truth[f].imag] for f in truth},
    }
    with open(config.out + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {signal_path} (n={config.n}) and {config.out}.json")
    return 0


def _cmd_run(config: ExperimentConfig) -> int:
    records = run_experiment(config)
    print(f"# config: {' '.join(f'{k}={v}' for k, v in asdict(config).items())}")
    print(f"# version: {git_version()}")
    if records:
        rate = sum(r["success"] for r in records) / len(records)
        ratios = sorted(r["sample_ratio"] for r in records)
        print(
            f"{len(records)} trials: success rate {rate:.2f}, "
            f"median samples/n {ratios[len(ratios) // 2]:.4f}"
        )
    print(f"wrote {config.out}.jsonl and {config.out}.csv")
    return 0


def _cmd_sweep(config: ExperimentConfig, sizes: list[int]) -> int:
    rows = sweep_sizes(config, sizes)
    print(f"# config: {' '.join(f'{k}={v}' for k, v in asdict(config).items())}")
    print(f"# version: {git_version()}")
    for row in rows:
        print(
            f"n={row['n']}: median samples/n {row['median_ratio']:.4f}, "
            f"success rate {row['success_rate']:.2f}"
        )
    print(f"wrote {config.out}.csv")
    return 0


def _cmd_oracle_check(config: ExperimentConfig, tol: float | None) -> int:
    ok, report = oracle_check(config, tol=tol)
    print(f"# config: {' '.join(f'{k}={v}' for k, v in asdict(config).items())}")
    print(f"# version: {git_version()}")
    for line in report:
        print(line)
    return 0 if ok else _CHECK_FAILURE


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="blocksft",
        description="Adaptive block-sparse Fourier transform experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a test signal with ground truth")
    _add_config_flags(p_gen)

    p_run = sub.add_parser("run", help="run recovery trials, write JSON-lines + CSV")
    _add_config_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run trials across a ladder of sizes")
    _add_config_flags(p_sweep)
    p_sweep.add_argument(
        "--sizes",
        type=int,
        nargs="+",
        default=[1 << 14, 1 << 16, 1 << 18, 1 << 20],
        help="signal lengths to sweep",
    )

    p_check = sub.add_parser("oracle-check", help="cross-oracle agreement suite")
    _add_config_flags(p_check)
    p_check.add_argument(
        "--tol", type=float, default=None, help="override every check bound"
    )

    args = parser.parse_args(argv)
    try:
        config = _build_config(args)
        if args.command == "gen":
            return _cmd_gen(config)
        if args.command == "run":
            return _cmd_run(config)
        if args.command == "sweep":
            return _cmd_sweep(config, args.sizes)
        return _cmd_oracle_check(config, args.tol)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
