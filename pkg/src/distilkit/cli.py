"""Command-line interface.

Subcommands: train-teacher, adapt, compare, gradcheck, gen-data.
Exit codes: 0 success, 2 config error, 3 I/O error, 4 training
divergence, 5 gradient-check failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    CheckpointError,
    ConfigError,
    DistilkitError,
    InvalidParameterError,
    TrainingDivergedError,
)
from .harness import (
    GRADCHECK_TOLERANCE,
    ExperimentConfig,
    config_from_file,
    gradcheck_report,
    rows_to_csv,
    run_adapt,
    run_compare,
    run_gen_data,
    run_train_teacher,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_GRADCHECK = 5


def _parse_seed_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"--seed expects a comma-separated integer list, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distilkit",
        description="Teacher-student adaptation experiments on synthetic benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_method=True):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--seed", help="comma-separated seed list, e.g. 1,2,3")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json", "table"), default=None, help="stdout format")
        if with_method:
            p.add_argument("--method", help="hard | soft_ts | interpolated | conditional | wrong_only")
            p.add_argument("--lambda", dest="lam", type=float, help="interpolation weight in [0, 1]")

    add_common(sub.add_parser("train-teacher", help="train the clean-domain teacher"), with_method=False)
    add_common(sub.add_parser("adapt", help="run one adaptation method for every seed"))
    add_common(sub.add_parser("compare", help="run a method comparison and print the table"))

    g = sub.add_parser("gradcheck", help="finite-difference check of all loss gradients")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--nets", type=int, default=10, help="random nets per loss")
    g.add_argument("--step", type=float, default=1e-5, help="finite-difference step")

    d = sub.add_parser("gen-data", help="write the benchmark datasets as CSV")
    d.add_argument("--config", help="JSON config file; flags override its fields")
    d.add_argument("--seed", help="data seed (single integer)")
    d.add_argument("--out", help="output directory")
    d.add_argument("--format", choices=("csv", "json", "table"), default=None)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = config_from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "method", None):
        overrides["method"] = args.method
        if args.method != "interpolated":
            overrides["lam"] = None
    if getattr(args, "lam", None) is not None:
        overrides["lam"] = args.lam
    if getattr(args, "seed", None):
        if args.command == "gen-data":
            overrides["data_seed"] = int(args.seed)
        else:
            overrides["seeds"] = _parse_seed_list(args.seed)
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    try:
        return config.replace(**overrides) if overrides else config
    except (ConfigError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gradcheck":
            report = gradcheck_report(num_nets=args.nets, step=args.step, seed=args.seed)
            failed = {k: v for k, v in report.items() if v > GRADCHECK_TOLERANCE}
            print(f"{'loss':<16}{'max_rel_error':>16}  status")
            for name, worst in report.items():
                status = "ok" if worst <= GRADCHECK_TOLERANCE else "FAIL"
                print(f"{name:<16}{worst:>16.3e}  {status}")
            if failed:
                print(f"gradcheck failed for: {sorted(failed)}", file=sys.stderr)
                return EXIT_GRADCHECK
            return EXIT_OK

        config = _load_config(args)

        if args.command == "train-teacher":
            _, metrics, ckpt_path = run_train_teacher(config)
            print(f"checkpoint: {ckpt_path}")
            for key in sorted(metrics):
                print(f"{key}: {metrics[key]}")
            return EXIT_OK

        if args.command == "adapt":
            rows, csv_path, json_path = run_adapt(config)
            if args.format == "csv":
                print(rows_to_csv(rows), end="")
            else:
                for row in rows:
                    print(
                        f"{row.method} {row.scenario}/{row.split} seed={row.seed} "
                        f"accuracy={row.accuracy:.4f} loss={row.loss:.6f} "
                        f"teacher_acc={row.teacher_acc:.4f} soft_fraction={row.soft_fraction:.4f}"
                    )
            print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
            return EXIT_OK

        if args.command == "compare":
            rows, _metrics, table, csv_path, json_path = run_compare(config)
            if args.format == "csv":
                print(rows_to_csv(rows), end="")
            else:
                print(table, end="")
            print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
            return EXIT_OK

        if args.command == "gen-data":
            for path in run_gen_data(config):
                print(path)
            return EXIT_OK

        raise ConfigError(f"unknown command {args.command!r}")
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, PermissionError, IsADirectoryError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DistilkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
