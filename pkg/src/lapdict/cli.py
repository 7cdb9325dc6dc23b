"""Command line entry point: ``lapdict {gen|train|classify|bench}``.

Exit codes: 0 success, 2 invalid configuration, 3 file input/output failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import io as lio
from .classify import evaluate, reports_to_csv
from .exceptions import FormatError, InvalidParameterError
from .experiments import (ExperimentConfig, classify_method, make_data, report_payload,
                          run_exp1, run_exp2, train_method)

EXIT_CONFIG = 2
EXIT_IO = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lapdict",
                                description="Laplacian-structured dictionary learning benchmarks")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [("gen", "generate train/test datasets (LDS1)"),
                       ("train", "train per-class models on a dataset"),
                       ("classify", "classify a test dataset with saved models"),
                       ("bench", "run a full experiment and write reports")]:
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="JSON experiment configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--scale", type=float)
        sp.add_argument("--method", action="append",
                        help="method to run (repeatable); defaults to the experiment's methods")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--data", help="directory holding train.lds/test.lds (default: --out)")
        sp.add_argument("--csv", action="store_true", help="gen: also write CSV exports")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args) -> ExperimentConfig:
    return ExperimentConfig.from_json(args.config, seed=args.seed, scale=args.scale,
                                      methods=args.method, out=args.out)


def _layout(cfg):
    return "matrix-2d" if cfg.experiment == "exp1" else "graph-signal"


def _read_laplacians(d: Path) -> dict:
    return {int(p.stem.removeprefix("laplacian_class")): lio.read_matrix(p)
            for p in sorted(d.glob("laplacian_class*.ldm"))}


def cmd_gen(cfg, args) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test, Ls = make_data(cfg)
    lio.write_dataset(out / "train.lds", train)
    lio.write_dataset(out / "test.lds", test)
    for c, L in Ls.items():
        lio.write_matrix(out / f"laplacian_class{c}.ldm", L)
    if args.csv:
        lio.write_dataset_csv(out / "train.csv", train)
        lio.write_dataset_csv(out / "test.csv", test)


def cmd_train(cfg, args) -> None:
    data = Path(args.data or cfg.out)
    train = lio.read_dataset(data / "train.lds", _layout(cfg))
    Ls = _read_laplacians(data)
    for method in cfg.methods:
        models = train_method(method, train, cfg, Ls)
        lio.save_models(Path(cfg.out) / "models" / method, method, models,
                        {"s": cfg.sbo_s if method == "sbo" else cfg.s, "seed": cfg.seed})


def cmd_classify(cfg, args) -> None:
    data = Path(args.data or cfg.out)
    test = lio.read_dataset(data / "test.lds", _layout(cfg))
    reports = {}
    for method in cfg.methods:
        saved, models, _ = lio.load_models(Path(cfg.out) / "models" / method)
        if saved != method:
            raise FormatError(f"model directory holds {saved!r}, expected {method!r}")
        t0 = time.perf_counter()
        pred = classify_method(method, models, test, cfg)
        reports[method] = evaluate(test.labels, pred, classes=[0, 1],
                                   runtime=time.perf_counter() - t0,
                                   config={"method": method, **cfg.echo()})
    out = Path(cfg.out)
    (out / "report.json").write_text(json.dumps(report_payload(cfg, reports), indent=2) + "\n")
    (out / "report.csv").write_text(reports_to_csv(reports))


def cmd_bench(cfg, args) -> None:
    if cfg.experiment == "exp1":
        reports = run_exp1(cfg)
    else:
        reports, _ = run_exp2(cfg)
    for method, rep in reports.items():
        print(f"{cfg.experiment} {method}: accuracy {100 * rep.accuracy:.2f}%")


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "classify": cmd_classify, "bench": cmd_bench}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except InvalidParameterError as exc:
        print(f"lapdict: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        print(f"lapdict: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        COMMANDS[args.command](cfg, args)
    except InvalidParameterError as exc:
        print(f"lapdict: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError, KeyError) as exc:
        print(f"lapdict: i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
