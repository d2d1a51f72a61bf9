"""Command-line interface: ``flowgdp <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .dataio import DEFAULT_NAMES, load_dataset, write_dataset
from .errors import FlowGdpError
from .model import validate
from .pipeline import PipelineConfig, report_errors, run_pipeline
from .serialize import atomic_write_text, dumps, write_json
from .synth import synth_dataset

STAGE_COMMANDS = {
    "features": "features",
    "regress": "regression",
    "gravity": "gravity",
    "network": "network",
    "pca": "pca",
    "distfit": "distfit",
}


def _common(p: argparse.ArgumentParser, *, data: bool = True) -> None:
    if data:
        p.add_argument("--data", metavar="DIR", help="directory holding cities/flows/distances/gdp CSVs")
        p.add_argument("--cities-csv", metavar="PATH")
        p.add_argument("--flows-csv", metavar="PATH")
        p.add_argument("--distances-csv", metavar="PATH")
        p.add_argument("--gdp-csv", metavar="PATH")
        p.add_argument("--year", type=int, action="append", help="analysis year (repeatable)")
        p.add_argument("--class", dest="vclass", action="append", choices=["carbus", "truck"],
                       help="vehicle class (repeatable)")
        p.add_argument("--method", action="append", help="estimator (repeatable)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", metavar="FILE", help="JSON file with PipelineConfig fields")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowgdp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"flowgdp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset and list every violation")
    _common(p)

    for name, stage in STAGE_COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {stage} stage only")
        _common(p)
        if name == "network":
            p.add_argument("--damping", type=float)
        if name == "pca":
            p.add_argument("--loading-threshold", type=float)
            p.add_argument("--score-threshold", type=float)
            p.add_argument("--component", type=int, action="append")
            p.add_argument("--signed", action="store_true", default=None)
            p.add_argument("--covariance", action="store_true", help="no column scaling")
            p.add_argument("--include-diagonal", action="store_true", default=None)
        if name == "distfit":
            p.add_argument("--bootstrap-n", type=int)
        if name == "gravity":
            p.add_argument("--null-mode", choices=["loglog", "raw"])

    p = sub.add_parser("run", help="run every stage")
    _common(p)
    p.add_argument("--bootstrap-n", type=int)

    p = sub.add_parser("synth", help="write a synthetic dataset and its ground truth")
    _common(p, data=False)
    p.add_argument("--n-cities", type=int, default=13)
    p.add_argument("--years", type=int, nargs="+", default=[2014, 2015, 2016, 2017])
    p.add_argument("--beta", type=float, nargs="+", default=None,
                   help="cars & buses decay per year (default decreasing from 2.0)")
    p.add_argument("--flow-sigma", type=float, default=0.05)
    p.add_argument("--gdp-sigma", type=float, default=0.0)
    return parser


def _config(args, stages=None) -> PipelineConfig:
    over = {
        "data_dir": args.data,
        "cities": args.cities_csv,
        "flows": args.flows_csv,
        "distances": args.distances_csv,
        "gdp": args.gdp_csv,
        "out_dir": args.out,
        "years": args.year,
        "classes": args.vclass,
        "seed": args.seed,
        "stages": stages,
        "damping": getattr(args, "damping", None),
        "loading_threshold": getattr(args, "loading_threshold", None),
        "score_threshold": getattr(args, "score_threshold", None),
        "pca_components": getattr(args, "component", None),
        "pca_signed": getattr(args, "signed", None),
        "pca_include_diagonal": getattr(args, "include_diagonal", None),
        "bootstrap_n": getattr(args, "bootstrap_n", None),
        "null_mode": getattr(args, "null_mode", None),
    }
    if getattr(args, "covariance", False):
        over["pca_standardize"] = False
    if args.method:
        key = "gravity_methods" if stages == ["gravity"] else "regression_methods"
        over[key] = args.method
    if args.config:
        return PipelineConfig.from_file(args.config, **over)
    return PipelineConfig(**{k: v for k, v in over.items() if v is not None})


def _cmd_validate(args) -> int:
    cfg = _config(args)
    paths = cfg.input_paths()
    ds = load_dataset(paths["cities"], paths["flows"], paths["distances"], paths["gdp"], check=False)
    rep = validate(ds)
    text = dumps(rep.to_dict())
    if args.out:
        atomic_write_text(Path(args.out) / "validation.json", text)
    sys.stdout.write(text)
    return 0 if rep.ok else 1


def _cmd_synth(args) -> int:
    years = args.years
    beta = args.beta or [round(2.0 - 0.1 * k, 10) for k in range(len(years))]
    ds, truth = synth_dataset(args.n_cities, years, beta, args.seed or 0,
                              flow_sigma=args.flow_sigma, gdp_sigma=args.gdp_sigma)
    out = Path(args.out or "synthetic")
    write_dataset(ds, out)
    write_json(out / "truth.json", truth)
    print(f"wrote {', '.join(DEFAULT_NAMES.values())} and truth.json to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "synth":
            return _cmd_synth(args)
        stages = None if args.command == "run" else [STAGE_COMMANDS[args.command]]
        result = run_pipeline(_config(args, stages))
    except FlowGdpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report_errors(result)
    for path in result.written:
        logging.getLogger("flowgdp").info("wrote %s", path)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
