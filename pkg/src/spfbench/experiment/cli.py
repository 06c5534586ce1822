"""Command-line entry point: ``spfbench <command> [--config PATH] ...``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ComparabilityError, ConfigError, FormatError, NumericError
from . import pipeline
from .config import ExperimentConfig

log = logging.getLogger("spfbench")

COMMANDS = ("generate", "fit-reducer", "train", "evaluate", "extrapolate", "noise-eval", "sweep", "report")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="spfbench", description="Autoregressive latent-dynamics training workbench.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="simulate train/val/test trajectories")
    sub.add_parser("fit-reducer", parents=[common], help="fit the field reducer on the training split")
    sub.add_parser("train", parents=[common], help="train a surrogate with the configured framework")
    for name, hlp in (("evaluate", "score a rollout on the test split"),
                      ("extrapolate", "roll out beyond the training time range")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--model", help="model container (default: the run's model)")
    sp = sub.add_parser("noise-eval", parents=[common], help="evaluate with noisy initial inputs")
    sp.add_argument("--model")
    sp.add_argument("--amplitudes", type=float, nargs="+")
    sub.add_parser("sweep", parents=[common], help="train and score SPF over the (p, alpha) grid")
    sp = sub.add_parser("report", parents=[common], help="merge runs into CSV/SVG comparisons")
    sp.add_argument("runs", nargs="*", help="run directories (default: all under OUT/runs)")
    return p


def resolve_config(args):
    cfg = ExperimentConfig.load(args.config, args.override) if args.config \
        else ExperimentConfig().with_overrides(args.override)
    extra = {}
    if args.seed is not None:
        extra["seed"] = args.seed
    if args.out is not None:
        extra["out"] = args.out
    return cfg.replace(**extra) if extra else cfg


def run(args):
    cfg = resolve_config(args)
    cmd = args.command
    if cmd == "generate":
        m = pipeline.cmd_generate(cfg)
        print(f"wrote {sum(s['count'] for s in m['splits'].values())} trajectories to {pipeline.data_dir(cfg)}")
    elif cmd == "fit-reducer":
        _, rows = pipeline.cmd_fit_reducer(cfg)
        for split, v in rows:
            print(f"{split} reconstruction mse {v:.6g}")
    elif cmd == "train":
        res = pipeline.cmd_train(cfg)
        print(f"{cfg.run_name()}: final loss {res.loss_history[-1]:.6g}, peak retained {res.meter.peak} bytes")
    elif cmd == "evaluate":
        _, summary, _ = pipeline.cmd_evaluate(cfg, args.model)
        for k, mu, sd in summary:
            print(f"{k:18s} {mu:.6g} +/- {sd:.3g}")
    elif cmd == "extrapolate":
        m, _ = pipeline.cmd_extrapolate(cfg, args.model)
        print(f"extrapolated {len(m)} steps, final accumulated error {m.acc_error[-1]:.6g}")
    elif cmd == "noise-eval":
        _, rows = pipeline.cmd_noise_eval(cfg, args.model, args.amplitudes)
        for a, L, s1, n, acc, _ in rows:
            print(f"amplitude {a:g} (L={L:g}): ssim@1 {s1:.4f}, steps above threshold {n:.1f}")
    elif cmd == "sweep":
        rows = pipeline.cmd_sweep(cfg)
        print(f"sweep finished: {len(rows)} cells")
    elif cmd == "report":
        _, _, rep = pipeline.cmd_report(cfg, args.runs or None)
        if rep is not None:
            for r in rep.rows:
                print(f"{r.framework:8s} delta={r.delta} peak={r.peak_bytes}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return run(args)
    except (ConfigError, ComparabilityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
