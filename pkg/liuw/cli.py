# see LICENSE
"""
Command line entry point

::

    liuw simulate [--config FILE] [--seed N] --out LOG
    liuw run      [--config FILE] --log LOG --out-dir DIR
    liuw eval     --trajectory TUM --log LOG [--checkpoints N]
    liuw ablate   [--config FILE] --log LOG --out-dir DIR

Exit status: 0 on success, 1 on a usage or configuration error, 2 when
the data, the pipeline or a file operation fails.
"""

import argparse
from dataclasses import replace
import json
import logging
import os
import sys

from liuw import VERSION
from liuw.config import load_config
from liuw.errors import ConfigError, EmptyStream, LiuwError
from liuw.evaluation import (checkpoint_times, evaluate, evaluate_result,
                             ground_truth_track)
from liuw.outputs import ABLATION_FILE, read_tum, write_ablation_csv, write_run
from liuw.pipeline import run
from liuw.records import count_kinds, read_log, write_log
from liuw.sim import synthesize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# label, enable_uwb, enable_wheel
ABLATIONS = (
    ('LIO+UWB+Wheel', True, True),
    ('LIO+UWB', True, False),
    ('LIO+Wheel', False, True),
    ('LIO', False, False),
)

FORMATS = """\
file formats:
  sensor log   one JSON object per line: {"t": ..., "kind": ..., payload},
               kind one of imu, lidar, wheel, uwb_range, uwb_fix,
               ground_truth; sorted by time
  trajectory   TUM, "t x y z qx qy qz qw" per line
  diagnostics  degradation.csv, modes.csv, map.xyz (x y z per line),
               metrics.json {TotalErr, AvgErr, N, final_error}
  config       YAML with optional "pipeline:" and "simulator:" sections,
               see resources/default.yaml
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    parser = _Parser(prog='liuw', epilog=FORMATS,
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     description="LiDAR-inertial odometry with UWB and "
                                 "wheel constraints for degenerate tunnels")
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + '.'.join(map(str, VERSION)))
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="-v for progress, -vv for per-update detail")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('simulate', help="synthesize a tunnel sensor log")
    p.add_argument('--config', help="YAML file, 'simulator:' section")
    p.add_argument('--seed', type=int, help="noise seed (default: 0 or the "
                                            "configured one)")
    p.add_argument('--out', required=True, help="sensor log to write")

    p = sub.add_parser('run', help="estimate a trajectory from a log")
    p.add_argument('--config', help="YAML file, 'pipeline:' section")
    p.add_argument('--log', required=True, help="sensor log to replay")
    p.add_argument('--out-dir', required=True, help="result directory")

    p = sub.add_parser('eval', help="score a TUM trajectory")
    p.add_argument('--trajectory', required=True, help="TUM file")
    p.add_argument('--log', required=True,
                   help="sensor log holding the ground truth")
    p.add_argument('--checkpoints', type=int, default=15,
                   help="evenly spaced checkpoints (default: 15)")

    p = sub.add_parser('ablate', help="run the four constraint ablations")
    p.add_argument('--config', help="YAML file, 'pipeline:' section")
    p.add_argument('--log', required=True, help="sensor log to replay")
    p.add_argument('--out-dir', required=True, help="result directory")
    return parser


def _metrics(result, n):
    try:
        return evaluate_result(result, n)
    except EmptyStream:
        logger.warning("log has no ground truth, metrics skipped")
        return None


def cmd_simulate(args):
    _, sim = load_config(args.config)
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)

    print("# seed %d" % sim.seed)
    records = synthesize(sim)
    write_log(records, args.out)
    for kind, count in count_kinds(records).items():
        print("%-12s %d" % (kind, count))

    return EXIT_OK


def cmd_run(args):
    cfg, _ = load_config(args.config)
    result = run(read_log(args.log), cfg)
    metrics = _metrics(result, cfg.checkpoints)
    write_run(args.out_dir, result, metrics)
    if metrics is not None:
        print(json.dumps(metrics, sort_keys=True))

    return EXIT_OK


def cmd_eval(args):
    if args.checkpoints < 1:
        raise ConfigError("--checkpoints must be at least 1")

    est = read_tum(args.trajectory)
    gt = ground_truth_track(read_log(args.log))
    metrics = evaluate(est, gt, checkpoint_times(est, gt, args.checkpoints))
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_ablate(args):
    cfg, _ = load_config(args.config)
    records = read_log(args.log)
    rows = []
    for label, enable_uwb, enable_wheel in ABLATIONS:
        logger.info("ablation %s" % label)
        result = run(records, replace(cfg, enable_uwb=enable_uwb,
                                      enable_wheel=enable_wheel))
        metrics = evaluate_result(result, cfg.checkpoints)
        rows.append((label, metrics))
        print("%-14s TotalErr %.3f  AvgErr %.3f"
              % (label, metrics['TotalErr'], metrics['AvgErr']))

    os.makedirs(args.out_dir, exist_ok=True)
    write_ablation_csv(os.path.join(args.out_dir, ABLATION_FILE), rows)
    return EXIT_OK


COMMANDS = {
    'simulate': cmd_simulate,
    'run': cmd_run,
    'eval': cmd_eval,
    'ablate': cmd_ablate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose,
                                                               2)]
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        sys.stderr.write("liuw: configuration error: %s\n" % e)
        return EXIT_USAGE
    except (LiuwError, IOError, OSError, ValueError) as e:
        sys.stderr.write("liuw: %s\n" % e)
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(main())
