# see LICENSE
"""
Result files of a run

* ``trajectory.tum``: ``t x y z qx qy qz qw`` per line
* ``degradation.csv``: one row per update, see
  :data:`~liuw.estimation.degradation.DEGRADATION_HEADER`
* ``modes.csv``: ``t,mode,in_region,sigma_p1,degraded_p``
* ``metrics.json``: ``{"TotalErr", "AvgErr", "N", "final_error"}``
* ``map.xyz``: one map point per line

Floats carry 9 significant digits.
"""

import csv
import json
import logging
import os

import numpy as np

from liuw.errors import LogFormatError
from liuw.estimation.degradation import DEGRADATION_HEADER
from liuw.evaluation import PositionTrack
from liuw.utils import fmt_sig, round_sig

logger = logging.getLogger(__name__)

MODES_HEADER = ('t', 'mode', 'in_region', 'sigma_p1', 'degraded_p')
ABLATION_HEADER = ('mode', 'TotalErr', 'AvgErr', 'N', 'final_error')

TRAJECTORY_FILE = 'trajectory.tum'
DEGRADATION_FILE = 'degradation.csv'
MODES_FILE = 'modes.csv'
MAP_FILE = 'map.xyz'
METRICS_FILE = 'metrics.json'
ABLATION_FILE = 'ablation.csv'


def write_tum(path, times, positions, quats):
    with open(path, 'w') as f:
        for t, p, q in zip(times, positions, quats):
            f.write(" ".join(fmt_sig(v) for v in [t] + list(p) + list(q)))
            f.write("\n")


def read_tum(path):
    """
    Reads the positions of a TUM trajectory

    :raise LogFormatError: a line does not hold eight numbers
    :rtype: PositionTrack
    """
    times, positions = [], []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue

            fields = line.split()
            if len(fields) != 8:
                raise LogFormatError(lineno, "expected 8 fields, got %d"
                                     % len(fields))
            try:
                values = [float(v) for v in fields]
            except ValueError as e:
                raise LogFormatError(lineno, str(e))

            times.append(values[0])
            positions.append(values[1:4])

    try:
        return PositionTrack(times, positions)
    except ValueError as e:
        raise LogFormatError(0, str(e))


def write_degradation_csv(path, updates):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(DEGRADATION_HEADER)
        for u in updates:
            writer.writerow(u.report.to_row(u.t))


def write_modes_csv(path, updates):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(MODES_HEADER)
        for u in updates:
            writer.writerow([fmt_sig(u.t), str(u.mode), int(u.in_region),
                             fmt_sig(u.report.sigma_p[0]),
                             int(u.report.degraded_p)])


def _rounded(metrics):
    return dict((k, v if isinstance(v, (int, np.integer)) else round_sig(v))
                for k, v in metrics.items())


def write_metrics(path, metrics):
    with open(path, 'w') as f:
        json.dump(_rounded(metrics), f, sort_keys=True)
        f.write("\n")


def write_ablation_csv(path, rows):
    """
    :param rows: (mode label, metrics) pairs in output order
    """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(ABLATION_HEADER)
        for label, m in rows:
            writer.writerow([label, fmt_sig(m['TotalErr']),
                             fmt_sig(m['AvgErr']), m['N'],
                             fmt_sig(m['final_error'])])


def write_run(out_dir, result, metrics=None):
    """
    Writes every result file of a run into ``out_dir``

    The metrics file is skipped when ``metrics`` is None (a log without
    ground truth).

    :return: paths written
    :rtype: list of str
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in
             (TRAJECTORY_FILE, DEGRADATION_FILE, MODES_FILE, MAP_FILE)]
    write_tum(paths[0], result.times, result.positions, result.quats)
    write_degradation_csv(paths[1], result.updates)
    write_modes_csv(paths[2], result.updates)
    result.plane_map.export_xyz(paths[3])
    if metrics is not None:
        paths.append(os.path.join(out_dir, METRICS_FILE))
        write_metrics(paths[-1], metrics)

    for path in paths:
        logger.info("wrote %s" % path)

    return paths
