from contextlib import redirect_stderr, redirect_stdout
import io
import json
import os
import shutil
import tempfile
from unittest import TestCase

from liuw.cli import ABLATIONS, main
from liuw.outputs import (ABLATION_HEADER, DEGRADATION_FILE, MAP_FILE,
                          METRICS_FILE, MODES_FILE, MODES_HEADER,
                          TRAJECTORY_FILE)

TINY = """\
simulator:
  duration: 3.0
  lidar_columns: 30
  lidar_rings: 12
"""


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)

    return code, out.getvalue(), err.getvalue()


class TestCli(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmpdir = tempfile.mkdtemp()
        cls.config = os.path.join(cls.tmpdir, 'tiny.yaml')
        with open(cls.config, 'w') as f:
            f.write(TINY)

        cls.log = os.path.join(cls.tmpdir, 'tiny.jsonl')
        cls.sim = call(['simulate', '--config', cls.config, '--seed', '3',
                        '--out', cls.log])

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmpdir)

    def path(self, *names):
        return os.path.join(self.tmpdir, *names)

    def test_simulate(self):
        code, out, _ = self.sim
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "# seed 3")
        self.assertTrue(lines[1].startswith("imu "))
        self.assertEqual(len(lines), 7)

    def test_simulate_is_reproducible(self):
        again = self.path('again.jsonl')
        code, _, _ = call(['simulate', '--config', self.config, '--seed', '3',
                           '--out', again])
        self.assertEqual(code, 0)
        with open(self.log, 'rb') as a, open(again, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_run_and_eval(self):
        out_dir = self.path('run')
        code, out, _ = call(['run', '--log', self.log, '--out-dir', out_dir])
        self.assertEqual(code, 0)
        self.assertEqual(sorted(os.listdir(out_dir)),
                         sorted([TRAJECTORY_FILE, DEGRADATION_FILE,
                                 MODES_FILE, MAP_FILE, METRICS_FILE]))
        printed = json.loads(out)
        self.assertEqual(printed['N'], 15)

        with open(os.path.join(out_dir, METRICS_FILE)) as f:
            self.assertEqual(sorted(json.load(f)),
                             ['AvgErr', 'N', 'TotalErr', 'final_error'])

        with open(os.path.join(out_dir, MODES_FILE)) as f:
            rows = f.read().splitlines()
        self.assertEqual(rows[0], ",".join(MODES_HEADER))
        self.assertTrue(rows[1].split(',')[1] in ('LIU', 'LIO', 'LIW'))

        with open(os.path.join(out_dir, TRAJECTORY_FILE)) as f:
            first = f.readline().split()
        self.assertEqual(len(first), 8)

        code, out, _ = call(['eval', '--trajectory',
                             os.path.join(out_dir, TRAJECTORY_FILE),
                             '--log', self.log, '--checkpoints', '5'])
        self.assertEqual(code, 0)
        metrics = json.loads(out)
        self.assertEqual(metrics['N'], 5)
        self.assertAlmostEqual(metrics['AvgErr'], metrics['TotalErr'] / 5)

    def test_ablate(self):
        out_dir = self.path('ablate')
        code, _, _ = call(['ablate', '--log', self.log, '--out-dir', out_dir])
        self.assertEqual(code, 0)
        with open(os.path.join(out_dir, 'ablation.csv')) as f:
            rows = f.read().splitlines()

        self.assertEqual(rows[0], ",".join(ABLATION_HEADER))
        self.assertEqual([r.split(',')[0] for r in rows[1:]],
                         [a[0] for a in ABLATIONS])

    def test_corrupt_log(self):
        with open(self.log) as f:
            lines = f.read().splitlines()

        lines[6] = lines[6][:-3]
        bad = self.path('bad.jsonl')
        with open(bad, 'w') as f:
            f.write("\n".join(lines) + "\n")

        code, _, err = call(['run', '--log', bad, '--out-dir',
                             self.path('bad')])
        self.assertEqual(code, 2)
        self.assertIn("line 7", err)

    def test_missing_log(self):
        code, _, _ = call(['run', '--log', self.path('none.jsonl'),
                           '--out-dir', self.path('none')])
        self.assertEqual(code, 2)

    def test_out_dir_is_a_file(self):
        code, _, _ = call(['run', '--log', self.log, '--out-dir', self.log])
        self.assertEqual(code, 2)

    def test_unknown_config_key(self):
        config = self.path('bogus.yaml')
        with open(config, 'w') as f:
            f.write("pipeline:\n  bogus: 1\n")

        code, _, err = call(['run', '--config', config, '--log', self.log,
                             '--out-dir', self.path('bogus')])
        self.assertEqual(code, 1)
        self.assertIn("pipeline.bogus", err)

    def test_usage_errors(self):
        for argv in ([], ['simulate'], ['fly'], ['eval', '--trajectory',
                                                 'a', '--log', 'b',
                                                 '--checkpoints', 'x']):
            with self.assertRaises(SystemExit) as cm:
                call(argv)

            self.assertEqual(cm.exception.code, 1)

    def test_bad_checkpoints(self):
        code, _, _ = call(['eval', '--trajectory', self.log, '--log',
                           self.log, '--checkpoints', '0'])
        self.assertEqual(code, 1)
