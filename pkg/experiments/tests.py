import json, os, tempfile

from dataclasses   import replace
from io            import StringIO
from unittest.mock import patch

import numpy as np

from django.core.management      import call_command
from django.core.management.base import CommandError
from django.test                 import Client, SimpleTestCase, TestCase

from core.exceptions     import InfeasibleStanceError
from experiments.metrics import PARAMETERS, TRACKS, time_to_convergence
from experiments.models  import Run
from experiments.runner  import compare, run_experiment, sweep
from experiments.traces  import TRACE_COLUMNS, read_csv
from simulator.scenarios import GaitSchedule, resolve_scenario

THRESHOLDS = np.array([0.695, 0.12, 0.11])

GOLDEN_HEADER = (
    'time,true_m,true_h_x,true_h_y,kf_m,kf_h_x,kf_h_y,rls_m,rls_h_x,rls_h_y,'
    'kf_p_m,kf_p_h_x,kf_p_h_y,gated_mask,fresh,event,pub_m,pub_h_x,pub_h_y'
)


def run_command(name, *args):
    return call_command(name, *args, stdout=StringIO())


def write_scenario(directory, document, name='scenario.json'):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(document, handle)
    return path


def quiet_trot(duration=12.0):
    return replace(resolve_scenario('offcenter_payload'), duration=duration, payload_events=())


class TraceSchemaTest(SimpleTestCase):
    def test_golden_header(self):
        self.assertEqual(','.join(TRACE_COLUMNS), GOLDEN_HEADER)

    def test_time_to_convergence(self):
        times = np.arange(5) * 0.1

        self.assertEqual(time_to_convergence(times, np.array([1.0, 0.2, 0.9, 0.1, 0.0]), 0.5, 0.5), (0.30000000000000004, True))
        self.assertEqual(time_to_convergence(times, np.zeros(5), 0.5, 0.5), (0.0, True))
        self.assertEqual(time_to_convergence(times, np.array([0.0, 0.0, 0.0, 0.0, 0.7]), 0.5, 0.5), (0.5, False))


class RunCommandTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out       = self.directory.name

    def tearDown(self):
        self.directory.cleanup()

    def test_run_writes_trace_and_report(self):
        run_command('run', '--scenario', 'stand_then_trot', '--seed', '4', '--out', self.out)

        with open(os.path.join(self.out, 'trace.csv'), encoding='utf-8', newline='') as handle:
            header = handle.readline().rstrip('\r\n')
        rows  = read_csv(os.path.join(self.out, 'trace.csv'))
        times = [float(row['time']) for row in rows]

        self.assertEqual(header, GOLDEN_HEADER)
        self.assertEqual(len(rows), 2500)
        self.assertTrue(all(later > earlier for earlier, later in zip(times, times[1:])))
        self.assertTrue(os.path.exists(os.path.join(self.out, 'report.txt')))
        self.assertFalse(os.path.exists(os.path.join(self.out, 'snapshots.csv')))

    def test_identical_invocations_give_identical_files(self):
        first, second = os.path.join(self.out, 'first'), os.path.join(self.out, 'second')

        run_command('run', '--scenario', 'stand_then_trot', '--seed', '11', '--out', first)
        run_command('run', '--scenario', 'stand_then_trot', '--seed', '11', '--out', second)

        for name in ('trace.csv', 'report.txt'):
            with open(os.path.join(first, name), 'rb') as one, open(os.path.join(second, name), 'rb') as other:
                self.assertEqual(one.read(), other.read())

    def test_snapshot_export(self):
        run_command('run', '--scenario', 'noiseless_trot', '--out', self.out, '--snapshots')

        rows = read_csv(os.path.join(self.out, 'snapshots.csv'))

        self.assertEqual(len(rows), 4 * 2000)
        self.assertEqual([row['foot'] for row in rows[:4]], ['0', '1', '2', '3'])

    def test_unknown_scenario_is_a_usage_error(self):
        with self.assertRaises(CommandError) as context:
            run_command('run', '--scenario', 'no_such_scenario', '--out', self.out)

        self.assertEqual(context.exception.returncode, 2)

    def test_malformed_scenario_names_the_line(self):
        path = os.path.join(self.out, 'broken.json')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write('{\n  "name": "broken",\n  "duration": 2.0\n  "tick_rate": 100.0\n}\n')

        with self.assertRaises(CommandError) as context:
            run_command('run', '--scenario', path, '--out', self.out)

        self.assertEqual(context.exception.returncode, 2)
        self.assertIn('line=4', str(context.exception))

    def test_infeasible_stance_exits_with_simulation_code(self):
        path = write_scenario(self.out, {
            'name'           : 'infeasible',
            'duration'       : 2.0,
            'gait_timeline'  : [{'pattern': 'trot', 'start_time': 0.0}],
            'payload_events' : [{'time': 1.0, 'mass_delta': 10.0, 'attach_point': [1.5, 0.0]}],
        })

        with self.assertRaises(CommandError) as context:
            run_command('run', '--scenario', path, '--out', self.out)

        self.assertEqual(context.exception.returncode, 3)
        self.assertIn('tick=100', str(context.exception))

    def test_invalid_settings_in_a_scenario_are_usage_errors(self):
        overrides = [
            {'estimator': {'kf': {'r': [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]}}},
            {'estimator': {'kf': {'q': 'abc'}}},
            {'estimator': {'kf': {'q': [1.0, 2.0]}}},
            {'estimator': {'rls': {'forgetting': 1.5}}},
            {'estimator': {'adaptation': {'publish_policy': 'bogus'}}},
            {'noise': {'seed': 'x'}},
            {'noise': {'detection_lag': 1.5}},
        ]
        for override in overrides:
            path = write_scenario(self.out, {
                'name'          : 'misconfigured',
                'duration'      : 1.0,
                'gait_timeline' : [{'pattern': 'trot', 'start_time': 0.0}],
                **override,
            })

            with self.assertRaises(CommandError, msg=override) as context:
                run_command('run', '--scenario', path, '--out', self.out)

            self.assertEqual(context.exception.returncode, 2, override)
            self.assertIn('INVALID_SCENARIO', str(context.exception))


class RunReportTest(SimpleTestCase):
    def test_estimators_consume_the_same_stream(self):
        report = run_experiment(resolve_scenario('stand_then_trot')).report

        self.assertEqual(report.stream_digests['kf'], report.stream_digests['rls'])

    def test_metrics_are_finite(self):
        report = run_experiment(resolve_scenario('standing_bias').with_seed(2)).report

        for track in TRACKS:
            values = report.tracks[track].flat()
            self.assertTrue(all(np.isfinite(value) for value in values.values()))
            self.assertTrue(0.0 <= values['duty_cycle'] <= 1.0)

    def test_noiseless_stream_converges(self):
        report = run_experiment(resolve_scenario('noiseless_trot')).report

        for track in TRACKS:
            self.assertLess(report.metric(track, 'terminal_error_m'), 1e-3)
            self.assertTrue(report.tracks[track].converged['m'])

    def test_standing_only_never_publishes(self):
        scenario = replace(
            resolve_scenario('stand_then_trot'), duration=5.0,
            gait_timeline=(GaitSchedule(pattern='stand', phase_duration=0.35),),
        )

        report = run_experiment(scenario).report

        self.assertEqual(report.tracks['published'].duty_cycle, 0.0)


class AcceptanceTest(SimpleTestCase):
    def test_covariance_drops_when_stepping_starts(self):
        for seed in range(10):
            rows = run_experiment(resolve_scenario('stand_then_trot').with_seed(seed)).rows

            standing = np.array([row.kf_p for row in rows if row.time < 10.0])
            stepping = np.array([row.kf_p for row in rows if 10.0 <= row.time <= 20.0])

            self.assertTrue(np.all(standing > THRESHOLDS), seed)
            self.assertTrue(np.any(np.all(stepping < THRESHOLDS, axis=1)), seed)

    def test_mass_estimate_tracks_payload_switches(self):
        scenario = resolve_scenario('payload_switching')
        ends     = [event.time for event in scenario.payload_events[1:]] + [scenario.duration]
        windows  = [(event.time + 5.0, end) for event, end in zip(scenario.payload_events, ends) if event.mass_delta > 0]

        for seed in range(10):
            rows = run_experiment(scenario.with_seed(seed)).rows
            for start, end in windows:
                errors = [abs(row.kf[0] - row.true[0]) for row in rows if start <= row.time < end]

                self.assertTrue(errors)
                self.assertLessEqual(max(errors), 0.5, (seed, start))

    def test_published_model_resists_standing_bias_better_than_rls(self):
        scenario = resolve_scenario('standing_bias')
        wins     = 0

        for seed in range(20):
            final = run_experiment(scenario.with_seed(seed)).rows[-1]
            wins += abs(final.published[0] - final.true[0]) < abs(final.rls[0] - final.true[0])

        self.assertGreaterEqual(wins, 18)

    def test_offcenter_payload_com_is_recovered(self):
        scenario = resolve_scenario('offcenter_payload')
        rows     = run_experiment(scenario).rows
        tail     = rows[int(len(rows) * 0.75):]

        estimated = np.mean([row.published[1] / row.published[0] for row in tail])
        true      = tail[-1].true[1] / tail[-1].true[0]

        self.assertAlmostEqual(true, (0.142648 + 0.25445) / (16.21 + 2.5445), places=12)
        self.assertLess(abs(estimated - true), 0.003)


class CompareTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out       = self.directory.name

    def tearDown(self):
        self.directory.cleanup()

    def test_single_seed_has_zero_spread(self):
        rows, _ = compare(quiet_trot(3.0), [5], out_dir=self.out)

        self.assertTrue(all(row['n'] == 1 and row['std'] == 0.0 and row['single_seed'] for row in rows))
        written = read_csv(os.path.join(self.out, 'compare.csv'))
        self.assertEqual(list(written[0].keys()), ['estimator', 'metric', 'n', 'mean', 'std', 'single_seed'])
        self.assertEqual(len(written), len(rows))

    def test_statistics_over_seeds(self):
        rows, reports = compare(quiet_trot(3.0), [1, 2, 3])

        row    = next(row for row in rows if row['estimator'] == 'rls' and row['metric'] == 'final_mae_m')
        values = [report.metric('rls', 'final_mae_m') for report in reports]

        self.assertEqual(row['n'], 3)
        self.assertAlmostEqual(row['mean'], np.mean(values), places=12)
        self.assertAlmostEqual(row['std'], np.std(values, ddof=1), places=12)
        self.assertFalse(row['single_seed'])

    def test_compare_command(self):
        run_command('compare', '--scenario', 'noiseless_trot', '--seeds', '1,2', '--out', self.out)

        rows = read_csv(os.path.join(self.out, 'compare.csv'))

        self.assertEqual({row['estimator'] for row in rows}, set(TRACKS))
        self.assertTrue(all(row['n'] == '2' for row in rows))

    def test_empty_seed_list_is_a_usage_error(self):
        with self.assertRaises(CommandError) as context:
            run_command('compare', '--scenario', 'noiseless_trot', '--seeds', '', '--out', self.out)

        self.assertEqual(context.exception.returncode, 2)
        self.assertFalse(os.path.exists(os.path.join(self.out, 'compare.csv')))


class SweepTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out       = self.directory.name

    def tearDown(self):
        self.directory.cleanup()

    def results(self, rows, estimator, metric):
        return [row['result'] for row in rows if row['estimator'] == estimator and row['metric'] == metric]

    def test_noise_scale_trend(self):
        rows = sweep(quiet_trot(), 'noise-scale', ['0.5', '1', '2', '4'], seed=3)

        errors = self.results(rows, 'kf', 'final_mae_m')

        self.assertEqual(len(errors), 4)
        self.assertTrue(all(later >= earlier for earlier, later in zip(errors, errors[1:])))

    def test_forgetting_trades_noise_for_lag(self):
        rows = sweep(quiet_trot(), 'forgetting', ['0.8', '0.95', '1.0'], seed=3)

        errors = self.results(rows, 'rls', 'final_mae_m')

        self.assertGreater(errors[0], errors[-1])

    def test_single_value_matches_a_run(self):
        scenario = quiet_trot(3.0)
        rows     = sweep(scenario, 'forgetting', ['0.8'], seed=6)
        report   = run_experiment(scenario.with_seed(6)).report

        for row in rows:
            self.assertEqual(row['result'], report.metric(row['estimator'], row['metric']))

    def test_publish_policy_ablation(self):
        rows = sweep(quiet_trot(3.0), 'publish-policy', ['all-below', 'per-parameter', 'latched'], seed=1)

        self.assertEqual({row['value'] for row in rows}, {'all-below', 'per-parameter', 'latched'})

    def test_sweep_command_writes_long_format(self):
        run_command('sweep', '--scenario', 'noiseless_trot', '--param', 'thresholds', '--values', '0.5,1',
                    '--seed', '2', '--out', self.out)

        rows = read_csv(os.path.join(self.out, 'sweep.csv'))

        self.assertEqual(list(rows[0].keys()), ['parameter', 'value', 'estimator', 'metric', 'result'])
        self.assertEqual({row['value'] for row in rows}, {'0.5', '1.0'})
        self.assertTrue(all(row['parameter'] == 'thresholds' for row in rows))

    def test_invalid_values_are_usage_errors(self):
        for values in ('1.5', 'abc', ''):
            with self.assertRaises(CommandError) as context:
                run_command('sweep', '--scenario', 'noiseless_trot', '--param', 'forgetting', '--values', values,
                            '--out', self.out)

            self.assertEqual(context.exception.returncode, 2)


class ReportServiceTest(TestCase):
    def setUp(self):
        self.client = Client()

    def test_run_is_recorded_and_listed(self):
        response = self.client.post('/runs', json.dumps({'scenario': 'noiseless_trot', 'seed': 1}),
                                    content_type='application/json')

        self.assertEqual(response.status_code, 201)
        run_id = response.json()['id']
        self.assertEqual(Run.objects.count(), 1)

        listed = self.client.get('/runs').json()['runs']
        self.assertEqual([run['id'] for run in listed], [run_id])
        self.assertEqual(self.client.get('/runs?scenario=standing_bias').json()['runs'], [])

        detail = self.client.get(f'/runs/{run_id}').json()['run']
        self.assertEqual(detail['scenario'], 'noiseless_trot')
        self.assertEqual(set(detail['report']['tracks']), set(TRACKS))
        self.assertEqual(set(detail['report']['tracks']['kf']['terminal_error']), set(PARAMETERS))

    def test_missing_run(self):
        response = self.client.get('/runs/999')

        self.assertEqual(response.status_code, 404)
        self.assertEqual(response.json()['MESSAGE'], 'NO_RUN')

    def test_bad_requests(self):
        missing = self.client.post('/runs', json.dumps({'seed': 1}), content_type='application/json')
        unknown = self.client.post('/runs', json.dumps({'scenario': 'moon_walk'}), content_type='application/json')

        self.assertEqual(missing.json()['MESSAGE'], 'KEY_ERROR')
        self.assertEqual(unknown.status_code, 404)
        self.assertEqual(Run.objects.count(), 0)

    def test_body_must_be_a_json_object(self):
        for body in ('[]', '"noiseless_trot"', '42', '{"scenario": '):
            response = self.client.post('/runs', body, content_type='application/json')

            self.assertEqual(response.status_code, 400, body)
            self.assertEqual(response.json()['MESSAGE'], 'INVALID_JSON', body)

        self.assertEqual(Run.objects.count(), 0)

    def test_record_flag_of_the_run_command(self):
        with tempfile.TemporaryDirectory() as out:
            run_command('run', '--scenario', 'noiseless_trot', '--seed', '3', '--out', out, '--record')

        run = Run.objects.get()
        self.assertEqual((run.scenario_name, run.seed), ('noiseless_trot', 3))

    @patch('experiments.views.run_experiment', side_effect=InfeasibleStanceError('negative normal force'))
    def test_failed_run_is_not_recorded(self, run_experiment):
        response = self.client.post('/runs', json.dumps({'scenario': 'noiseless_trot', 'seed': 2}),
                                    content_type='application/json')

        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()['MESSAGE'], 'INFEASIBLE_STANCE')
        self.assertEqual(Run.objects.count(), 0)
        run_experiment.assert_called_once()
