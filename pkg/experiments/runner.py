"""
Experiment driver: one scenario, several seeds, or one parameter swept.

Within a run the adaptation pipeline and the RLS baseline consume the same noisy
snapshot, tick by tick. Runs are sequential; a comparison or sweep writes its CSV
only after every run in it has finished.
"""
import hashlib, logging, os

from dataclasses import dataclass, replace

import numpy as np

from adaptation.pipeline import AdaptationConfig, adaptation_tick, gated_mask, initial_published_model
from core.exceptions     import QpiError, UsageError
from core.utils          import atomic_write, timed
from dynamics.regressor  import build_regressor
from estimators.rls      import rls_update
from experiments.metrics import TRACKS, render_report, summarize_run
from experiments.traces  import (COMPARE_COLUMNS, SWEEP_COLUMNS, TraceRow, format_float, write_csv,
                                 write_snapshots, write_trace)
from simulator.engine    import run_scenario

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ('noise-scale', 'forgetting', 'thresholds', 'publish-policy')
PUBLISH_POLICIES = ('all-below', 'per-parameter', 'latched')


@dataclass
class RunResult:
    report    : object
    rows      : list
    snapshots : list


def update_digest(digest, snapshot):
    digest.update(np.float64(snapshot.time).tobytes())
    digest.update(snapshot.base.linear_acceleration.tobytes())
    digest.update(snapshot.foot_positions().tobytes())
    digest.update(snapshot.foot_forces().tobytes())
    digest.update(bytes(foot.contact_measured * 2 + foot.contact_scheduled for foot in snapshot.feet))


@timed
def run_experiment(scenario, out_dir=None, snapshots=False):
    """Run ``scenario`` through both estimators; write ``trace.csv`` and ``report.txt`` into ``out_dir``."""
    kf, rls, config = scenario.estimator_states()
    published       = initial_published_model(kf, config)
    digests         = {'kf': hashlib.sha256(), 'rls': hashlib.sha256()}
    rows, rls_trace, stream = [], [], []
    event = ''

    logger.info('running %s with seed %d', scenario.name, scenario.noise.seed)
    for tick in run_scenario(scenario):
        snapshot = tick.noisy
        try:
            update_digest(digests['kf'], snapshot)
            kf, published = adaptation_tick(snapshot, kf, config, published)

            update_digest(digests['rls'], snapshot)
            rls = rls_update(rls, build_regressor(snapshot))
        except QpiError as error:
            logger.error('estimation failed at tick %d: %s', tick.index, error)
            raise error.at_tick(tick.index)

        event = tick.events[-1] if tick.events else event
        rows.append(TraceRow(
            time       = snapshot.time,
            true       = tuple(tick.pi_true.as_array()),
            kf         = tuple(kf.pi_hat.as_array()),
            rls        = tuple(rls.pi_hat.as_array()),
            kf_p       = tuple(np.diag(kf.P)),
            gated_mask = gated_mask(snapshot.feet),
            fresh      = published.fresh,
            event      = event,
            published  = tuple(published.pi_total.as_array()),
        ))
        rls_trace.append(float(np.trace(rls.P)))
        if snapshots:
            stream.append(snapshot)

    report = summarize_run(scenario, rows, rls_trace, {name: digest.hexdigest() for name, digest in digests.items()})
    result = RunResult(report=report, rows=rows, snapshots=stream)
    if out_dir is not None:
        write_run(result, out_dir)
    return result


def write_run(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_trace(os.path.join(out_dir, 'trace.csv'), result.rows)
    with atomic_write(os.path.join(out_dir, 'report.txt'), newline='\n') as handle:
        handle.write(render_report(result.report))
    if result.snapshots:
        write_snapshots(os.path.join(out_dir, 'snapshots.csv'), result.snapshots)


def aggregate(reports):
    rows = []
    for track in TRACKS:
        names = reports[0].tracks[track].flat().keys()
        for name in names:
            values = np.array([report.metric(track, name) for report in reports])
            std    = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            rows.append({
                'estimator'   : track,
                'metric'      : name,
                'n'           : len(values),
                'mean'        : float(values.mean()),
                'std'         : std,
                'single_seed' : len(values) == 1,
            })
    return rows


@timed
def compare(scenario, seeds, out_dir=None):
    if not seeds:
        raise UsageError('at least one seed is needed')

    reports = [run_experiment(scenario.with_seed(seed)).report for seed in seeds]
    rows    = aggregate(reports)
    if out_dir is not None:
        write_csv(os.path.join(out_dir, 'compare.csv'), COMPARE_COLUMNS, [
            [row['estimator'], row['metric'], str(row['n']), format_float(row['mean']), format_float(row['std']),
             str(row['single_seed']).lower()]
            for row in rows
        ])
    return rows, reports


def parse_sweep_value(parameter, text):
    if parameter not in SWEEP_PARAMETERS:
        raise UsageError('unknown sweep parameter', parameter=parameter)
    if parameter == 'publish-policy':
        if text not in PUBLISH_POLICIES:
            raise UsageError('unknown publish policy', value=text)
        return text

    try:
        value = float(text)
    except ValueError as error:
        raise UsageError('sweep values must be numbers', value=text) from error
    if not np.isfinite(value):
        raise UsageError('sweep values must be finite', value=text)
    if parameter == 'forgetting' and not 0.0 < value <= 1.0:
        raise UsageError('forgetting factor must lie in (0, 1]', value=value)
    if parameter == 'noise-scale' and value < 0.0:
        raise UsageError('noise scale cannot be negative', value=value)
    if parameter == 'thresholds' and not value > 0.0:
        raise UsageError('threshold scale must be positive', value=value)
    return value


def swept_scenario(scenario, parameter, value):
    if parameter == 'noise-scale':
        return replace(scenario, noise=scenario.noise.scaled(value))
    if parameter == 'forgetting':
        return scenario.with_estimator('rls', 'forgetting', value)
    if parameter == 'thresholds':
        thresholds = scenario.estimator.get('adaptation', {}).get('thresholds')
        if thresholds is None:
            thresholds = AdaptationConfig.from_settings().thresholds
        return scenario.with_estimator('adaptation', 'thresholds', (np.asarray(thresholds) * value).tolist())
    if value == 'latched':
        scenario = scenario.with_estimator('adaptation', 'publish_policy', 'all-below')
        return scenario.with_estimator('adaptation', 'latched', True)
    return scenario.with_estimator('adaptation', 'publish_policy', value)


@timed
def sweep(scenario, parameter, values, seed=None, out_dir=None):
    values = [parse_sweep_value(parameter, value) for value in values]
    if not values:
        raise UsageError('at least one sweep value is needed')

    scenario = scenario.with_seed(seed)
    rows     = []
    for value in values:
        report = run_experiment(swept_scenario(scenario, parameter, value)).report
        rows.extend(
            {'parameter': parameter, 'value': value, 'estimator': track, 'metric': name, 'result': result}
            for (track, name), result in report.flat().items()
        )

    if out_dir is not None:
        write_csv(os.path.join(out_dir, 'sweep.csv'), SWEEP_COLUMNS, [
            [row['parameter'], str(row['value']), row['estimator'], row['metric'], format_float(row['result'])]
            for row in rows
        ])
    return rows
