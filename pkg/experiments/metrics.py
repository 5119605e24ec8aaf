"""
Run metrics.

Three tracks are scored against the true parameters: the raw filter estimate (``kf``),
the model the adaptation pipeline published (``published``) and the recursive least
squares baseline (``rls``). Errors are absolute; bands for the time to convergence are
±0.5 kg on mass and ±0.01 kg·m on each first moment.
"""
from dataclasses import asdict, dataclass

import numpy as np

TRACKS         = ('kf', 'published', 'rls')
PARAMETERS     = ('m', 'h_x', 'h_y')
BANDS          = np.array([0.5, 0.01, 0.01])
FINAL_FRACTION = 0.25


@dataclass(frozen=True)
class TrackMetrics:
    terminal_error      : dict
    final_mae           : dict
    time_to_convergence : dict
    converged           : dict
    covariance_trace    : dict
    duty_cycle          : float

    def flat(self):
        values = {}
        for name in PARAMETERS:
            values[f'terminal_error_{name}']      = self.terminal_error[name]
            values[f'final_mae_{name}']           = self.final_mae[name]
            values[f'time_to_convergence_{name}'] = self.time_to_convergence[name]
        for name, value in self.covariance_trace.items():
            values[f'covariance_trace_{name}'] = value
        values['duty_cycle'] = self.duty_cycle
        return values


@dataclass(frozen=True)
class RunReport:
    scenario_name  : str
    seed           : int
    duration       : float
    ticks          : int
    tracks         : dict
    stream_digests : dict

    def metric(self, track, name):
        return self.tracks[track].flat()[name]

    def flat(self):
        return {(track, name): value for track in TRACKS for name, value in self.tracks[track].flat().items()}

    def as_dict(self):
        return asdict(self)


def time_to_convergence(times, errors, band, duration):
    """Time from which |error| stays inside ``band`` until the end of the run."""
    outside = np.flatnonzero(np.abs(errors) > band)
    if outside.size == 0:
        return float(times[0]), True
    if outside[-1] == len(errors) - 1:
        return float(duration), False
    return float(times[outside[-1] + 1]), True


def covariance_summary(traces):
    traces = np.asarray(traces, dtype=float)
    return {
        'initial' : float(traces[0]),
        'minimum' : float(traces.min()),
        'maximum' : float(traces.max()),
        'final'   : float(traces[-1]),
        'mean'    : float(traces.mean()),
    }


def track_metrics(times, truth, estimates, covariance_traces, fresh, duration):
    errors = np.asarray(estimates, dtype=float) - np.asarray(truth, dtype=float)
    tail   = errors[int(len(errors) * (1.0 - FINAL_FRACTION)):]

    convergence = [time_to_convergence(times, errors[:, column], BANDS[column], duration) for column in range(3)]
    return TrackMetrics(
        terminal_error      = dict(zip(PARAMETERS, np.abs(errors[-1]).tolist())),
        final_mae           = dict(zip(PARAMETERS, np.abs(tail).mean(axis=0).tolist())),
        time_to_convergence = {name: value for name, (value, _) in zip(PARAMETERS, convergence)},
        converged           = {name: flag for name, (_, flag) in zip(PARAMETERS, convergence)},
        covariance_trace    = covariance_summary(covariance_traces),
        duty_cycle          = float(np.mean(fresh)),
    )


def summarize_run(scenario, rows, rls_covariance_traces, stream_digests):
    times = np.array([row.time for row in rows])
    truth = np.array([row.true for row in rows])
    kf_p  = np.array([sum(row.kf_p) for row in rows])
    fresh = np.array([row.fresh for row in rows], dtype=float)
    every = np.ones(len(rows))

    tracks = {
        'kf'        : track_metrics(times, truth, [row.kf for row in rows], kf_p, every, scenario.duration),
        'published' : track_metrics(times, truth, [row.published for row in rows], kf_p, fresh, scenario.duration),
        'rls'       : track_metrics(times, truth, [row.rls for row in rows], rls_covariance_traces, every,
                                    scenario.duration),
    }
    return RunReport(
        scenario_name  = scenario.name,
        seed           = scenario.noise.seed,
        duration       = scenario.duration,
        ticks          = len(rows),
        tracks         = tracks,
        stream_digests = dict(stream_digests),
    )


def render_report(report):
    lines = [
        f'scenario: {report.scenario_name}',
        f'seed: {report.seed}',
        f'duration: {report.duration!r} s ({report.ticks} ticks)',
        'metrics are estimation errors against the simulated ground truth; the published track is',
        'the model a controller would read, kf is the raw filter estimate and rls the baseline.',
        '',
    ]
    for track in TRACKS:
        metrics = report.tracks[track]
        lines.append(f'[{track}]')
        lines.extend(f'{name}: {value!r}' for name, value in metrics.flat().items())
        lines.extend(f'converged_{name}: {str(flag).lower()}' for name, flag in metrics.converged.items())
        lines.append('')
    lines.extend(f'stream_digest_{name}: {digest}' for name, digest in sorted(report.stream_digests.items()))
    return '\n'.join(lines) + '\n'
