"""
Scenario documents: gait timeline, payload events, noise and estimator overrides.

Scenarios are JSON files (``schema_version`` 1). Everything that is not given falls
back to ``settings.QPI``; unknown keys are rejected so that a typo never silently
turns into a default.
"""
import copy, json, math

from dataclasses import dataclass, field, replace
from pathlib     import Path

import numpy as np

from django.conf import settings

from adaptation.pipeline import AdaptationConfig, initial_published_model
from core.exceptions     import DomainError, NumericalError, ScenarioError
from dynamics.bodies     import LEG_COUNT, ParameterVector, frozen_array
from estimators.kalman   import initial_kf_state
from estimators.rls      import initial_rls_state

SCHEMA_VERSION = 1

STAND  = 'stand'
TROT   = 'trot'
CUSTOM = 'custom'

STAND_TABLE = ((True, True, True, True),)
TROT_TABLE  = ((True, False, False, True), (False, True, True, False))

TOP_LEVEL_KEYS = {
    'schema_version', 'name', 'duration', 'tick_rate', 'true_base_parameters',
    'gait_timeline', 'payload_events', 'noise', 'motion', 'estimator',
}
SEGMENT_KEYS   = {'pattern', 'start_time', 'phase_duration', 'phase_table'}
EVENT_KEYS     = {'time', 'mass_delta', 'attach_point', 'label'}
NOISE_KEYS     = {
    'force_noise_std', 'position_noise_std', 'accel_noise_std', 'standing_force_bias', 'seed',
    'detection_lag', 'phantom_swing_contacts',
}
MOTION_KEYS    = {'swing_apex', 'bob_amplitude'}
ESTIMATOR_KEYS = {
    'kf'         : {'q', 'r', 'p0', 'pi0'},
    'rls'        : {'forgetting', 'p0'},
    'adaptation' : {
        'thresholds', 'leg_contribution', 'publish_policy', 'latched', 'skip_when_airborne', 'standing_r_scale',
    },
}

MASS_TOLERANCE = 1e-9


def _is_integer(value):
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True)
class GaitSchedule:
    pattern        : str
    phase_duration : float
    start_time     : float = 0.0
    phase_table    : tuple = None

    def __post_init__(self):
        if self.pattern not in (STAND, TROT, CUSTOM):
            raise ScenarioError('unknown gait pattern', pattern=self.pattern)
        if not self.phase_duration > 0.0:
            raise ScenarioError('phase_duration must be positive', phase_duration=self.phase_duration)

        if self.pattern == CUSTOM:
            if not self.phase_table:
                raise ScenarioError('custom gait needs a phase_table')
            table = tuple(tuple(bool(flag) for flag in row) for row in self.phase_table)
            if any(len(row) != LEG_COUNT for row in table):
                raise ScenarioError('every phase_table row has one flag per leg')
        else:
            table = STAND_TABLE if self.pattern == STAND else TROT_TABLE
        object.__setattr__(self, 'phase_table', table)

    def phase_at(self, t):
        """Return (stance flags, fraction of the current phase elapsed) at time ``t``."""
        progress = (t - self.start_time) / self.phase_duration
        phase    = math.floor(progress)
        return self.phase_table[phase % len(self.phase_table)], progress - phase

    def stance_at(self, t):
        return self.phase_at(t)[0]


@dataclass(frozen=True)
class PayloadEvent:
    time         : float
    mass_delta   : float
    attach_point : np.ndarray = field(default_factory=lambda: np.zeros(2))
    label        : str = ''

    def __post_init__(self):
        object.__setattr__(self, 'attach_point', frozen_array(self.attach_point, (2,), 'attach_point'))
        if not self.label:
            verb = 'attach' if self.mass_delta >= 0.0 else 'detach'
            object.__setattr__(self, 'label', f'{verb} {abs(self.mass_delta):g} kg')

    def apply(self, pi):
        return ParameterVector(
            m   = pi.m + self.mass_delta,
            h_x = pi.h_x + self.mass_delta * self.attach_point[0],
            h_y = pi.h_y + self.mass_delta * self.attach_point[1],
        )


@dataclass(frozen=True)
class NoiseModel:
    force_noise_std        : float = 0.0
    position_noise_std     : float = 0.0
    accel_noise_std        : float = 0.0
    standing_force_bias    : np.ndarray = field(default_factory=lambda: np.zeros(3))
    seed                   : int   = 0
    detection_lag          : int   = 0
    phantom_swing_contacts : bool  = False

    def __post_init__(self):
        for name in ('force_noise_std', 'position_noise_std', 'accel_noise_std'):
            if not getattr(self, name) >= 0.0:
                raise ScenarioError(f'{name} cannot be negative', value=getattr(self, name))
        if not _is_integer(self.seed) or self.seed < 0:
            raise ScenarioError('seed must be a non-negative integer', seed=self.seed)
        if not _is_integer(self.detection_lag) or self.detection_lag < 0:
            raise ScenarioError('detection_lag must be a non-negative integer', detection_lag=self.detection_lag)
        if not isinstance(self.phantom_swing_contacts, bool):
            raise ScenarioError('phantom_swing_contacts must be true or false', value=self.phantom_swing_contacts)
        object.__setattr__(self, 'standing_force_bias',
                           frozen_array(self.standing_force_bias, (3,), 'standing_force_bias'))

    @classmethod
    def from_settings(cls, **overrides):
        defaults = settings.QPI['SIMULATOR']
        values   = {
            'force_noise_std'     : defaults['FORCE_NOISE_STD'],
            'position_noise_std'  : defaults['POSITION_NOISE_STD'],
            'accel_noise_std'     : defaults['ACCEL_NOISE_STD'],
            'standing_force_bias' : defaults['STANDING_FORCE_BIAS'],
        }
        values.update(overrides)
        return cls(**values)

    def scaled(self, factor):
        if not factor >= 0.0:
            raise ScenarioError('noise scale cannot be negative', factor=factor)
        return replace(
            self,
            force_noise_std    = self.force_noise_std * factor,
            position_noise_std = self.position_noise_std * factor,
            accel_noise_std    = self.accel_noise_std * factor,
        )


@dataclass(frozen=True)
class MotionProfile:
    swing_apex    : float
    bob_amplitude : float

    def __post_init__(self):
        if self.swing_apex < 0.0 or self.bob_amplitude < 0.0:
            raise ScenarioError('motion amplitudes cannot be negative')

    @classmethod
    def from_settings(cls, **overrides):
        defaults = settings.QPI['SIMULATOR']
        values   = {'swing_apex': defaults['SWING_APEX'], 'bob_amplitude': defaults['BOB_AMPLITUDE']}
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class Scenario:
    name                 : str
    duration             : float
    tick_rate            : float
    gait_timeline        : tuple
    payload_events       : tuple
    noise                : NoiseModel
    true_base_parameters : ParameterVector
    motion               : MotionProfile
    estimator            : dict = field(default_factory=dict)
    schema_version       : int  = SCHEMA_VERSION

    def __post_init__(self):
        if not self.tick_rate > 0.0:
            raise ScenarioError('tick_rate must be positive', tick_rate=self.tick_rate)
        if not self.duration > 0.0:
            raise ScenarioError('duration must be positive', duration=self.duration)
        if not self.true_base_parameters.m > 0.0:
            raise ScenarioError('true base mass must be positive', m=self.true_base_parameters.m)

        timeline = tuple(self.gait_timeline)
        if not timeline or timeline[0].start_time != 0.0:
            raise ScenarioError('gait timeline must start at t = 0')
        for before, after in zip(timeline, timeline[1:]):
            if not after.start_time > before.start_time:
                raise ScenarioError('gait segments must be ordered and non-overlapping', start_time=after.start_time)

        events = tuple(sorted(self.payload_events, key=lambda event: event.time))
        mass   = self.true_base_parameters.m
        for event in events:
            if not 0.0 <= event.time <= self.duration:
                raise ScenarioError('payload event outside the run', time=event.time)
            mass += event.mass_delta
            if mass < self.true_base_parameters.m - MASS_TOLERANCE:
                raise ScenarioError('payload events remove more mass than was attached', time=event.time)

        object.__setattr__(self, 'gait_timeline', timeline)
        object.__setattr__(self, 'payload_events', events)

        try:
            kf, _, config = self.estimator_states()
            initial_published_model(kf, config)
        except (DomainError, NumericalError, TypeError, ValueError) as error:
            raise ScenarioError('invalid estimator settings', reason=str(error)) from error

    @property
    def tick_count(self):
        return int(round(self.duration * self.tick_rate))

    def tick_time(self, tick):
        return tick / self.tick_rate

    def event_tick(self, event):
        return int(round(event.time * self.tick_rate))

    def segment_at(self, t):
        active = self.gait_timeline[0]
        for segment in self.gait_timeline[1:]:
            if segment.start_time > t:
                break
            active = segment
        return active

    def parameters_at(self, tick):
        pi = self.true_base_parameters
        for event in self.payload_events:
            if self.event_tick(event) <= tick:
                pi = event.apply(pi)
        return pi

    def events_at(self, tick):
        return [event for event in self.payload_events if self.event_tick(event) == tick]

    def estimator_states(self):
        """Initial filter, RLS baseline and adaptation settings; the RLS starts from the filter's prior."""
        kf         = self.estimator.get('kf', {})
        rls        = self.estimator.get('rls', {})
        adaptation = self.estimator.get('adaptation', {})

        kf_state  = initial_kf_state(pi0=kf.get('pi0'), p0=kf.get('p0'), q=kf.get('q'), r=kf.get('r'))
        rls_state = initial_rls_state(pi0=kf_state.pi_hat, p0=rls.get('p0'), forgetting=rls.get('forgetting'))
        return kf_state, rls_state, AdaptationConfig.from_settings(**adaptation)

    def with_seed(self, seed):
        return self if seed is None else replace(self, noise=replace(self.noise, seed=int(seed)))

    def with_estimator(self, section, key, value):
        estimator = copy.deepcopy(self.estimator)
        estimator.setdefault(section, {})[key] = value
        return replace(self, estimator=estimator)


def _section(document, key, allowed):
    value = document.get(key, {})
    if not isinstance(value, dict):
        raise ScenarioError(f'{key} must be an object')
    unknown = set(value) - allowed
    if unknown:
        raise ScenarioError(f'unknown keys in {key}', keys=sorted(unknown))
    return value


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(f'{name} must be a finite number', value=value)
    return float(value)


def parse_segment(document):
    unknown = set(document) - SEGMENT_KEYS
    if unknown:
        raise ScenarioError('unknown keys in gait segment', keys=sorted(unknown))
    try:
        return GaitSchedule(
            pattern        = document['pattern'],
            start_time     = _number(document['start_time'], 'start_time'),
            phase_duration = _number(
                document.get('phase_duration', settings.QPI['SIMULATOR']['PHASE_DURATION']), 'phase_duration'
            ),
            phase_table    = document.get('phase_table'),
        )
    except KeyError as error:
        raise ScenarioError('gait segment is missing a key', key=error.args[0]) from error


def parse_event(document):
    unknown = set(document) - EVENT_KEYS
    if unknown:
        raise ScenarioError('unknown keys in payload event', keys=sorted(unknown))
    try:
        return PayloadEvent(
            time         = _number(document['time'], 'time'),
            mass_delta   = _number(document['mass_delta'], 'mass_delta'),
            attach_point = document.get('attach_point', [0.0, 0.0]),
            label        = str(document.get('label', '')),
        )
    except KeyError as error:
        raise ScenarioError('payload event is missing a key', key=error.args[0]) from error


def parse_scenario(document):
    if not isinstance(document, dict):
        raise ScenarioError('a scenario is a JSON object')
    unknown = set(document) - TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError('unknown top-level keys', keys=sorted(unknown))
    if document.get('schema_version', SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioError('unsupported schema_version', schema_version=document.get('schema_version'))

    noise     = _section(document, 'noise', NOISE_KEYS)
    motion    = _section(document, 'motion', MOTION_KEYS)
    estimator = _section(document, 'estimator', set(ESTIMATOR_KEYS))
    for name, allowed in ESTIMATOR_KEYS.items():
        _section(estimator, name, allowed)

    try:
        return Scenario(
            name                 = str(document['name']),
            duration             = _number(document['duration'], 'duration'),
            tick_rate            = _number(
                document.get('tick_rate', settings.QPI['SIMULATOR']['TICK_RATE']), 'tick_rate'
            ),
            gait_timeline        = tuple(parse_segment(segment) for segment in document['gait_timeline']),
            payload_events       = tuple(parse_event(event) for event in document.get('payload_events', [])),
            noise                = NoiseModel.from_settings(**noise),
            true_base_parameters = ParameterVector.from_array(
                document.get('true_base_parameters', settings.QPI['KF']['PI0'])
            ),
            motion               = MotionProfile.from_settings(**motion),
            estimator            = copy.deepcopy(estimator),
        )
    except KeyError as error:
        raise ScenarioError('scenario is missing a key', key=error.args[0]) from error
    except (DomainError, TypeError, ValueError) as error:
        raise ScenarioError('scenario has a malformed value', reason=str(error)) from error


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as error:
        raise ScenarioError('cannot read scenario file', path=str(path)) from error

    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise ScenarioError(f'invalid JSON: {error.msg}', path=str(path), line=error.lineno) from error
    return parse_scenario(document)


def scenario_directory():
    return Path(settings.QPI['SIMULATOR']['SCENARIO_DIR'])


def bundled_scenarios():
    return sorted(path.stem for path in scenario_directory().glob('*.json'))


def resolve_scenario(reference):
    """Load a scenario from a file path or by the name of a bundled scenario."""
    path = Path(reference)
    if path.is_file():
        return load_scenario(path)

    bundled = scenario_directory() / f'{path.stem}.json'
    if path.parent == Path('.') and bundled.is_file():
        return load_scenario(bundled)
    raise ScenarioError('scenario not found', scenario=str(reference))
