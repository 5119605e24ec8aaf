"""
Per-tick adaptation: contact gating, filter update and covariance-gated publication.

The controller only ever sees the published model. A new value is published when the
filter covariance says the estimate is trustworthy; otherwise the previous model is
kept and marked stale.

Ticks with all four feet scheduled in stance are fused with R scaled by
``standing_r_scale``. This scale is a calibration setting, not a consequence of the
rigid-body model: the regressor is the same standing and stepping, and the covariance
only reacts to the onset of stepping because of it. A scale of 1 fuses every tick alike.
"""
import logging

from dataclasses import dataclass, replace

import numpy as np

from django.conf import settings

from core.exceptions    import DomainError
from dynamics.bodies    import LEG_COUNT, ParameterVector, frozen_array
from dynamics.regressor import build_regressor
from estimators.kalman  import kf_predict, kf_update

logger = logging.getLogger(__name__)

ALL_BELOW        = 'all-below'
PER_PARAMETER    = 'per-parameter'
PUBLISH_POLICIES = (ALL_BELOW, PER_PARAMETER)


@dataclass(frozen=True)
class AdaptationConfig:
    thresholds         : np.ndarray
    leg_contribution   : ParameterVector = ParameterVector(0.0, 0.0, 0.0)
    publish_policy     : str   = ALL_BELOW
    latched            : bool  = False
    skip_when_airborne : bool  = False
    standing_r_scale   : float = 1.0

    def __post_init__(self):
        thresholds = frozen_array(self.thresholds, (3,), 'thresholds')
        if np.any(np.isnan(thresholds)) or np.any(thresholds <= 0.0):
            raise DomainError('thresholds must be positive', thresholds=thresholds.tolist())
        if self.leg_contribution.m < 0.0:
            raise DomainError('leg mass cannot be negative', m=self.leg_contribution.m)
        if self.publish_policy not in PUBLISH_POLICIES:
            raise DomainError('unknown publish policy', publish_policy=self.publish_policy)
        if not self.standing_r_scale > 0.0:
            raise DomainError('standing measurement scale must be positive', standing_r_scale=self.standing_r_scale)
        object.__setattr__(self, 'thresholds', thresholds)

    @classmethod
    def from_settings(cls, **overrides):
        defaults = settings.QPI['ADAPTATION']
        values   = {
            'thresholds'         : defaults['THRESHOLDS'],
            'leg_contribution'   : ParameterVector.from_array(defaults['LEG_CONTRIBUTION']),
            'publish_policy'     : defaults['PUBLISH_POLICY'],
            'latched'            : defaults['LATCHED'],
            'skip_when_airborne' : defaults['SKIP_WHEN_AIRBORNE'],
            'standing_r_scale'   : defaults['STANDING_R_SCALE'],
        }
        values.update(overrides)
        if not isinstance(values['leg_contribution'], ParameterVector):
            values['leg_contribution'] = ParameterVector.from_array(values['leg_contribution'])
        return cls(**values)


@dataclass(frozen=True)
class PublishedModel:
    """What the controller reads. ``time`` is the tick of the last publication."""
    pi_base        : ParameterVector
    pi_total       : ParameterVector
    time           : float
    fresh          : bool  = False
    ever_published : bool  = False
    last_tick      : float = -np.inf

    def __post_init__(self):
        if not self.pi_base.m > 0.0:
            raise DomainError('published base mass must be positive', m=self.pi_base.m)


def subtract_leg_contribution(pi_total, config):
    pi_base = pi_total - config.leg_contribution
    if not pi_base.m > 0.0:
        raise DomainError('leg contribution exceeds the estimated total mass', m=pi_total.m,
                          leg_mass=config.leg_contribution.m)
    return pi_base


def initial_published_model(kf, config, time=0.0):
    return PublishedModel(
        pi_base  = subtract_leg_contribution(kf.pi_hat, config),
        pi_total = kf.pi_hat,
        time     = time,
    )


def gate_contacts(feet):
    """Zero the force of every foot that is not both measured and scheduled in stance."""
    return tuple(foot if foot.in_contact else replace(foot, force=np.zeros(3)) for foot in feet)


def gated_mask(feet):
    return sum(1 << foot.index for foot in feet if not foot.in_contact)


def scheduled_standing(feet):
    return len(feet) == LEG_COUNT and all(foot.contact_scheduled for foot in feet)


def publish_mask(P, config):
    return np.diag(P) < config.thresholds


def should_publish(P, config):
    mask = publish_mask(P, config)
    return bool(mask.all() if config.publish_policy == ALL_BELOW else mask.any())


def adaptation_tick(snapshot, kf, config, previous):
    if snapshot.time <= previous.last_tick:
        raise DomainError('snapshot times must increase', time=snapshot.time, previous=previous.last_tick)

    gated  = snapshot.with_feet(gate_contacts(snapshot.feet))
    sample = build_regressor(gated)
    kf     = kf_predict(kf)

    airborne = not any(foot.in_contact for foot in snapshot.feet)
    if not (airborne and config.skip_when_airborne):
        r_scale = config.standing_r_scale if scheduled_standing(snapshot.feet) else 1.0
        kf      = kf_update(kf, sample, r_scale=r_scale)

    publish = should_publish(kf.P, config) or (config.latched and previous.ever_published)

    if not publish:
        if previous.fresh:
            logger.debug('publication paused at t=%.3f, diag(P)=%s', snapshot.time, np.diag(kf.P))
        return kf, replace(previous, fresh=False, last_tick=snapshot.time)

    if config.publish_policy == PER_PARAMETER and not (config.latched and previous.ever_published):
        merged   = np.where(publish_mask(kf.P, config), kf.pi_hat.as_array(), previous.pi_total.as_array())
        pi_total = ParameterVector.from_array(merged)
    else:
        pi_total = kf.pi_hat

    if not previous.fresh:
        logger.debug('publication resumed at t=%.3f, pi=%s', snapshot.time, pi_total)

    model = PublishedModel(
        pi_base        = subtract_leg_contribution(pi_total, config),
        pi_total       = pi_total,
        time           = snapshot.time,
        fresh          = True,
        ever_published = True,
        last_tick      = snapshot.time,
    )
    return kf, model
