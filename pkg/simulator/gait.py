"""
Stepping in place.

Stance feet hold their footprint; swing feet rise on a half sine of height
``swing_apex`` and land where they took off. While stepping, the body bobs with
vertical acceleration ``bob_amplitude · sin(ω t)``, one period per gait phase, so the
acceleration column of the regressor is excited.
"""
from dataclasses import dataclass

import numpy as np

from dynamics.bodies     import frozen_array
from simulator.scenarios import STAND


@dataclass(frozen=True)
class GaitSample:
    stance            : tuple
    foot_positions    : np.ndarray
    base_offset       : np.ndarray
    base_velocity     : np.ndarray
    base_acceleration : np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'foot_positions', frozen_array(self.foot_positions, (4, 3), 'foot_positions'))
        for name in ('base_offset', 'base_velocity', 'base_acceleration'):
            object.__setattr__(self, name, frozen_array(getattr(self, name), (3,), name))

    @property
    def stance_indices(self):
        return [index for index, in_stance in enumerate(self.stance) if in_stance]


def stepping_motion(schedule, t, footprint, motion):
    """Contact flags, body-relative foot positions and base motion at time ``t``.

    ``footprint`` holds the nominal foot positions relative to the base at rest height.
    """
    stance, fraction = schedule.phase_at(t)
    footprint        = np.asarray(footprint, dtype=float)

    if schedule.pattern == STAND:
        offset = velocity = acceleration = np.zeros(3)
    else:
        omega        = 2.0 * np.pi / schedule.phase_duration
        phase        = omega * (t - schedule.start_time)
        amplitude    = motion.bob_amplitude
        acceleration = np.array([0.0, 0.0, amplitude * np.sin(phase)])
        velocity     = np.array([0.0, 0.0, -amplitude / omega * np.cos(phase)])
        offset       = np.array([0.0, 0.0, -amplitude / omega ** 2 * np.sin(phase)])

    lift      = motion.swing_apex * np.sin(np.pi * fraction)
    positions = footprint - offset
    for index, in_stance in enumerate(stance):
        if not in_stance:
            positions[index, 2] += lift

    return GaitSample(
        stance            = tuple(stance),
        foot_positions    = positions,
        base_offset       = offset,
        base_velocity     = velocity,
        base_acceleration = acceleration,
    )
