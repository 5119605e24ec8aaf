"""
Seeded snapshot streams.

Every tick produces a clean snapshot that satisfies the rigid-body regressor exactly
for the true parameters, and a noisy copy of it. Noise is drawn in a fixed order
(acceleration, foot positions, foot forces) from one generator per run, so the same
scenario and seed always give the same stream.
"""
import logging

from collections import defaultdict, deque
from dataclasses import dataclass, replace

import numpy as np

from django.conf import settings

from core.exceptions     import SimulationError
from dynamics.bodies     import LEG_COUNT, FootState, ParameterVector, RigidBodyState, RobotSnapshot, frozen_array
from dynamics.legs       import standing_footprint
from simulator.forces    import balancing_acceleration, distribute_forces
from simulator.gait      import stepping_motion
from simulator.scenarios import STAND

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulatedTick:
    index   : int
    noisy   : RobotSnapshot
    clean   : RobotSnapshot
    pi_true : ParameterVector
    pattern : str
    events  : tuple = ()


def draw_noise(rng, noise):
    """One tick of sensor noise. Draws are made even when a deviation is zero."""
    acceleration = noise.accel_noise_std * rng.standard_normal(3)
    positions    = noise.position_noise_std * rng.standard_normal((LEG_COUNT, 3))
    forces       = noise.force_noise_std * rng.standard_normal((LEG_COUNT, 3))
    return acceleration, positions, forces


def build_snapshot(time, base, positions, forces, measured, scheduled, gravity):
    feet = [
        FootState(
            index             = index,
            position          = positions[index],
            force             = forces[index],
            contact_measured  = measured[index],
            contact_scheduled = scheduled[index],
        ) for index in range(LEG_COUNT)
    ]
    return RobotSnapshot(time=time, base=base, feet=feet, gravity=gravity)


def run_scenario(scenario, legs=None):
    """Yield one ``SimulatedTick`` per tick of ``scenario``."""
    noise     = scenario.noise
    gravity   = frozen_array(settings.QPI['GRAVITY'], (3,), 'gravity')
    footprint = standing_footprint(legs)
    height    = -footprint[:, 2].mean()
    rng       = np.random.default_rng(noise.seed)
    history   = deque(maxlen=noise.detection_lag + 1)
    pi_true   = scenario.true_base_parameters
    arrivals  = defaultdict(list)
    for event in scenario.payload_events:
        arrivals[scenario.event_tick(event)].append(event)

    for tick in range(scenario.tick_count):
        time     = scenario.tick_time(tick)
        segment  = scenario.segment_at(time)
        motion   = stepping_motion(segment, time, footprint, scenario.motion)
        arriving = arrivals.get(tick, ())
        for event in arriving:
            pi_true = event.apply(pi_true)
        events = tuple(event.label for event in arriving)
        for label in events:
            logger.debug('payload event "%s" at t=%.2f, m=%.4f', label, time, pi_true.m)

        stance = motion.stance_indices
        try:
            acceleration  = balancing_acceleration(
                motion.foot_positions[stance], pi_true, motion.base_acceleration, gravity
            )
            stance_forces = distribute_forces(motion.foot_positions[stance], pi_true, acceleration, gravity)
        except SimulationError as error:
            logger.error('simulation infeasible at tick %d: %s', tick, error)
            raise error.at_tick(tick)

        forces         = np.zeros((LEG_COUNT, 3))
        forces[stance] = stance_forces
        scheduled      = motion.stance
        history.append(scheduled)

        base  = RigidBodyState(
            position            = np.array([0.0, 0.0, height]) + motion.base_offset,
            linear_velocity     = motion.base_velocity,
            linear_acceleration = acceleration,
        )
        clean = build_snapshot(time, base, motion.foot_positions, forces, scheduled, scheduled, gravity)

        accel_noise, position_noise, force_noise = draw_noise(rng, noise)
        noisy_forces = forces + force_noise
        if segment.pattern == STAND:
            noisy_forces[stance] += noise.standing_force_bias
        measured = (True,) * LEG_COUNT if noise.phantom_swing_contacts else history[0]

        noisy = build_snapshot(
            time,
            replace(base, linear_acceleration=acceleration + accel_noise),
            motion.foot_positions + position_noise,
            noisy_forces,
            measured,
            scheduled,
            gravity,
        )
        yield SimulatedTick(index=tick, noisy=noisy, clean=clean, pi_true=pi_true, pattern=segment.pattern, events=events)
