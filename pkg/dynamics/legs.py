"""
Analytic 3-DoF leg: hip abduction about x, hip flexion about y, knee about y.

In the hip frame the foot sits at

    Rx(q0) · ( [0, side·l0, 0] + Ry(q1) · ( [0, 0, -l1] + Ry(q2) · [0, 0, -l2] ) )

so the zero configuration is a fully stretched leg pointing straight down, and a
positive flexion swings the foot towards -x. The foot position in the body frame is
that vector plus ``hip_offset``. Link lengths approximate a 15 kg quadruped.
"""
from dataclasses import dataclass

import numpy as np

from django.conf import settings

from core.exceptions import DomainError, SingularityError
from dynamics.bodies import frozen_array, require_finite

FRONT_LEFT, FRONT_RIGHT, REAR_LEFT, REAR_RIGHT = range(4)


@dataclass(frozen=True)
class LegModel:
    link_lengths : np.ndarray
    hip_offset   : np.ndarray
    side         : int = 1
    joint_count  : int = 3

    def __post_init__(self):
        if self.joint_count != 3:
            raise DomainError('only three-joint legs are modelled', joint_count=self.joint_count)
        if self.side not in (1, -1):
            raise DomainError('side must be +1 (left) or -1 (right)', side=self.side)
        object.__setattr__(self, 'link_lengths', frozen_array(self.link_lengths, (3,), 'link_lengths'))
        object.__setattr__(self, 'hip_offset', frozen_array(self.hip_offset, (3,), 'hip_offset'))


def _chain(leg, q):
    q = np.asarray(q, dtype=float).reshape(3)
    require_finite('joint positions', q)

    l0, l1, l2 = leg.link_lengths
    y0         = leg.side * l0
    s0, c0     = np.sin(q[0]), np.cos(q[0])
    s1, c1     = np.sin(q[1]), np.cos(q[1])
    s12, c12   = np.sin(q[1] + q[2]), np.cos(q[1] + q[2])

    x  = -l1 * s1 - l2 * s12
    zz = -l1 * c1 - l2 * c12
    return x, zz, y0, s0, c0, s12, c12, l2


def leg_forward_kinematics(leg, q):
    x, zz, y0, s0, c0, *_ = _chain(leg, q)
    return leg.hip_offset + np.array([x, y0 * c0 - zz * s0, y0 * s0 + zz * c0])


def leg_jacobian(leg, q):
    x, zz, y0, s0, c0, s12, c12, l2 = _chain(leg, q)
    return np.array([
        [0.0,                 zz,       -l2 * c12      ],
        [-y0 * s0 - zz * c0,  x * s0,   -l2 * s12 * s0 ],
        [ y0 * c0 - zz * s0, -x * c0,    l2 * s12 * c0 ],
    ])


def leg_torques_from_grf(leg, q, force):
    return leg_jacobian(leg, q).T @ np.asarray(force, dtype=float)


def leg_grf_from_torques(leg, q, tau, condition_cap=None):
    if condition_cap is None:
        condition_cap = settings.QPI['LEGS']['CONDITION_CAP']

    tau = np.asarray(tau, dtype=float).reshape(3)
    require_finite('joint torques', tau)

    jacobian  = leg_jacobian(leg, q)
    condition = np.linalg.cond(jacobian)
    if not np.isfinite(condition) or condition > condition_cap:
        raise SingularityError('leg Jacobian is singular at this configuration', condition_number=float(condition))

    return np.linalg.solve(jacobian.T, tau)


def default_legs():
    config = settings.QPI['LEGS']
    hip_x, hip_y = config['HIP_X'], config['HIP_Y']
    layout = {
        FRONT_LEFT  : ( hip_x,  hip_y,  1),
        FRONT_RIGHT : ( hip_x, -hip_y, -1),
        REAR_LEFT   : (-hip_x,  hip_y,  1),
        REAR_RIGHT  : (-hip_x, -hip_y, -1),
    }
    return tuple(
        LegModel(link_lengths=config['LINK_LENGTHS'], hip_offset=[x, y, 0.0], side=side)
        for x, y, side in (layout[index] for index in range(4))
    )


def standing_footprint(legs=None, q=None):
    """Foot positions relative to the base for the standing joint configuration."""
    legs = legs or default_legs()
    q    = settings.QPI['LEGS']['STANDING_CONFIG'] if q is None else q
    return np.array([leg_forward_kinematics(leg, q) for leg in legs])
