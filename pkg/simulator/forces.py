"""
Ground-truth contact forces for the quasi-static body.

The wrench the stance feet must supply is [m (v̇ + g) ; c × m g]. With the contact map

    A = [ I₃     …  I₃     ]
        [ [r₁]×  …  [rₙ]×  ]

the minimum-norm force set is the pseudo-inverse solution of A f = w. A stance that
cannot reach the wrench, or that needs a foot to pull on the ground, is rejected.
"""
import numpy as np

from core.exceptions import DistributionError, InfeasibleStanceError
from dynamics.bodies import cross, require_finite

RESIDUAL_TOLERANCE = 1e-9
MINIMUM_RANK       = 5


def skew(vector):
    x, y, z = vector
    return np.array([
        [0.0,  -z,   y ],
        [z,    0.0, -x ],
        [-y,   x,   0.0],
    ])


def contact_map(positions):
    return np.vstack([
        np.tile(np.eye(3), len(positions)),
        np.hstack([skew(position) for position in positions]),
    ])


def required_wrench(pi, acceleration, gravity):
    if not pi.m > 0.0:
        raise DistributionError('mass must be positive', m=pi.m)
    com = np.array([pi.h_x / pi.m, pi.h_y / pi.m, 0.0])
    return np.concatenate([pi.m * (acceleration + gravity), cross(com, pi.m * gravity)])


def distribute_forces(positions, pi, acceleration, gravity):
    """Minimum-norm stance forces, one row per entry of ``positions``."""
    positions    = np.asarray(positions, dtype=float).reshape(-1, 3)
    acceleration = np.asarray(acceleration, dtype=float)
    gravity      = np.asarray(gravity, dtype=float)
    require_finite('stance geometry', positions, acceleration, gravity)

    if len(positions) < 2:
        raise DistributionError('at least two stance feet are needed', stance_feet=len(positions))

    matrix              = contact_map(positions)
    left, values, right = np.linalg.svd(matrix, full_matrices=False)
    rank                = int(np.sum(values > values[0] * max(matrix.shape) * np.finfo(float).eps))
    if rank < MINIMUM_RANK:
        raise DistributionError('contact map is rank deficient', rank=rank)

    wrench   = required_wrench(pi, acceleration, gravity)
    solution = right[:rank].T @ ((left[:, :rank].T @ wrench) / values[:rank])

    residual = np.max(np.abs(matrix @ solution - wrench))
    if residual > RESIDUAL_TOLERANCE:
        raise DistributionError('stance cannot supply the required wrench', residual=float(residual))

    forces = solution.reshape(-1, 3)
    if np.any(forces[:, 2] < 0.0):
        raise InfeasibleStanceError('a stance foot would have to pull on the ground',
                                    normal_forces=forces[:, 2].tolist())
    return forces


def balancing_acceleration(positions, pi, acceleration, gravity):
    """Add the horizontal sway that lets a two-foot stance carry the body.

    On a support line the moment about that line must vanish. The sway acts
    perpendicular to the line and is chosen so that it does; other stances are
    returned unchanged.
    """
    positions    = np.asarray(positions, dtype=float).reshape(-1, 3)
    acceleration = np.asarray(acceleration, dtype=float)
    if len(positions) != 2:
        return acceleration

    first, second = positions
    line          = second - first
    normal        = cross([0.0, 0.0, 1.0], line)
    if np.linalg.norm(normal) == 0.0:
        raise DistributionError('support line is vertical')
    normal = normal / np.linalg.norm(normal)

    lever = np.dot(cross(first, normal), line)
    if abs(lever) < 1e-9 * np.linalg.norm(line):
        raise DistributionError('support line lies at body height')

    com  = np.array([pi.h_x / pi.m, pi.h_y / pi.m, 0.0])
    sway = np.dot(cross(com, gravity) - cross(first, acceleration + gravity), line) / lever
    return acceleration + sway * normal
