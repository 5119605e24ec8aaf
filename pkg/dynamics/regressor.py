"""
Regressor form of the single-rigid-body equations of motion.

Force balance     m (v̇ + g) = Σ F_i
Torque balance    c × m g   = Σ r_i × F_i     (rotational-inertia term dropped)

Both are linear in π = [m, h_x, h_y] with h = m [c_x, c_y] and c_z = 0, so they stack
into Φ π = z with Φ ∈ R^{6×3} and z = [Σ F_i ; Σ r_i × F_i].
"""
import numpy as np

from core.exceptions import DomainError
from dynamics.bodies import RegressorSample, cross, require_finite

VERTICAL_TOLERANCE = 1e-12


def vertical_gravity(gravity):
    gravity = np.asarray(gravity, dtype=float)
    require_finite('gravity', gravity)

    if abs(gravity[0]) > VERTICAL_TOLERANCE or abs(gravity[1]) > VERTICAL_TOLERANCE:
        raise DomainError('gravity must be vertical', gravity=gravity.tolist())
    return gravity


def build_regressor(snapshot):
    gravity      = vertical_gravity(snapshot.gravity)
    acceleration = snapshot.base.linear_acceleration
    positions    = snapshot.foot_positions()
    forces       = snapshot.foot_forces()
    require_finite('snapshot', acceleration, positions, forces)

    g_z = gravity[2]
    phi = np.zeros((6, 3))
    phi[0:3, 0] = acceleration + gravity
    phi[3, 2]   = g_z
    phi[4, 1]   = -g_z

    z = np.concatenate([forces.sum(axis=0), cross(positions, forces).sum(axis=0)])
    return RegressorSample(phi=phi, z=z, time=snapshot.time)


def predicted_wrench(pi, snapshot):
    if not pi.m > 0:
        raise DomainError('mass must be positive', m=pi.m)
    parameters = pi.as_array()
    require_finite('parameters', parameters)

    return build_regressor(snapshot).phi @ parameters


def regressor_residual(sample, pi):
    return sample.z - sample.phi @ pi.as_array()


def com_from_parameters(pi):
    if not pi.m > 0:
        raise DomainError('mass must be positive', m=pi.m)
    return pi.h_x / pi.m, pi.h_y / pi.m
