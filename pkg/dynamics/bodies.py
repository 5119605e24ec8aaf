"""
Physical value types shared by the regressor, the estimators and the simulator.

All vectors are expressed in the inertial frame whose origin sits at the body frame.
Arrays are copied on construction and marked read-only.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import DomainError

LEG_COUNT             = 4
PARAMETER_COUNT       = 3
WRENCH_SIZE           = 6
ORTHONORMAL_TOLERANCE = 1e-9

UPRIGHT = np.eye(3)
UPRIGHT.setflags(write=False)


def frozen_array(values, shape, name):
    if isinstance(values, np.ndarray) and values.shape == shape and values.dtype == np.float64 \
            and not values.flags.writeable:
        return values
    try:
        array = np.array(values, dtype=float).reshape(shape)
    except (TypeError, ValueError) as error:
        raise DomainError(f'{name} must have shape {shape}') from error
    array.setflags(write=False)
    return array


def cross(a, b):
    """Row-wise cross product of arrays whose last axis has length 3."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def require_finite(name, *arrays):
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise DomainError(f'{name} must be finite', value=np.asarray(array).tolist())


@dataclass(frozen=True)
class ParameterVector:
    m   : float
    h_x : float
    h_y : float

    @classmethod
    def from_array(cls, values):
        m, h_x, h_y = np.asarray(values, dtype=float).reshape(PARAMETER_COUNT)
        return cls(m=float(m), h_x=float(h_x), h_y=float(h_y))

    def as_array(self):
        return np.array([self.m, self.h_x, self.h_y], dtype=float)

    def __sub__(self, other):
        return ParameterVector.from_array(self.as_array() - other.as_array())


@dataclass(frozen=True)
class RigidBodyState:
    position             : np.ndarray
    orientation          : np.ndarray = field(default_factory=lambda: UPRIGHT)
    linear_velocity      : np.ndarray = field(default_factory=lambda: np.zeros(3))
    linear_acceleration  : np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity     : np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_acceleration : np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ('position', 'linear_velocity', 'linear_acceleration', 'angular_velocity', 'angular_acceleration'):
            object.__setattr__(self, name, frozen_array(getattr(self, name), (3,), name))
        if self.orientation is UPRIGHT:
            return
        orientation = frozen_array(self.orientation, (3, 3), 'orientation')

        if not np.allclose(orientation.T @ orientation, np.eye(3), rtol=0.0, atol=ORTHONORMAL_TOLERANCE) \
                or abs(np.linalg.det(orientation) - 1.0) > ORTHONORMAL_TOLERANCE:
            raise DomainError('orientation must be a proper rotation matrix')
        object.__setattr__(self, 'orientation', orientation)


@dataclass(frozen=True)
class FootState:
    index             : int
    position          : np.ndarray
    force             : np.ndarray
    contact_measured  : bool = True
    contact_scheduled : bool = True

    def __post_init__(self):
        if self.index not in range(LEG_COUNT):
            raise DomainError('foot index must identify one of four legs', index=self.index)
        object.__setattr__(self, 'position', frozen_array(self.position, (3,), 'position'))
        object.__setattr__(self, 'force', frozen_array(self.force, (3,), 'force'))

    @property
    def in_contact(self):
        return bool(self.contact_measured and self.contact_scheduled)


@dataclass(frozen=True)
class RobotSnapshot:
    time    : float
    base    : RigidBodyState
    feet    : tuple
    gravity : np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 9.81]))

    def __post_init__(self):
        feet = tuple(sorted(self.feet, key=lambda foot: foot.index))
        if [foot.index for foot in feet] != list(range(LEG_COUNT)):
            raise DomainError('a snapshot carries exactly one state per leg', indices=[foot.index for foot in feet])
        object.__setattr__(self, 'feet', feet)
        object.__setattr__(self, 'gravity', frozen_array(self.gravity, (3,), 'gravity'))

    def with_feet(self, feet):
        return replace(self, feet=tuple(feet))

    def foot_positions(self):
        return np.array([foot.position for foot in self.feet])

    def foot_forces(self):
        return np.array([foot.force for foot in self.feet])


@dataclass(frozen=True)
class RegressorSample:
    phi  : np.ndarray
    z    : np.ndarray
    time : float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'phi', frozen_array(self.phi, (WRENCH_SIZE, PARAMETER_COUNT), 'phi'))
        object.__setattr__(self, 'z', frozen_array(self.z, (WRENCH_SIZE,), 'z'))
