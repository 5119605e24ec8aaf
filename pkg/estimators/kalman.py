"""
Kalman filter over the rigid-body regressor.

The parameters follow a random walk (A = I, B = 0), so prediction only inflates the
covariance by Q. The measurement model of the update is the regressor itself: Φ takes
the place of the measurement Jacobian and z = [Σ F ; Σ r × F] is the measurement.
"""
from dataclasses import dataclass, replace

import numpy as np

from django.conf import settings

from dynamics.bodies   import ParameterVector, frozen_array
from estimators.linalg import check_covariance, spd_solve, symmetrize

IDENTITY = np.eye(3)


@dataclass(frozen=True)
class KFState:
    pi_hat    : ParameterVector
    P         : np.ndarray
    Q         : np.ndarray
    R         : np.ndarray
    last_gain : np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, 'P', frozen_array(self.P, (3, 3), 'P'))
        object.__setattr__(self, 'Q', frozen_array(self.Q, (3, 3), 'Q'))
        object.__setattr__(self, 'R', frozen_array(self.R, (6, 6), 'R'))
        gain = np.zeros((3, 6)) if self.last_gain is None else self.last_gain
        object.__setattr__(self, 'last_gain', frozen_array(gain, (3, 6), 'last_gain'))


def as_matrix(values, size):
    values = np.asarray(values, dtype=float)
    return np.diag(values) if values.ndim == 1 else values.reshape(size, size)


def initial_kf_state(pi0=None, p0=None, q=None, r=None):
    """Build a filter state; unspecified pieces come from ``settings.QPI['KF']``.

    Covariances may be given as full matrices or as their diagonals.
    """
    defaults = settings.QPI['KF']
    pi0      = defaults['PI0'] if pi0 is None else pi0

    state = KFState(
        pi_hat = pi0 if isinstance(pi0, ParameterVector) else ParameterVector.from_array(pi0),
        P      = as_matrix(defaults['P0'] if p0 is None else p0, 3),
        Q      = as_matrix(defaults['Q'] if q is None else q, 3),
        R      = as_matrix(defaults['R'] if r is None else r, 6),
    )
    check_covariance('P', state.P)
    check_covariance('Q', state.Q)
    check_covariance('R', state.R, definite=True)
    return state


def kf_predict(state):
    return replace(state, P=symmetrize(state.P + state.Q))


def kf_update(state, sample, r_scale=1.0):
    phi, z = sample.phi, sample.z
    pi_hat = state.pi_hat.as_array()

    cross      = state.P @ phi.T
    innovation = symmetrize(phi @ cross + r_scale * state.R)
    gain       = spd_solve(innovation, cross.T).T

    pi_hat = pi_hat + gain @ (z - phi @ pi_hat)
    P      = symmetrize((IDENTITY - gain @ phi) @ state.P)

    return replace(state, pi_hat=ParameterVector.from_array(pi_hat), P=P, last_gain=gain)
