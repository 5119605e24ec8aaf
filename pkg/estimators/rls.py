"""
Exponentially weighted recursive least squares, the baseline the filter is compared with.

Each regressor sample is a six-row measurement, so the scalar recursion is generalized
with λ·I₆ inside the innovation:

    G = P Φᵀ (λ I + Φ P Φᵀ)⁻¹
    π ← π + G (z − Φ π)
    P ← (P − G Φ P) / λ
"""
from dataclasses import dataclass, replace

import numpy as np

from django.conf import settings

from core.exceptions   import DomainError
from dynamics.bodies   import ParameterVector, frozen_array
from estimators.linalg import spd_solve, symmetrize


@dataclass(frozen=True)
class RLSState:
    pi_hat     : ParameterVector
    P          : np.ndarray
    forgetting : float

    def __post_init__(self):
        if not 0.0 < self.forgetting <= 1.0:
            raise DomainError('forgetting factor must lie in (0, 1]', forgetting=self.forgetting)
        object.__setattr__(self, 'P', frozen_array(self.P, (3, 3), 'P'))


def initial_rls_state(pi0=None, p0=None, forgetting=None):
    defaults = settings.QPI['RLS']
    pi0      = settings.QPI['KF']['PI0'] if pi0 is None else pi0
    p0       = defaults['P0'] if p0 is None else p0

    return RLSState(
        pi_hat     = pi0 if isinstance(pi0, ParameterVector) else ParameterVector.from_array(pi0),
        P          = p0 * np.eye(3) if np.ndim(p0) == 0 else p0,
        forgetting = defaults['FORGETTING'] if forgetting is None else float(forgetting),
    )


def rls_update(state, sample):
    phi, z     = sample.phi, sample.z
    forgetting = state.forgetting
    pi_hat     = state.pi_hat.as_array()

    cross      = state.P @ phi.T
    innovation = symmetrize(forgetting * np.eye(6) + phi @ cross)
    gain       = spd_solve(innovation, cross.T).T

    pi_hat = pi_hat + gain @ (z - phi @ pi_hat)
    P      = symmetrize((state.P - gain @ phi @ state.P) / forgetting)

    return replace(state, pi_hat=ParameterVector.from_array(pi_hat), P=P)
