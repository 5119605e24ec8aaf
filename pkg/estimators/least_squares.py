import numpy as np

from core.exceptions   import RankError
from dynamics.bodies   import ParameterVector
from estimators.linalg import spd_solve


def stack_samples(samples):
    phi = np.vstack([sample.phi for sample in samples])
    z   = np.concatenate([sample.z for sample in samples])
    return phi, z


def batch_least_squares(samples):
    """Minimize Σ‖z_k − Φ_k π‖² over the whole stream via the normal equations."""
    if not samples:
        raise RankError('no samples to fit', rank=0)

    phi, z = stack_samples(samples)
    rank   = int(np.linalg.matrix_rank(phi))
    if rank < phi.shape[1]:
        raise RankError('stacked regressor is rank deficient', rank=rank)

    return ParameterVector.from_array(spd_solve(phi.T @ phi, phi.T @ z))
