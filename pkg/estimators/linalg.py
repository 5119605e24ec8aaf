import numpy as np
from scipy.linalg import lapack

from core.exceptions import NumericalError

SYMMETRY_TOLERANCE = 1e-9


def symmetrize(matrix):
    return 0.5 * (matrix + matrix.T)


def spd_solve(matrix, rhs):
    """Solve ``matrix @ x = rhs`` for a symmetric positive-definite ``matrix``."""
    matrix = np.asarray(matrix, dtype=float)
    rhs    = np.asarray(rhs, dtype=float)
    if not np.isfinite(matrix).all():
        raise NumericalError('matrix must be finite')

    factor, info = lapack.dpotrf(matrix, lower=True)
    if info != 0:
        raise NumericalError('matrix is not numerically positive definite', info=int(info))

    solution, info = lapack.dpotrs(factor, rhs.reshape(len(rhs), -1), lower=True)
    if info != 0:
        raise NumericalError('triangular solve failed', info=int(info))
    return solution.reshape(rhs.shape)


def check_covariance(name, matrix, definite=False):
    matrix = np.asarray(matrix, dtype=float)

    if not np.all(np.isfinite(matrix)):
        raise NumericalError(f'{name} must be finite')
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
        raise NumericalError(f'{name} must be symmetric')

    smallest = np.linalg.eigvalsh(matrix).min()
    if smallest < 0.0 or (definite and smallest == 0.0):
        kind = 'positive definite' if definite else 'positive semidefinite'
        raise NumericalError(f'{name} must be {kind}', smallest_eigenvalue=float(smallest))
    return matrix
