"""Small symmetric-matrix helpers shared by the Kalman and SMC layers."""

import numpy as np
from scipy import linalg


def symmetrize(m):
    """``(m + m^T) / 2``; scalars are promoted to ``1 x 1`` matrices."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return 0.5 * (m + m.T)


def psd_sqrt(cov):
    """Symmetric square root with negative eigenvalues clamped to zero."""
    vals, vecs = np.linalg.eigh(symmetrize(cov))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def spd_inv(m):
    """Inverse of a symmetric positive-definite matrix.

    Retries with a diagonal jitter of ``1e-12 * trace`` when the Cholesky
    factorisation fails on a numerically near-singular input; raises
    :class:`numpy.linalg.LinAlgError` if that fails too.
    """
    m = symmetrize(m)
    eye = np.eye(m.shape[0])
    try:
        factor = linalg.cho_factor(m)
    except linalg.LinAlgError:
        jitter = 1e-12 * abs(np.trace(m))
        try:
            factor = linalg.cho_factor(m + jitter * eye)
        except linalg.LinAlgError:
            raise np.linalg.LinAlgError("matrix is not positive definite") from None
    return symmetrize(linalg.cho_solve(factor, eye))
