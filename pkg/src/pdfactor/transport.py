"""Monge maps between centered Gaussians.

For SPD covariances Sa, Sb the unique SPD matrix M with M Sa M = Sb is

    M = Sa^{-1/2} (Sa^{1/2} Sb Sa^{1/2})^{1/2} Sa^{-1/2}

which is the optimal-transport map pushing N(0, Sa) forward to N(0, Sb).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .matfun import _apply_spectral, _as_square, _frob, _spd_eig, spd_sqrt

__all__ = ["ot_map", "ot_residual"]


def ot_map(Sigma_a, Sigma_b) -> np.ndarray:
    """SPD solution M of M Sigma_a M = Sigma_b.

    Raises NotPositiveDefinite if either covariance fails the SPD
    certificate, DimensionMismatch if the shapes differ.
    """
    pair_a = _spd_eig(Sigma_a, "ot_map first covariance")
    Sb = _as_square(Sigma_b, "ot_map second covariance")
    n = pair_a.Q.shape[0]
    if Sb.shape[0] != n:
        raise DimensionMismatch(
            f"covariances have sizes {n} and {Sb.shape[0]}"
        )
    root_a = _apply_spectral(pair_a, np.sqrt(pair_a.d))
    inv_root_a = _apply_spectral(pair_a, 1.0 / np.sqrt(pair_a.d))
    inner = root_a @ Sb @ root_a
    core = spd_sqrt((inner + inner.T) / 2.0)
    M = inv_root_a @ core @ inv_root_a
    return (M + M.T) / 2.0


def ot_residual(M, Sigma_a, Sigma_b) -> float:
    """Frobenius defect ||M Sigma_a M - Sigma_b||_F of a candidate map."""
    M = _as_square(M, "ot_residual map")
    Sa = _as_square(Sigma_a, "ot_residual first covariance")
    Sb = _as_square(Sigma_b, "ot_residual second covariance")
    if not (M.shape == Sa.shape == Sb.shape):
        raise DimensionMismatch(
            f"shapes {M.shape}, {Sa.shape}, {Sb.shape} do not agree"
        )
    return _frob(M @ Sa @ M - Sb)
