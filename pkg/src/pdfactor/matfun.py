"""Dense symmetric eigendecomposition and small-matrix functions.

Everything downstream (transport maps, chain construction, block
diagonalization, flow simulation) funnels through the primitives here, so
they are written for determinism first: a cyclic Jacobi eigensolver with a
fixed rotation order and a fixed eigenvector sign convention, and matrix
functions evaluated through it. The general exponential uses scaling and
squaring with diagonal Pade approximants.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    InvalidInput,
    NotPositiveDefinite,
    NumericalFailure,
    SingularInput,
)

__all__ = [
    "EigenPair",
    "sym_eig",
    "spd_sqrt",
    "spd_log",
    "sym_exp",
    "expm",
    "polar",
    "cond",
]

# A symmetric input may deviate from exact symmetry by roundoff only.
SYM_RTOL = 1e-12
# SPD certificate: smallest eigenvalue must clear this fraction of the largest.
SPD_RTOL = 1e-12

_JACOBI_SWEEPS = 30
_JACOBI_RTOL = 1e-14


class EigenPair(NamedTuple):
    """Eigenvectors (columns of Q) and eigenvalues d, sorted descending."""

    Q: np.ndarray
    d: np.ndarray


def _as_square(A, name="matrix") -> np.ndarray:
    A = np.array(A, dtype=float, order="C")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    if A.shape[0] == 0:
        raise InvalidInput(f"{name} is empty")
    return A


def _frob(A) -> float:
    return float(np.linalg.norm(A, "fro"))


def _require_symmetric(S, name="matrix") -> np.ndarray:
    S = _as_square(S, name)
    defect = _frob(S - S.T)
    if defect > SYM_RTOL * (1.0 + _frob(S)):
        raise InvalidInput(f"{name} is not symmetric (defect {defect:.3e})")
    # Work on the exactly symmetric part so the Jacobi updates stay symmetric.
    return (S + S.T) / 2.0


def sym_eig(S) -> EigenPair:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : array_like
        Symmetric matrix (Frobenius symmetry defect at most
        ``1e-12 * (1 + ||S||_F)``).

    Returns
    -------
    EigenPair
        ``Q`` orthogonal with eigenvectors as columns, ``d`` eigenvalues in
        descending order. The largest-magnitude component of each column is
        made positive (lowest index on ties), so repeated calls are
        bit-identical and results are reproducible across platforms.

    Raises
    ------
    InvalidInput
        If S is not square or not symmetric.
    NumericalFailure
        If the off-diagonal norm has not dropped below
        ``1e-14 * ||S||_F`` after 30 sweeps.
    """
    A = _require_symmetric(S, "sym_eig input")
    n = A.shape[0]
    Q = np.eye(n)
    target = _JACOBI_RTOL * _frob(A)

    def offdiag() -> float:
        # Summing the off-diagonal entries directly avoids the cancellation
        # that ||A||^2 - sum(diag^2) suffers on nearly diagonal input.
        off = A.copy()
        np.fill_diagonal(off, 0.0)
        return _frob(off)

    converged = offdiag() <= target
    for _ in range(_JACOBI_SWEEPS):
        if converged:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(tau) > 1e154:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = math.copysign(1.0, tau) / (
                        abs(tau) + math.sqrt(1.0 + tau * tau)
                    )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                # Zero the annihilated pair explicitly; leaving the roundoff
                # residue in place stalls convergence near the threshold.
                A[p, q] = 0.0
                A[q, p] = 0.0
                qp = Q[:, p].copy()
                qq = Q[:, q].copy()
                Q[:, p] = c * qp - s * qq
                Q[:, q] = s * qp + c * qq
        converged = offdiag() <= target
    if not converged:
        raise NumericalFailure("Jacobi eigensolver did not converge in 30 sweeps")

    d = np.diag(A).copy()
    order = np.argsort(-d, kind="stable")
    d = d[order]
    Q = np.ascontiguousarray(Q[:, order])
    for j in range(n):
        i = int(np.argmax(np.abs(Q[:, j])))
        if Q[i, j] < 0.0:
            Q[:, j] = -Q[:, j]
    return EigenPair(Q=Q, d=d)


def _certify_spd(d: np.ndarray, name: str) -> None:
    dmax = float(d[0])
    dmin = float(d[-1])
    if dmin <= SPD_RTOL * max(1.0, dmax):
        raise NotPositiveDefinite(
            f"{name} is not positive definite to working precision "
            f"(eigenvalue range [{dmin:.3e}, {dmax:.3e}])"
        )


def _spd_eig(S, name: str) -> EigenPair:
    pair = sym_eig(S)
    _certify_spd(pair.d, name)
    return pair


def _apply_spectral(pair: EigenPair, values: np.ndarray) -> np.ndarray:
    R = (pair.Q * values) @ pair.Q.T
    return (R + R.T) / 2.0


def spd_sqrt(Sigma) -> np.ndarray:
    """Principal square root of an SPD matrix, itself SPD."""
    pair = _spd_eig(Sigma, "spd_sqrt input")
    return _apply_spectral(pair, np.sqrt(pair.d))


def spd_log(Sigma) -> np.ndarray:
    """Matrix logarithm of an SPD matrix; the result is symmetric."""
    pair = _spd_eig(Sigma, "spd_log input")
    return _apply_spectral(pair, np.log(pair.d))


def sym_exp(A) -> np.ndarray:
    """Exponential of a symmetric matrix, evaluated on its eigenvalues."""
    pair = sym_eig(A)
    return _apply_spectral(pair, np.exp(pair.d))


def cond(Sigma) -> float:
    """Spectral condition number (eigenvalue ratio) of an SPD matrix."""
    pair = _spd_eig(Sigma, "cond input")
    return float(pair.d[0] / pair.d[-1])


# Pade order thresholds on the 1-norm, degree-13 scaling-and-squaring family.
_PADE_THETA = (
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
)
_THETA_13 = 5.371920351148152

_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ),
    13: (
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ),
}


def _pade_uv(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_B[m]
    n = A.shape[0]
    I = np.eye(n)
    A2 = A @ A
    if m < 13:
        # U collects odd powers, V even powers, built on powers of A^2.
        powers = [I, A2]
        for _ in range((m - 1) // 2 - 1):
            powers.append(powers[-1] @ A2)
        U = np.zeros_like(A)
        V = np.zeros_like(A)
        for k, P in enumerate(powers):
            U += b[2 * k + 1] * P
            V += b[2 * k] * P
        return A @ U, V
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6
        + b[5] * A4
        + b[3] * A2
        + b[1] * I
    )
    V = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6
        + b[4] * A4
        + b[2] * A2
        + b[0] * I
    )
    return U, V


def expm(A) -> np.ndarray:
    """General matrix exponential by scaling and squaring.

    The Pade order (3, 5, 7, 9, or 13) and the number of squarings are chosen
    from the 1-norm of A with the standard degree-13 thresholds.
    """
    A = _as_square(A, "expm input")
    norm = float(np.linalg.norm(A, 1))
    s = 0
    m = 13
    for order, theta in _PADE_THETA:
        if norm <= theta:
            m = order
            break
    else:
        if norm > _THETA_13:
            s = int(math.ceil(math.log2(norm / _THETA_13)))
    B = A / (2.0**s) if s else A
    U, V = _pade_uv(B, m)
    try:
        X = np.linalg.solve(V - U, V + U)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Pade denominator is singular: {exc}") from exc
    for _ in range(s):
        X = X @ X
    return X


def polar(Phi) -> tuple[np.ndarray, np.ndarray]:
    """Right polar decomposition Phi = V S with V orthogonal and S SPD.

    S is the SPD square root of Phi^T Phi and V = Phi S^{-1}, so det V
    carries the sign of det Phi.

    Raises
    ------
    SingularInput
        If Phi is singular to working precision.
    """
    Phi = _as_square(Phi, "polar input")
    n = Phi.shape[0]
    G = Phi.T @ Phi
    pair = sym_eig((G + G.T) / 2.0)
    dmax = float(pair.d[0])
    if float(pair.d[-1]) <= SPD_RTOL * max(1.0, dmax):
        raise SingularInput("polar input is singular to working precision")
    S = _apply_spectral(pair, np.sqrt(pair.d))
    Sinv = _apply_spectral(pair, 1.0 / np.sqrt(pair.d))
    V = Phi @ Sinv
    # Forming Phi^T Phi squares the conditioning, so V can come out with
    # an orthogonality defect near sqrt(eps) for hard inputs. A Newton
    # step squares the defect instead, so a few restore orthogonality.
    refined = False
    for _ in range(4):
        if _frob(V.T @ V - np.eye(n)) <= 1e-12:
            break
        V = 0.5 * (V + np.linalg.inv(V).T)
        refined = True
    if refined:
        VtP = V.T @ Phi
        S = (VtP + VtP.T) / 2.0
    return V, S
