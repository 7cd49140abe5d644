"""Shared randomness and independent oracles for the test suite.

Oracles here deliberately avoid the package's own code paths: the Taylor
exponential is a plain scaled series, the closed-form chain angle comes from
the polar factor of a 2x2 product worked out by hand, and eigenvalue checks
go through numpy.linalg.
"""

import math
import os

import numpy as np

SEED = int(os.environ.get("PDFACTOR_SEED", "20260822"))


def rng(offset=0):
    return np.random.default_rng(SEED + offset)


def random_symmetric(r, n, scale=1.0):
    A = r.standard_normal((n, n)) * scale
    return (A + A.T) / 2.0


def random_orthogonal(r, n):
    A = r.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def random_rotation(r, n):
    Q = random_orthogonal(r, n)
    if np.linalg.det(Q) < 0.0:
        Q = Q.copy()
        Q[:, 0] = -Q[:, 0]
    return Q


def random_spd(r, n, cond_max=100.0):
    """SPD matrix with eigenvalues log-uniform across at most cond_max."""
    Q = random_orthogonal(r, n)
    half = 0.5 * math.log(cond_max)
    d = np.exp(r.uniform(-half, half, size=n))
    S = (Q * d) @ Q.T
    return (S + S.T) / 2.0


def taylor_expm(A, terms=200):
    """Matrix exponential by scaled Taylor series, squared back up."""
    A = np.asarray(A, dtype=float)
    norm = np.linalg.norm(A, 1)
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    B = A / (2.0**s)
    X = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ B / k
        X = X + term
    for _ in range(s):
        X = X @ X
    return X


def product_right_to_left(mats):
    """Apply mats[0] first: returns mats[-1] @ ... @ mats[0]."""
    P = np.eye(mats[0].shape[0])
    for M in mats:
        P = M @ P
    return P


def chain_angle_oracle(theta, lam, k):
    """Net rotation angle of the k-factor scheme at (theta, lam), in radians.

    Derivation sketch: the middle transport maps are all rotations of the
    first one, and the product telescopes so that the net rotation is
    (k - 2) times the angle by which the polar factor of
    S^{1/2} U_theta S^{1/2} (with S = diag(lam, 1/lam)) lags theta.
    """
    beta = math.atan2(2.0 * math.sin(theta), (lam + 1.0 / lam) * math.cos(theta))
    return (k - 2) * (theta - beta)
