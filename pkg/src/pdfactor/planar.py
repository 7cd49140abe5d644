"""Planar rotation-by-composition chains.

The k-factor scheme stretches the identity covariance to diag(lam, 1/lam),
carries it through k-2 successive rotations by theta, and relaxes back to
the identity. Each leg is a Monge map, so every factor is SPD while the
assembled product is a pure rotation by some net angle phi_k(theta, lam).
Sweeping that angle over theta, inverting it for a target, and planning the
cheapest lam that reaches a target all live here, together with the
gradient generator whose exponential realizes a single leg in time t_fn.

All 2x2 sweep kernels are evaluated in closed form (batched over the theta
grid); the chain builder itself goes through the general transport map so
the two routes cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidInput,
    InvalidParams,
    DimensionMismatch,
    NotARotation,
    NotPositiveDefinite,
    NumericalFailure,
    TargetUnreachable,
)
from .matfun import _as_square, _frob, spd_log
from .transport import ot_map

__all__ = [
    "ChainParams",
    "FactorChain",
    "SweepTable",
    "rotation2",
    "chain_covariances",
    "build_chain",
    "chain_product",
    "net_rotation",
    "phi_sweep",
    "solve_theta",
    "plan_scheme",
    "gradient_generator",
]

# A chain product is accepted as a rotation up to this Frobenius defect.
# Factors quoted to a few decimals (the usual way chains arrive from tables)
# already carry ~1e-4 of defect, so the gate sits well above that but far
# below anything a genuinely non-orthogonal product can reach.
ROTATION_GATE = 1e-3

_SOLVER_STEPS = 2000
_BISECT_ITERS = 80


@dataclass
class ChainParams:
    """Scheme parameters: scale lam >= 1, step angle theta, factor count k."""

    lam: float
    theta: float
    k: int

    def __post_init__(self):
        try:
            self.lam = float(self.lam)
            self.theta = float(self.theta)
            kf = float(self.k)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"non-numeric chain parameters: {exc}") from exc
        if not math.isfinite(self.lam) or self.lam < 1.0:
            raise InvalidParams(
                f"lam must be >= 1 (canonical form), got {self.lam}"
            )
        if not math.isfinite(self.theta):
            raise InvalidParams("theta must be finite")
        if not kf.is_integer() or kf < 3:
            raise InvalidParams(f"k must be an integer >= 3, got {self.k}")
        self.k = int(kf)


@dataclass
class FactorChain:
    """Ordered SPD factors, applied right to left: product = M_k ... M_1."""

    factors: list
    params: ChainParams | None = None
    n: int = field(init=False)

    def __post_init__(self):
        if not self.factors:
            raise InvalidInput("factor chain is empty")
        mats = [_as_square(M, "chain factor") for M in self.factors]
        n = mats[0].shape[0]
        for M in mats:
            if M.shape[0] != n:
                raise DimensionMismatch("chain factors differ in size")
        self.factors = mats
        self.n = n

    def product(self) -> np.ndarray:
        return chain_product(self.factors)


@dataclass
class SweepTable:
    """Angle sweep: phi[i] is the unwrapped net rotation at theta[i]."""

    lam: float
    k: int
    theta: np.ndarray
    phi: np.ndarray


def rotation2(theta) -> np.ndarray:
    """The 2x2 rotation [[cos t, sin t], [-sin t, cos t]]."""
    t = float(theta)
    if not math.isfinite(t):
        raise InvalidParams("rotation angle must be finite")
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def chain_product(factors) -> np.ndarray:
    """Multiply factors right to left (factors[0] acts first)."""
    P = np.eye(np.asarray(factors[0]).shape[0])
    for M in factors:
        P = np.asarray(M, dtype=float) @ P
    return P


def _coerce_params(p) -> ChainParams:
    if isinstance(p, ChainParams):
        return p
    raise InvalidParams(f"expected ChainParams, got {type(p).__name__}")


def chain_covariances(p: ChainParams) -> list:
    """Covariance waypoints I = S_0, S_1, ..., S_k = I of the scheme.

    S_1 = diag(lam, 1/lam) and each interior S_j rotates the previous one
    by theta. With lam = 1 every waypoint is exactly the identity.
    """
    p = _coerce_params(p)
    I = np.eye(2)
    if p.lam == 1.0:
        return [I.copy() for _ in range(p.k + 1)]
    U = rotation2(p.theta)
    covs = [I, np.diag([p.lam, 1.0 / p.lam])]
    for _ in range(p.k - 2):
        S = U @ covs[-1] @ U.T
        covs.append((S + S.T) / 2.0)
    covs.append(np.eye(2))
    return covs


def build_chain(p: ChainParams) -> FactorChain:
    """Construct the k SPD factors whose product is the net rotation.

    Factor j is the Monge map from waypoint j-1 to waypoint j, so
    M_1 = diag(sqrt(lam), 1/sqrt(lam)) and M_k is the inverse square root
    of the last stretched waypoint.
    """
    p = _coerce_params(p)
    covs = chain_covariances(p)
    factors = []
    for j in range(1, p.k + 1):
        try:
            factors.append(ot_map(covs[j - 1], covs[j]))
        except NotPositiveDefinite as exc:
            # The stretched waypoints have condition lam^2; far enough out
            # the transport intermediates drop below the SPD certificate.
            raise NumericalFailure(
                f"factor {j} lost SPD certification at lam={p.lam:.6g}; "
                "the chain is too ill-conditioned at this scale"
            ) from exc
    return FactorChain(factors=factors, params=p)


def net_rotation(chain: FactorChain) -> float:
    """Net angle of a 2x2 chain, from the product's first row.

    Raises NotARotation if the product is not close to an orthogonal
    matrix with determinant +1.
    """
    if not isinstance(chain, FactorChain):
        chain = FactorChain(factors=list(chain))
    if chain.n != 2:
        raise DimensionMismatch("net rotation is defined for 2x2 chains")
    P = chain.product()
    defect = _frob(P @ P.T - np.eye(2))
    det = float(np.linalg.det(P))
    if defect > ROTATION_GATE or abs(det - 1.0) > ROTATION_GATE:
        raise NotARotation(
            f"chain product is not a rotation (orthogonality defect "
            f"{defect:.3e}, det {det:.6f})"
        )
    phi = math.atan2(P[0, 1], P[0, 0])
    return math.pi if phi == -math.pi else phi


# Batched closed-form 2x2 kernels for the sweeps. Shapes are (..., 2, 2).


def _rot_batch(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def _sqrt2(A: np.ndarray) -> np.ndarray:
    # (A + sqrt(det) I) / sqrt(trace + 2 sqrt(det)), exact for SPD 2x2.
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    s = np.sqrt(det)
    t = np.sqrt(A[..., 0, 0] + A[..., 1, 1] + 2.0 * s)
    out = A.copy()
    out[..., 0, 0] += s
    out[..., 1, 1] += s
    return out / t[..., None, None]


def _inv2(A: np.ndarray) -> np.ndarray:
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 1, 1] = A[..., 0, 0]
    out[..., 0, 1] = -A[..., 0, 1]
    out[..., 1, 0] = -A[..., 1, 0]
    return out / det[..., None, None]


def _ot2(Sa: np.ndarray, Sb: np.ndarray) -> np.ndarray:
    Ra = _sqrt2(Sa)
    C = _sqrt2(Ra @ Sb @ Ra)
    Rai = _inv2(Ra)
    return Rai @ C @ Rai


def _phi_batch(lam: float, k: int, thetas: np.ndarray) -> np.ndarray:
    """Wrapped net angle at each theta, closed-form 2x2 route."""
    if lam == 1.0:
        return np.zeros_like(thetas)
    U = _rot_batch(thetas)
    Ut = np.swapaxes(U, -1, -2)
    I = np.broadcast_to(np.eye(2), thetas.shape + (2, 2)).copy()
    S1 = np.zeros(thetas.shape + (2, 2))
    S1[..., 0, 0] = lam
    S1[..., 1, 1] = 1.0 / lam
    covs = [I, S1]
    for _ in range(k - 2):
        covs.append(U @ covs[-1] @ Ut)
    covs.append(I)
    P = np.broadcast_to(np.eye(2), thetas.shape + (2, 2)).copy()
    for j in range(1, k + 1):
        P = _ot2(covs[j - 1], covs[j]) @ P
    return np.arctan2(P[..., 0, 1], P[..., 0, 0])


def _phi_at(lam: float, k: int, theta: float, ref: float) -> float:
    """Net angle at a single theta, shifted to the branch nearest ref."""
    raw = float(_phi_batch(lam, k, np.array([theta]))[0])
    two_pi = 2.0 * math.pi
    return raw + two_pi * round((ref - raw) / two_pi)


def phi_sweep(lam, k, theta_max, steps) -> SweepTable:
    """Evaluate the net angle on a uniform theta grid from 0 to theta_max.

    The wrapped angles are unwrapped by nearest-branch continuation from
    phi(0) = 0. A residual jump above pi/2 between adjacent rows means the
    grid is too coarse to track the curve; that raises NumericalFailure
    rather than returning a table with a hidden branch error.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam < 1.0:
        raise InvalidParams(f"lam must be >= 1, got {lam}")
    if not float(k).is_integer() or k < 3:
        raise InvalidParams(f"k must be an integer >= 3, got {k}")
    k = int(k)
    theta_max = float(theta_max)
    if not math.isfinite(theta_max) or theta_max <= 0.0:
        raise InvalidParams(f"theta_max must be positive, got {theta_max}")
    if not float(steps).is_integer() or steps < 2:
        raise InvalidParams(f"steps must be an integer >= 2, got {steps}")
    steps = int(steps)

    grid = np.linspace(0.0, theta_max, steps)
    raw = _phi_batch(lam, k, grid)
    two_pi = 2.0 * math.pi
    d = np.diff(raw)
    d -= two_pi * np.round(d / two_pi)
    if d.size and float(np.max(np.abs(d))) > math.pi / 2.0:
        raise NumericalFailure(
            "angle changes faster than pi/2 per grid step; increase steps"
        )
    phi = np.concatenate(([0.0], np.cumsum(d)))
    return SweepTable(lam=lam, k=k, theta=grid, phi=phi)


@lru_cache(maxsize=64)
def _solver_sweep(lam: float, k: int) -> SweepTable:
    return phi_sweep(lam, k, math.pi, _SOLVER_STEPS)


def solve_theta(lam, k, psi) -> float:
    """Smallest theta in [0, pi] whose net angle equals psi.

    Brackets on a fixed 2000-point sweep, then bisects. The returned theta
    satisfies |phi_k(theta, lam) - psi| <= 1e-9 rad.

    Raises TargetUnreachable (with the sweep maximum in ``max_phi``) when
    the curve never reaches psi at this lam.
    """
    psi = float(psi)
    if not math.isfinite(psi) or psi < 0.0:
        raise InvalidParams(f"target angle must be >= 0, got {psi}")
    if psi == 0.0:
        # Validate lam and k through the same path as the general case.
        phi_sweep(lam, k, math.pi, 2)
        return 0.0
    table = _solver_sweep(float(lam), int(k))
    g = table.phi - psi
    hit = np.nonzero(g == 0.0)[0]
    if hit.size:
        return float(table.theta[hit[0]])
    crossings = np.nonzero(g[:-1] * g[1:] < 0.0)[0]
    if crossings.size == 0:
        top = float(np.max(table.phi))
        raise TargetUnreachable(
            f"net angle {psi:.6g} is not reachable at lam={lam:.6g}, "
            f"k={k} (max {top:.6g})",
            max_phi=top,
        )
    i = int(crossings[0])
    lo, hi = float(table.theta[i]), float(table.theta[i + 1])
    glo = float(g[i])
    ref = float(table.phi[i] + table.phi[i + 1]) / 2.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        gm = _phi_at(float(lam), int(k), mid, ref) - psi
        if gm == 0.0:
            lo = hi = mid
            break
        if (gm < 0.0) == (glo < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    if abs(_phi_at(float(lam), int(k), theta, ref) - psi) > 1e-9:
        raise NumericalFailure(
            f"bisection stalled away from the target at lam={lam:.6g}, k={k}"
        )
    return theta


def plan_scheme(psi, k, lam_budget) -> ChainParams:
    """Cheapest-conditioning scheme reaching net angle psi with k factors.

    Scans lam over the geometric grid 1.25^j up to lam_budget and returns
    the first grid value whose sweep reaches psi, with the matching theta.
    Conditioning is the user-facing cost, so the grid caps its granularity
    at 25 percent; finer lam resolution buys nothing.
    """
    psi = float(psi)
    if not math.isfinite(psi) or not 0.0 <= psi <= math.pi:
        raise InvalidParams(f"target angle must lie in [0, pi], got {psi}")
    if not float(k).is_integer() or k < 3:
        raise InvalidParams(f"k must be an integer >= 3, got {k}")
    k = int(k)
    budget = float(lam_budget)
    if not math.isfinite(budget) or budget < 1.0:
        raise InvalidParams(f"lam budget must be >= 1, got {budget}")
    if psi == 0.0:
        return ChainParams(lam=1.0, theta=0.0, k=k)
    top = 0.0
    j = 0
    while True:
        lam = 1.25**j
        if lam > budget:
            break
        table = _solver_sweep(lam, k)
        m = float(np.max(table.phi))
        top = max(top, m)
        if m >= psi:
            return ChainParams(lam=lam, theta=solve_theta(lam, k, psi), k=k)
        j += 1
    raise TargetUnreachable(
        f"net angle {psi:.6g} needs more than lam={budget:.6g} at k={k} "
        f"(largest achievable {top:.6g})",
        max_phi=top,
    )


def gradient_generator(Sigma0, theta, t_fn) -> np.ndarray:
    """Traceless symmetric A with e^{A t_fn} mapping Sigma0 onto its
    rotation by theta.

    A is the scaled log of the Monge map from Sigma0 to
    U_theta Sigma0 U_theta^T; its flow preserves volume, and integrating it
    for t_fn carries the covariance exactly one scheme leg forward.
    """
    S0 = _as_square(Sigma0, "gradient_generator covariance")
    if S0.shape != (2, 2):
        raise DimensionMismatch("gradient generator is defined for 2x2 input")
    t_fn = float(t_fn)
    if not math.isfinite(t_fn) or t_fn <= 0.0:
        raise InvalidParams(f"t_fn must be positive, got {t_fn}")
    U = rotation2(theta)
    S1 = U @ S0 @ U.T
    M = ot_map(S0, (S1 + S1.T) / 2.0)
    A = spd_log(M) / t_fn
    A = (A + A.T) / 2.0
    # det M = 1, so trace(A) is roundoff; project it out so volume
    # preservation survives division by a tiny t_fn.
    A -= (np.trace(A) / 2.0) * np.eye(2)
    return A
