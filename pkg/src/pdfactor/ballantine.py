"""Factor any positive-determinant matrix into a short SPD product.

The pipeline is the classical route: polar-split the input as Phi = V S,
block-diagonalize the rotation V, realize every planar block as a chain of
SPD factors, then conjugate the stage-aligned block-diagonal factors back
into the original coordinates. Six factors suffice at the defaults: one
polar stretch plus at most five per rotation stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidParams,
    NegativeDeterminant,
    NonPositiveDeterminant,
    NotOrthogonal,
    SingularInput,
)
from .matfun import SPD_RTOL, _as_square, _frob, polar, sym_eig
from .planar import FactorChain, build_chain, plan_scheme
from .spectral import RotationBlock, block_diagonalize

__all__ = [
    "FactorOptions",
    "FactorStats",
    "VerificationReport",
    "factor_rotation2",
    "factor_orthogonal",
    "factor_matrix",
    "verify",
]


@dataclass
class FactorOptions:
    """Knobs for the factorization pipeline.

    k_rotation is the factor count per rotation stage (5 covers every
    angle including half turns; more factors allow smaller lam), lam_budget
    caps the condition number of any planned scheme, tol_verify is the
    residual gate used by the end-to-end entry points.
    """

    k_rotation: int = 5
    lam_budget: float = 1000.0
    tol_verify: float = 1e-8

    def __post_init__(self):
        if not float(self.k_rotation).is_integer() or self.k_rotation < 3:
            raise InvalidParams(
                f"k_rotation must be an integer >= 3, got {self.k_rotation}"
            )
        self.k_rotation = int(self.k_rotation)
        self.lam_budget = float(self.lam_budget)
        if not math.isfinite(self.lam_budget) or self.lam_budget < 1.0:
            raise InvalidParams(
                f"lam_budget must be >= 1, got {self.lam_budget}"
            )
        self.tol_verify = float(self.tol_verify)
        if not self.tol_verify > 0.0:
            raise InvalidParams("tol_verify must be positive")


@dataclass
class FactorStats:
    symmetry_defect: float
    min_eigenvalue: float
    condition: float


@dataclass
class VerificationReport:
    """Residual and per-factor health of a claimed factorization."""

    residual: float
    factors: list
    factor_count: int
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "residual": self.residual,
            "factor_count": self.factor_count,
            "tol": self.tol,
            "passed": self.passed,
            "factors": [
                {
                    "symmetry_defect": f.symmetry_defect,
                    "min_eigenvalue": f.min_eigenvalue,
                    "condition": f.condition,
                }
                for f in self.factors
            ],
        }


def factor_rotation2(psi, opts: FactorOptions | None = None) -> FactorChain:
    """SPD chain for a 2x2 rotation by psi in (-pi, pi].

    Negative angles reuse the positive-angle factors in reversed order
    (the transposed product rotates the other way).
    """
    opts = opts or FactorOptions()
    psi = float(psi)
    if not math.isfinite(psi) or not -math.pi < psi <= math.pi:
        raise InvalidParams(f"rotation angle must lie in (-pi, pi], got {psi}")
    if psi == 0.0:
        return FactorChain([np.eye(2)])
    params = plan_scheme(abs(psi), opts.k_rotation, opts.lam_budget)
    chain = build_chain(params)
    if psi < 0.0:
        return FactorChain(list(reversed(chain.factors)), params=params)
    return chain


def factor_orthogonal(V, opts: FactorOptions | None = None) -> FactorChain:
    """SPD chain for a special orthogonal matrix of any size.

    Each rotation plane gets its own scheme (small angles plan small lam);
    shorter block chains are padded with identity factors at the end so
    stage i can assemble the i-th factor of every block at once.
    """
    opts = opts or FactorOptions()
    V = _as_square(V, "factor_orthogonal input")
    n = V.shape[0]
    defect = _frob(V.T @ V - np.eye(n))
    if defect > 1e-8:
        raise NotOrthogonal(f"input has orthogonality defect {defect:.3e}")
    if abs(float(np.linalg.det(V)) - 1.0) > 1e-8:
        raise NegativeDeterminant("input determinant is not +1")

    decomp = block_diagonalize(V)
    rotations = [b for b in decomp.blocks if isinstance(b, RotationBlock)]
    per_block = [factor_rotation2(b.theta, opts).factors for b in rotations]
    stages = max((len(f) for f in per_block), default=0)
    if stages == 0:
        return FactorChain([np.eye(n)])

    factors = []
    for i in range(stages):
        D = np.eye(n)
        for block, fs in zip(rotations, per_block):
            M = fs[i] if i < len(fs) else np.eye(2)
            r0, r1 = block.rows
            D[r0, r0] = M[0, 0]
            D[r0, r1] = M[0, 1]
            D[r1, r0] = M[1, 0]
            D[r1, r1] = M[1, 1]
        N = decomp.U @ D @ decomp.U.T
        factors.append((N + N.T) / 2.0)
    return FactorChain(factors)


def factor_matrix(Phi, opts: FactorOptions | None = None) -> FactorChain:
    """SPD chain for any square matrix with positive determinant.

    Polar-splits Phi = V S and prepends the stretch S (applied first) to
    the chain of rotation stages for V. Pure stretches collapse to the
    single factor [S]; pure rotations drop the near-identity S.
    """
    opts = opts or FactorOptions()
    Phi = _as_square(Phi, "factor_matrix input")
    n = Phi.shape[0]
    det = float(np.linalg.det(Phi))
    if abs(det) < 1e-300:
        raise SingularInput("input determinant vanishes to working precision")
    if det < 0.0:
        raise NonPositiveDeterminant(
            "determinant not positive; a product of SPD factors "
            "always has positive determinant"
        )
    V, S = polar(Phi)
    if _frob(V - np.eye(n)) <= 1e-12:
        return FactorChain([S])
    chain = factor_orthogonal(V, opts)
    if _frob(S - np.eye(n)) <= 1e-10:
        return chain
    return FactorChain([S] + chain.factors)


def verify(chain, target, tol) -> VerificationReport:
    """Measure how well a chain multiplies out to the target.

    PASS requires relative residual at most tol and every factor to clear
    the SPD certificate. Factors are inspected, not trusted: asymmetric or
    indefinite entries produce a failing report rather than an exception.
    """
    if not isinstance(chain, FactorChain):
        chain = FactorChain(factors=list(chain))
    target = _as_square(target, "verify target")
    if target.shape[0] != chain.n:
        raise DimensionMismatch(
            f"chain is {chain.n}x{chain.n}, target {target.shape[0]}x"
            f"{target.shape[0]}"
        )
    tnorm = _frob(target)
    if tnorm == 0.0:
        raise InvalidInput("verify target is the zero matrix")
    residual = _frob(chain.product() - target) / tnorm

    stats = []
    all_spd = True
    for M in chain.factors:
        sym_defect = _frob(M - M.T)
        pair = sym_eig((M + M.T) / 2.0)
        dmax, dmin = float(pair.d[0]), float(pair.d[-1])
        spd_ok = (
            sym_defect <= 1e-12 * (1.0 + _frob(M))
            and dmin > SPD_RTOL * max(1.0, dmax)
        )
        all_spd = all_spd and spd_ok
        condition = dmax / dmin if dmin > 0.0 else math.inf
        stats.append(
            FactorStats(
                symmetry_defect=sym_defect,
                min_eigenvalue=dmin,
                condition=condition,
            )
        )
    return VerificationReport(
        residual=residual,
        factors=stats,
        factor_count=len(chain.factors),
        tol=float(tol),
        passed=bool(residual <= float(tol) and all_spd),
    )
