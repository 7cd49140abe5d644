"""Piecewise-constant gradient flows realizing a factor chain.

Every SPD factor M_i is the time-Delta_i endpoint map of the linear flow
x' = A_i x with symmetric generator A_i = log(M_i)/Delta_i, so running the
segments back to back transports a particle cloud exactly the way the
factor product does. Particles advance by exact exponential substeps;
the covariance integrates the Lyapunov equation Sigma' = A Sigma + Sigma A
with classical RK4 over the same partition, and the two views are expected
to agree at segment ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidParams,
    InvalidStep,
)
from .matfun import _require_symmetric, expm, spd_log
from .planar import FactorChain

__all__ = [
    "FlowSegment",
    "ParticleCloud",
    "Trajectory",
    "segments_from_chain",
    "simulate",
    "transition_matrix",
    "write_trajectory_csv",
]

# A remainder below this fraction of the segment is roundoff from dt
# dividing the duration evenly, not a genuine partial step.
_REMAINDER_TOL = 1e-12


@dataclass
class FlowSegment:
    """Constant symmetric generator driving x' = A x for a fixed duration."""

    A: np.ndarray
    duration: float = 1.0

    def __post_init__(self):
        A = _require_symmetric(self.A, "flow generator")
        self.A = A
        try:
            self.duration = float(self.duration)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"non-numeric duration: {exc}") from exc
        if not math.isfinite(self.duration) or self.duration <= 0.0:
            raise InvalidParams(
                f"duration must be positive, got {self.duration}"
            )

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass
class ParticleCloud:
    """Point ensemble at a common time, one n-vector per row."""

    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        P = np.asarray(self.positions, dtype=np.float64)
        if P.ndim == 1:
            P = P[np.newaxis, :]
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise InvalidInput("positions must form an (N, n) array")
        if not np.all(np.isfinite(P)):
            raise InvalidInput("particle coordinates must be finite")
        self.positions = P.copy()
        try:
            self.time = float(self.time)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"non-numeric time stamp: {exc}") from exc
        if not math.isfinite(self.time):
            raise InvalidInput("time stamp must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def covariance(self) -> np.ndarray:
        """Population covariance (1/N) about the ensemble mean."""
        X = self.positions - self.positions.mean(axis=0)
        return (X.T @ X) / self.positions.shape[0]


@dataclass
class Trajectory:
    """Sampled flow history.

    times has shape (T,), positions (T, N, n), covariances (T, n, n);
    index 0 is the initial state.
    """

    times: np.ndarray
    positions: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise InvalidInput("times must be a nonempty 1-D array")
        if np.any(np.diff(t) <= 0.0):
            raise InvalidInput("sample times must be strictly increasing")
        P = np.asarray(self.positions, dtype=np.float64)
        C = np.asarray(self.covariances, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != t.size:
            raise DimensionMismatch(
                "positions must be (T, N, n) matching the sample count"
            )
        n = P.shape[2]
        if C.shape != (t.size, n, n):
            raise DimensionMismatch(
                "covariances must be (T, n, n) matching positions"
            )
        self.times = t
        self.positions = P
        self.covariances = C

    @property
    def sample_count(self) -> int:
        return self.times.size


def segments_from_chain(chain, durations=None) -> list:
    """Recover one generator per factor so that M_i = exp(A_i * Delta_i).

    With no durations given every segment runs for unit time; durations
    only rescale the generators, never the endpoint maps.
    """
    if not isinstance(chain, FactorChain):
        chain = FactorChain(list(chain))
    k = len(chain.factors)
    if durations is None:
        durs = [1.0] * k
    else:
        durs = list(durations)
        if len(durs) != k:
            raise DimensionMismatch(
                f"{len(durs)} durations for {k} factors"
            )
    segments = []
    for M, d in zip(chain.factors, durs):
        try:
            d = float(d)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"non-numeric duration: {exc}") from exc
        if not math.isfinite(d) or d <= 0.0:
            raise InvalidParams(f"duration must be positive, got {d}")
        segments.append(FlowSegment(spd_log(M) / d, d))
    return segments


def _lyapunov_rk4(Sigma, A, h):
    # Classical RK4 on Sigma' = A Sigma + Sigma A^T; symmetrize to stop
    # roundoff from accumulating an antisymmetric part over many steps.
    def f(S):
        return A @ S + S @ A.T

    k1 = f(Sigma)
    k2 = f(Sigma + 0.5 * h * k1)
    k3 = f(Sigma + 0.5 * h * k2)
    k4 = f(Sigma + h * k3)
    S = Sigma + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return (S + S.T) / 2.0


def simulate(segments, cloud, dt=1e-3) -> Trajectory:
    """Run the segments back to back, sampling every substep boundary.

    Particle positions advance by the exact exponential of each substep,
    so boundary positions match the factor products up to roundoff. The
    covariance is integrated with RK4 instead, which makes segment ends a
    genuine accuracy check rather than a restatement of the same formula.
    """
    segs = list(segments)
    if not segs:
        raise InvalidInput("no segments to simulate")
    for seg in segs:
        if not isinstance(seg, FlowSegment):
            raise InvalidInput("segments must be FlowSegment instances")
    n = segs[0].n
    for seg in segs:
        if seg.n != n:
            raise DimensionMismatch("segment generators differ in size")
    if not isinstance(cloud, ParticleCloud):
        cloud = ParticleCloud(cloud)
    if cloud.n != n:
        raise DimensionMismatch(
            f"cloud dimension {cloud.n} does not match generators ({n})"
        )
    try:
        dt = float(dt)
    except (TypeError, ValueError) as exc:
        raise InvalidStep(f"non-numeric dt: {exc}") from exc
    if not math.isfinite(dt) or dt <= 0.0:
        raise InvalidStep(f"dt must be positive, got {dt}")
    shortest = min(seg.duration for seg in segs)
    if dt > shortest:
        raise InvalidStep(
            f"dt={dt} exceeds the shortest segment duration {shortest}"
        )

    X = cloud.positions.copy()
    Sigma = cloud.covariance()
    times = [cloud.time]
    positions = [X.copy()]
    covariances = [Sigma.copy()]

    seg_start = cloud.time
    for seg in segs:
        A = seg.A
        delta = seg.duration
        m = int(math.floor(delta / dt + 1e-9))
        rem = delta - m * dt
        if rem <= _REMAINDER_TOL * max(1.0, delta):
            rem = 0.0
        E = expm(A * dt)
        for j in range(1, m + 1):
            X = X @ E.T
            Sigma = _lyapunov_rk4(Sigma, A, dt)
            if j == m and rem == 0.0:
                # pin the boundary so later segments see no drift
                t = seg_start + delta
            else:
                t = seg_start + j * dt
            times.append(t)
            positions.append(X.copy())
            covariances.append(Sigma.copy())
        if rem > 0.0:
            Er = expm(A * rem)
            X = X @ Er.T
            Sigma = _lyapunov_rk4(Sigma, A, rem)
            times.append(seg_start + delta)
            positions.append(X.copy())
            covariances.append(Sigma.copy())
        seg_start = seg_start + delta

    return Trajectory(
        np.array(times), np.array(positions), np.array(covariances)
    )


def transition_matrix(segments) -> np.ndarray:
    """Endpoint map of the whole protocol: product of segment exponentials,
    applied right to left."""
    segs = list(segments)
    if not segs:
        raise InvalidInput("no segments")
    P = np.eye(segs[0].n)
    for seg in segs:
        if not isinstance(seg, FlowSegment):
            raise InvalidInput("segments must be FlowSegment instances")
        if seg.n != segs[0].n:
            raise DimensionMismatch("segment generators differ in size")
        P = expm(seg.A * seg.duration) @ P
    return P


def write_trajectory_csv(trajectory, prefix) -> tuple:
    """Write <prefix>_trajectory.csv and <prefix>_covariance.csv.

    The trajectory file holds one row per (time, particle); the covariance
    file one row per time with the full matrix flattened row-major. Both
    use 17 significant digits, UTF-8, LF line endings.
    """
    if not isinstance(trajectory, Trajectory):
        raise InvalidInput("expected a Trajectory")
    T, N, n = trajectory.positions.shape
    traj_path = f"{prefix}_trajectory.csv"
    cov_path = f"{prefix}_covariance.csv"
    with open(traj_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,particle_id," + ",".join(f"x{i + 1}" for i in range(n)))
        fh.write("\n")
        for it in range(T):
            t = trajectory.times[it]
            for p in range(N):
                coords = ",".join(
                    "%.17g" % v for v in trajectory.positions[it, p]
                )
                fh.write("%.17g,%d,%s\n" % (t, p, coords))
    with open(cov_path, "w", encoding="utf-8", newline="\n") as fh:
        head = ",".join(
            f"sigma_{i + 1}{j + 1}" for i in range(n) for j in range(n)
        )
        fh.write("t," + head + "\n")
        for it in range(T):
            entries = ",".join(
                "%.17g" % v for v in trajectory.covariances[it].ravel()
            )
            fh.write("%.17g,%s\n" % (trajectory.times[it], entries))
    return traj_path, cov_path
