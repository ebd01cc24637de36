"""Problem data, decision-set geometry, and assumption validation.

The learners in this package operate on a compact convex decision set D
under two standing assumptions: every loss gradient is bounded in norm
by G, and the set has Euclidean diameter D. Both constants are part of
the problem statement and are carried around in :class:`ProblemParams`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ProjectionError(RuntimeError):
    """Weighted projection failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class UnsupportedSetOperation(NotImplementedError):
    """Requested operation is not available for this decision-set shape."""


@dataclass(frozen=True)
class ProblemParams:
    """Static description of one online learning problem."""

    horizon: int
    dim: int
    grad_bound: float
    diameter: float

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (np.isfinite(self.grad_bound) and self.grad_bound > 0):
            raise ValueError(f"grad_bound must be finite and > 0, got {self.grad_bound}")
        if not (np.isfinite(self.diameter) and self.diameter > 0):
            raise ValueError(f"diameter must be finite and > 0, got {self.diameter}")


def as_vector(x, dim: int) -> np.ndarray:
    """Coerce to a float vector of length dim or raise ValueError."""
    v = np.asarray(x, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"expected vector of shape ({dim},), got {v.shape}")
    return v


class DecisionSet:
    """Compact convex feasible region supporting membership and projection."""

    dim: int

    def contains(self, x, tol: float = 1e-12) -> bool:
        raise NotImplementedError

    def project(self, y) -> np.ndarray:
        """Euclidean projection of y onto the set."""
        raise NotImplementedError

    def project_weighted(self, H, y) -> np.ndarray:
        """argmin_x (x-y)^T H (x-y) over the set, H symmetric positive definite."""
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw a point uniformly from the set."""
        raise NotImplementedError


def _check_spd(H, dim: int) -> np.ndarray:
    """Validate that H is symmetric positive definite, via attempted Cholesky."""
    M = np.asarray(H, dtype=float)
    if M.shape != (dim, dim):
        raise ValueError(f"expected matrix of shape ({dim},{dim}), got {M.shape}")
    scale = np.max(np.abs(M))
    if not np.isfinite(scale):
        raise ValueError("weight matrix has non-finite entries")
    if np.max(np.abs(M - M.T)) > 1e-8 * max(scale, 1.0):
        raise ValueError("weight matrix is not symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("weight matrix is not positive definite") from None
    return M


@dataclass(frozen=True)
class Ball(DecisionSet):
    """Euclidean ball { x : ||x - center|| <= radius }. Must contain the origin."""

    center: np.ndarray
    radius: float
    dim: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "dim", c.shape[0])
        if c.ndim != 1:
            raise ValueError("center must be a vector")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be finite and > 0, got {self.radius}")
        if float(np.linalg.norm(c)) > self.radius + 1e-12:
            raise ValueError("decision set must contain the origin")

    def contains(self, x, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return float(np.linalg.norm(v - self.center)) <= self.radius + tol

    def project(self, y) -> np.ndarray:
        v = as_vector(y, self.dim)
        z = v - self.center
        n = float(np.linalg.norm(z))
        if n <= self.radius:
            return v
        # Shave the scale by ulps until the recomputed offset passes the
        # feasibility test above, so projecting a second time is a no-op.
        scale = self.radius / n
        for _ in range(100):
            p = self.center + z * scale
            if float(np.linalg.norm(p - self.center)) <= self.radius:
                return p
            scale = np.nextafter(scale, 0.0)
        return p

    def project_weighted(self, H, y) -> np.ndarray:
        M = _check_spd(H, self.dim)
        v = as_vector(y, self.dim)
        if self.contains(v):
            return v
        # KKT for min (x-y)^T H (x-y) s.t. ||x-c|| <= r:
        #   x(mu) = c + (H + mu I)^{-1} H (y - c),  mu >= 0,
        # and ||x(mu)-c|| decreases monotonically in mu; bisect on mu.
        lam, V = np.linalg.eigh(M)
        w = V.T @ (v - self.center)
        a = lam * w

        def offset_norm(mu: float) -> float:
            return float(np.linalg.norm(a / (lam + mu)))

        lo = 0.0
        hi = max(float(lam[-1]), 1.0)
        while offset_norm(hi) > self.radius:
            hi *= 2.0
        mu = hi
        residual = abs(offset_norm(mu) - self.radius)
        for _ in range(200):
            mu = 0.5 * (lo + hi)
            n = offset_norm(mu)
            residual = abs(n - self.radius)
            if residual <= 1e-10:
                break
            if n > self.radius:
                lo = mu
            else:
                hi = mu
        else:
            raise ProjectionError(
                f"weighted projection did not converge: |residual| = {residual:.3e}",
                residual,
            )
        return self.center + V @ (a / (lam + mu))

    def diameter(self) -> float:
        return 2.0 * self.radius

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        # Uniform in the ball: uniform direction times U^(1/d) radius.
        z = rng.standard_normal(self.dim)
        n = float(np.linalg.norm(z))
        if n == 0.0:
            return self.center.copy()
        u = rng.uniform() ** (1.0 / self.dim)
        return self.center + z * (self.radius * u / n)


@dataclass(frozen=True)
class Box(DecisionSet):
    """Axis-aligned box { x : lower <= x <= upper }. Must contain the origin."""

    lower: np.ndarray
    upper: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "dim", lo.shape[0])
        if lo.ndim != 1 or hi.shape != lo.shape:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        if np.any(hi <= lo):
            raise ValueError("upper must exceed lower in every coordinate")
        if np.any(lo > 1e-12) or np.any(hi < -1e-12):
            raise ValueError("decision set must contain the origin")

    def contains(self, x, tol: float = 1e-12) -> bool:
        v = as_vector(x, self.dim)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def project(self, y) -> np.ndarray:
        v = as_vector(y, self.dim)
        return np.clip(v, self.lower, self.upper)

    def project_weighted(self, H, y) -> np.ndarray:
        raise UnsupportedSetOperation(
            "weighted projection onto a box is not supported; use a ball decision set"
        )

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


def contains(dset: DecisionSet, x, tol: float = 1e-12) -> bool:
    """Membership test with boundary tolerance."""
    return dset.contains(x, tol)


def project_euclidean(dset: DecisionSet, y) -> np.ndarray:
    """Euclidean projection onto the decision set."""
    return dset.project(y)


def project_weighted(dset: DecisionSet, H, y) -> np.ndarray:
    """Projection in the norm induced by SPD matrix H."""
    return dset.project_weighted(H, y)


@dataclass(frozen=True)
class GradientSample:
    """One observed (point, gradient) pair from the loss oracle."""

    point: np.ndarray
    gradient: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float)
        g = np.asarray(self.gradient, dtype=float)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "gradient", g)
        if p.ndim != 1 or g.shape != p.shape:
            raise ValueError("point and gradient must be vectors of equal length")
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient has non-finite entries")


class LossOracle:
    """One round's convex loss: value and gradient queries at feasible points.

    Subclasses may declare curvature through `curvature` ("convex",
    "strongly_convex", or "exp_concave") and `modulus` (the corresponding
    lambda or alpha), which the harness uses to pick certificate bounds.
    """

    curvature: str = "convex"
    modulus: float = 0.0

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def values(self, X) -> np.ndarray:
        """Vectorized value query; rows of X are points."""
        return np.array([self.value(x) for x in np.asarray(X, dtype=float)])


@dataclass
class AssumptionReport:
    """Outcome of checking Assumptions 1-2 on observed data."""

    grad_bound: float
    declared_diameter: float
    measured_diameter: float
    max_grad_norm: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_assumptions(
    params: ProblemParams,
    dset: DecisionSet,
    samples: Sequence[GradientSample],
) -> AssumptionReport:
    """Check gradient norms against G and the set diameter against D."""
    violations = []
    max_norm = 0.0
    for i, s in enumerate(samples):
        if s.point.shape != (params.dim,):
            violations.append((i, "dimension mismatch"))
            continue
        n = float(np.linalg.norm(s.gradient))
        max_norm = max(max_norm, n)
        if n > params.grad_bound * (1.0 + 1e-9):
            violations.append((i, f"gradient norm {n:.6g} exceeds G={params.grad_bound:.6g}"))
        if not dset.contains(s.point, tol=1e-9):
            violations.append((i, "query point outside the decision set"))
    measured = dset.diameter()
    if abs(measured - params.diameter) > 1e-9 * max(1.0, params.diameter):
        violations.append((-1, f"set diameter {measured:.12g} != declared {params.diameter:.12g}"))
    return AssumptionReport(
        grad_bound=params.grad_bound,
        declared_diameter=params.diameter,
        measured_diameter=measured,
        max_grad_norm=max_norm,
        violations=violations,
    )
