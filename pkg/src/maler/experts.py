"""Expert algorithms driven by the broadcast (play, gradient) pair.

Each expert runs its own first-order method on its own surrogate sequence:

  constant-rate:  x_{t+1} = P_D(x_t^c - (D / (G sqrt(t))) g_t)
                  (gradient descent on c_t; the eta_c factors cancel)
  spherical:      x_{t+1} = P_D(x_t^e - grad s_t(x_t^e) / (2 eta^2 G^2 t))
                  (gradient descent on the 2 eta^2 G^2 strongly convex s_t)
  quadratic:      x_{t+1} = P_D^{Sigma}(x_t^e - Sigma^{-1} grad l_t(x_t^e) / beta)
                  (online Newton step on the exp-concave l_t)

The quadratic expert's matrix inverse is maintained by rank-one updates and
re-factorized periodically to stop drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import surrogates
from .core import DecisionSet, ProblemParams
from .meta import (
    KIND_CONST,
    KIND_QUADRATIC,
    KIND_SPHERICAL,
    CertificateReport,
    CertificateRow,
    ExpertGrid,
    RunTrace,
)
from .surrogates import SurrogateContext

ONS_GRAD_SCALE = 7.0 / 25.0
REFACTOR_EVERY = 512


def ons_grad_bound(D: float) -> float:
    """Norm cap 7/(25 D) on the quadratic surrogate's gradient."""
    return ONS_GRAD_SCALE / D


def ons_beta(D: float) -> float:
    """Newton-step parameter beta = min(1/(4 G_l D), 1) / 2."""
    return 0.5 * min(1.0 / (4.0 * ons_grad_bound(D) * D), 1.0)


@dataclass(frozen=True)
class ConvexExpertState:
    """Constant-rate gradient-descent expert."""

    iterate: np.ndarray
    round: int
    eta: float
    dset: DecisionSet
    G: float
    D: float


@dataclass(frozen=True)
class SphericalExpertState:
    """Gradient-descent expert on the spherical surrogate."""

    iterate: np.ndarray
    round: int
    eta: float
    dset: DecisionSet
    G: float


@dataclass(frozen=True)
class NewtonExpertState:
    """Online-Newton expert on the quadratic surrogate."""

    iterate: np.ndarray
    round: int
    eta: float
    dset: DecisionSet
    beta: float
    sigma: np.ndarray
    sigma_inv: np.ndarray
    updates: int


def init_convex_expert(dset: DecisionSet, params: ProblemParams, eta_c: float) -> ConvexExpertState:
    return ConvexExpertState(
        iterate=np.zeros(params.dim),
        round=1,
        eta=eta_c,
        dset=dset,
        G=params.grad_bound,
        D=params.diameter,
    )


def init_spherical_expert(dset: DecisionSet, params: ProblemParams, eta: float) -> SphericalExpertState:
    return SphericalExpertState(
        iterate=np.zeros(params.dim),
        round=1,
        eta=eta,
        dset=dset,
        G=params.grad_bound,
    )


def init_newton_expert(dset: DecisionSet, params: ProblemParams, eta: float) -> NewtonExpertState:
    beta = ons_beta(params.diameter)
    scale = 1.0 / (beta**2 * params.diameter**2)
    return NewtonExpertState(
        iterate=np.zeros(params.dim),
        round=1,
        eta=eta,
        dset=dset,
        beta=beta,
        sigma=scale * np.eye(params.dim),
        sigma_inv=(1.0 / scale) * np.eye(params.dim),
        updates=0,
    )


def sherman_morrison_update(A_inv: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inverse of (A + v v^T) given A_inv, via the rank-one identity."""
    Av = A_inv @ v
    return A_inv - np.outer(Av, Av) / (1.0 + float(v @ Av))


def convex_expert_step(state: ConvexExpertState, ctx: SurrogateContext) -> ConvexExpertState:
    """Descend the padded linear surrogate with rate D/(eta G sqrt(t))."""
    if ctx.eta != state.eta:
        raise ValueError("context rate does not match this expert's rate")
    g = surrogates.c_grad(ctx, state.iterate)
    step = state.D / (state.eta * state.G * math.sqrt(state.round))
    nxt = state.dset.project(state.iterate - step * g)
    return replace(state, iterate=nxt, round=state.round + 1)


def spherical_expert_step(state: SphericalExpertState, ctx: SurrogateContext) -> SphericalExpertState:
    """Descend the spherical surrogate with rate 1/(2 eta^2 G^2 t)."""
    if ctx.eta != state.eta:
        raise ValueError("context rate does not match this expert's rate")
    g = surrogates.s_grad(ctx, state.iterate)
    step = 1.0 / (2.0 * state.eta**2 * state.G**2 * state.round)
    nxt = state.dset.project(state.iterate - step * g)
    return replace(state, iterate=nxt, round=state.round + 1)


def newton_expert_step(state: NewtonExpertState, ctx: SurrogateContext) -> NewtonExpertState:
    """Newton-step on the quadratic surrogate under the running metric."""
    if ctx.eta != state.eta:
        raise ValueError("context rate does not match this expert's rate")
    g = surrogates.ell_grad(ctx, state.iterate)
    cap = ons_grad_bound(ctx.D)
    gn = float(np.linalg.norm(g))
    if gn > cap * (1.0 + 1e-9):
        raise ValueError(f"surrogate gradient norm {gn:.6g} exceeds the proved cap {cap:.6g}")
    sigma = state.sigma + np.outer(g, g)
    updates = state.updates + 1
    if updates % REFACTOR_EVERY == 0:
        sigma_inv = np.linalg.inv(sigma)
    else:
        sigma_inv = sherman_morrison_update(state.sigma_inv, g)
    target = state.iterate - (1.0 / state.beta) * (sigma_inv @ g)
    nxt = state.dset.project_weighted(sigma, target)
    return replace(
        state,
        iterate=nxt,
        round=state.round + 1,
        sigma=sigma,
        sigma_inv=sigma_inv,
        updates=updates,
    )


def expert_regret_s_bound(horizon: int) -> float:
    """Surrogate regret bound for the spherical expert: 1 + ln T."""
    return 1.0 + math.log(horizon)


def expert_regret_ell_bound(horizon: int, dim: int) -> float:
    """Surrogate regret bound for the quadratic expert: 10 d ln T."""
    return 10.0 * dim * math.log(horizon)


def expert_regret_c_bound() -> float:
    """Surrogate regret bound for the constant-rate expert: 3/4."""
    return 0.75


class SummedSurrogate:
    """Cumulative surrogate of one expert as an explicit quadratic in u.

    Every surrogate is (at most) quadratic, so the sum over rounds is
    u^T P u + q^T u + r with P either zero (constant-pad), isotropic
    (spherical), or sum_t eta^2 g_t g_t^T (quadratic). Minimization over
    the set uses a closed form when available and projected gradient
    descent otherwise.
    """

    def __init__(self, kind: str, plays: np.ndarray, grads: np.ndarray, eta: float, G: float, D: float):
        self.kind = kind
        self.eta = eta
        self.rounds = plays.shape[0]
        xg = np.einsum("td,td->t", plays, grads)
        sum_g = grads.sum(axis=0)
        if kind == KIND_CONST:
            self.iso = 0.0
            self.M = None
            self.q = eta * sum_g
            self.r = -eta * float(xg.sum()) + self.rounds * (eta * G * D) ** 2
        elif kind == KIND_SPHERICAL:
            self.iso = eta**2 * G**2 * self.rounds
            self.M = None
            self.q = eta * sum_g - 2.0 * eta**2 * G**2 * plays.sum(axis=0)
            self.r = -eta * float(xg.sum()) + eta**2 * G**2 * float(
                np.einsum("td,td->", plays, plays)
            )
        elif kind == KIND_QUADRATIC:
            self.iso = 0.0
            self.M = eta**2 * np.einsum("ti,tj->ij", grads, grads)
            self.q = eta * sum_g - 2.0 * eta**2 * (xg @ grads)
            self.r = -eta * float(xg.sum()) + eta**2 * float(xg @ xg)
        else:
            raise ValueError(f"unknown surrogate kind {kind!r}")

    def value(self, u) -> float:
        u = np.asarray(u, dtype=float)
        out = self.iso * float(u @ u) + float(self.q @ u) + self.r
        if self.M is not None:
            out += float(u @ (self.M @ u))
        return out

    def values(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        out = self.iso * np.einsum("nd,nd->n", U, U) + U @ self.q + self.r
        if self.M is not None:
            out += np.einsum("nd,nd->n", U, U @ self.M)
        return out

    def gradient(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        g = 2.0 * self.iso * u + self.q
        if self.M is not None:
            g = g + 2.0 * (self.M @ u)
        return g

    def minimize(self, dset: DecisionSet, iters: int = 10000, tol: float = 1e-12) -> np.ndarray:
        """Constrained minimizer of the summed surrogate over the set."""
        from .core import Ball, Box

        if self.M is None and self.iso > 0.0:
            # Isotropic quadratic: constrained optimum is the Euclidean
            # projection of the unconstrained one.
            return dset.project(-self.q / (2.0 * self.iso))
        if self.M is None and self.iso == 0.0:
            if isinstance(dset, Ball):
                n = float(np.linalg.norm(self.q))
                if n == 0.0:
                    return dset.center.copy()
                return dset.center - dset.radius * self.q / n
            if isinstance(dset, Box):
                return np.where(self.q > 0, dset.lower, dset.upper)
        curv = self.iso
        if self.M is not None:
            curv += float(np.linalg.eigvalsh(self.M)[-1])
        lips = max(2.0 * curv, 1e-12)
        u = dset.project(np.zeros(self.q.shape[0]))
        step = 1.0 / lips
        for _ in range(iters):
            nxt = dset.project(u - step * self.gradient(u))
            if float(np.linalg.norm(nxt - u)) <= tol:
                u = nxt
                break
            u = nxt
        return u


def expert_regret_certificate(trace: RunTrace, grid: Optional[ExpertGrid] = None) -> CertificateReport:
    """Check each expert's regret on its own surrogate sum against its fixed per-expert cap.

    The comparator is the brute-force constrained minimizer of the summed
    surrogate, realizing the worst u in the bound's quantifier.
    """
    from .meta import recompute_surrogate_losses

    if grid is None:
        grid = trace.grid
    if grid is None or trace.expert_points is None:
        raise ValueError("trace does not carry expert data")
    params = trace.params
    T, d = trace.plays.shape
    own = recompute_surrogate_losses(trace).sum(axis=0)
    rows = []
    for e, kind in enumerate(grid.kinds):
        obj = SummedSurrogate(
            kind, trace.plays, trace.grads, float(grid.tilts[e]), params.grad_bound, params.diameter
        )
        u = obj.minimize(trace.dset)
        best = obj.value(u)
        if kind == KIND_CONST:
            bound = expert_regret_c_bound()
        elif kind == KIND_SPHERICAL:
            bound = expert_regret_s_bound(T)
        else:
            bound = expert_regret_ell_bound(T, d)
        rows.append(
            CertificateRow(
                label=f"expert-regret {grid.labels[e]}",
                measured=float(own[e]) - best,
                bound=bound,
            )
        )
    return CertificateReport(name="expert-regret", rows=rows)
