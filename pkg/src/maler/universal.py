"""Learner protocol, the universal tilted-ensemble learner, and baselines.

Every learner speaks the same two-call protocol per round: predict() returns
the point to play, observe(g) feeds back the loss gradient at that point.
predict is pure between observes; observe without a pending prediction, or
twice in a row, is a protocol error. Gradients are validated against the
declared bound G on arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import experts, meta, surrogates
from .core import DecisionSet, ProblemParams, as_vector
from .meta import CertificateReport, CertificateRow, ExpertGrid, RunTrace


class ProtocolError(RuntimeError):
    """predict/observe called out of order."""


class AssumptionViolation(RuntimeError):
    """Observed data contradicts the declared problem constants."""


class Learner:
    """Base predict/observe learner with gradient validation and tracing."""

    algo = "learner"

    def __init__(self, params: ProblemParams, dset: DecisionSet):
        if dset.dim != params.dim:
            raise ValueError("decision set dimension does not match the problem")
        self.params = params
        self.dset = dset
        self._pending: Optional[np.ndarray] = None
        self._plays: list = []
        self._grads: list = []

    def predict(self) -> np.ndarray:
        if self._pending is None:
            self._pending = np.asarray(self._predict(), dtype=float)
        return self._pending.copy()

    def observe(self, gradient) -> None:
        if self._pending is None:
            raise ProtocolError("observe requires a pending predict")
        g = as_vector(gradient, self.params.dim)
        gn = float(np.linalg.norm(g))
        if not np.all(np.isfinite(g)):
            raise AssumptionViolation("gradient has non-finite entries")
        if gn > self.params.grad_bound * (1.0 + 1e-9):
            raise AssumptionViolation(
                f"gradient norm {gn:.6g} exceeds declared bound G={self.params.grad_bound:.6g}"
            )
        self._plays.append(self._pending)
        self._grads.append(g)
        self._observe(self._pending, g)
        self._pending = None

    def _predict(self) -> np.ndarray:
        raise NotImplementedError

    def _observe(self, play: np.ndarray, grad: np.ndarray) -> None:
        raise NotImplementedError

    def trace(self) -> RunTrace:
        return RunTrace(
            algo=self.algo,
            params=self.params,
            dset=self.dset,
            plays=np.array(self._plays) if self._plays else np.zeros((0, self.params.dim)),
            grads=np.array(self._grads) if self._grads else np.zeros((0, self.params.dim)),
        )


class _TiltedEnsembleLearner(Learner):
    """Shared engine: a grid of experts under tilted exponential weights."""

    def __init__(self, params: ProblemParams, dset: DecisionSet, grid: ExpertGrid):
        super().__init__(params, dset)
        self.grid = grid
        self.state = meta.init_meta_state(grid)
        self.experts = []
        for e, kind in enumerate(grid.kinds):
            eta = float(grid.tilts[e])
            if kind == meta.KIND_CONST:
                self.experts.append(experts.init_convex_expert(dset, params, eta))
            elif kind == meta.KIND_SPHERICAL:
                self.experts.append(experts.init_spherical_expert(dset, params, eta))
            else:
                self.experts.append(experts.init_newton_expert(dset, params, eta))
        self._expert_points: list = []
        self._losses: list = []
        self._log_weights: list = []
        self._log_phi: list = []

    def _predict(self) -> np.ndarray:
        points = np.array([ex.iterate for ex in self.experts])
        return meta.aggregate_play(self.state, self.grid, points)

    def _observe(self, play: np.ndarray, grad: np.ndarray) -> None:
        G, D = self.params.grad_bound, self.params.diameter
        contexts = {
            eta: surrogates.SurrogateContext(play=play, grad=grad, eta=eta, G=G, D=D)
            for eta in {float(t) for t in self.grid.tilts}
        }
        points = np.array([ex.iterate for ex in self.experts])
        losses = np.empty(self.grid.size)
        for e, kind in enumerate(self.grid.kinds):
            ctx = contexts[float(self.grid.tilts[e])]
            if kind == meta.KIND_CONST:
                losses[e] = surrogates.c_value(ctx, self.experts[e].iterate)
            elif kind == meta.KIND_SPHERICAL:
                losses[e] = surrogates.s_value(ctx, self.experts[e].iterate)
            else:
                losses[e] = surrogates.ell_value(ctx, self.experts[e].iterate)
        self.state = meta.update_weights(self.state, self.grid, losses)
        new_experts = []
        for e, kind in enumerate(self.grid.kinds):
            ctx = contexts[float(self.grid.tilts[e])]
            if kind == meta.KIND_CONST:
                new_experts.append(experts.convex_expert_step(self.experts[e], ctx))
            elif kind == meta.KIND_SPHERICAL:
                new_experts.append(experts.spherical_expert_step(self.experts[e], ctx))
            else:
                new_experts.append(experts.newton_expert_step(self.experts[e], ctx))
        self.experts = new_experts
        self._expert_points.append(points)
        self._losses.append(losses)
        self._log_weights.append(self.state.log_weights.copy())
        self._log_phi.append(self.state.log_potential)

    def trace(self) -> RunTrace:
        t = super().trace()
        t.grid = self.grid
        if self._expert_points:
            t.expert_points = np.array(self._expert_points)
            t.surrogate_losses = np.array(self._losses)
            t.log_weights = np.array(self._log_weights)
            t.log_phi = np.array(self._log_phi)
        return t


class MalerLearner(_TiltedEnsembleLearner):
    """Universal learner: constant-rate, spherical, and quadratic experts."""

    algo = "maler"

    def __init__(self, params: ProblemParams, dset: DecisionSet):
        super().__init__(params, dset, meta.build_grid(params))


def metagrad_baseline(params: ProblemParams, dset: DecisionSet) -> Learner:
    """Baseline ensemble with quadratic-surrogate experts only."""
    learner = _TiltedEnsembleLearner(params, dset, meta.metagrad_grid(params))
    learner.algo = "metagrad"
    return learner


class OGDLearner(Learner):
    """Projected online gradient descent on the true gradients.

    mode "convex" uses the D/(G sqrt(t)) schedule; mode "strongly-convex"
    uses 1/(lam t) for a declared modulus lam.
    """

    def __init__(self, params: ProblemParams, dset: DecisionSet, mode: str = "convex",
                 sc_modulus: Optional[float] = None):
        super().__init__(params, dset)
        if mode not in ("convex", "strongly-convex"):
            raise ValueError(f"unknown OGD mode {mode!r}")
        if mode == "strongly-convex":
            if sc_modulus is None or sc_modulus <= 0:
                raise ValueError("strongly-convex OGD needs a positive modulus")
        self.mode = mode
        self.sc_modulus = sc_modulus
        self.algo = "ogd-convex" if mode == "convex" else "ogd-sc"
        self._x = np.zeros(params.dim)
        self._t = 1

    def _predict(self) -> np.ndarray:
        return self._x

    def _observe(self, play: np.ndarray, grad: np.ndarray) -> None:
        if self.mode == "convex":
            step = self.params.diameter / (self.params.grad_bound * math.sqrt(self._t))
        else:
            step = 1.0 / (self.sc_modulus * self._t)
        self._x = self.dset.project(self._x - step * grad)
        self._t += 1


class ONSLearner(Learner):
    """Online Newton step on the true gradients of exp-concave losses."""

    algo = "ons"

    def __init__(self, params: ProblemParams, dset: DecisionSet, alpha: float):
        super().__init__(params, dset)
        if alpha <= 0:
            raise ValueError("exp-concavity modulus must be positive")
        GD = params.grad_bound * params.diameter
        self.beta = 0.5 * min(alpha, 1.0 / (4.0 * GD))
        scale = 1.0 / (self.beta**2 * params.diameter**2)
        self._x = np.zeros(params.dim)
        self._sigma = scale * np.eye(params.dim)
        self._sigma_inv = (1.0 / scale) * np.eye(params.dim)
        self._updates = 0

    def _predict(self) -> np.ndarray:
        return self._x

    def _observe(self, play: np.ndarray, grad: np.ndarray) -> None:
        self._sigma = self._sigma + np.outer(grad, grad)
        self._updates += 1
        if self._updates % experts.REFACTOR_EVERY == 0:
            self._sigma_inv = np.linalg.inv(self._sigma)
        else:
            self._sigma_inv = experts.sherman_morrison_update(self._sigma_inv, grad)
        target = self._x - (1.0 / self.beta) * (self._sigma_inv @ grad)
        self._x = self.dset.project_weighted(self._sigma, target)


def ogd_baselines(params: ProblemParams, dset: DecisionSet,
                  sc_modulus: Optional[float] = None) -> dict:
    """Both gradient-descent baselines; the strongly convex one only when a
    modulus is declared."""
    out = {"ogd-convex": OGDLearner(params, dset, mode="convex")}
    if sc_modulus is not None:
        out["ogd-sc"] = OGDLearner(params, dset, mode="strongly-convex", sc_modulus=sc_modulus)
    return out


def make_learner(name: str, params: ProblemParams, dset: DecisionSet, *,
                 sc_modulus: Optional[float] = None,
                 exp_concavity: Optional[float] = None) -> Learner:
    """Construct a learner by CLI name."""
    if name == "maler":
        return MalerLearner(params, dset)
    if name == "metagrad":
        return metagrad_baseline(params, dset)
    if name == "ogd-convex":
        return OGDLearner(params, dset, mode="convex")
    if name == "ogd-sc":
        return OGDLearner(params, dset, mode="strongly-convex", sc_modulus=sc_modulus)
    if name == "ons":
        if exp_concavity is None:
            raise ValueError("ons baseline needs the exp-concavity modulus")
        return ONSLearner(params, dset, alpha=exp_concavity)
    raise ValueError(f"unknown learner {name!r}")


def play_round(learner: Learner, oracle) -> tuple:
    """Run one protocol round against a loss oracle; returns (x, value, grad)."""
    x = learner.predict()
    val = float(oracle.value(x))
    g = oracle.gradient(x)
    learner.observe(g)
    return x, val, g


def bound_constant_a(horizon: int) -> float:
    """Adaptive-bound constant A: meta-regret cap + 1 + ln T (spherical route)."""
    return meta.meta_regret_bound(horizon) + 1.0 + math.log(horizon)


def bound_constant_b(horizon: int, dim: int) -> float:
    """Adaptive-bound constant B: meta-regret cap + 10 d ln T (quadratic route)."""
    return meta.meta_regret_bound(horizon) + 10.0 * dim * math.log(horizon)


@dataclass
class RegretDiagnostics:
    """Measured regret and the two cumulative deviation totals."""

    regret: float
    v_s: float
    v_ell: float
    cum_regret: np.ndarray
    cum_v_s: np.ndarray
    cum_v_ell: np.ndarray


def regret_diagnostics(trace: RunTrace, comparator=None) -> RegretDiagnostics:
    """Per-round regret and deviation series against a fixed comparator."""
    if comparator is None:
        comparator = trace.comparator
    if comparator is None or trace.loss_at_play is None or trace.loss_at_comparator is None:
        raise ValueError("trace lacks comparator loss data")
    u = np.asarray(comparator, dtype=float)
    diff = trace.plays - u
    G = trace.params.grad_bound
    v_s_steps = G**2 * np.einsum("td,td->t", diff, diff)
    v_ell_steps = np.einsum("td,td->t", diff, trace.grads) ** 2
    reg_steps = np.asarray(trace.loss_at_play) - np.asarray(trace.loss_at_comparator)
    return RegretDiagnostics(
        regret=float(reg_steps.sum()),
        v_s=float(v_s_steps.sum()),
        v_ell=float(v_ell_steps.sum()),
        cum_regret=np.cumsum(reg_steps),
        cum_v_s=np.cumsum(v_s_steps),
        cum_v_ell=np.cumsum(v_ell_steps),
    )


def regret_bound_certificate(trace: RunTrace, comparator=None) -> CertificateReport:
    """Check measured regret against the three simultaneous regret bounds.

    The worst-case bound 2(1+ln3) G D sqrt(T) and the two adaptive bounds
    3 sqrt(V B) + 10 G D B must all hold at once, with V the spherical or
    quadratic cumulative deviation and B the matching constant.
    """
    diag = regret_diagnostics(trace, comparator)
    p = trace.params
    T, d = trace.plays.shape
    GD = p.grad_bound * p.diameter
    a = bound_constant_a(T)
    b = bound_constant_b(T, d)
    rows = [
        CertificateRow(
            label="regret <= 2(1+ln3) G D sqrt(T)",
            measured=diag.regret,
            bound=2.0 * (1.0 + math.log(3.0)) * GD * math.sqrt(T),
        ),
        CertificateRow(
            label="regret <= 3 sqrt(V_ell B) + 10 G D B",
            measured=diag.regret,
            bound=3.0 * math.sqrt(diag.v_ell * b) + 10.0 * GD * b,
        ),
        CertificateRow(
            label="regret <= 3 sqrt(V_s A) + 10 G D A",
            measured=diag.regret,
            bound=3.0 * math.sqrt(diag.v_s * a) + 10.0 * GD * a,
        ),
    ]
    return CertificateReport(name="regret-bounds", rows=rows)


def strongly_convex_regret_bound(params: ProblemParams, lam: float) -> float:
    """Regret bound (10 G D + 9 G^2 / (2 lam)) A for lam-strongly-convex losses."""
    if lam <= 0:
        raise ValueError("modulus must be positive")
    p = params
    return (10.0 * p.grad_bound * p.diameter + 9.0 * p.grad_bound**2 / (2.0 * lam)) * bound_constant_a(
        p.horizon
    )


def exp_concave_regret_bound(params: ProblemParams, alpha: float) -> float:
    """Regret bound (10 G D + 9 / (2 beta)) B for alpha-exp-concave losses."""
    if alpha <= 0:
        raise ValueError("modulus must be positive")
    p = params
    beta = 0.5 * min(alpha, 1.0 / (4.0 * p.grad_bound * p.diameter))
    return (10.0 * p.grad_bound * p.diameter + 9.0 / (2.0 * beta)) * bound_constant_b(p.horizon, p.dim)
