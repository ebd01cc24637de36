"""Expert grid construction and the tilted exponential-weights meta layer.

The meta algorithm maintains one weight per expert and plays the
tilt-weighted average of the expert predictions,

    x_t = sum_e pi_t^e eta_e x_t^e / sum_e pi_t^e eta_e,

then updates pi multiplicatively with each expert's own surrogate loss
evaluated at its own prediction. Weights live in log space; the running
log-potential log Phi_t = sum_tau log Z_tau is kept as a monotonicity
diagnostic (Phi never increases).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import surrogates
from .core import DecisionSet, ProblemParams

KIND_CONST = "c"
KIND_SPHERICAL = "s"
KIND_QUADRATIC = "ell"


def logsumexp(v: np.ndarray) -> float:
    """log(sum(exp(v))) with max-shift; -inf entries are allowed."""
    m = float(np.max(v))
    if not np.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(v - m))))


def grid_depth(horizon: int) -> int:
    """Number of halvings k = ceil(0.5 * log2 T)."""
    return max(0, math.ceil(0.5 * math.log2(horizon)))


def meta_regret_bound(horizon: int) -> float:
    """Meta-regret bound for spherical/quadratic experts: 2 ln(sqrt(3)(log2(T)/2 + 3))."""
    return 2.0 * math.log(math.sqrt(3.0) * (0.5 * math.log2(horizon) + 3.0))


def meta_regret_c_bound() -> float:
    """Meta-regret bound for the constant-rate expert: ln 3."""
    return math.log(3.0)


@dataclass(frozen=True)
class ExpertGrid:
    """Immutable roster of experts: kind, learning rate, tilt, and prior."""

    style: str
    horizon: int
    k: int
    eta_c: float
    etas: np.ndarray
    kinds: tuple
    tilts: np.ndarray
    log_priors: np.ndarray
    labels: tuple

    @property
    def size(self) -> int:
        return len(self.kinds)

    @property
    def priors(self) -> np.ndarray:
        return np.exp(self.log_priors)


def build_grid(params: ProblemParams) -> ExpertGrid:
    """Full grid: one constant-rate expert plus (k+1) spherical/quadratic pairs.

    eta_i = 2^{-i} / (5 D G) for i = 0..k with k = ceil(log2(T)/2), and
    eta_c = 1/(2 G D sqrt(T)). Priors put 1/3 on the constant-rate expert and
    split the rest as C/(3 (i+1)(i+2)) per member of each pair, C = 1 + 1/(1+k).
    """
    T, G, D = params.horizon, params.grad_bound, params.diameter
    k = grid_depth(T)
    etas = np.array([2.0**-i / (5.0 * D * G) for i in range(k + 1)])
    eta_c = 1.0 / (2.0 * G * D * math.sqrt(T))
    C = 1.0 + 1.0 / (1.0 + k)

    kinds = [KIND_CONST] + [KIND_SPHERICAL] * (k + 1) + [KIND_QUADRATIC] * (k + 1)
    tilts = np.concatenate([[eta_c], etas, etas])
    priors = np.concatenate(
        [
            [1.0 / 3.0],
            [C / (3.0 * (i + 1) * (i + 2)) for i in range(k + 1)],
            [C / (3.0 * (i + 1) * (i + 2)) for i in range(k + 1)],
        ]
    )
    labels = (
        ["c"]
        + [f"s[{i}]" for i in range(k + 1)]
        + [f"ell[{i}]" for i in range(k + 1)]
    )
    total = float(np.sum(priors))
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"expert priors sum to {total!r}, not 1")
    return ExpertGrid(
        style="maler",
        horizon=T,
        k=k,
        eta_c=eta_c,
        etas=etas,
        kinds=tuple(kinds),
        tilts=tilts,
        log_priors=np.log(priors),
        labels=tuple(labels),
    )


def metagrad_grid(params: ProblemParams) -> ExpertGrid:
    """Reduced grid with quadratic-surrogate experts only (the baseline learner)."""
    T, G, D = params.horizon, params.grad_bound, params.diameter
    k = grid_depth(T)
    etas = np.array([2.0**-i / (5.0 * D * G) for i in range(k + 1)])
    C = 1.0 + 1.0 / (1.0 + k)
    priors = np.array([C / ((i + 1) * (i + 2)) for i in range(k + 1)])
    total = float(np.sum(priors))
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"expert priors sum to {total!r}, not 1")
    return ExpertGrid(
        style="metagrad",
        horizon=T,
        k=k,
        eta_c=1.0 / (2.0 * G * D * math.sqrt(T)),
        etas=etas,
        kinds=tuple([KIND_QUADRATIC] * (k + 1)),
        tilts=etas.copy(),
        log_priors=np.log(priors),
        labels=tuple(f"ell[{i}]" for i in range(k + 1)),
    )


@dataclass(frozen=True)
class MetaState:
    """Normalized log weights plus the running log potential."""

    log_weights: np.ndarray
    log_potential: float
    rounds: int


def init_meta_state(grid: ExpertGrid) -> MetaState:
    return MetaState(log_weights=grid.log_priors.copy(), log_potential=0.0, rounds=0)


def aggregate_play(state: MetaState, grid: ExpertGrid, points: np.ndarray) -> np.ndarray:
    """Tilt-weighted average of expert points, computed with a max shift."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] != grid.size:
        raise ValueError(f"expected {grid.size} expert points, got {pts.shape[0]}")
    m = float(np.max(state.log_weights))
    w = np.exp(state.log_weights - m) * grid.tilts
    den = float(np.sum(w))
    return (w @ pts) / den


def update_weights(state: MetaState, grid: ExpertGrid, losses: np.ndarray) -> MetaState:
    """Multiplicative update pi <- pi exp(-loss) / Z, tracked in log space."""
    lv = np.asarray(losses, dtype=float)
    if lv.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} losses, got shape {lv.shape}")
    if not np.all(np.isfinite(lv)):
        raise ValueError("surrogate losses must be finite")
    shifted = state.log_weights - lv
    z = logsumexp(shifted)
    return MetaState(
        log_weights=shifted - z,
        log_potential=state.log_potential + z,
        rounds=state.rounds + 1,
    )


@dataclass
class RunTrace:
    """Complete per-round record of one learner run on one gradient stream."""

    algo: str
    params: ProblemParams
    dset: DecisionSet
    plays: np.ndarray
    grads: np.ndarray
    grid: Optional[ExpertGrid] = None
    expert_points: Optional[np.ndarray] = None
    surrogate_losses: Optional[np.ndarray] = None
    log_weights: Optional[np.ndarray] = None
    log_phi: Optional[np.ndarray] = None
    loss_at_play: Optional[np.ndarray] = None
    loss_at_comparator: Optional[np.ndarray] = None
    comparator: Optional[np.ndarray] = None

    @property
    def rounds(self) -> int:
        return self.plays.shape[0]

    def with_comparator(self, x_star, per_round_values) -> "RunTrace":
        self.comparator = np.asarray(x_star, dtype=float)
        self.loss_at_comparator = np.asarray(per_round_values, dtype=float)
        return self


def recompute_surrogate_losses(trace: RunTrace) -> np.ndarray:
    """Re-evaluate every expert's surrogate loss at its own point, per round."""
    grid = trace.grid
    T, E = trace.plays.shape[0], grid.size
    G, D = trace.params.grad_bound, trace.params.diameter
    out = np.empty((T, E))
    kinds = np.array(grid.kinds)
    etas = grid.tilts
    for t in range(T):
        diff = trace.expert_points[t] - trace.plays[t]
        ip = diff @ trace.grads[t]
        sq = np.einsum("ed,ed->e", diff, diff)
        vals = etas * ip
        is_c = kinds == KIND_CONST
        is_s = kinds == KIND_SPHERICAL
        is_l = kinds == KIND_QUADRATIC
        vals[is_c] += (etas[is_c] * G * D) ** 2
        vals[is_s] += etas[is_s] ** 2 * G**2 * sq[is_s]
        vals[is_l] += (etas[is_l] * ip[is_l]) ** 2
        out[t] = vals
    return out


@dataclass
class CertificateRow:
    """One certified inequality: measured quantity vs its proved bound."""

    label: str
    measured: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound

    @property
    def slack(self) -> float:
        return self.bound - self.measured


@dataclass
class CertificateReport:
    """A batch of certificate rows with an all-pass flag."""

    name: str
    rows: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def worst(self) -> CertificateRow:
        return min(self.rows, key=lambda r: r.slack)


def meta_regret_certificate(trace: RunTrace, grid: Optional[ExpertGrid] = None) -> CertificateReport:
    """Check each expert's meta regret against its exponential-weights bound.

    Meta regret of expert e is sum_t f~(x_t) - sum_t f~(x_t^e) where f~ is
    e's surrogate. At x = x_t the spherical and quadratic surrogates vanish
    and the constant-pad surrogate equals (eta_c G D)^2, so the first term
    is recomputed directly; the second is re-evaluated from the trace.
    """
    if grid is None:
        grid = trace.grid
    if grid is None or trace.expert_points is None:
        raise ValueError("trace does not carry expert data")
    if grid.style != "maler":
        raise ValueError(f"meta-regret bounds are stated for the full grid, not {grid.style!r}")
    T = trace.rounds
    G, D = trace.params.grad_bound, trace.params.diameter
    own = recompute_surrogate_losses(trace).sum(axis=0)
    bound_sl = meta_regret_bound(grid.horizon)
    rows = []
    for e, kind in enumerate(grid.kinds):
        if kind == KIND_CONST:
            at_play = T * (grid.tilts[e] * G * D) ** 2
            bound = meta_regret_c_bound()
        else:
            at_play = 0.0
            bound = bound_sl
        rows.append(
            CertificateRow(
                label=f"meta-regret {grid.labels[e]}",
                measured=at_play - float(own[e]),
                bound=bound,
            )
        )
    return CertificateReport(name="meta-regret", rows=rows)


def potential_certificate(trace: RunTrace, slack: float = 1e-9) -> CertificateReport:
    """Check that log Phi_t never increases and never exceeds 0."""
    if trace.log_phi is None:
        raise ValueError("trace does not carry the potential diagnostic")
    phi = np.concatenate([[0.0], np.asarray(trace.log_phi, dtype=float)])
    rows = [
        CertificateRow(
            label=f"log-potential step t={t}",
            measured=float(phi[t] - phi[t - 1]),
            bound=slack,
        )
        for t in range(1, phi.shape[0])
    ]
    rows.append(CertificateRow(label="log-potential final", measured=float(phi[-1]), bound=slack))
    return CertificateReport(name="potential", rows=rows)
