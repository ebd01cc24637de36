"""Benchmark tasks, the offline comparator, and the experiment runner.

Two task families are provided: synthetic mini-batch ridge regression
(strongly convex) and mini-batch logistic classification over LIBSVM data
(exp-concave after feature scaling). The runner replays one gradient
stream through any subset of learners against a shared offline comparator
and emits a per-round CSV, JSON traces, certificate results, and an
optional SVG regret plot.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import libsvm, meta, svgplot, universal
from .core import (
    Ball,
    Box,
    DecisionSet,
    GradientSample,
    LossOracle,
    ProblemParams,
    ProjectionError,
    validate_assumptions,
)
from .experts import expert_regret_certificate
from .libsvm import parse_libsvm
from .meta import (
    CertificateReport,
    CertificateRow,
    RunTrace,
    meta_regret_certificate,
    potential_certificate,
)
from .universal import Learner, make_learner, play_round, regret_diagnostics, regret_bound_certificate

CSV_HEADER = "round,algo,cum_regret,V_s,V_ell,log_phi"


class LinearLoss(LossOracle):
    """f(x) = g^T x with a fixed gradient."""

    def __init__(self, g):
        self.g = np.asarray(g, dtype=float)

    def value(self, x) -> float:
        return float(self.g @ np.asarray(x, dtype=float))

    def gradient(self, x) -> np.ndarray:
        return self.g.copy()

    def values(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.g


class CenteredQuadraticLoss(LossOracle):
    """f(x) = (lam/2) ||x - a||^2, lam-strongly convex."""

    curvature = "strongly_convex"

    def __init__(self, lam: float, center):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = lam
        self.center = np.asarray(center, dtype=float)
        self.modulus = lam

    def value(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return 0.5 * self.lam * float(d @ d)

    def gradient(self, x) -> np.ndarray:
        return self.lam * (np.asarray(x, dtype=float) - self.center)

    def values(self, X) -> np.ndarray:
        d = np.asarray(X, dtype=float) - self.center
        return 0.5 * self.lam * np.einsum("nd,nd->n", d, d)


class RidgeBatchLoss(LossOracle):
    """f(w) = (1/n) sum_i (w^T x_i - y_i)^2 + lam ||w||^2, 2*lam strongly convex."""

    curvature = "strongly_convex"

    def __init__(self, X, y, lam: float):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.lam = lam
        self.modulus = 2.0 * lam
        n = self.X.shape[0]
        # Quadratic sufficient statistics: f(w) = w^T A w - 2 b^T w + c + lam w^T w.
        self.A = self.X.T @ self.X / n
        self.b = self.X.T @ self.y / n
        self.c = float(self.y @ self.y) / n

    def value(self, x) -> float:
        w = np.asarray(x, dtype=float)
        return float(w @ (self.A @ w)) - 2.0 * float(self.b @ w) + self.c + self.lam * float(w @ w)

    def gradient(self, x) -> np.ndarray:
        w = np.asarray(x, dtype=float)
        return 2.0 * (self.A @ w - self.b) + 2.0 * self.lam * w

    def values(self, X) -> np.ndarray:
        W = np.asarray(X, dtype=float)
        quad = np.einsum("nd,nd->n", W, W @ self.A)
        return quad - 2.0 * (W @ self.b) + self.c + self.lam * np.einsum("nd,nd->n", W, W)

    def grad_bound_over(self, radius: float) -> float:
        """Analytic sup of ||gradient|| over the ball of given radius."""
        norms = np.linalg.norm(self.X, axis=1)
        n = self.X.shape[0]
        return (2.0 / n) * float(np.sum(norms * (radius * norms + np.abs(self.y)))) + 2.0 * self.lam * radius


def _log1pexp(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z) without overflow for large positive z.
    out = np.empty_like(z)
    pos = z > 0
    out[pos] = z[pos] + np.log1p(np.exp(-z[pos]))
    out[~pos] = np.log1p(np.exp(z[~pos]))
    return out


class LogisticBatchLoss(LossOracle):
    """f(w) = (1/n) sum_i log(1 + exp(-y_i w^T x_i))."""

    curvature = "exp_concave"

    def __init__(self, X, y, modulus: float = 0.0):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.modulus = modulus
        # Rows pre-multiplied by labels: f depends on Z w with Z = diag(y) X.
        self.Z = self.X * self.y[:, None]

    def value(self, x) -> float:
        m = self.Z @ np.asarray(x, dtype=float)
        return float(np.mean(_log1pexp(-m)))

    def gradient(self, x) -> np.ndarray:
        m = self.Z @ np.asarray(x, dtype=float)
        # sigmoid(-m) = 1/(1+e^m)
        s = 1.0 / (1.0 + np.exp(np.clip(m, -700, 700)))
        return -(self.Z.T @ s) / self.Z.shape[0]

    def values(self, X) -> np.ndarray:
        M = np.asarray(X, dtype=float) @ self.Z.T
        return np.mean(_log1pexp(-M), axis=1)

    def grad_bound(self) -> float:
        """Analytic cap (1/n) sum_i ||x_i|| on the gradient norm."""
        return float(np.mean(np.linalg.norm(self.X, axis=1)))


class _SumOracle:
    """Sum of per-round oracles with fused fast paths for batch evaluation."""

    def __init__(self, losses):
        self.losses = list(losses)
        kinds = {type(f) for f in self.losses}
        self._mode = "generic"
        if kinds == {LinearLoss}:
            self._mode = "linear"
            self.g = np.sum([f.g for f in self.losses], axis=0)
        elif kinds == {CenteredQuadraticLoss}:
            self._mode = "quadratic"
            lams = np.array([f.lam for f in self.losses])
            centers = np.array([f.center for f in self.losses])
            self.iso = 0.5 * float(lams.sum())
            self.lin = -(lams[:, None] * centers).sum(axis=0)
            self.const = 0.5 * float(np.sum(lams * np.einsum("td,td->t", centers, centers)))
        elif kinds == {RidgeBatchLoss}:
            self._mode = "quadratic_full"
            self.M = np.sum([f.A for f in self.losses], axis=0)
            self.M += sum(f.lam for f in self.losses) * np.eye(self.M.shape[0])
            self.lin = -2.0 * np.sum([f.b for f in self.losses], axis=0)
            self.const = float(np.sum([f.c for f in self.losses]))
        elif kinds == {LogisticBatchLoss}:
            self._mode = "logistic"
            self.Z = np.concatenate([f.Z for f in self.losses], axis=0)
            self.per_round = self.losses[0].Z.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self._mode == "linear":
            return float(self.g @ x)
        if self._mode == "quadratic":
            return self.iso * float(x @ x) + float(self.lin @ x) + self.const
        if self._mode == "quadratic_full":
            return float(x @ (self.M @ x)) + float(self.lin @ x) + self.const
        if self._mode == "logistic":
            return float(np.sum(_log1pexp(-(self.Z @ x)))) / self.per_round
        return float(sum(f.value(x) for f in self.losses))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._mode == "linear":
            return self.g.copy()
        if self._mode == "quadratic":
            return 2.0 * self.iso * x + self.lin
        if self._mode == "quadratic_full":
            return 2.0 * (self.M @ x) + self.lin
        if self._mode == "logistic":
            s = 1.0 / (1.0 + np.exp(np.clip(self.Z @ x, -700, 700)))
            return -(self.Z.T @ s) / self.per_round
        return np.sum([f.gradient(x) for f in self.losses], axis=0)

    def values(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._mode == "linear":
            return X @ self.g
        if self._mode == "quadratic":
            return self.iso * np.einsum("nd,nd->n", X, X) + X @ self.lin + self.const
        if self._mode == "quadratic_full":
            return np.einsum("nd,nd->n", X, X @ self.M) + X @ self.lin + self.const
        if self._mode == "logistic":
            out = np.empty(X.shape[0])
            chunk = max(1, int(2**22 // max(self.Z.shape[0], 1)))
            for lo in range(0, X.shape[0], chunk):
                M = X[lo : lo + chunk] @ self.Z.T
                out[lo : lo + chunk] = np.sum(_log1pexp(-M), axis=1) / self.per_round
            return out
        return np.sum([f.values(X) for f in self.losses], axis=0)

    def smart_init(self, dset: DecisionSet) -> np.ndarray:
        """Best-known starting point; exact for the quadratic fast paths."""
        if self._mode == "quadratic" and self.iso > 0:
            return dset.project(-self.lin / (2.0 * self.iso))
        if self._mode == "quadratic_full":
            try:
                unc = np.linalg.solve(self.M, -0.5 * self.lin)
            except np.linalg.LinAlgError:
                return dset.project(np.zeros(self.lin.shape[0]))
            if dset.contains(unc):
                return unc
            if isinstance(dset, Ball):
                sym = 0.5 * (self.M + self.M.T)
                try:
                    return dset.project_weighted(sym, unc)
                except (ValueError, ProjectionError):
                    return dset.project(unc)
            return dset.project(unc)
        if self._mode == "linear" and isinstance(dset, Ball):
            n = float(np.linalg.norm(self.g))
            if n > 0:
                return dset.center - dset.radius * self.g / n
        return dset.project(np.zeros(dset.dim))


@dataclass
class ComparatorReport:
    """How the offline comparator was found and how good it is."""

    iterations: int
    residual: float
    value: float
    grid_gap: Optional[float] = None


def _grid_points(dset: DecisionSet, resolution: float) -> np.ndarray:
    if isinstance(dset, Ball):
        lo = dset.center - dset.radius
        hi = dset.center + dset.radius
    elif isinstance(dset, Box):
        lo, hi = dset.lower, dset.upper
    else:
        raise ValueError("grid search supports ball and box sets only")
    axes = [np.arange(lo[i], hi[i] + resolution / 2, resolution) for i in range(dset.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if isinstance(dset, Ball):
        d = pts - dset.center
        pts = pts[np.einsum("nd,nd->n", d, d) <= dset.radius**2]
    return pts


def offline_comparator(losses, dset: DecisionSet, iters: int = 10000,
                       grid_check: bool = True, resolution: float = 1e-3):
    """Minimize the summed loss over the set by projected gradient descent.

    Step size 1/(L_hat sqrt(k)) with L_hat estimated from sampled gradient
    norms; stops early once the gradient-mapping residual is negligible.
    For dim <= 2 the result is cross-checked against a dense grid search.
    Returns (x_star, ComparatorReport).
    """
    total = _SumOracle(losses)
    rng = np.random.default_rng(0)
    probes = [dset.sample(rng) for _ in range(15)]
    probes.append(dset.project(np.zeros(dset.dim)))
    l_hat = max(float(np.linalg.norm(total.gradient(p))) for p in probes)
    l_hat = max(l_hat, 1e-12)
    tol = 1e-10 * max(1.0, l_hat)

    u = total.smart_init(dset)
    used = 0
    residual = float("inf")
    for k in range(1, iters + 1):
        used = k
        step = 1.0 / (l_hat * math.sqrt(k))
        nxt = dset.project(u - step * total.gradient(u))
        residual = float(np.linalg.norm(nxt - u)) / step
        u = nxt
        if residual <= tol:
            break

    report = ComparatorReport(iterations=used, residual=residual, value=total.value(u))
    if grid_check and dset.dim <= 2:
        pts = _grid_points(dset, resolution)
        best = float(np.min(total.values(pts)))
        report.grid_gap = report.value - best
    return u, report


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    """Draw count points uniformly from the origin-centered ball."""
    z = rng.standard_normal((count, dim))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    return z / norms * radii


@dataclass
class RegressionTask:
    """Synthetic mini-batch ridge regression stream."""

    w_star: np.ndarray
    losses: list
    dset: DecisionSet
    params: ProblemParams
    sc_modulus: float
    exp_concavity: float


def gen_regression(rounds: int = 200, dim: int = 50, batch: int = 200,
                   lam: float = 1e-3, noise_std: float = 0.1,
                   seed: int = 0) -> RegressionTask:
    """Sample the regression stream: hidden w in a diameter-1 ball, features
    in a diameter-10 ball, Gaussian label noise, fresh batch per round."""
    rng = np.random.default_rng(seed)
    r_w, r_x = 0.5, 5.0
    w_star = sample_ball(rng, 1, dim, r_w)[0]
    dset = Ball(center=np.zeros(dim), radius=r_w)
    losses = []
    g_bound = 0.0
    for _ in range(rounds):
        X = sample_ball(rng, batch, dim, r_x)
        y = X @ w_star + noise_std * rng.standard_normal(batch)
        f = RidgeBatchLoss(X, y, lam)
        losses.append(f)
        g_bound = max(g_bound, f.grad_bound_over(r_w))
    params = ProblemParams(horizon=rounds, dim=dim, grad_bound=g_bound, diameter=2 * r_w)
    return RegressionTask(
        w_star=w_star,
        losses=losses,
        dset=dset,
        params=params,
        sc_modulus=2.0 * lam,
        exp_concavity=2.0 * lam / g_bound**2,
    )


@dataclass
class ClassificationTask:
    """Mini-batch logistic classification stream over LIBSVM data."""

    losses: list
    dset: DecisionSet
    params: ProblemParams
    exp_concavity: float
    examples: int


def load_classification(path, rounds: int = 100, batch: int = 200,
                        radius: float = 0.5, seed: int = 0) -> ClassificationTask:
    """Build the classification stream: features scaled into the unit ball,
    rows shuffled by seed, batches cycling through the file."""
    rows = libsvm.parse_libsvm(path)
    if not rows:
        raise ValueError(f"no examples in {path}")
    X, y = libsvm.to_dense(rows)
    scale = float(np.max(np.linalg.norm(X, axis=1)))
    if scale > 0:
        X = X / scale
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    X, y = X[order], y[order]
    m = X.shape[0]
    losses = []
    g_bound = 0.0
    alpha = math.exp(-radius)
    for t in range(rounds):
        idx = np.arange(t * batch, (t + 1) * batch) % m
        f = LogisticBatchLoss(X[idx], y[idx], modulus=alpha)
        losses.append(f)
        g_bound = max(g_bound, f.grad_bound())
    dset = Ball(center=np.zeros(X.shape[1]), radius=radius)
    params = ProblemParams(horizon=rounds, dim=X.shape[1], grad_bound=g_bound,
                           diameter=2 * radius)
    return ClassificationTask(
        losses=losses,
        dset=dset,
        params=params,
        exp_concavity=alpha,
        examples=m,
    )


def gen_classification_file(path, examples: int = 4000, dim: int = 10, seed: int = 0) -> None:
    """Write a synthetic linearly-separable-with-noise LIBSVM file."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(dim)
    w /= np.linalg.norm(w)
    X = rng.standard_normal((examples, dim))
    margins = X @ w + 0.3 * rng.standard_normal(examples)
    y = np.where(margins >= 0, 1.0, -1.0)
    rows = []
    for i in range(examples):
        nz = np.nonzero(X[i])[0]
        rows.append(
            libsvm.LibsvmRow(
                label=float(y[i]),
                indices=tuple(int(j) + 1 for j in nz),
                values=tuple(float(v) for v in X[i, nz]),
            )
        )
    libsvm.write_libsvm(rows, path)


def run_stream(learner: Learner, losses) -> RunTrace:
    """Drive one learner through the full loss stream and attach true losses."""
    vals = []
    for f in losses:
        _, v, _ = play_round(learner, f)
        vals.append(v)
    trace = learner.trace()
    trace.loss_at_play = np.array(vals)
    return trace


def certificates_for(trace: RunTrace, sc_modulus: Optional[float] = None,
                     exp_concavity: Optional[float] = None) -> list:
    """All certificate reports that apply to this trace."""
    reports = []
    if trace.log_phi is not None:
        reports.append(potential_certificate(trace))
    if trace.grid is not None and trace.grid.style == "maler":
        reports.append(meta_regret_certificate(trace))
        reports.append(expert_regret_certificate(trace))
        if trace.comparator is not None:
            reports.append(regret_bound_certificate(trace))
            diag = regret_diagnostics(trace)
            extra = []
            if sc_modulus:
                extra.append(
                    CertificateRow(
                        label="regret <= (10GD + 9G^2/(2 lam)) A",
                        measured=diag.regret,
                        bound=universal.strongly_convex_regret_bound(trace.params, sc_modulus),
                    )
                )
            if exp_concavity:
                extra.append(
                    CertificateRow(
                        label="regret <= (10GD + 9/(2 beta)) B",
                        measured=diag.regret,
                        bound=universal.exp_concave_regret_bound(trace.params, exp_concavity),
                    )
                )
            if extra:
                reports.append(CertificateReport(name="curvature-bounds", rows=extra))
    return reports


def _dset_to_json(dset: DecisionSet) -> dict:
    if isinstance(dset, Ball):
        return {"kind": "ball", "center": dset.center.tolist(), "radius": dset.radius}
    if isinstance(dset, Box):
        return {"kind": "box", "lower": dset.lower.tolist(), "upper": dset.upper.tolist()}
    raise ValueError("unknown decision set")


def _dset_from_json(obj: dict) -> DecisionSet:
    if obj["kind"] == "ball":
        return Ball(center=np.array(obj["center"]), radius=float(obj["radius"]))
    if obj["kind"] == "box":
        return Box(lower=np.array(obj["lower"]), upper=np.array(obj["upper"]))
    raise ValueError(f"unknown decision set kind {obj['kind']!r}")


def save_trace(trace: RunTrace, path) -> None:
    """Serialize a trace (arrays and problem data) to JSON."""
    obj = {
        "algo": trace.algo,
        "params": {
            "horizon": trace.params.horizon,
            "dim": trace.params.dim,
            "grad_bound": trace.params.grad_bound,
            "diameter": trace.params.diameter,
        },
        "dset": _dset_to_json(trace.dset),
        "grid_style": trace.grid.style if trace.grid is not None else None,
        "plays": trace.plays.tolist(),
        "grads": trace.grads.tolist(),
    }
    for name in ("expert_points", "surrogate_losses", "log_weights", "log_phi",
                 "loss_at_play", "loss_at_comparator", "comparator"):
        arr = getattr(trace, name)
        obj[name] = None if arr is None else np.asarray(arr).tolist()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_trace(path) -> RunTrace:
    """Rebuild a RunTrace from its JSON serialization."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    params = ProblemParams(**obj["params"])
    grid = None
    if obj.get("grid_style") == "maler":
        grid = meta.build_grid(params)
    elif obj.get("grid_style") == "metagrad":
        grid = meta.metagrad_grid(params)
    trace = RunTrace(
        algo=obj["algo"],
        params=params,
        dset=_dset_from_json(obj["dset"]),
        plays=np.array(obj["plays"], dtype=float),
        grads=np.array(obj["grads"], dtype=float),
        grid=grid,
    )
    for name in ("expert_points", "surrogate_losses", "log_weights", "log_phi",
                 "loss_at_play", "loss_at_comparator", "comparator"):
        val = obj.get(name)
        if val is not None:
            setattr(trace, name, np.array(val, dtype=float))
    return trace


@dataclass
class ExperimentConfig:
    """Everything one `run` invocation needs."""

    task: str = "regression"
    algos: tuple = ("maler", "metagrad", "ogd-convex", "ogd-sc", "ons")
    rounds: int = 200
    dim: int = 50
    batch: int = 200
    ridge_lambda: float = 1e-3
    noise_std: float = 0.1
    seed: int = 0
    data: Optional[str] = None
    radius: float = 0.5
    out: Optional[str] = None
    svg: bool = False


@dataclass
class ExperimentResult:
    """Traces, diagnostics, and certificates of one experiment run."""

    config: ExperimentConfig
    params: ProblemParams
    dset: DecisionSet
    comparator: np.ndarray
    comparator_report: ComparatorReport
    traces: dict
    diagnostics: dict
    certificates: dict
    csv_rows: list
    files: list = field(default_factory=list)


def _format_cell(v: float) -> str:
    return f"{v:.17g}"


def csv_lines(result: ExperimentResult) -> list:
    lines = [CSV_HEADER]
    for algo in result.traces:
        diag = result.diagnostics[algo]
        trace = result.traces[algo]
        for t in range(trace.rounds):
            phi = ""
            if trace.log_phi is not None:
                phi = _format_cell(float(trace.log_phi[t]))
            lines.append(
                ",".join(
                    [
                        str(t + 1),
                        algo,
                        _format_cell(float(diag.cum_regret[t])),
                        _format_cell(float(diag.cum_v_s[t])),
                        _format_cell(float(diag.cum_v_ell[t])),
                        phi,
                    ]
                )
            )
    return lines


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all requested learners on one stream and certify the results."""
    if cfg.task == "regression":
        task = gen_regression(rounds=cfg.rounds, dim=cfg.dim, batch=cfg.batch,
                              lam=cfg.ridge_lambda, noise_std=cfg.noise_std, seed=cfg.seed)
        sc_modulus: Optional[float] = task.sc_modulus
        exp_concavity = task.exp_concavity
    elif cfg.task == "classification":
        if not cfg.data:
            raise ValueError("classification needs --data PATH (LIBSVM format)")
        task = load_classification(cfg.data, rounds=cfg.rounds, batch=cfg.batch,
                                   radius=cfg.radius, seed=cfg.seed)
        sc_modulus = None
        exp_concavity = task.exp_concavity
    else:
        raise ValueError(f"unknown task {cfg.task!r}")

    if sc_modulus is None and "ogd-sc" in cfg.algos:
        raise ValueError("ogd-sc needs a strongly convex task")

    x_star, comp_report = offline_comparator(task.losses, task.dset)
    at_comp = np.array([f.value(x_star) for f in task.losses])

    traces, diags, certs = {}, {}, {}
    for name in cfg.algos:
        learner = make_learner(name, task.params, task.dset,
                               sc_modulus=sc_modulus, exp_concavity=exp_concavity)
        trace = run_stream(learner, task.losses)
        trace.with_comparator(x_star, at_comp)
        traces[name] = trace
        diags[name] = regret_diagnostics(trace)
        certs[name] = certificates_for(trace, sc_modulus=sc_modulus,
                                       exp_concavity=exp_concavity)

    result = ExperimentResult(
        config=cfg,
        params=task.params,
        dset=task.dset,
        comparator=x_star,
        comparator_report=comp_report,
        traces=traces,
        diagnostics=diags,
        certificates=certs,
        csv_rows=[],
    )
    result.csv_rows = csv_lines(result)
    if cfg.out:
        _write_outputs(result)
    return result


def _report_text(result: ExperimentResult) -> str:
    p = result.params
    lines = [
        f"task={result.config.task} seed={result.config.seed}",
        f"rounds={p.horizon} dim={p.dim} G={p.grad_bound:.6g} D={p.diameter:.6g}",
        "rate grid: eta_i = 2^-i/(5DG), i = 0..ceil(log2(T)/2); eta_c = 1/(2GD sqrt(T))",
        (
            f"comparator: iterations={result.comparator_report.iterations} "
            f"residual={result.comparator_report.residual:.3e} "
            f"value={result.comparator_report.value:.12g}"
        ),
    ]
    if result.comparator_report.grid_gap is not None:
        lines.append(f"comparator grid-search gap: {result.comparator_report.grid_gap:.3e}")
    for algo, diag in result.diagnostics.items():
        lines.append(f"{algo}: final regret {diag.regret:.6f}  V_s {diag.v_s:.6f}  V_ell {diag.v_ell:.6f}")
    for algo, reports in result.certificates.items():
        for rep in reports:
            status = "PASS" if rep.ok else "FAIL"
            worst = rep.worst()
            lines.append(
                f"[{status}] {algo} {rep.name} ({len(rep.rows)} checks, "
                f"min slack {worst.slack:.6g} at {worst.label!r})"
            )
    return "\n".join(lines) + "\n"


def _write_outputs(result: ExperimentResult) -> None:
    out = result.config.out
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(result.csv_rows) + "\n")
    result.files.append(csv_path)
    for algo, trace in result.traces.items():
        tpath = os.path.join(out, f"trace_{algo}.json")
        save_trace(trace, tpath)
        result.files.append(tpath)
    rpath = os.path.join(out, "report.txt")
    with open(rpath, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_report_text(result))
    result.files.append(rpath)
    if result.config.svg:
        series = {algo: list(d.cum_regret) for algo, d in result.diagnostics.items()}
        spath = os.path.join(out, "regret.svg")
        with open(spath, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svgplot.render_lines(series, "cumulative regret", "round", "regret"))
        result.files.append(spath)


def certify_trace(trace: RunTrace) -> tuple:
    """Re-run every applicable certificate on a saved trace.

    Returns (reports, ok). Also validates the recorded gradients against
    the declared bound.
    """
    samples = [GradientSample(point=p, gradient=g) for p, g in zip(trace.plays, trace.grads)]
    assumption = validate_assumptions(trace.params, trace.dset, samples)
    reports = list(certificates_for(trace))
    rows = [
        CertificateRow(label="max ||g_t|| <= G", measured=assumption.max_grad_norm,
                       bound=trace.params.grad_bound * (1 + 1e-9)),
        CertificateRow(label="set diameter matches D",
                       measured=abs(assumption.measured_diameter - trace.params.diameter),
                       bound=1e-9 * max(1.0, trace.params.diameter)),
    ]
    reports.insert(0, CertificateReport(name="assumptions", rows=rows))
    ok = all(r.ok for r in reports) and assumption.ok
    return reports, ok
