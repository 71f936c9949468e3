"""Riemannian steepest descent with backtracking over a joint constellation.

Each iteration projects the ambient gradient of every codeword onto the
manifold, normalizes by the norm of the full (all-codeword) gradient, takes a
step of length ``h`` along the negative direction and retracts. A trial is
accepted only if the cost strictly improves; otherwise ``h`` shrinks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentCodewordError, DegenerateRetractionError
from .manifolds import (
    Constellation,
    ManifoldKind,
    constraint_residual,
    project_tangent,
    random_constellation,
    retract,
)

log = logging.getLogger(__name__)

__all__ = ["OptimizerConfig", "DescentTrace", "grad_norm", "descend", "optimize"]

_TRIAL_FAILURES = (
    CoincidentCodewordError,
    DegenerateRetractionError,
    ArithmeticError,
    ValueError,
    np.linalg.LinAlgError,
)


@dataclass(frozen=True)
class OptimizerConfig:
    step0: float = 0.1
    shrink: float = 0.5
    max_iter: int = 2000
    max_line_search: int = 30
    rel_tol: float = 1e-9
    min_step: float = 1e-12
    seed: int = 0
    restarts: int = 1
    trace_xc: bool = False

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        for name in ("max_iter", "max_line_search", "restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class DescentTrace:
    """Accepted iterates of one descent run. Row 0 is the starting point."""

    costs: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    initial: Constellation | None = None
    final: Constellation | None = None
    reason: str = ""
    seed: int | None = None

    @property
    def final_cost(self) -> float:
        return self.costs[-1]

    def rows(self):
        for it, (f, h, g) in enumerate(zip(self.costs, self.steps, self.grad_norms)):
            yield it, f, h, g

    def __len__(self):
        return len(self.costs)


def grad_norm(grads) -> float:
    """sqrt of the summed squared Frobenius norms of all codeword gradients."""
    return float(np.sqrt(sum(np.sum(np.abs(g) ** 2) for g in grads)))


def descend(c0: Constellation, cost, kind, cfg: OptimizerConfig = OptimizerConfig()) -> DescentTrace:
    """Minimize ``cost`` starting at ``c0`` on manifold ``kind``.

    ``cost`` must offer ``value(c)`` and ``value_and_gradient(c)``. Failures of
    the cost at a trial point count as a non-improving trial.
    """
    kind = ManifoldKind(kind)
    c = c0
    value, grad = cost.value_and_gradient(c)
    tangent = project_tangent(kind, c, grad, xc_projector=cfg.trace_xc)
    gn = grad_norm(tangent)
    trace = DescentTrace(
        costs=[value], steps=[0.0], grad_norms=[gn], residuals=[constraint_residual(kind, c)],
        initial=c0,
    )
    h = cfg.step0
    reason = "max-iterations"
    for it in range(cfg.max_iter):
        if gn == 0.0 or not np.isfinite(gn):
            reason = "zero-gradient" if gn == 0.0 else "non-finite-gradient"
            break
        direction = tuple(-t / gn for t in tangent)
        accepted = False
        for _ in range(cfg.max_line_search):
            try:
                cand = retract(kind, c, tuple(h * d for d in direction))
                f_new = cost.value(cand)
            except _TRIAL_FAILURES:
                f_new = np.inf
            if f_new < value:
                accepted = True
                break
            h *= cfg.shrink
            if h < cfg.min_step:
                break
        if not accepted:
            reason = "step-underflow" if h < cfg.min_step else "line-search-exhausted"
            break
        improvement = (value - f_new) / max(abs(value), 1e-300)
        c, value = cand, f_new
        trace.costs.append(value)
        trace.steps.append(h)
        trace.grad_norms.append(gn)
        trace.residuals.append(constraint_residual(kind, c))
        h = min(2.0 * h, cfg.step0)
        if improvement < cfg.rel_tol:
            reason = "converged"
            break
        _, grad = cost.value_and_gradient(c)
        tangent = project_tangent(kind, c, grad, xc_projector=cfg.trace_xc)
        gn = grad_norm(tangent)
    trace.final = c
    trace.reason = reason
    log.debug("descent stopped after %d accepted steps: %s", len(trace) - 1, reason)
    return trace


def optimize(cost, kind, T: int, M: int, sizes, cfg: OptimizerConfig = OptimizerConfig()):
    """Best of ``cfg.restarts`` seeded runs from random starting points.

    Returns ``(best_trace, all_traces)``; every trace carries the starting
    constellation's seed index in ``trace.seed``.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    traces = []
    for r, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        c0 = random_constellation(kind, T, M, sizes, rng)
        tr = descend(c0, cost, kind, cfg)
        tr.seed = r
        traces.append(tr)
        log.info("restart %d: cost %.6g -> %.6g (%s)", r, tr.costs[0], tr.final_cost, tr.reason)
    best = min(traces, key=lambda t: t.final_cost)
    return best, traces
