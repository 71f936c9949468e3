"""Uniform (value, gradient) interface over the four design criteria."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import fulldiv, proxy
from .manifolds import Constellation


class CostKind(str, enum.Enum):
    PEP_UB = "pep_ub"
    MINMAX_PEP = "minmax_pep"
    BETA_UB = "beta_ub"
    DELTA_UB = "delta_ub"


@dataclass(frozen=True)
class Cost:
    """A design criterion bound to its parameters.

    ``value(c)`` is used by the line search, ``value_and_gradient(c)`` once per
    accepted iterate. For the min-max baseline the gradient is that of the
    currently dominant pair, re-selected at every call.
    """

    kind: CostKind
    N: int
    epsilon: float = 1e-3
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind(self.kind))
        if self.N < 1:
            raise ValueError("N must be >= 1")

    def value(self, c: Constellation) -> float:
        k = self.kind
        if k is CostKind.PEP_UB:
            return fulldiv.pep_ub_cost(c, self.N, strict=self.strict)
        if k is CostKind.MINMAX_PEP:
            return fulldiv.minmax_pep_objective(c, self.N, strict=self.strict)[0]
        if k is CostKind.BETA_UB:
            return proxy.proxy_ub_cost(c, self.N, "beta", self.epsilon)
        return proxy.proxy_ub_cost(c, self.N, "delta")

    def value_and_gradient(self, c: Constellation):
        k = self.kind
        if k is CostKind.PEP_UB:
            ev = fulldiv.pep_ub_evaluate(c, self.N, strict=self.strict)
            return ev.value, ev.gradient
        if k is CostKind.MINMAX_PEP:
            value, grad, _ = fulldiv.minmax_pep_gradient(c, self.N, strict=self.strict)
            return value, grad
        if k is CostKind.BETA_UB:
            ev = proxy.proxy_ub_evaluate(c, self.N, "beta", self.epsilon)
        else:
            ev = proxy.proxy_ub_evaluate(c, self.N, "delta")
        return ev.value, ev.gradient

    def __call__(self, c: Constellation) -> float:
        return self.value(c)


def make_cost(kind, N: int, epsilon: float = 1e-3, strict: bool = True) -> Cost:
    return Cost(CostKind(kind), int(N), float(epsilon), strict)
