"""Central finite-difference gradients for functions of a constellation.

Gradients follow the complex convention ``dF/dRe(x) + i dF/dIm(x)``, so that
the directional derivative along ``Z`` is ``Re <D, Z>_F``. Perturbations are
applied in the ambient space, without re-normalizing onto any manifold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .manifolds import Constellation, project_tangent

__all__ = ["FdReport", "fd_gradient", "compare"]


def fd_gradient(cost, c: Constellation, h: float = 1e-6, *, relative: bool = True, floor: float = 1e-7):
    """Numeric ambient gradient of ``cost`` at ``c``.

    With ``relative=True`` the step for entry x is ``max(h*|x|, floor)``.
    Entries where the cost fails at a perturbed point come back as NaN.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    books = [np.array(b) for b in c.codebooks]
    out = []
    for k, book in enumerate(books):
        g = np.empty(book.shape, dtype=complex)
        for idx in np.ndindex(*book.shape):
            x = book[idx]
            step = max(h * abs(x), floor) if relative else h
            parts = []
            for direction in (1.0, 1j):
                vals = []
                for sign in (1.0, -1.0):
                    book[idx] = x + sign * step * direction
                    try:
                        vals.append(float(cost(Constellation(tuple(books)))))
                    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
                        vals.append(np.nan)
                book[idx] = x
                parts.append((vals[0] - vals[1]) / (2.0 * step))
            g[idx] = parts[0] + 1j * parts[1]
        out.append(g)
    return tuple(out)


@dataclass
class FdReport:
    """Analytic vs numeric gradient discrepancy.

    ``max_rel_*`` divide the worst absolute entry error by
    ``max(||numeric||_inf, 1e-12)`` over the whole set.
    """

    max_abs_ambient: float
    max_rel_ambient: float
    max_abs_projected: float
    max_rel_projected: float
    worst_entry: tuple
    per_codeword: list = field(default_factory=list)
    invalid_entries: int = 0
    h: float | None = None

    def rows(self):
        """Flat rows for CSV/console output."""
        yield ("max_abs_ambient", self.max_abs_ambient)
        yield ("max_rel_ambient", self.max_rel_ambient)
        yield ("max_abs_projected", self.max_abs_projected)
        yield ("max_rel_projected", self.max_rel_projected)
        yield ("worst_entry", self.worst_entry)
        yield ("invalid_entries", self.invalid_entries)
        if self.h is not None:
            yield ("h", self.h)


def _errors(analytic, numeric):
    scale = max(max(np.max(np.abs(n)) if np.size(n) else 0.0 for n in numeric), 1e-12)
    worst, worst_at = 0.0, None
    per = []
    for k, (a, n) in enumerate(zip(analytic, numeric)):
        err = np.abs(np.asarray(a) - np.asarray(n))
        for i in range(err.shape[0]):
            e = float(err[i].max())
            per.append((k, i, e, e / scale))
            if e > worst or worst_at is None:
                worst = e
                r, col = np.unravel_index(np.argmax(err[i]), err[i].shape)
                worst_at = (k, i, int(r), int(col))
    return worst, worst / scale, worst_at, per


def compare(analytic, numeric, kind=None, base: Constellation | None = None, *, h=None, xc_projector=False) -> FdReport:
    """Compare two gradient sets, in the ambient space and after projection."""
    if len(analytic) != len(numeric) or any(np.shape(a) != np.shape(n) for a, n in zip(analytic, numeric)):
        raise InvalidInputError("analytic and numeric gradient sets have different shapes")
    invalid = int(sum(np.count_nonzero(~np.isfinite(n)) for n in numeric))
    abs_a, rel_a, worst_at, per = _errors(analytic, numeric)
    if kind is not None and base is not None:
        pa = project_tangent(kind, base, analytic, xc_projector=xc_projector)
        pn = project_tangent(kind, base, numeric, xc_projector=xc_projector)
        abs_p, rel_p, worst_at, per = _errors(pa, pn)
    else:
        abs_p, rel_p = abs_a, rel_a
    return FdReport(abs_a, rel_a, abs_p, rel_p, worst_at, per, invalid, h)
