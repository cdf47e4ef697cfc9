"""Quadrature for the finite, semi-infinite and nested integrals of the model.

Two families:

* :func:`integrate` / :func:`integrate_semi_infinite` -- scalar adaptive
  quadrature (QUADPACK via scipy) with the error contract checked here.
* :func:`integrate_batch` / :func:`integrate_batch_semi_infinite` --
  globally adaptive Gauss-Kronrod (7/15) whose integrand takes an array of
  nodes and may return extra leading axes, so a whole family of inner
  integrals is refined in lock-step. Used by the nested coverage/rate
  integrals where per-point Python calls would dominate.
"""
from __future__ import annotations

import contextlib
import contextvars
import warnings
from collections import Counter
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np
from scipy import integrate as _spi

from .params import DEFAULT_QUADRATURE, QuadratureSpec

_ledger: contextvars.ContextVar[Counter | None] = contextvars.ContextVar("eval_ledger", default=None)


class QuadratureError(ArithmeticError):
    """Integral did not reach the requested tolerance within budget."""

    def __init__(self, message: str, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


@contextlib.contextmanager
def evaluation_ledger() -> Iterator[Counter]:
    """Collect integrand evaluation counts, keyed by integrand label."""
    counts: Counter = Counter()
    token = _ledger.set(counts)
    try:
        yield counts
    finally:
        _ledger.reset(token)


def _record(label: str, n: int) -> None:
    counts = _ledger.get()
    if counts is not None:
        counts[label] += n


class Integrand:
    """A real function of one variable that counts its own evaluations."""

    def __init__(self, f: Callable, label: str = "integrand"):
        self.f = f
        self.label = label
        self.n_evals = 0

    def __call__(self, x):
        n = np.size(x)
        self.n_evals += n
        _record(self.label, n)
        return self.f(x)


def _as_integrand(f) -> Integrand:
    return f if isinstance(f, Integrand) else Integrand(f, getattr(f, "__name__", "integrand"))


def _bound(spec: QuadratureSpec, value) -> np.ndarray:
    return np.maximum(spec.abs_tol, spec.rel_tol * np.abs(value))


def _quad(f: Integrand, a: float, b: float, spec: QuadratureSpec) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _spi.IntegrationWarning)
        out = _spi.quad(
            f, a, b,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=int(spec.max_subdivisions), full_output=1,
        )
    value, err = float(out[0]), float(out[1])
    if not np.isfinite(value) or err > _bound(spec, value):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge", value, err)
    return value


def integrate(f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Adaptive integral of ``f`` over the finite interval [a, b]."""
    a, b = float(a), float(b)
    if not a < b:
        if a == b:
            return 0.0
        raise ValueError(f"integrate requires a < b, got [{a}, {b}]")
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate takes finite limits; use integrate_semi_infinite")
    return _quad(_as_integrand(f), a, b, spec)


def integrate_semi_infinite(f: Callable[[float], float], a: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Adaptive integral of a decaying ``f`` over [a, inf).

    QUADPACK maps the half line onto (0, 1] with x = a + (1 - t)/t.
    """
    a = float(a)
    if not np.isfinite(a):
        raise ValueError(f"lower limit must be finite, got {a}")
    return _quad(_as_integrand(f), a, np.inf, spec)


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])


@lru_cache(maxsize=None)
def _gk_rule() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes on [0, 1] with Kronrod and embedded Gauss weights (zero off-Gauss)."""
    x = np.concatenate((-_XGK[:-1], _XGK[::-1]))
    wk = np.concatenate((_WGK[:-1], _WGK[::-1]))
    wg_half = np.zeros(8)
    wg_half[1::2] = _WG
    wg = np.concatenate((wg_half[:-1], wg_half[::-1]))
    return 0.5 * (x + 1.0), 0.5 * wk, 0.5 * wg


def _adaptive(f, a: float, b: float, spec: QuadratureSpec, min_panels: int) -> np.ndarray:
    """Globally adaptive G7/K15 for integrands vectorised over nodes.

    All intervals awaiting evaluation are sent to ``f`` in a single call.
    Each step bisects the smallest set of worst intervals whose removal would
    bring the summed error under budget for every leading index.
    """
    x, wk, wg = _gk_rule()
    edges = np.linspace(a, b, max(1, int(min_panels)) + 1)
    lo, hi = edges[:-1], edges[1:]
    est = err = None
    while True:
        h = hi - lo
        nodes = (lo[:, None] + h[:, None] * x[None, :]).ravel()
        vals = np.asarray(f(nodes), dtype=float)
        vals = vals.reshape(vals.shape[:-1] + (len(lo), len(x)))
        k = (vals * wk).sum(axis=-1) * h
        g = (vals * wg).sum(axis=-1) * h
        e = np.abs(k - g)
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(e))):
            raise QuadratureError("non-finite integrand", k.sum(axis=-1), np.inf)
        if est is None:
            est, err, ilo, ihi = k, e, lo, hi
        else:
            est = np.concatenate((est, k), axis=-1)
            err = np.concatenate((err, e), axis=-1)
            ilo = np.concatenate((ilo, lo))
            ihi = np.concatenate((ihi, hi))
        total = est.sum(axis=-1)
        budget = _bound(spec, total)
        if np.all(err.sum(axis=-1) <= budget):
            return total
        if len(ilo) >= spec.max_subdivisions:
            raise QuadratureError(f"subdivision budget exhausted on [{a}, {b}]", total,
                                  np.max(err.sum(axis=-1)))
        # error of each interval relative to its share of the budget, worst leading index
        score = (err / np.asarray(budget)[..., None]).reshape(-1, len(ilo)).max(axis=0)
        order = np.argsort(score)[::-1]
        remaining = score.sum() - np.cumsum(score[order])
        n_split = int(np.searchsorted(-remaining, -0.5)) + 1
        n_split = min(n_split, len(order), int(spec.max_subdivisions) - len(ilo))
        split = order[:max(1, n_split)]
        keep = np.ones(len(ilo), dtype=bool)
        keep[split] = False
        mid = 0.5 * (ilo[split] + ihi[split])
        lo = np.concatenate((ilo[split], mid))
        hi = np.concatenate((mid, ihi[split]))
        est, err, ilo, ihi = est[..., keep], err[..., keep], ilo[keep], ihi[keep]


def integrate_batch(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    min_panels: int = 2,
) -> np.ndarray:
    """Integrate a vectorised integrand over [a, b] along its last axis.

    ``f(x)`` receives a 1-D node array and returns shape ``(..., len(x))``.
    Intervals are bisected until the summed Kronrod-Gauss error is within
    ``max(abs_tol, rel_tol*|I|)`` for every leading index.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError(f"integrate_batch requires a < b, got [{a}, {b}]")
    return _adaptive(_as_integrand(f), a, b, spec, min_panels)


def integrate_batch_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    scale: float = 1.0,
    min_panels: int = 2,
) -> np.ndarray:
    """Batch integral over [a, inf) via x = a + scale*y/(1-y), y in [0, 1)."""
    a = float(a)
    f = _as_integrand(f)

    def mapped(y):
        one_minus = 1.0 - y
        x = a + scale * y / one_minus
        return np.asarray(f(x)) * (scale / one_minus**2)

    return _adaptive(mapped, 0.0, 1.0, spec, min_panels)
