"""One-dimensional minimizers used for likelihood and bandwidth searches."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SearchResult:
    x: float
    fun: float
    trace: list = field(default_factory=list)
    converged: bool = True


def golden_section(fun, a: float, b: float, tol: float = 1e-8, max_iter: int = 500) -> SearchResult:
    """Minimize a unimodal ``fun`` on ``[a, b]``; stops when the bracket is shorter than ``tol``.

    Every evaluation is appended to ``trace`` as ``(x, f(x))``. Ties between
    the two interior points keep the upper part of the bracket.
    """
    trace = []

    def f(x):
        v = fun(x)
        trace.append((x, v))
        return v

    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while abs(b - a) > tol and it < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    # include the endpoints: a monotone criterion drives the optimum to a bound
    candidates = [(fc, -c, c), (fd, -d, d), (f(a), -a, a), (f(b), -b, b)]
    best = min(candidates)
    return SearchResult(best[2], best[0], trace, it < max_iter)


def integer_golden_section(fun, lo: int, hi: int, refine: int = 2) -> SearchResult:
    """Golden-section search over integers followed by a local exhaustive walk.

    After the rounded golden-section phase, every integer within ``refine`` of
    the incumbent is evaluated; if a better one is found the window recentres
    on it, so the result is a local minimum over a ``+-refine`` neighbourhood.
    Ties break toward the larger argument.
    """
    cache = {}
    trace = []

    def f(k):
        k = int(min(max(k, lo), hi))
        if k not in cache:
            cache[k] = fun(k)
            trace.append((k, cache[k]))
        return cache[k]

    a, b = lo, hi
    while b - a > 3:
        c = int(round(b - INV_PHI * (b - a)))
        d = int(round(a + INV_PHI * (b - a)))
        if c >= d:
            d = c + 1
        if f(c) < f(d):
            b = d
        else:
            a = c
    best = min(range(a, b + 1), key=lambda k: (f(k), -k))
    while True:
        window = range(max(lo, best - refine), min(hi, best + refine) + 1)
        cand = min(window, key=lambda k: (f(k), -k))
        if cand == best:
            break
        best = cand
    return SearchResult(best, cache[best], trace, True)
