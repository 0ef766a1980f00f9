"""Deterministic 1-D derivative-free searches."""

from __future__ import annotations

import math

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, rel_tol: float = 1e-12, max_iter: int = 500):
    """Golden-section maximization of a unimodal f on [lo, hi].

    Ties resolve toward the smaller argument. Returns (x, f(x), iterations).
    """
    if hi < lo:
        raise ValueError("empty bracket")
    tol = rel_tol * max(abs(hi), abs(lo), 1e-300)
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        it += 1
    # Evaluate the surviving candidates, preferring smaller x on ties.
    best_x, best_f = a, f(a)
    for x, fx in ((c, fc), (d, fd), (b, f(b))):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f, it


def golden_section_min(f, lo: float, hi: float, rel_tol: float = 1e-12, max_iter: int = 500):
    """Golden-section minimization; see golden_section_max."""
    x, fneg, it = golden_section_max(lambda t: -f(t), lo, hi, rel_tol, max_iter)
    return x, -fneg, it
