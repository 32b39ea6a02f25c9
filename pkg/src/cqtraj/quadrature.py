"""Adaptive Gauss-Legendre quadrature in one and two dimensions.

Error estimates compare a panel's rule against the sum of the same rule on
its dyadic children; the children are kept, so no evaluation is wasted.
Sums use ``math.fsum`` over panels in a fixed order, which keeps results
reproducible for a fixed tolerance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass
class QuadratureResult:
    value: float
    estimated_error: float
    evaluations: int
    grid: dict = field(default_factory=dict)
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "estimated_error": self.estimated_error,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "grid": self.grid,
        }


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_1d(f, a, b, order):
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    values = np.asarray(f(nodes), dtype=float)
    return half * float(w @ values)


def adaptive_gl(f, a: float, b: float, *, tol: float = 1e-10, rel_tol: float = 0.0, order: int = 10, max_panels: int = 2000) -> QuadratureResult:
    """Integrate ``f`` over [a, b].

    ``f`` receives a 1-D array of nodes and returns an array of values.
    Refinement stops once the summed error estimate drops below
    ``max(tol, rel_tol * |value|)``.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, {"panels": 0, "order": order})
    evals = 0

    def split(lo, hi, q):
        nonlocal evals
        mid = 0.5 * (lo + hi)
        ql = _panel_1d(f, lo, mid, order)
        qr = _panel_1d(f, mid, hi, order)
        evals += 2 * order
        return (lo, mid, ql), (mid, hi, qr), abs(q - ql - qr)

    q0 = _panel_1d(f, a, b, order)
    evals += order
    heap = []
    counter = 0
    leaves = {}

    def push(lo, hi, q):
        nonlocal counter
        l_, r_, e_ = split(lo, hi, q)
        heapq.heappush(heap, (-e_, counter, (lo, hi), (l_, r_)))
        leaves[counter] = (lo, hi, l_[2] + r_[2], e_)
        counter += 1

    push(a, b, q0)
    converged = True
    while True:
        value = math.fsum(v[2] for v in leaves.values())
        error = math.fsum(v[3] for v in leaves.values())
        if error <= max(tol, rel_tol * abs(value)):
            break
        if len(leaves) >= max_panels:
            converged = False
            break
        neg_err, key, _, (l_, r_) = heapq.heappop(heap)
        del leaves[key]
        push(*l_)
        push(*r_)
    ordered = sorted(leaves.values())
    value = math.fsum(v[2] for v in ordered)
    error = math.fsum(v[3] for v in ordered)
    return QuadratureResult(value, error, evals, {"panels": len(ordered), "order": order, "interval": [a, b]}, converged)


def _panel_2d(f, x0, x1, y0, y1, order):
    x, w = gauss_legendre(order)
    hx, hy = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
    gx = x0 + hx * (x + 1.0)
    gy = y0 + hy * (x + 1.0)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    values = np.asarray(f(X + 1j * Y), dtype=float)
    return hx * hy * float(w @ values @ w)


def adaptive_gl_2d(f, box, *, tol: float = 1e-10, rel_tol: float = 0.0, order: int = 8, max_panels: int = 4000) -> QuadratureResult:
    """Tensor Gauss-Legendre over a rectangle with quadtree refinement.

    ``f`` receives a complex array ``X_r + i X_i`` and returns real values.
    ``box`` is ``((xr0, xr1), (xi0, xi1))``.
    """
    (x0, x1), (y0, y1) = box
    evals = 0

    def children(x0, x1, y0, y1):
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        return [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]

    heap = []
    leaves = {}
    counter = 0

    def push(panel, q):
        nonlocal counter, evals
        kids = children(*panel)
        qs = [_panel_2d(f, *k, order) for k in kids]
        evals += 4 * order * order
        err = abs(q - sum(qs))
        heapq.heappush(heap, (-err, counter, list(zip(kids, qs))))
        leaves[counter] = (panel, math.fsum(qs), err)
        counter += 1

    q0 = _panel_2d(f, x0, x1, y0, y1, order)
    evals += order * order
    push((x0, x1, y0, y1), q0)
    converged = True
    while True:
        value = math.fsum(v[1] for v in leaves.values())
        error = math.fsum(v[2] for v in leaves.values())
        if error <= max(tol, rel_tol * abs(value)):
            break
        if len(leaves) * 4 >= max_panels:
            converged = False
            break
        _, key, kids = heapq.heappop(heap)
        del leaves[key]
        for panel, q in kids:
            push(panel, q)
    ordered = sorted(leaves.values())
    value = math.fsum(v[1] for v in ordered)
    error = math.fsum(v[2] for v in ordered)
    return QuadratureResult(value, error, evals, {"panels": 4 * len(ordered), "order": order, "box": [[x0, x1], [y0, y1]]}, converged)
