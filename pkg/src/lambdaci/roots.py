"""Vectorised bracketing and bisection for monotone scalar equations."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    """Bisection did not reach its tolerance within the iteration cap."""


def monotone_root(
    func: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    increasing: bool | np.ndarray,
    *,
    tol: float = 1e-10,
    max_doublings: int = 64,
    max_iter: int = 200,
) -> np.ndarray:
    """Solve ``func(x) == target`` element-wise for monotone ``func``.

    ``func`` maps an array of abscissae (same shape as ``target``) to values.
    Bisection stops once the bracket is narrower than ``tol * max(1, |x|)``.
    The bracket starts at ``[-1, 1]`` and each side is doubled up to
    ``max_doublings`` times.  Where no sign change is found the root lies
    beyond the bracket cap and is reported as ``-inf`` or ``+inf``.
    """
    target = np.asarray(target, dtype=float)
    sign = np.where(np.asarray(increasing), 1.0, -1.0) * np.ones_like(target)

    def h(x):
        with np.errstate(invalid="ignore", over="ignore"):
            return sign * (func(x) - target)

    lo = -np.ones_like(target)
    hi = np.ones_like(target)
    h_lo = h(lo)
    h_hi = h(hi)
    for _ in range(max_doublings):
        move_lo = h_lo > 0
        move_hi = h_hi < 0
        if not (move_lo.any() or move_hi.any()):
            break
        # a side that moves outward hands its old position to the other side
        hi = np.where(move_lo, lo, hi)
        h_hi = np.where(move_lo, h_lo, h_hi)
        lo = np.where(move_lo, 2.0 * lo, lo)
        lo = np.where(move_hi, hi, lo)
        h_lo = np.where(move_hi, h_hi, h_lo)
        hi = np.where(move_hi, 2.0 * hi, hi)
        if move_lo.any():
            h_lo = np.where(move_lo, h(lo), h_lo)
        if move_hi.any():
            h_hi = np.where(move_hi, h(hi), h_hi)

    below = h_lo > 0
    above = h_hi < 0
    active = ~(below | above)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        # absolute tolerance near zero, relative far out
        scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        open_ = active & (hi - lo > tol * scale) & (mid != lo) & (mid != hi)
        if not np.any(open_):
            break
        go_right = h(mid) < 0
        lo = np.where(open_ & go_right, mid, lo)
        hi = np.where(open_ & ~go_right, mid, hi)
    else:
        raise ConvergenceError("bisection exceeded its iteration cap")

    root = 0.5 * (lo + hi)
    root = np.where(below, -np.inf, root)
    root = np.where(above, np.inf, root)
    return root
