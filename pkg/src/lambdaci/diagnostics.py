"""Diagnostics that need the true parameter and the latent uniforms.

Not part of the inference API: these take quantities that are unobservable in
practice and exist to check theoretical guarantees numerically.
"""

from __future__ import annotations

import math

from .intervals import ExtInterval
from .tukey import tl_abs_quantile, tl_abs_quantile_dlambda


def tl_envelope(u_i: float, lambda0: float, ell: float, u: float) -> ExtInterval:
    """Explicit interval around ``lambda0`` containing the ``|X|`` constraint set.

    For an order statistic ``|X|_(i) = Q~(u_i, lambda0)`` lying inside the band
    level ``[ell, u]``, every ``lam`` with
    ``Q~(ell, lam) <= |X|_(i) <= Q~(u, lam)`` lies in::

        [lambda0 + (Q~(u_i) - Q~(ell)) / Q~'(ell),
         lambda0 - (Q~(u) - Q~(u_i)) / (log((1 + u) / 2) * Q~(u_i))]

    with ``Q~`` and its ``lam``-derivative ``Q~'`` evaluated at ``lambda0``.
    A zero denominator turns the corresponding side infinite.
    """
    if not 0 <= ell <= u_i <= u <= 1:
        raise ValueError("need 0 <= ell <= u_i <= u <= 1")
    q_ui = tl_abs_quantile(u_i, lambda0)
    q_ell = tl_abs_quantile(ell, lambda0)
    q_u = tl_abs_quantile(u, lambda0)

    slope = tl_abs_quantile_dlambda(ell, lambda0) if ell > 0 else 0.0
    if slope == 0.0:
        left = -math.inf
    else:
        left = lambda0 + (q_ui - q_ell) / slope

    denom = math.log(0.5 * (1.0 + u)) * q_ui
    if denom == 0.0:
        right = math.inf
    else:
        right = lambda0 - (q_u - q_ui) / denom
    return ExtInterval(min(left, lambda0), max(right, lambda0))
