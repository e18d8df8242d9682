"""Thin wrapper around :func:`scipy.integrate.quad` that fails loudly."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate


class NonConvergenceError(RuntimeError):
    """An adaptive integral did not reach its tolerance.

    The ``integral`` attribute names the quantity being computed so the CLI
    can report which integral failed.
    """

    def __init__(self, integral: str, detail: str = ""):
        self.integral = integral
        msg = f"quadrature did not converge: {integral}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def quad(func, a, b, *, name: str, epsabs: float = 1e-9, epsrel: float = 1e-9,
         points=None, limit: int = 200) -> float:
    """Adaptive quadrature; raises :class:`NonConvergenceError` on warnings."""
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)
    if points is not None:
        pts = [p for p in points if a < p < b and np.isfinite(p)]
        if pts and np.isfinite(a) and np.isfinite(b):
            kwargs["points"] = sorted(pts)
        elif pts:
            # quad refuses breakpoints on infinite ranges; split by hand
            edges = [a, *sorted(pts), b]
            return sum(
                quad(func, lo, hi, name=name, epsabs=epsabs / len(edges),
                     epsrel=epsrel, limit=limit)
                for lo, hi in zip(edges[:-1], edges[1:])
            )
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _err = integrate.quad(func, a, b, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise NonConvergenceError(name, str(exc).splitlines()[0]) from None
    if not np.isfinite(value):
        raise NonConvergenceError(name, "non-finite result")
    return float(value)
