"""Radial profiles of planar regions seen from the user.

A region ``D`` of building centres is described by its angular measure
``m(r)`` at each radius.  Integrals of the form

    int_D S(|x| t) dx = int_0^inf r m(r) S(r t) dr

only need the weight ``r m(r)``, which for every region used here (the
blockage wedge ``A(psi)``, overlaps and differences of two wedges, disks and
annuli) is piecewise linear in ``r``.  A :class:`Profile` is a list of terms
``(a, b, c0, c1)`` meaning weight ``c0 + c1 r`` on ``[a, b)``; terms add, so
set differences are just signed sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from skyline.heights import HeightModel

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Profile:
    terms: tuple[tuple[float, float, float, float], ...]

    def __add__(self, other: "Profile") -> "Profile":
        return Profile(self.terms + other.terms)

    def __sub__(self, other: "Profile") -> "Profile":
        return self + other.scaled(-1.0)

    def scaled(self, k: float) -> "Profile":
        return Profile(tuple((a, b, k * c0, k * c1) for a, b, c0, c1 in self.terms))

    def clip(self, lo: float = 0.0, hi: float = math.inf) -> "Profile":
        """Restrict the region to the annulus ``lo <= r < hi``."""
        out = []
        for a, b, c0, c1 in self.terms:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                out.append((a2, b2, c0, c1))
        return Profile(tuple(out))

    def weight(self, r):
        """``r * m(r)``, mostly for tests and plotting."""
        r = np.asarray(r, dtype=float)
        w = np.zeros_like(r)
        for a, b, c0, c1 in self.terms:
            inside = (r >= a) & (r < b)
            w = w + np.where(inside, c0 + c1 * r, 0.0)
        return w

    def breakpoints(self) -> list[float]:
        pts = {p for a, b, _, _ in self.terms for p in (a, b) if math.isfinite(p)}
        return sorted(pts)

    def integral(self, heights: HeightModel, t):
        """``int_D S(|x| t) dx`` for each ``t``; ``+inf`` when it diverges."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        total = np.zeros_like(t)
        big = np.isinf(t)
        # signed terms of an infinite region give inf - inf = nan at t = 0;
        # callers treat nan as a diverging exponent
        with np.errstate(invalid="ignore"):
            for a, b, c0, c1 in self.terms:
                if c0:
                    total = total + c0 * heights.sf_moment(0, a, b, t)
                if c1:
                    total = total + c1 * heights.sf_moment(1, a, b, t)
        # S(inf) = 0 except on a null set
        return np.where(big, 0.0, total)

    def integral_scalar(self, heights: HeightModel, t: float) -> float:
        """:meth:`integral` for one float ``t``, without array overhead."""
        if math.isinf(t):
            return 0.0
        total = 0.0
        for a, b, c0, c1 in self.terms:
            if c0:
                total += c0 * heights.sf_moment_scalar(0, a, b, t)
            if c1:
                total += c1 * heights.sf_moment_scalar(1, a, b, t)
        return total

    def integral_dt(self, heights: HeightModel, t):
        """``d/dt`` of :meth:`integral` (always <= 0 for a positive region)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        total = np.zeros_like(t)
        for a, b, c0, c1 in self.terms:
            if c0:
                total = total - c0 * heights.pdf_moment(1, a, b, t)
            if c1:
                total = total - c1 * heights.pdf_moment(2, a, b, t)
        return np.where(np.isinf(t), 0.0, total)

    def area(self) -> float:
        return sum(c0 * (b - a) + 0.5 * c1 * (b * b - a * a) for a, b, c0, c1 in self.terms)


def inner_radius(arc_length: float) -> float:
    """Radius below which a building arc wraps the full circle."""
    return arc_length / TWO_PI


def half_width(r, arc_length: float):
    """Angular half-width ``min(l / 2r, pi)`` of a building arc at distance ``r``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.minimum(arc_length / (2.0 * r), math.pi)


def circular_distance(a, b):
    """Distance on the circle between angles in radians, in ``[0, pi]``."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    if d.size and d.max() > TWO_PI:
        d = np.mod(d, TWO_PI)
    return np.minimum(d, TWO_PI - d)


def separation(psi1: float, psi2: float) -> float:
    """``min(|psi1 - psi2|, 2 pi - |psi1 - psi2|)`` after wrapping."""
    return float(circular_distance(psi1, psi2))


def disk(r_hi: float = math.inf, r_lo: float = 0.0) -> Profile:
    return Profile(((r_lo, r_hi, 0.0, TWO_PI),)) if r_lo < r_hi else Profile(())


def wedge(arc_length: float) -> Profile:
    """The blockage region ``A(psi)`` of a single viewing direction."""
    L = inner_radius(arc_length)
    return Profile(((0.0, L, 0.0, TWO_PI), (L, math.inf, arc_length, 0.0)))


def overlap(arc_length: float, delta: float) -> Profile:
    """``A(psi1) & A(psi2)`` for angular separation ``delta`` in ``[0, pi]``.

    Beyond the inner disk the two arcs of width ``l/r`` overlap by
    ``(l/r - delta)+`` on the near side and ``(l/r - 2pi + delta)+`` around
    the back of the circle.
    """
    delta = abs(float(delta))
    if delta > math.pi + 1e-12:
        raise ValueError(f"separation must lie in [0, pi], got {delta}")
    delta = min(delta, math.pi)
    l = arc_length
    L = inner_radius(l)
    terms = [(0.0, L, 0.0, TWO_PI)]
    near_end = l / delta if delta > 0 else math.inf
    if near_end > L:
        terms.append((L, near_end, l, -delta))
    back = TWO_PI - delta
    back_end = l / back
    if back_end > L:
        terms.append((L, back_end, l, -back))
    return Profile(tuple(terms))


def difference(arc_length: float, delta: float) -> Profile:
    """``A(psi1) minus A(psi2)``; by symmetry also the reverse difference."""
    return wedge(arc_length) - overlap(arc_length, delta)


def union(arc_length: float, delta: float) -> Profile:
    return wedge(arc_length).scaled(2.0) - overlap(arc_length, delta)


def overlap_measure(r, arc_length: float, delta: float):
    """Angular measure of ``A(psi1) & A(psi2)`` on the circle of radius ``r``."""
    r = np.asarray(r, dtype=float)
    w2 = 2.0 * half_width(r, arc_length)
    m = np.maximum(0.0, w2 - delta) + np.maximum(0.0, w2 - (TWO_PI - delta))
    return np.where(w2 >= TWO_PI, TWO_PI, np.minimum(m, w2))
