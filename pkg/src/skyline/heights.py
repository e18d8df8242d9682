"""Building-height mark distributions.

Every analytic quantity in the package reduces to radial integrals of the
form ``int_a^b r**j S(r t) dr`` (and the same with the density ``f``), where
``S = 1 - F_H`` is the height survival function and ``t = tan(phi)``.  Each
height model therefore exposes these two moment families; the exponential
and Pareto models evaluate them in closed form, and the base class falls
back to adaptive quadrature so that user-defined models also work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from skyline._quad import quad


class HeightModel:
    """Base class for i.i.d. building-height marks (heights in meters)."""

    #: points where ``S`` or ``f`` is not smooth, passed to quadrature
    breakpoints: tuple[float, ...] = ()

    def sf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> str:
        """Round-trippable text form understood by :func:`parse_height_model`."""
        raise NotImplementedError

    def excess_mean(self, y: float) -> float:
        """Stop-loss transform ``E[(H - y)+] = int_y^inf S(x) dx``."""
        y = max(float(y), 0.0)
        return quad(lambda x: float(self.sf(x)), y, np.inf, name="height excess mean",
                    epsabs=1e-14, epsrel=1e-11,
                    points=[p for p in self.breakpoints if p > y])

    # radial moments -------------------------------------------------------

    def sf_moment(self, j: int, a: float, b: float, t):
        """``int_a^b r**j S(r t) dr`` for each ``t`` (array-valued)."""
        return self._moment_by_quad(self.sf, j, a, b, t, "height sf moment")

    def pdf_moment(self, j: int, a: float, b: float, t):
        """``int_a^b r**j f(r t) dr`` for each ``t`` (array-valued)."""
        return self._moment_by_quad(self.pdf, j, a, b, t, "height pdf moment")

    def sf_moment_scalar(self, j: int, a: float, b: float, t: float) -> float:
        """Scalar ``sf_moment`` for use inside nested quadrature."""
        return float(self.sf_moment(j, a, b, t)[0])

    def _moment_by_quad(self, fn, j, a, b, t, name):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            if ti == 0.0:
                out[i] = _power_integral(j, a, b) * float(fn(0.0))
                continue
            pts = [bp / ti for bp in self.breakpoints]
            out[i] = quad(lambda r: r**j * float(fn(r * ti)), a, b,
                          name=name, epsabs=1e-13, epsrel=1e-11, points=pts)
        return out


def _power_integral(j: float, a, b):
    """``int_a^b r**j dr`` with ``b`` possibly infinite (then ``j < -1``)."""
    e = j + 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return (np.power(b, e) - np.power(a, e)) / e


@dataclass(frozen=True)
class ExponentialHeights(HeightModel):
    """Exponential heights with rate ``rate`` (1/m), mean ``1/rate``."""

    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    def sf(self, x):
        return np.exp(-self.rate * np.maximum(x, 0.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def spec(self) -> str:
        return f"exp:{self.rate!r}"

    def excess_mean(self, y):
        return math.exp(-self.rate * max(float(y), 0.0)) / self.rate

    def sf_moment(self, j, a, b, t):
        return _exp_moment(j, a, b, self.rate * np.asarray(t, dtype=float))

    def pdf_moment(self, j, a, b, t):
        return self.rate * _exp_moment(j, a, b, self.rate * np.asarray(t, dtype=float))

    def sf_moment_scalar(self, j, a, b, t):
        c = self.rate * t
        if j > 1 or c == 0 or (math.isfinite(b) and c * (b - a) < 1e-3):
            return super().sf_moment_scalar(j, a, b, t)
        ea = math.exp(-c * a)
        eb = math.exp(-c * b) if math.isfinite(b) else 0.0
        if j == 0:
            return (ea - eb) / c
        tail_b = (1.0 + c * b) * eb if math.isfinite(b) else 0.0
        return ((1.0 + c * a) * ea - tail_b) / (c * c)


def _exp_moment(j: int, a: float, b: float, c):
    """``int_a^b r**j exp(-c r) dr`` for ``c >= 0`` (``c`` may be ``inf``)."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    out = np.empty_like(c)
    n = j + 1
    zero = c == 0.0
    out[zero] = _power_integral(j, a, b)
    # short finite interval: two-term series avoids 0/0 in the gamma form
    tiny = ~zero & (c * b < 1e-6) if math.isfinite(b) else np.zeros_like(zero)
    if np.any(tiny):
        ct = c[tiny]
        out[tiny] = (_power_integral(j, a, b)
                     - ct * (b ** (n + 1) - a ** (n + 1)) / (n + 1))
    rest = ~(zero | tiny)
    if np.any(rest):
        cr = c[rest]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore",
                         under="ignore"):
            xa = cr * a
            xb = cr * b
            upper = xa > n
            diff = np.where(
                upper,
                special.gammaincc(n, xa) - special.gammaincc(n, xb),
                special.gammainc(n, xb) - special.gammainc(n, xa),
            )
            val = math.gamma(n) * diff / cr**n
        val = np.where(np.isinf(cr), 0.0, val)
        out[rest] = val
    return out


@dataclass(frozen=True)
class ParetoHeights(HeightModel):
    """Pareto heights ``P[H > x] = (scale / x)**shape`` for ``x >= scale``.

    The shape is restricted to ``1 < shape < 2``: finite mean, infinite
    variance.
    """

    shape: float
    scale: float

    def __post_init__(self):
        if not (1.0 < self.shape < 2.0):
            raise ValueError(f"Pareto shape must lie in (1, 2), got {self.shape}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Pareto scale must be positive, got {self.scale}")

    @classmethod
    def mean_matched(cls, shape: float, mean: float) -> "ParetoHeights":
        """Pareto law with the given mean: ``scale = (shape - 1) / shape * mean``."""
        return cls(shape, (shape - 1.0) / shape * mean)

    @property
    def breakpoints(self):
        return (self.scale,)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x < self.scale, 1.0,
                            (self.scale / np.maximum(x, self.scale)) ** self.shape)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, self.scale)
        return np.where(x >= self.scale,
                        self.shape * self.scale**self.shape / xs ** (self.shape + 1), 0.0)

    def mean(self) -> float:
        return self.shape * self.scale / (self.shape - 1.0)

    def sample(self, rng, size):
        # inverse transform on (0, 1]
        u = 1.0 - rng.random(size)
        return self.scale * u ** (-1.0 / self.shape)

    def spec(self) -> str:
        return f"pareto:{self.shape!r}:{self.scale!r}"

    def excess_mean(self, y):
        y = max(float(y), 0.0)
        k, s = self.shape, self.scale
        if y < s:
            return (s - y) + s / (k - 1.0)
        return s**k * y ** (1.0 - k) / (k - 1.0)

    def sf_moment(self, j, a, b, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, s = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r0 = np.where(t > 0, s / t, np.inf)
            # S = 1 below r0
            hi = np.minimum(b, r0)
            flat = np.where(hi > a, _power_integral(j, a, hi), 0.0)
            lo = np.maximum(a, r0)
            tail = np.where(
                lo < b,
                (s / t) ** k * _power_integral(j - k, lo, b),
                0.0,
            )
        return flat + tail

    def pdf_moment(self, j, a, b, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, s = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r0 = np.where(t > 0, s / t, np.inf)
            lo = np.maximum(a, r0)
            val = np.where(
                lo < b,
                k * s**k * t ** (-k - 1.0) * _power_integral(j - k - 1.0, lo, b),
                0.0,
            )
        return val


def parse_height_model(text: str) -> HeightModel:
    """Parse ``exp:<rate>``, ``pareto:<shape>:<scale>`` or ``pareto-mm:<shape>:<mean>``."""
    parts = text.strip().lower().split(":")
    try:
        if parts[0] in ("exp", "exponential") and len(parts) == 2:
            return ExponentialHeights(float(parts[1]))
        if parts[0] == "pareto" and len(parts) == 3:
            return ParetoHeights(float(parts[1]), float(parts[2]))
        if parts[0] == "pareto-mm" and len(parts) == 3:
            return ParetoHeights.mean_matched(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad height model {text!r}: {exc}") from None
    raise ValueError(
        f"bad height model {text!r}; expected exp:<mu>, pareto:<kappa>:<s> "
        "or pareto-mm:<kappa>:<mean>"
    )
