"""Law of the all-azimuth maximum ``sup_psi omega_1(psi)`` and its building.

The supremum over directions is simply the largest elevation of any building
in the plane, so its CDF is the void probability of the whole plane above
``atan(r tan(phi))``.  The building attaining it is the dominant obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from skyline import regions
from skyline._quad import quad
from skyline.direction_stats import HALF_PI, _check_phi, _squeeze, _tan, void_exponent
from skyline.heights import ExponentialHeights
from skyline.urban_field import UrbanConfig


@dataclass(frozen=True)
class GlobalLaw:
    config: UrbanConfig
    eps_quad: float = 1e-9


def _require_exponential(cfg: UrbanConfig) -> float:
    if not isinstance(cfg.heights, ExponentialHeights):
        raise NotImplementedError(
            "closed form needs exponential heights; differentiate cdf_sup numerically instead"
        )
    return cfg.heights.rate


def cdf_sup(law: GlobalLaw, phi):
    """``P[sup_psi omega_1(psi) <= phi]``.

    Zero at ``phi = 0`` whenever buildings exist.  For heights with an
    infinite second moment (Pareto with shape below 2) the plane integral
    diverges for every ``phi < pi/2`` and the CDF is identically zero: some
    far building is always taller than any fixed elevation.
    """
    phi = _check_phi(phi)
    cfg = law.config
    if cfg.density == 0:
        return _squeeze(np.ones_like(phi), phi)
    t = np.ravel(_tan(phi))
    if isinstance(cfg.heights, ExponentialHeights):
        mu = cfg.heights.rate
        with np.errstate(divide="ignore"):
            expo = 2 * math.pi * cfg.density / (mu * mu * t * t)
    else:
        expo = void_exponent(cfg, regions.disk(), t)
    expo = np.where(np.isinf(t), 0.0, expo)
    expo = np.where(np.isnan(expo), np.inf, expo)
    return _squeeze(np.exp(-expo).reshape(np.shape(phi)), phi)


def pdf_sup_exponential(law: GlobalLaw, phi):
    """Density of the supremum for exponential heights."""
    phi = _check_phi(phi)
    cfg = law.config
    mu = _require_exponential(cfg)
    lam = cfg.density
    interior = (phi > 0) & (phi < HALF_PI)
    p = np.where(interior, phi, 0.25 * math.pi)
    t = np.tan(p)
    a = 2 * math.pi * lam / (mu * mu)
    val = np.exp(-a / (t * t)) * 2 * a / (t * np.sin(p) ** 2)
    return _squeeze(np.where(interior, val, 0.0), phi)


def mean_sup_exponential(density: float, rate: float) -> float:
    """``E[sup_psi omega_1]`` in radians, for exponential heights.

    Equal to ``pi/2 * (1 - exp(x**2) erfc(x))`` with ``x = sqrt(2 pi density) / rate``;
    the product is evaluated as the scaled ``erfcx`` so that dense cities do
    not overflow.
    """
    if density < 0 or rate <= 0:
        raise ValueError("density must be >= 0 and rate > 0")
    x = math.sqrt(2 * math.pi * density) / rate
    return HALF_PI * (1.0 - float(special.erfcx(x)))


def joint_pdf_dominant(law: GlobalLaw, r, h):
    """Joint density of distance and height of the building attaining the supremum."""
    cfg = law.config
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float)
    rb, hb = np.broadcast_arrays(r, h)
    if np.any(rb <= 0) or np.any(hb <= 0):
        raise ValueError("r and h must be positive")
    lam = cfg.density
    if isinstance(cfg.heights, ExponentialHeights):
        mu = cfg.heights.rate
        val = 2 * math.pi * lam * mu * rb * np.exp(
            -2 * lam * math.pi * rb**2 / (hb**2 * mu**2) - mu * hb)
    else:
        expo = void_exponent(cfg, regions.disk(), np.ravel(hb / rb)).reshape(rb.shape)
        expo = np.where(np.isnan(expo), np.inf, expo)
        val = 2 * math.pi * lam * rb * cfg.heights.pdf(hb) * np.exp(-expo)
    return _squeeze(val, rb)


def marginal_height_dominant(law: GlobalLaw, h):
    """Density of the dominant building's height, by quadrature over ``r``."""
    cfg = law.config
    h = np.atleast_1d(np.asarray(h, dtype=float))
    out = np.empty_like(h)
    for i, hi in enumerate(h):
        scale = hi / math.sqrt(max(cfg.density, 1e-300))
        out[i] = quad(lambda r: float(joint_pdf_dominant(law, r, hi)) if r > 0 else 0.0,
                      0.0, np.inf, name="dominant height marginal",
                      epsabs=law.eps_quad * 1e-3, epsrel=law.eps_quad,
                      points=[scale])
    return out


def marginal_distance_dominant(law: GlobalLaw, r):
    """Density of the dominant building's distance, by quadrature over ``h``."""
    cfg = law.config
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    pts = list(cfg.heights.breakpoints) or [cfg.heights.mean()]
    for i, ri in enumerate(r):
        out[i] = quad(lambda h: float(joint_pdf_dominant(law, ri, h)) if h > 0 else 0.0,
                      0.0, np.inf, name="dominant distance marginal",
                      epsabs=law.eps_quad * 1e-3, epsrel=law.eps_quad, points=pts)
    return out


def dominant_means_exponential(density: float, rate: float) -> tuple[float, float]:
    """``(E[R*], E[H*])`` of the dominant building for exponential heights."""
    if density <= 0 or rate <= 0:
        raise ValueError("density and rate must be positive")
    return 3.0 / (2.0 * math.sqrt(2.0 * density)), 3.0 / rate
