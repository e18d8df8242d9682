"""First-order skyline statistics in one fixed viewing direction.

By rotational invariance nothing here depends on the azimuth.  All
probabilities are Poisson void probabilities ``exp(-density * J)`` where
``J`` is a radial integral over (part of) the blockage wedge ``A(psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from skyline import regions
from skyline._quad import quad
from skyline.heights import ExponentialHeights, ParetoHeights
from skyline.urban_field import UrbanConfig

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class DirectionalLaw:
    config: UrbanConfig
    eps_quad: float = 1e-9


def _check_phi(phi, lo_open: bool = False):
    phi = np.asarray(phi, dtype=float)
    bad = ~np.isfinite(phi) | (phi < 0) | (phi > HALF_PI)
    if lo_open:
        bad |= phi == 0
    if np.any(bad):
        raise ValueError("elevation angle must lie in [0, pi/2]")
    return phi


def _tan(phi):
    return np.where(phi >= HALF_PI, np.inf, np.tan(phi))


def void_exponent(config: UrbanConfig, profile: regions.Profile, t):
    """``density * int_D S(|x| t) dx``: mean count of region points above ``atan t``."""
    if config.density == 0:
        return np.zeros_like(np.atleast_1d(np.asarray(t, dtype=float)))
    return config.density * profile.integral(config.heights, t)


def cdf_omega1_exponential(density: float, arc_length: float, rate: float, phi):
    """Closed form of ``P[omega_1 <= phi]`` for exponential heights."""
    t = _tan(_check_phi(phi))
    with np.errstate(divide="ignore", invalid="ignore"):
        x = rate * t
        expo = 2 * math.pi * density * -np.expm1(-arc_length * x / (2 * math.pi)) / x**2
    expo = np.where(t == 0, np.inf if density > 0 else 0.0, expo)
    expo = np.where(np.isinf(t), 0.0, expo)
    return _squeeze(np.exp(-expo), phi)


def cdf_omega1_pareto_printed(density: float, arc_length: float, shape: float,
                              scale: float, phi):
    """The Pareto closed form obtained by using ``(s/x)**shape`` as survival for all ``x``.

    This drops the cap ``S(x) = 1`` for ``x < s`` and is therefore only a
    lower bound on the true CDF (it is tight when ``s / tan(phi)`` is small
    compared with the inner radius).  Kept for comparison; use
    :func:`cdf_omega1` for the model's actual law.
    """
    t = _tan(_check_phi(phi))
    k, s, l = shape, scale, arc_length
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = (density * l**2 * (2 * math.pi) ** (k - 1) * (s / (l * t)) ** k
                / (k * k - 3 * k + 2))
    expo = np.where(np.isinf(t), 0.0, expo)
    return _squeeze(np.exp(expo), phi)


def _squeeze(val, like):
    return float(val) if np.ndim(like) == 0 else val


def cdf_omega1(law: DirectionalLaw, phi):
    """``P[omega_1(psi) <= phi]`` for any height model.

    Exponential heights use the closed form; every other model (Pareto
    included, where the capped survival makes the integral piecewise) goes
    through the exact radial moments of the height model.
    """
    phi = _check_phi(phi)
    cfg = law.config
    if cfg.density == 0:
        return _squeeze(np.ones_like(phi), phi)
    if isinstance(cfg.heights, ExponentialHeights):
        return cdf_omega1_exponential(cfg.density, cfg.arc_length, cfg.heights.rate, phi)
    t = _tan(phi)
    expo = void_exponent(cfg, regions.wedge(cfg.arc_length), np.ravel(t))
    return _squeeze(np.exp(-expo).reshape(np.shape(phi)), phi)


def pdf_omega1(law: DirectionalLaw, phi):
    """Density of ``omega_1(psi)`` on ``(0, pi/2)``, by differentiating the exponent."""
    phi = _check_phi(phi)
    cfg = law.config
    t = np.ravel(_tan(phi))
    prof = regions.wedge(cfg.arc_length)
    F = np.exp(-void_exponent(cfg, prof, t))
    dJ = prof.integral_dt(cfg.heights, t)
    sec2 = 1.0 + t * t
    dens = np.where(np.isfinite(t) & (F > 0), F * (-cfg.density * dJ) * sec2, 0.0)
    return _squeeze(dens.reshape(np.shape(phi)), phi)


def crossing_count_mean(config: UrbanConfig, radius: float) -> float:
    """Mean number of buildings crossing a direction within ``radius``."""
    L = config.inner_radius
    if radius <= L:
        return config.density * math.pi * radius**2
    return config.density * config.arc_length * (radius - config.arc_length / (4 * math.pi))


def pdf_rn(law: DirectionalLaw, n: int, r):
    """Density of the distance to the n-th nearest building crossing a direction."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    cfg = law.config
    lam, l = cfg.density, cfg.arc_length
    L = cfg.inner_radius
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be >= 0")
    lgam = math.lgamma(n)
    with np.errstate(divide="ignore"):
        inner_m = lam * math.pi * r**2
        outer_m = lam * l * (r - l / (4 * math.pi))
        m = np.where(r <= L, inner_m, outer_m)
        rate = np.where(r <= L, 2 * lam * math.pi * r, lam * l)
        logd = (n - 1) * np.log(m) - m - lgam
    dens = np.where(m > 0, rate * np.exp(logd), 0.0 if n > 1 else rate)
    return _squeeze(dens, r)


def cdf_rn(law: DirectionalLaw, n: int, r):
    """``P[r_n(psi) <= r]``: at least ``n`` crossing buildings within ``r``."""
    from scipy import stats

    r = np.asarray(r, dtype=float)
    m = np.vectorize(lambda x: crossing_count_mean(law.config, x))(r)
    return _squeeze(stats.poisson.sf(n - 1, m), r)


def joint_pdf_rh(law: DirectionalLaw, r, h):
    """Joint density of distance and height of the building setting ``omega_1``."""
    cfg = law.config
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float)
    rb, hb = np.broadcast_arrays(r, h)
    if np.any(rb <= 0) or np.any(hb <= 0):
        raise ValueError("r and h must be positive")
    lam = cfg.density
    loc = np.where(rb <= cfg.inner_radius, 2 * math.pi * lam * rb, lam * cfg.arc_length)
    t = np.ravel(hb / rb)
    void = np.exp(-void_exponent(cfg, regions.wedge(cfg.arc_length), t)).reshape(rb.shape)
    val = loc * cfg.heights.pdf(hb) * void
    return _squeeze(val, rb)


def _void_beyond(config: UrbanConfig, r: float, t: float) -> float:
    """Void probability of ``A(psi)`` outside ``B(0, r)`` above ratio ``t``."""
    prof = regions.wedge(config.arc_length).clip(lo=r)
    return math.exp(-config.density * prof.integral_scalar(config.heights, t))


def _pdf_r1(config: UrbanConfig, r: float) -> float:
    lam, l = config.density, config.arc_length
    if r <= config.inner_radius:
        return 2 * lam * math.pi * r * math.exp(-lam * math.pi * r * r)
    return lam * l * math.exp(-lam * l * (r - l / (4 * math.pi)))


def prob_omega2_zero(law: DirectionalLaw) -> float:
    """``P[omega_2(psi) = 0]``: the nearest crossing building hides all others.

    Integrates, over the nearest building's distance ``r`` and height ``h``,
    the probability that no farther crossing building rises above the
    elevation ``atan(h / r)``.
    """
    cfg = law.config
    if cfg.density <= 0:
        raise ValueError("density must be positive")
    L = cfg.inner_radius
    eps = law.eps_quad

    def over_r(h):
        def integrand(r):
            if r <= 0:
                return 0.0
            return _pdf_r1(cfg, r) * _void_beyond(cfg, r, h / r)

        inner = quad(integrand, 0.0, L, name="omega2=0 inner-disk r integral",
                     epsabs=eps, epsrel=eps)
        outer = quad(integrand, L, np.inf, name="omega2=0 outer r integral",
                     epsabs=eps, epsrel=eps)
        return inner + outer

    pts = list(getattr(cfg.heights, "breakpoints", ()))
    return quad(lambda h: over_r(h) * float(cfg.heights.pdf(h)) if h > 0 else 0.0,
                0.0, np.inf, name="omega2=0 height integral", epsabs=eps, epsrel=eps,
                points=pts)


def dominance_gap(phi, rate: float, shape: float, density: float, arc_length: float,
                  exact: bool = False):
    """``F_exp(phi) - F_par(phi)`` for mean-matched exponential and Pareto heights.

    The Pareto scale is ``(shape - 1) / shape / rate``.  With
    ``exact=False`` the Pareto CDF is the uncapped closed form
    (:func:`cdf_omega1_pareto_printed`), for which the gap is positive at
    every angle; ``exact=True`` uses the true Pareto law instead.
    """
    if not (1 < shape < 2):
        raise ValueError("shape must lie in (1, 2)")
    scale = (shape - 1.0) / shape / rate
    f_exp = cdf_omega1_exponential(density, arc_length, rate, phi)
    if exact:
        cfg = UrbanConfig(density, arc_length, ParetoHeights(shape, scale))
        f_par = cdf_omega1(DirectionalLaw(cfg), phi)
    else:
        f_par = cdf_omega1_pareto_printed(density, arc_length, shape, scale, phi)
    return f_exp - f_par
