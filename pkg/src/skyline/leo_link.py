"""LEO satellite visibility and outage for a user inside a Poisson city.

Satellites form a homogeneous PPP on the orbital sphere.  From the user
their azimuths are uniform and independent of elevation, and a satellite at
elevation ``theta`` and azimuth ``psi`` is usable iff
``theta > max(theta_min, omega_1(psi))``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from skyline import regions
from skyline._quad import quad
from skyline.angular_joint import RegionPair, joint_cdf
from skyline.direction_stats import HALF_PI, DirectionalLaw, cdf_omega1
from skyline.urban_field import UrbanConfig, sample_field, skyline_at, truncation_radius

EARTH_RADIUS = 6_371_000.0


@dataclass(frozen=True)
class ConstellationConfig:
    """Orbital shell and elevation mask (lengths in meters, angles in radians)."""

    R_E: float = EARTH_RADIUS
    h_sat: float = 500_000.0
    n_total_mean: float = 10_000.0
    theta_min: float = 0.0

    def __post_init__(self):
        if not (self.R_E > 0 and self.h_sat > 0):
            raise ValueError("Earth radius and altitude must be positive")
        if not (self.n_total_mean >= 0 and math.isfinite(self.n_total_mean)):
            raise ValueError("mean satellite count must be finite and >= 0")
        if not (0.0 <= self.theta_min < HALF_PI):
            raise ValueError("elevation mask must lie in [0, pi/2)")

    @property
    def k(self) -> float:
        return self.R_E / (self.R_E + self.h_sat)

    @property
    def above_horizon_fraction(self) -> float:
        """Share of the orbital sphere above the user's horizon."""
        return 0.5 * (1.0 - self.k)

    @property
    def mean_above_horizon(self) -> float:
        return self.n_total_mean * self.above_horizon_fraction

    def with_mask(self, theta_min: float) -> "ConstellationConfig":
        return dataclasses.replace(self, theta_min=theta_min)


def elevation_pdf(c: ConstellationConfig, theta):
    """Density of the elevation of a satellite above the horizon."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > HALF_PI)):
        raise ValueError("elevation must lie in [0, pi/2]")
    k = c.k
    cos = np.cos(theta)
    root = np.sqrt(1.0 - (k * cos) ** 2)
    val = cos / ((1.0 - k) * root) * (root - k * np.sin(theta)) ** 2
    return float(val) if val.ndim == 0 else val


def elevation_cdf(c: ConstellationConfig, theta):
    """CDF matching :func:`elevation_pdf`; closed form through the geocentric angle."""
    theta = np.asarray(theta, dtype=float)
    k = c.k
    cos = np.cos(theta)
    # geocentric angle of the satellite seen at elevation theta
    cos_g = k * cos**2 + np.sin(theta) * np.sqrt(1.0 - (k * cos) ** 2)
    val = np.clip((cos_g - k) / (1.0 - k), 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def sample_elevations(c: ConstellationConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """Elevations of uniform satellites above the horizon (cosine of the
    geocentric angle is uniform on ``(k, 1)``)."""
    k = c.k
    cos_g = k + (1.0 - k) * rng.random(size)
    sin_g = np.sqrt(1.0 - cos_g**2)
    return np.arctan2(cos_g - k, sin_g)


def visibility_integral(c: ConstellationConfig, law: DirectionalLaw,
                        eps_quad: float = 1e-10) -> float:
    """``P_vis``: integral of ``F(theta) f(theta)`` over ``[theta_min, pi/2]``."""
    f = lambda th: float(cdf_omega1(law, th)) * float(elevation_pdf(c, th))  # noqa: E731
    return quad(f, c.theta_min, HALF_PI, name="visible-satellite integral",
                epsabs=eps_quad, epsrel=eps_quad)


def mean_visible(c: ConstellationConfig, law: DirectionalLaw) -> float:
    """Mean number of usable satellites."""
    return c.mean_above_horizon * visibility_integral(c, law)


def outage_independent(c: ConstellationConfig, law: DirectionalLaw) -> float:
    """Outage under independent blockage of satellites: ``exp(-mean_visible)``."""
    return math.exp(-mean_visible(c, law))


def find_mask(c: ConstellationConfig, law: DirectionalLaw, target: float,
              tol: float = 1e-4) -> float | None:
    """Largest elevation mask whose independent outage stays below ``target``.

    Returns ``None`` when even ``theta_min = 0`` misses the target.  Outage
    grows with the mask, so bisection on ``[0, pi/2]`` applies.
    """
    if not (0.0 < target < 1.0):
        raise ValueError("target must lie in (0, 1)")
    need = -math.log(target)
    ok = lambda th: mean_visible(c.with_mask(th), law) >= need  # noqa: E731
    if not ok(0.0):
        return None
    lo, hi = 0.0, HALF_PI
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# Monte Carlo outage


def outage_radius(c: ConstellationConfig, config: UrbanConfig) -> float:
    """Truncation radius for the joint city + constellation simulation.

    Only satellites above the mask matter, so a building beyond this radius
    can change the outcome only if it rises above ``theta_min`` inside one
    of about ``mean_above_horizon`` viewing wedges; the union bound of that
    event is kept below ``config.tail_epsilon``.
    """
    if config.density == 0:
        return 0.0
    if c.theta_min <= 0:
        raise ValueError("Monte Carlo outage needs a positive mask: with theta_min = 0 "
                         "arbitrarily distant buildings can block low satellites")
    n = max(c.mean_above_horizon, 1.0)
    eps = config.tail_epsilon / n
    scaled = dataclasses.replace(config, tail_epsilon=min(eps, 0.5))
    return max(truncation_radius(scaled, c.theta_min, scope="wedge"), config.inner_radius)


def constellation_trial(c: ConstellationConfig, config: UrbanConfig, radius: float,
                        rng: np.random.Generator) -> tuple[int, int]:
    """One joint draw; returns ``(satellites above the mask, usable satellites)``."""
    n = rng.poisson(c.mean_above_horizon)
    theta = sample_elevations(c, rng, n)
    psi = np.pi - regions.TWO_PI * rng.random(n)
    keep = theta > c.theta_min
    theta, psi = theta[keep], psi[keep]
    if theta.size == 0:
        return 0, 0
    if config.density == 0:
        return int(theta.size), int(theta.size)
    field = sample_field(config, radius, rng, directions=psi)
    omega1 = skyline_at(field, psi, k_max=1).omega[0]
    return int(theta.size), int(np.count_nonzero(theta > omega1))


def outage_mc(c: ConstellationConfig, config: UrbanConfig, trials: int, seed,
              workers: int = 1) -> tuple[float, float]:
    """Joint Monte Carlo outage probability and its standard error."""
    from skyline.mc_engine import McPlan, estimate

    emp = estimate("outage_event", config, McPlan(trials, seed, workers=workers),
                   constellation=c)
    return emp.mean, emp.stderr


# --------------------------------------------------------------------------
# two-satellite diversity


def dual_outage(pair: RegionPair, theta: float) -> float:
    """``P[omega_1(psi1) > theta, omega_1(psi2) > theta]``."""
    F = float(cdf_omega1(DirectionalLaw(pair.config), theta))
    return 1.0 - 2.0 * F + float(joint_cdf(pair, theta, theta))


def dual_outage_independent(config: UrbanConfig, theta: float) -> float:
    """Dual outage if the two directions were independent: ``(1 - F)**2``."""
    F = float(cdf_omega1(DirectionalLaw(config), theta))
    return (1.0 - F) ** 2


def decorrelation_sweep(config: UrbanConfig, theta: float, deltas) -> np.ndarray:
    """Relative excess ``(dual - independent) / independent`` at each separation."""
    base = dual_outage_independent(config, theta)
    if base <= 0:
        raise ValueError("independent dual outage is zero; the gap is undefined")
    dual = np.array([dual_outage(RegionPair.from_separation(config, d), theta)
                     for d in np.atleast_1d(deltas)])
    return (dual - base) / base


def decorrelation_angle(config: UrbanConfig, theta: float, tolerance: float = 0.05,
                        deltas=None) -> float | None:
    """Smallest separation on ``deltas`` at which the relative gap drops below ``tolerance``.

    The default sweep is every degree on ``(0, 180]``.  Returns ``None``
    when the gap stays above the tolerance over the whole sweep.
    """
    if deltas is None:
        deltas = np.radians(np.arange(1, 181))
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size > 1 and np.any(np.diff(deltas) <= 0):
        raise ValueError("sweep grid must be increasing")
    gap = decorrelation_sweep(config, theta, deltas)
    below = np.nonzero(gap < tolerance)[0]
    return float(deltas[below[0]]) if below.size else None
