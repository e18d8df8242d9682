"""Realizations of the user-centric building process and their skylines.

Buildings are arcs of circles centred at the user (origin).  Arc centres
form a homogeneous Poisson process of intensity ``density`` (per m^2) and
carry i.i.d. height marks.  Angles are radians, lengths meters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from skyline import regions
from skyline.heights import HeightModel
from skyline.regions import TWO_PI, circular_distance, half_width
from skyline.rng import make_rng

log = logging.getLogger(__name__)

#: largest expected building count accepted by :func:`sample_field`
MAX_EXPECTED_BUILDINGS = 5e7


class TruncationError(ValueError):
    """No finite truncation radius achieves the requested tail bound."""


@dataclass(frozen=True)
class UrbanConfig:
    """City parameters: PPP density, building arc length and height law."""

    density: float
    arc_length: float
    heights: HeightModel
    tail_epsilon: float = 1e-6

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density >= 0):
            raise ValueError(f"density must be >= 0, got {self.density}")
        if not (math.isfinite(self.arc_length) and self.arc_length > 0):
            raise ValueError(f"arc length must be > 0, got {self.arc_length}")
        if not (0 < self.tail_epsilon < 1):
            raise ValueError(f"tail_epsilon must lie in (0, 1), got {self.tail_epsilon}")
        if not math.isfinite(self.density_height_product):
            raise ValueError("density * mean height must be finite")

    @property
    def inner_radius(self) -> float:
        return regions.inner_radius(self.arc_length)

    @property
    def density_height_product(self) -> float:
        return self.density * self.heights.mean()


@dataclass(frozen=True)
class Building:
    r: float
    beta: float
    h: float

    def elevation(self) -> float:
        return math.atan2(self.h, self.r)

    def half_width(self, arc_length: float) -> float:
        return float(half_width(self.r, arc_length))


def wrap_angle(x):
    """Map angles to ``(-pi, pi]``."""
    return math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)


def azimuth_grid(grid_size: int) -> np.ndarray:
    """``grid_size`` equispaced azimuths covering ``(-pi, pi]``."""
    if grid_size < 1:
        raise ValueError("grid_size must be positive")
    return -math.pi + TWO_PI * np.arange(1, grid_size + 1) / grid_size


@dataclass(frozen=True, eq=False)
class BuildingField:
    """One sampled realization inside the disk of radius ``radius``.

    Buildings are stored column-wise (``r``, ``beta``, ``h``) in ascending
    ``r`` order.  When ``directions`` is set, only buildings whose arcs cross
    one of those azimuths were sampled, and skylines are exact only there.
    """

    config: UrbanConfig
    radius: float
    r: np.ndarray
    beta: np.ndarray
    h: np.ndarray
    seed: int | None = None
    directions: np.ndarray | None = None
    theta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.lexsort((self.h, self.beta, self.r))
        for name in ("r", "beta", "h"):
            arr = np.asarray(getattr(self, name), dtype=float)[order]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        theta = np.arctan2(self.h, self.r)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.directions is not None:
            d = np.atleast_1d(np.asarray(self.directions, dtype=float)).copy()
            d.setflags(write=False)
            object.__setattr__(self, "directions", d)

    def __len__(self) -> int:
        return len(self.r)

    @property
    def buildings(self) -> list[Building]:
        return [Building(float(a), float(b), float(c))
                for a, b, c in zip(self.r, self.beta, self.h)]

    def half_widths(self) -> np.ndarray:
        return half_width(self.r, self.config.arc_length)

    @classmethod
    def from_buildings(cls, config: UrbanConfig, buildings: Sequence[Building],
                       radius: float | None = None) -> "BuildingField":
        r = np.array([b.r for b in buildings], dtype=float)
        beta = np.array([b.beta for b in buildings], dtype=float)
        h = np.array([b.h for b in buildings], dtype=float)
        if radius is None:
            radius = float(r.max()) if len(r) else 0.0
        return cls(config, radius, r, beta, h)


@dataclass(frozen=True)
class SkylineTrace:
    """``omega[k, j]`` is the (k+1)-th skyline process at azimuth ``grid[j]``.

    ``argmax[j]`` indexes the field building attaining ``omega[0, j]``
    (``-1`` where no building crosses).
    """

    grid: np.ndarray
    omega: np.ndarray
    argmax: np.ndarray


# ---------------------------------------------------------------------------
# sampling


def _check_count(mean: float):
    if not math.isfinite(mean) or mean > MAX_EXPECTED_BUILDINGS:
        raise ValueError(
            f"expected building count {mean:.3g} exceeds the sampler limit "
            f"{MAX_EXPECTED_BUILDINGS:.0e}; reduce the radius or density"
        )


def sample_field(config: UrbanConfig, radius: float, seed,
                 directions=None) -> BuildingField:
    """Sample the marked PPP inside the disk of radius ``radius``.

    Parameters
    ----------
    config : UrbanConfig
    radius : float
        Truncation radius in meters.
    seed : int or numpy.random.Generator
    directions : array_like, optional
        If given, sample only the restriction of the process to the union of
        the blockage wedges ``A(psi)`` of these azimuths.  By the restriction
        property of Poisson processes this is exact for every statistic
        evaluated at those azimuths, and far cheaper than the full disk.
    """
    if not math.isfinite(radius) or radius < 0:
        raise ValueError(f"radius must be finite and >= 0, got {radius}")
    rng = make_rng(seed)
    token = int(seed) if isinstance(seed, (int, np.integer)) else None
    lam = config.density
    if directions is None:
        mean = lam * math.pi * radius**2
        _check_count(mean)
        n = rng.poisson(mean) if mean > 0 else 0
        r = radius * np.sqrt(rng.random(n))
        beta = math.pi - TWO_PI * rng.random(n)
        h = config.heights.sample(rng, n)
        return BuildingField(config, radius, r, beta, h, token)

    psis = wrap_angle(np.atleast_1d(np.asarray(directions, dtype=float)))
    l = config.arc_length
    L = config.inner_radius
    r_in = min(radius, L)
    means = [lam * math.pi * r_in**2]
    if radius > L:
        means.append(lam * l * (radius - L) * len(psis))
    _check_count(sum(means))

    n = rng.poisson(means[0]) if means[0] > 0 else 0
    rs = [r_in * np.sqrt(rng.random(n))]
    betas = [math.pi - TWO_PI * rng.random(n)]
    if radius > L and lam > 0:
        per = lam * l * (radius - L)
        for i, psi in enumerate(psis):
            m = rng.poisson(per)
            # intensity along r inside one wedge is lam * r * (l / r) = lam * l
            r = L + (radius - L) * rng.random(m)
            b = wrap_angle(psi + (2.0 * rng.random(m) - 1.0) * half_width(r, l))
            if i:
                # drop points already covered by an earlier wedge
                seen = np.any(circular_distance(b[:, None], psis[None, :i])
                              <= half_width(r, l)[:, None], axis=1)
                r, b = r[~seen], b[~seen]
            rs.append(r)
            betas.append(b)
    r = np.concatenate(rs)
    beta = np.concatenate(betas)
    h = config.heights.sample(rng, len(r))
    return BuildingField(config, radius, r, beta, h, token, directions=psis)


# ---------------------------------------------------------------------------
# truncation


def _tail_profile(config: UrbanConfig, scope: str) -> regions.Profile:
    if scope == "disk":
        return regions.disk()
    if scope == "wedge":
        return regions.wedge(config.arc_length)
    raise ValueError(f"scope must be 'disk' or 'wedge', got {scope!r}")


def tail_count(config: UrbanConfig, radius: float, phi: float,
               scope: str = "disk") -> float:
    """Expected number of buildings beyond ``radius`` with elevation above ``phi``."""
    prof = _tail_profile(config, scope).clip(lo=radius)
    val = config.density * prof.integral(config.heights, math.tan(phi))[0]
    return float(val)


def truncation_radius(config: UrbanConfig, phi_min: float,
                      scope: str = "disk") -> float:
    """Radius beyond which fewer than ``tail_epsilon`` buildings exceed ``phi_min``.

    ``scope="disk"`` counts buildings in every direction; ``"wedge"`` only
    those crossing one fixed azimuth.  Pareto heights with shape below 2
    have an infinite disk tail at every radius and raise
    :class:`TruncationError`; their wedge tail is finite.
    """
    if not (0 < phi_min < math.pi / 2):
        raise TruncationError(f"phi_min must lie in (0, pi/2), got {phi_min}")
    if config.density == 0:
        return 0.0
    eps = config.tail_epsilon
    tail = lambda R: tail_count(config, R, phi_min, scope)
    L = config.inner_radius
    hi = max(L, 1.0, 1.0 / math.sqrt(config.density))
    for _ in range(200):
        val = tail(hi)
        if not math.isfinite(val):
            raise TruncationError(
                f"no finite truncation: {scope} tail diverges for {config.heights.spec()}")
        if val < eps:
            break
        hi *= 2.0
    else:
        raise TruncationError("no finite truncation radius found")
    if tail(0.0) < eps:
        return 0.0
    root = optimize.brentq(lambda R: math.log(tail(R)) - math.log(eps), 0.0, hi,
                           xtol=1e-9 * hi, rtol=1e-12)
    # land on the safe side of the root
    return float(root * (1 + 1e-9) + 1e-12)


_T_GRID = np.logspace(-6, 6, 481)


def change_bound(config: UrbanConfig, radius: float, scope: str = "wedge") -> float:
    """Bound on the probability that truncating at ``radius`` alters the skyline.

    For one azimuth (``scope="wedge"``), resp. for the all-azimuth maximum
    (``"disk"``): the truncated value can differ only if some building
    beyond ``radius`` exceeds threshold ``t`` or the near-field maximum is
    below ``t``.  Both probabilities are Poisson void terms; the bound is
    minimised over ``t``.
    """
    prof = _tail_profile(config, scope)
    lam = config.density
    if lam == 0:
        return 0.0
    far = lam * prof.clip(lo=radius).integral(config.heights, _T_GRID)
    near = np.exp(-lam * prof.clip(hi=radius).integral(config.heights, _T_GRID))
    total = np.where(np.isfinite(far), far + near, np.inf)
    return float(np.min(total))


def bias_radius(config: UrbanConfig, epsilon: float, scope: str = "wedge",
                max_radius: float = math.inf) -> float:
    """Smallest radius (to 0.1%) with :func:`change_bound` below ``epsilon``.

    Returns ``max_radius`` when the bound cannot be met below it.
    """
    if config.density == 0:
        return 0.0
    lo = 0.0
    hi = max(config.inner_radius, 1.0 / math.sqrt(config.density))
    while change_bound(config, hi, scope) >= epsilon:
        lo, hi = hi, 2.0 * hi
        if hi >= max_radius or hi > 1e12:
            if not math.isfinite(max_radius):
                raise TruncationError(f"{scope} truncation bound {epsilon} unreachable")
            log.debug("truncation bound %g not met below %g m", epsilon, max_radius)
            return float(max_radius)
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if change_bound(config, mid, scope) < epsilon:
            hi = mid
        else:
            lo = mid
    return float(min(hi, max_radius))


# ---------------------------------------------------------------------------
# skyline evaluation


def crosses(b: Building, psi: float, arc_length: float) -> bool:
    """Whether building ``b`` intersects the viewing direction ``psi``."""
    return bool(circular_distance(psi, b.beta) <= half_width(b.r, arc_length))


def crossing_mask(field: BuildingField, psis) -> np.ndarray:
    """Boolean matrix ``[len(psis), len(field)]`` of direction crossings."""
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    return (circular_distance(psis[:, None], field.beta[None, :])
            <= field.half_widths()[None, :])


def _check_directions(field: BuildingField, psis: np.ndarray):
    if field.directions is None:
        return
    d = circular_distance(psis[:, None], field.directions[None, :])
    if np.any(d.min(axis=1) > 1e-9):
        raise ValueError("field was sampled around other directions; its skyline "
                         "is only exact at field.directions")


def skyline_at(field: BuildingField, psis, k_max: int = 1) -> SkylineTrace:
    """Evaluate ``omega_1 .. omega_k_max`` exactly at arbitrary azimuths.

    For each azimuth the crossing buildings are scanned in order of
    distance; a building is visible (enters ``V(psi)``) iff its elevation
    beats every closer crossing building, so visible elevations form an
    increasing record sequence and ``omega_k`` is its k-th last record.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    _check_directions(field, psis)
    n_dir = len(psis)
    omega = np.zeros((k_max, n_dir))
    argmax = np.full(n_dir, -1, dtype=np.int64)
    if len(field) == 0:
        return SkylineTrace(psis, omega, argmax)
    chunk = max(1, int(2e7 // max(len(field), 1)))
    for start in range(0, n_dir, chunk):
        sl = slice(start, min(start + chunk, n_dir))
        jj, ii = np.nonzero(crossing_mask(field, psis[sl]))
        if len(jj) == 0:
            continue
        # offset by 2*j so one running max works across all directions
        v = field.theta[ii] + 2.0 * jj
        cm = np.maximum.accumulate(v)
        rec = np.empty(len(v), dtype=bool)
        rec[0] = True
        rec[1:] = v[1:] > cm[:-1]
        rj, ri = jj[rec], ii[rec]
        idx = np.arange(len(rj))
        last = np.r_[rj[1:] != rj[:-1], True]
        seg_end = np.minimum.accumulate(np.where(last, idx, len(rj))[::-1])[::-1]
        rank = seg_end - idx
        keep = rank < k_max
        omega[rank[keep], rj[keep] + start] = field.theta[ri[keep]]
        top = rank == 0
        argmax[rj[top] + start] = ri[top]
    return SkylineTrace(psis, omega, argmax)


def eval_skyline(field: BuildingField, grid_size: int = 360, k_max: int = 3) -> SkylineTrace:
    """Skyline processes on a uniform azimuth grid over ``(-pi, pi]``."""
    if grid_size < 4:
        raise ValueError("grid_size must be >= 4")
    return skyline_at(field, azimuth_grid(grid_size), k_max)


def global_sup(field: BuildingField) -> tuple[float, Building | None]:
    """Largest elevation over all azimuths and the building attaining it.

    Exact: every building crosses its own centre azimuth, so the supremum
    of ``omega_1`` is the maximum elevation in the field.  An empty field
    has no obstacle and returns ``(0.0, None)``.
    """
    if field.directions is not None:
        raise ValueError("global_sup needs a full-disk field")
    if len(field) == 0:
        return 0.0, None
    i = int(np.argmax(field.theta))
    return float(field.theta[i]), Building(float(field.r[i]), float(field.beta[i]),
                                          float(field.h[i]))


def far_field_max(config: UrbanConfig, radius: float, rng: np.random.Generator,
                  size: int) -> np.ndarray:
    """Sample ``tan`` of the largest elevation among wedge buildings beyond ``radius``.

    Beyond the inner disk, the buildings crossing a fixed azimuth form a
    1-D Poisson process of rate ``density * arc_length`` in ``r``.  The
    number of them with ``h / r > u`` is Poisson with mean
    ``density * l / u * E[(H - radius u)+]``, so the maximum ratio can be
    drawn by inverting that mean at an Exp(1) variate.  Returns 0 where the
    far field is empty above every threshold.
    """
    if radius < config.inner_radius:
        raise ValueError("far-field closure needs radius >= inner radius")
    lam_l = config.density * config.arc_length
    e = rng.exponential(1.0, size)
    if lam_l == 0:
        return np.zeros(size)
    excess = config.heights.excess_mean

    def count(u):
        return lam_l / u * excess(radius * u)

    out = np.empty(size)
    for i, target in enumerate(e):
        lo, hi = 1e-12, 1.0
        while count(hi) > target:
            hi *= 4.0
        while count(lo) < target:
            lo *= 0.25
            if lo < 1e-300:
                break
        out[i] = optimize.brentq(lambda u: math.log(max(count(u), 1e-300)) - math.log(target),
                                 lo, hi, xtol=1e-15, rtol=1e-13)
    return out
