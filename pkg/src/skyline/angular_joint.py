"""Two-direction statistics of ``omega_1`` and its circular second-order structure.

Two viewing directions ``psi1, psi2`` separated by ``delta`` split the plane
into the shared region ``A1 & A2`` and the two one-sided differences.  Since
a Poisson process is independent on disjoint sets, every joint probability
is a product of three void probabilities.

The joint law of ``(omega_1(psi1), omega_1(psi2))`` has an atom on the
diagonal (the same building can set both), so the autocorrelation is
computed from the survival identity ``E[XY] = int int P[X > x, Y > y]``
rather than from a joint density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from skyline import regions
from skyline._quad import quad
from skyline.direction_stats import HALF_PI, DirectionalLaw, _check_phi, _tan, cdf_omega1
from skyline.heights import HeightModel
from skyline.urban_field import UrbanConfig

TWO_PI = regions.TWO_PI


@dataclass(frozen=True)
class RegionPair:
    config: UrbanConfig
    psi1: float
    psi2: float

    @property
    def delta(self) -> float:
        return regions.separation(self.psi1, self.psi2)

    @classmethod
    def from_separation(cls, config: UrbanConfig, delta: float) -> "RegionPair":
        return cls(config, 0.0, float(delta))

    def overlap(self) -> regions.Profile:
        return regions.overlap(self.config.arc_length, self.delta)

    def difference(self) -> regions.Profile:
        return regions.difference(self.config.arc_length, self.delta)

    def union(self) -> regions.Profile:
        return regions.union(self.config.arc_length, self.delta)


def _with_heights(pair: RegionPair, heights: HeightModel | None) -> UrbanConfig:
    if heights is None or heights == pair.config.heights:
        return pair.config
    c = pair.config
    return UrbanConfig(c.density, c.arc_length, heights, c.tail_epsilon)


def _expo(cfg: UrbanConfig, prof: regions.Profile, t) -> np.ndarray:
    if cfg.density == 0:
        return np.zeros(np.shape(np.atleast_1d(t)))
    return cfg.density * prof.integral(cfg.heights, t)


def joint_cdf(pair: RegionPair, phi1, phi2, heights: HeightModel | None = None):
    """``P[omega_1(psi1) <= phi1, omega_1(psi2) <= phi2]`` (broadcasts over angles)."""
    cfg = _with_heights(pair, heights)
    p1, p2 = np.broadcast_arrays(_check_phi(phi1), _check_phi(phi2))
    t1 = np.ravel(_tan(p1))
    t2 = np.ravel(_tan(p2))
    tm = np.minimum(t1, t2)
    diff = pair.difference()
    expo = _expo(cfg, pair.overlap(), tm) + _expo(cfg, diff, t1) + _expo(cfg, diff, t2)
    # a diverging term (phi = 0) fails every building
    expo = np.where(np.isnan(expo), np.inf, expo)
    out = np.exp(-expo).reshape(p1.shape)
    return float(out) if out.ndim == 0 else out


def _phi_kinks(cfg: UrbanConfig, prof: regions.Profile) -> list[float]:
    """Elevations at which a height breakpoint meets a profile breakpoint."""
    pts = []
    for s in cfg.heights.breakpoints:
        for r in prof.breakpoints():
            if r > 0:
                pts.append(math.atan(s / r))
    return sorted(p for p in set(pts) if 0 < p < HALF_PI)


def prob_equal(pair: RegionPair, heights: HeightModel | None = None,
               eps_quad: float = 1e-10) -> float:
    """``P[omega_1(psi1) = omega_1(psi2)]``: one building in the overlap sets both.

    If the tallest overlap building sits at ``tan = t``, both angles coincide
    exactly when neither one-sided difference holds a building above ``t``.
    Integrating over the law of the overlap maximum gives
    ``int exp(-lam J_union(t)) * (-lam dJ_overlap/dt) dt``, evaluated in
    ``phi`` with the derivative taken analytically.
    """
    cfg = _with_heights(pair, heights)
    if cfg.density <= 0:
        raise ValueError("density must be positive")
    inter = pair.overlap()
    uni = pair.union()
    lam = cfg.density

    def integrand(phi):
        if phi <= 0 or phi >= HALF_PI:
            return 0.0
        t = math.tan(phi)
        e = float(_expo(cfg, uni, t)[0])
        if not math.isfinite(e):
            return 0.0
        d = -lam * float(inter.integral_dt(cfg.heights, t)[0])
        return math.exp(-e) * d * (1.0 + t * t)

    kinks = _phi_kinks(cfg, inter) + _phi_kinks(cfg, pair.difference())
    return quad(integrand, 0.0, HALF_PI, name="equal-angle probability",
                epsabs=eps_quad, epsrel=eps_quad, points=sorted(set(kinks)))


# --------------------------------------------------------------------------
# autocorrelation and spectrum


@dataclass(frozen=True)
class CircularACF:
    """``R(delta) = E[omega_1(psi) omega_1(psi + delta)]`` sampled on the circle."""

    delta: np.ndarray
    values: np.ndarray
    method: str
    stderr: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.method not in ("analytic", "monte_carlo"):
            raise ValueError(f"unknown ACF method {self.method!r}")
        if np.shape(self.delta) != np.shape(self.values):
            raise ValueError("delta and values must have the same shape")


def uniform_delta_grid(n: int) -> np.ndarray:
    """``2 pi j / n`` for ``j = 0..n-1``: the grid accepted by :func:`psd`."""
    if n < 2:
        raise ValueError("grid needs at least two points")
    return TWO_PI * np.arange(n) / n


def _gauss_nodes(cfg: UrbanConfig, panels: int, order: int):
    """Composite Gauss-Legendre nodes and weights on ``[0, pi/2]``."""
    edges = set(np.linspace(0.0, HALF_PI, panels + 1).tolist())
    edges.update(_phi_kinks(cfg, regions.wedge(cfg.arc_length)))
    edges = np.array(sorted(edges))
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights, edges


def _cumulative_cdf(cfg: UrbanConfig, nodes, edges, order: int) -> np.ndarray:
    """``C(y) = int_0^y F(x) dx`` at every node."""
    law = DirectionalLaw(cfg)
    f = lambda x: float(cdf_omega1(law, x))  # noqa: E731
    starts = np.zeros(len(edges))
    for i in range(1, len(edges)):
        starts[i] = starts[i - 1] + quad(f, edges[i - 1], edges[i],
                                         name="ACF marginal cumulative",
                                         epsabs=1e-14, epsrel=1e-12)
    out = np.empty_like(nodes)
    for k, y in enumerate(nodes):
        panel = k // order
        out[k] = starts[panel] + quad(f, edges[panel], y, name="ACF marginal cumulative",
                                      epsabs=1e-14, epsrel=1e-12)
    return out


def acf_analytic(config: UrbanConfig, delta_grid, panels: int = 48, order: int = 20):
    """Survival-integral ACF at each separation in ``delta_grid`` (radians).

    For ``x <= y`` the joint CDF factors as ``F(x) E_D(y)`` with ``E_D`` the
    void probability of one difference region, which turns the double
    integral into ``2 int [y - C(y) - y F(y) + C(y) E_D(y)] dy``.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    law = DirectionalLaw(config)
    nodes, weights, edges = _gauss_nodes(config, panels, order)
    F = np.asarray(cdf_omega1(law, nodes))
    C = _cumulative_cdf(config, nodes, edges, order)
    t = np.tan(nodes)
    base = nodes - C - nodes * F
    cache: dict[float, float] = {}
    out = np.empty(delta_grid.shape)
    for idx, d in np.ndenumerate(delta_grid):
        dd = float(regions.circular_distance(d, 0.0))
        key = round(dd, 14)
        if key not in cache:
            ed = np.exp(-_expo(config, regions.difference(config.arc_length, dd), t))
            cache[key] = 2.0 * float(np.dot(weights, base + C * ed))
        out[idx] = cache[key]
    return out


def acf(config: UrbanConfig, delta_grid, method: str = "analytic", plan=None) -> CircularACF:
    """Circular ACF of ``omega_1``; ``method`` is ``"analytic"`` or ``"monte_carlo"``.

    The Monte Carlo path needs an :class:`~skyline.mc_engine.McPlan` and
    averages products of skyline traces on a uniform azimuth grid; the
    separations must then be multiples of the grid step.
    """
    delta = np.asarray(delta_grid, dtype=float)
    if np.any(~np.isfinite(delta)) or np.any(delta < 0) or np.any(delta >= TWO_PI + 1e-12):
        raise ValueError("separations must lie in [0, 2 pi)")
    if method == "analytic":
        return CircularACF(delta, acf_analytic(config, delta), "analytic")
    if method == "monte_carlo":
        if plan is None:
            raise ValueError("monte_carlo ACF needs a plan")
        from skyline import mc_engine

        emp = mc_engine.acf_mc(config, plan, delta)
        return CircularACF(delta, emp[0], "monte_carlo", emp[1])
    raise ValueError(f"unknown ACF method {method!r}")


@dataclass(frozen=True)
class AngularSpectrum:
    """Fourier-series coefficients ``S_m`` of the ACF; frequency ``m / (2 pi)``."""

    harmonics: np.ndarray
    values: np.ndarray

    @property
    def frequency(self) -> np.ndarray:
        return self.harmonics / TWO_PI


def psd(acf_: CircularACF, n_harmonics: int) -> AngularSpectrum:
    """``S_m = (1/2pi) int R(delta) exp(-i m delta) d delta`` for ``m = 0..n_harmonics``.

    The ACF must sit on :func:`uniform_delta_grid` with at least
    ``2 * n_harmonics`` points; the integral is the exact trapezoid (DFT)
    rule for a periodic function.
    """
    delta = np.asarray(acf_.delta, dtype=float).ravel()
    G = delta.size
    if n_harmonics < 0:
        raise ValueError("n_harmonics must be >= 0")
    if G < max(2 * n_harmonics, 2):
        raise ValueError(f"need at least {2 * n_harmonics} grid points, got {G}")
    if not np.allclose(delta, uniform_delta_grid(G), rtol=0, atol=1e-9):
        raise ValueError("ACF grid must be uniform 2 pi j / G starting at 0")
    coeffs = np.fft.rfft(np.asarray(acf_.values, dtype=float).ravel()) / G
    m = np.arange(n_harmonics + 1)
    return AngularSpectrum(m, coeffs.real[: n_harmonics + 1])


def reconstruct_acf(spectrum_full: np.ndarray, G: int) -> np.ndarray:
    """Inverse of the full ``rfft``-scaled coefficients back on the ``G``-point grid."""
    return np.fft.irfft(np.asarray(spectrum_full) * G, n=G)
