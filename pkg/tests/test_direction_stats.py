from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from skyline import ExponentialHeights, ParetoHeights, UrbanConfig
from skyline.direction_stats import (
    HALF_PI,
    DirectionalLaw,
    cdf_omega1,
    cdf_omega1_exponential,
    cdf_omega1_pareto_printed,
    cdf_rn,
    dominance_gap,
    joint_pdf_rh,
    pdf_omega1,
    pdf_rn,
    prob_omega2_zero,
)
from skyline.global_stats import GlobalLaw, cdf_sup
from skyline.heights import HeightModel
from skyline.mc_engine import McPlan, estimate
from skyline.urban_field import bias_radius, sample_field, skyline_at


class QuadExponential(HeightModel):
    """Exponential heights that only expose ``sf``/``pdf``, forcing the generic path."""

    def __init__(self, rate):
        self.rate = rate

    def sf(self, x):
        return np.exp(-self.rate * np.maximum(np.asarray(x, dtype=float), 0.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def mean(self):
        return 1.0 / self.rate


def _simpson_cdf(cfg: UrbanConfig, phi: float, n: int = 200_001) -> float:
    """Fixed-step Simpson evaluation of the wedge void exponent."""
    t = math.tan(phi)
    L = cfg.inner_radius
    sf = cfg.heights.sf
    # split at the kinks r t = height breakpoint so each piece is smooth
    cuts = sorted({0.0, L, *(b / t for b in cfg.heights.breakpoints)})
    weight = lambda r: np.where(r < L, 2 * math.pi * r, cfg.arc_length)  # noqa: E731
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        r = np.linspace(a, b, n)
        total += integrate.simpson(weight(r) * sf(r * t), x=r)
    # the tail decays at least like r**-1.5 here, so under r = c / u**4 the
    # integrand vanishes at u = 0
    c = cuts[-1]
    u = np.linspace(0.0, 1.0, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = c / u**4
        g = np.where(u > 0, weight(r) * sf(r * t) * 4 * c / u**5, 0.0)
    total += integrate.simpson(g, x=u)
    return math.exp(-cfg.density * total)


# --------------------------------------------------------------------------
# cdf_omega1


def test_exponential_reference_value(unit_city):
    val = cdf_omega1(DirectionalLaw(unit_city), math.pi / 4)
    assert val == pytest.approx(math.exp(-2 * math.pi * (1 - math.exp(-1 / (2 * math.pi)))),
                                rel=1e-14)
    assert val == pytest.approx(0.39673708349065523, rel=1e-12)


def test_empty_city_never_blocks():
    law = DirectionalLaw(UrbanConfig(0.0, 1.0, ExponentialHeights(1.0)))
    assert cdf_omega1(law, [0.1, 0.7, 1.5]) == pytest.approx([1.0, 1.0, 1.0])


@pytest.mark.parametrize("city", ["unit_city", "pareto_city"])
def test_zero_elevation_is_blocked_almost_surely(city, request):
    law = DirectionalLaw(request.getfixturevalue(city))
    assert cdf_omega1(law, 0.0) == 0.0
    assert cdf_omega1(law, HALF_PI) == 1.0


@pytest.mark.parametrize("phi", [-0.1, HALF_PI + 0.01, math.nan])
def test_rejects_angles_outside_quadrant(unit_city, phi):
    with pytest.raises(ValueError):
        cdf_omega1(DirectionalLaw(unit_city), phi)


def test_uncapped_pareto_value():
    val = cdf_omega1_pareto_printed(1.0, 1.0, 1.5, 1 / 3, math.pi / 4)
    assert math.log(val) == pytest.approx(-1.930, abs=5e-4)
    assert val == pytest.approx(0.14520578359129874, rel=1e-12)
    # denominator kappa**2 - 3 kappa + 2
    assert 1.5**2 - 3 * 1.5 + 2 == pytest.approx(-0.25)


def test_exact_pareto_value(pareto_city):
    val = cdf_omega1(DirectionalLaw(pareto_city), math.pi / 4)
    assert val == pytest.approx(0.3983506910190276, rel=1e-10)


@pytest.mark.parametrize("phi", [0.2, math.pi / 4, 1.2])
@pytest.mark.parametrize("city", ["unit_city", "sparse_city", "pareto_city"])
def test_matches_simpson_oracle(city, phi, request):
    cfg = request.getfixturevalue(city)
    assert cdf_omega1(DirectionalLaw(cfg), phi) == pytest.approx(_simpson_cdf(cfg, phi), abs=1e-6)


@pytest.mark.parametrize("phi", [0.1, 0.6, 1.3])
def test_generic_height_path_matches_closed_form(phi):
    generic = UrbanConfig(0.7, 3.0, QuadExponential(0.8))
    closed = cdf_omega1_exponential(0.7, 3.0, 0.8, phi)
    assert cdf_omega1(DirectionalLaw(generic), phi) == pytest.approx(closed, rel=1e-8)


def test_uncapped_pareto_is_a_lower_bound(pareto_city):
    phi = np.linspace(0.02, 1.55, 60)
    exact = cdf_omega1(DirectionalLaw(pareto_city), phi)
    printed = cdf_omega1_pareto_printed(1.0, 1.0, 1.5, 1 / 3, phi)
    assert np.all(printed <= exact + 1e-15)


densities = st.floats(1e-3, 5.0)
lengths = st.floats(0.1, 50.0)
rates = st.floats(0.05, 5.0)


@settings(max_examples=60, deadline=None)
@given(densities, lengths, rates, st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_exponential_cdf_monotone_in_angle(lam, l, mu, a, b):
    lo, hi = sorted((a, b))
    assert cdf_omega1_exponential(lam, l, mu, lo) <= cdf_omega1_exponential(lam, l, mu, hi)


@settings(max_examples=60, deadline=None)
@given(densities, densities, lengths, rates, st.floats(0.01, 1.5))
def test_exponential_cdf_nonincreasing_in_density(a, b, l, mu, phi):
    lo, hi = sorted((a, b))
    assert cdf_omega1_exponential(hi, l, mu, phi) <= cdf_omega1_exponential(lo, l, mu, phi)


@settings(max_examples=60, deadline=None)
@given(densities, lengths, rates, rates, st.floats(0.01, 1.5))
def test_taller_buildings_block_more(lam, l, a, b, phi):
    slow, fast = sorted((a, b))
    # slower rate means larger mean height
    assert cdf_omega1_exponential(lam, l, slow, phi) <= cdf_omega1_exponential(lam, l, fast, phi)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.1, 1.9), st.floats(0.05, 2.0), st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_pareto_cdf_monotone_in_angle(kappa, lam, a, b):
    lo, hi = sorted((a, b))
    law = DirectionalLaw(UrbanConfig(lam, 2.0, ParetoHeights(kappa, 0.5)))
    f = cdf_omega1(law, [lo, hi])
    assert 0.0 <= f[0] <= f[1] + 1e-15 <= 1.0 + 1e-15


@pytest.mark.parametrize("phi", [0.3, math.pi / 4, 1.2])
def test_long_arcs_approach_the_sup_law(phi):
    mu, lam = 1.0, 0.5
    l = 1e3 / (mu * math.tan(phi))
    cfg = UrbanConfig(lam, l, ExponentialHeights(mu))
    direct = cdf_omega1(DirectionalLaw(cfg), phi)
    sup = cdf_sup(GlobalLaw(cfg), phi)
    assert abs(direct - sup) / sup < 1e-3


@pytest.mark.parametrize("city", ["unit_city", "pareto_city"])
def test_pdf_integrates_and_matches_cdf_slope(city, request):
    law = DirectionalLaw(request.getfixturevalue(city))
    total = integrate.quad(lambda p: pdf_omega1(law, p), 0, HALF_PI, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-7)
    phi = np.linspace(0.2, 1.4, 9)
    h = 1e-5
    fd = (cdf_omega1(law, phi + h) - cdf_omega1(law, phi - h)) / (2 * h)
    assert np.allclose(pdf_omega1(law, phi), fd, rtol=1e-5, atol=1e-8)


# --------------------------------------------------------------------------
# distances and the dominant obstacle


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("lam,l", [(1.0, 1.0), (0.2, 10.0)])
def test_nth_distance_density_normalises(n, lam, l):
    law = DirectionalLaw(UrbanConfig(lam, l, ExponentialHeights(1.0)))
    L = law.config.inner_radius
    f = lambda r: pdf_rn(law, n, r)  # noqa: E731
    total = integrate.quad(f, 0, L, epsabs=1e-13)[0] + integrate.quad(f, L, np.inf, epsabs=1e-13)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_nearest_distance_in_inner_disk_is_rayleigh_like():
    lam = 2.0
    law = DirectionalLaw(UrbanConfig(lam, 10.0, ExponentialHeights(1.0)))
    r = np.linspace(0.01, law.config.inner_radius, 20)
    assert np.allclose(pdf_rn(law, 1, r), 2 * lam * math.pi * r * np.exp(-lam * math.pi * r**2))


@pytest.mark.parametrize("n", [1, 3])
def test_distance_cdf_is_integral_of_density(unit_city, n):
    law = DirectionalLaw(unit_city)
    for r in (0.1, unit_city.inner_radius, 0.9, 4.0):
        num = integrate.quad(lambda x: pdf_rn(law, n, x), 0, r, points=[unit_city.inner_radius]
                             if r > unit_city.inner_radius else None)[0]
        assert cdf_rn(law, n, r) == pytest.approx(num, abs=1e-10)


def test_distance_density_rejects_bad_order(unit_city):
    with pytest.raises(ValueError):
        pdf_rn(DirectionalLaw(unit_city), 0, 1.0)


def _joint_mass(law, region=None):
    """Double integral of the dominant-building density, optionally below a ratio."""
    L = law.config.inner_radius

    def over_r(h):
        f = lambda r: float(joint_pdf_rh(law, r, h))  # noqa: E731
        lo = 0.0 if region is None else h / region
        if region is not None and lo >= L:
            return integrate.quad(f, lo, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
        return (integrate.quad(f, max(lo, 1e-300), L, epsabs=1e-12, epsrel=1e-10)[0]
                + integrate.quad(f, L, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)[0])

    return integrate.quad(over_r, 0, np.inf, epsabs=1e-11, epsrel=1e-9, limit=200)[0]


def test_dominant_direction_building_law_normalises(unit_city):
    assert _joint_mass(DirectionalLaw(unit_city)) == pytest.approx(1.0, abs=1e-6)


def test_dominant_law_agrees_with_directional_cdf(unit_city):
    law = DirectionalLaw(unit_city)
    phi = math.pi / 4
    # omega_1 <= phi  <=>  h / r <= tan(phi)  <=>  r >= h / tan(phi)
    assert _joint_mass(law, region=math.tan(phi)) == pytest.approx(
        cdf_omega1(law, phi), abs=1e-4)


def test_dominant_height_marginal_matches_simulation(unit_city):
    law = DirectionalLaw(unit_city)
    L = unit_city.inner_radius
    radius = bias_radius(unit_city, 1e-5, "wedge")
    heights = []
    for seed in range(4000):
        f = sample_field(unit_city, radius, seed + 10_000, directions=[0.0])
        j = skyline_at(f, [0.0]).argmax[0]
        heights.append(f.h[j])

    def marginal(h):
        g = lambda r: float(joint_pdf_rh(law, r, h))  # noqa: E731
        return integrate.quad(g, 1e-300, L)[0] + integrate.quad(g, L, np.inf, limit=200)[0]

    grid = np.linspace(0.0, 12.0, 241)
    dens = np.array([marginal(h) if h > 0 else 0.0 for h in grid])
    cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
    ks = stats.kstest(heights, lambda x: np.interp(x, grid, cum)).statistic
    assert ks < 0.03


# --------------------------------------------------------------------------
# P[omega_2 = 0]


@pytest.mark.parametrize("lam,l,mu,expected", [
    (1.0, 1.0, 1.0, 0.5278914577714198),
    (0.1, 5.0, 1.0, 0.4998302723),
])
def test_single_visible_building_probability(lam, l, mu, expected):
    val = prob_omega2_zero(DirectionalLaw(UrbanConfig(lam, l, ExponentialHeights(mu))))
    assert val == pytest.approx(expected, abs=2e-9)


@pytest.mark.parametrize("lam,l", [(1.0, 1.0), (0.1, 5.0)])
def test_single_visibility_ignores_height_scale(lam, l):
    vals = [prob_omega2_zero(DirectionalLaw(UrbanConfig(lam, l, ExponentialHeights(mu))))
            for mu in (1.0, 2.0, 0.3)]
    assert max(vals) - min(vals) < 1e-8


def test_single_visibility_sparse_limit():
    """As the city empties the probability rises monotonically towards
    int u exp(-u) / (u + exp(-u)) du, not towards one."""
    vals = [prob_omega2_zero(DirectionalLaw(UrbanConfig(lam, 1.0, ExponentialHeights(1.0))))
            for lam in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2]
    limit = integrate.quad(lambda u: u * math.exp(-u) / (u + math.exp(-u)), 0, np.inf,
                           epsabs=1e-13)[0]
    assert limit == pytest.approx(0.5552284587, abs=1e-9)
    assert vals[-1] < limit
    assert limit - vals[-1] < 1e-4


def test_single_visibility_matches_simulation():
    cfg = UrbanConfig(0.1, 5.0, ExponentialHeights(1.0))
    emp = estimate("omega2_zero_freq", cfg, McPlan(10_000, 2024))
    exact = prob_omega2_zero(DirectionalLaw(cfg))
    assert abs(emp.mean - exact) < 3 * emp.stderr


def test_single_visibility_needs_buildings():
    with pytest.raises(ValueError):
        prob_omega2_zero(DirectionalLaw(UrbanConfig(0.0, 1.0, ExponentialHeights(1.0))))


# --------------------------------------------------------------------------
# exponential versus mean-matched Pareto


def test_dominance_gap_reference_point():
    gap = dominance_gap(math.pi / 4, 1.0, 1.5, 1.0, 1.0)
    assert gap == pytest.approx(0.39673708349065523 - 0.14520578359129874, rel=1e-12)


def test_uncapped_dominance_holds_on_random_cities():
    rng = np.random.default_rng(11)
    phi = np.linspace(0.01, HALF_PI - 0.01, 100)
    for _ in range(20):
        kappa = rng.uniform(1.05, 1.95)
        lam = 10 ** rng.uniform(-3, 0.5)
        l = 10 ** rng.uniform(-0.5, 2)
        gap = dominance_gap(phi, 1.0, kappa, lam, l)
        f_exp = cdf_omega1_exponential(lam, l, 1.0, phi)
        # where both CDFs underflow to 0.0 the gap is 0.0 exactly
        assert np.all(gap >= 0)
        assert np.all(gap[f_exp > 0] > 0)


def test_dominance_gap_vanishes_at_the_ends():
    for phi in (1e-3, HALF_PI - 1e-7):
        assert abs(dominance_gap(phi, 1.0, 1.5, 1.0, 1.0)) < 1e-3
    assert dominance_gap(0.0, 1.0, 1.5, 1.0, 1.0) == 0.0


def test_exact_pareto_law_crosses_the_exponential():
    """With the survival capped at one below the scale, the mean-matched
    Pareto city is less blocked at low angles and more blocked at high ones."""
    phi = np.linspace(0.05, 1.5, 100)
    gap = dominance_gap(phi, 1.0, 1.5, 1.0, 1.0, exact=True)
    assert gap.min() < 0 < gap.max()


def test_dominance_gap_rejects_heavy_or_light_shapes():
    with pytest.raises(ValueError):
        dominance_gap(0.5, 1.0, 2.5, 1.0, 1.0)
