"""Brute-force Monte Carlo estimation of skyline statistics.

Each trial samples a fresh city (and, for link statistics, a constellation)
from its own counter-derived generator, so a run is a pure function of
``(statistic, config, plan)``: results are identical for any worker count.

Fields are truncated at a radius chosen so that the probability that the
truncation changes a trial's outcome stays below ``plan.truncation_eps``.
Where that radius is out of reach (heavy-tailed heights) the directional
maximum can instead be completed by :func:`~skyline.urban_field.far_field_max`,
which samples the exceedances beyond the inner disk exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import stats

from skyline import leo_link
from skyline.rng import derive_seed, make_rng
from skyline.urban_field import (
    TruncationError,
    UrbanConfig,
    azimuth_grid,
    bias_radius,
    global_sup,
    sample_field,
    skyline_at,
    far_field_max,
)

STATISTICS = (
    "omega1_at_psi",
    "omega2_zero_freq",
    "sup_omega1",
    "dominant_rh",
    "joint_omega_pair",
    "acf_grid",
    "visible_count",
    "outage_event",
    "equal_event",
)


@dataclass(frozen=True)
class McPlan:
    """How to run an estimate.

    Attributes
    ----------
    trials : int
    master_seed : int
    grid_size : int
        Azimuth grid for trace statistics (``acf_grid``).
    truncation_eps : float
        Bound on the per-trial probability that truncation alters the result.
    far_field : {"auto", "never", "always"}
        Use the exact far-field closure for ``omega1_at_psi``; ``"auto"``
        does so only when the truncated field would exceed ``max_buildings``.
    max_buildings : float
        Largest expected building count per trial for brute-force sampling.
    workers : int
        Process count; never changes the results.
    chunk : int
        Trials per work unit.
    """

    trials: int
    master_seed: int
    grid_size: int = 360
    truncation_eps: float = 1e-5
    far_field: str = "auto"
    max_buildings: float = 2e5
    workers: int = 1
    chunk: int = 500

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.master_seed is None:
            raise ValueError("a master seed is required")
        if self.far_field not in ("auto", "never", "always"):
            raise ValueError(f"far_field must be auto, never or always, got {self.far_field!r}")
        if not (0 < self.truncation_eps < 1):
            raise ValueError("truncation_eps must lie in (0, 1)")
        if self.workers < 1 or self.chunk < 1:
            raise ValueError("workers and chunk must be >= 1")
        if self.grid_size < 4:
            raise ValueError("grid_size must be >= 4")

    def seeds(self) -> np.ndarray:
        return np.array([derive_seed(self.master_seed, i) for i in range(self.trials)],
                        dtype=np.uint64)


@dataclass(frozen=True)
class EmpiricalLaw:
    """Per-trial samples (in trial order) with summary statistics.

    ``values`` has shape ``(n,)`` for scalar statistics and ``(n, d)`` for
    vector ones; moments are taken column-wise.
    """

    statistic: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.values.shape[0])

    @property
    def sorted(self) -> np.ndarray:
        return np.sort(self.values, axis=0)

    @property
    def mean(self):
        m = np.mean(self.values, axis=0)
        return float(m) if np.ndim(m) == 0 else m

    @property
    def variance(self):
        v = np.var(self.values, axis=0, ddof=1) if self.count > 1 else np.zeros_like(
            np.mean(self.values, axis=0))
        return float(v) if np.ndim(v) == 0 else v

    @property
    def stderr(self):
        se = np.sqrt(np.asarray(self.variance) / self.count)
        return float(se) if np.ndim(se) == 0 else se

    def ecdf(self, x):
        """Right-continuous empirical CDF of a scalar statistic."""
        if self.values.ndim != 1:
            raise ValueError("ecdf needs a scalar statistic")
        x = np.asarray(x, dtype=float)
        val = np.searchsorted(self.sorted, x, side="right") / self.count
        return float(val) if val.ndim == 0 else val


def ks_distance(emp: EmpiricalLaw, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the samples and an analytic CDF."""
    if emp.values.ndim != 1:
        raise ValueError("KS distance needs a scalar statistic")
    return float(stats.kstest(emp.values, lambda x: np.asarray(cdf(x), dtype=float)).statistic)


def dkw_epsilon(n: int, alpha: float = 0.05) -> float:
    """Half-width of the DKW confidence band for an n-sample ECDF."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


# --------------------------------------------------------------------------
# trial kernels


@dataclass(frozen=True)
class _Job:
    statistic: str
    config: UrbanConfig
    radius: float
    params: dict


def _psi(params) -> float:
    return float(params.get("psi", 0.0))


def _pair(params) -> np.ndarray:
    psis = params.get("psis")
    if psis is None:
        psis = (0.0, float(params.get("delta", 0.0)))
    return np.asarray(psis, dtype=float)


def _k_omega1(job: _Job, rng):
    cfg = job.config
    psi = _psi(job.params)
    if job.params.get("closure"):
        f = sample_field(cfg, cfg.inner_radius, rng, directions=[psi])
        near = skyline_at(f, [psi]).omega[0, 0]
        far = math.atan(far_field_max(cfg, cfg.inner_radius, rng, 1)[0])
        return max(near, far)
    f = sample_field(cfg, job.radius, rng, directions=[psi])
    return skyline_at(f, [psi]).omega[0, 0]


def _k_omega2_zero(job: _Job, rng):
    psi = _psi(job.params)
    f = sample_field(job.config, job.radius, rng, directions=[psi])
    return float(skyline_at(f, [psi], k_max=2).omega[1, 0] == 0.0)


def _k_sup(job: _Job, rng):
    return global_sup(sample_field(job.config, job.radius, rng))[0]


def _k_dominant(job: _Job, rng):
    _, b = global_sup(sample_field(job.config, job.radius, rng))
    return (np.nan, np.nan) if b is None else (b.r, b.h)


def _pair_trace(job: _Job, rng):
    psis = _pair(job.params)
    f = sample_field(job.config, job.radius, rng, directions=psis)
    return skyline_at(f, psis)


def _k_joint(job: _Job, rng):
    return tuple(_pair_trace(job, rng).omega[0])


def _k_equal(job: _Job, rng):
    a = _pair_trace(job, rng).argmax
    return float(a[0] >= 0 and a[0] == a[1])


def _k_acf(job: _Job, rng):
    G = job.params["grid_size"]
    grid = azimuth_grid(G)
    f = sample_field(job.config, job.radius, rng, directions=grid)
    w = skyline_at(f, grid).omega[0]
    # circular lag products, averaged over the grid
    spec = np.fft.rfft(w)
    return np.fft.irfft(spec * np.conj(spec), n=G) / G


def _k_visible(job: _Job, rng):
    return leo_link.constellation_trial(job.params["constellation"], job.config,
                                        job.radius, rng)[1]


def _k_outage(job: _Job, rng):
    return float(_k_visible(job, rng) == 0)


_KERNELS: dict[str, Callable[[_Job, Any], Any]] = {
    "omega1_at_psi": _k_omega1,
    "omega2_zero_freq": _k_omega2_zero,
    "sup_omega1": _k_sup,
    "dominant_rh": _k_dominant,
    "joint_omega_pair": _k_joint,
    "acf_grid": _k_acf,
    "visible_count": _k_visible,
    "outage_event": _k_outage,
    "equal_event": _k_equal,
}


def _wedge_radius(cfg: UrbanConfig, plan: McPlan, n_dir: int) -> float:
    return max(bias_radius(cfg, plan.truncation_eps / n_dir, "wedge"), cfg.inner_radius)


def _prepare(statistic: str, config: UrbanConfig, plan: McPlan, params: dict) -> _Job:
    params = dict(params)
    if statistic in ("omega1_at_psi", "omega2_zero_freq"):
        closure = plan.far_field == "always"
        radius = config.inner_radius
        if not closure:
            try:
                radius = _wedge_radius(config, plan, 1)
            except TruncationError:
                radius = math.inf
            expected = config.density * config.arc_length * radius
            if not math.isfinite(expected) or expected > plan.max_buildings:
                if plan.far_field == "never" or statistic == "omega2_zero_freq":
                    raise TruncationError(
                        f"{statistic}: truncated field needs {expected:.3g} buildings per "
                        f"trial (limit {plan.max_buildings:.3g})")
                closure = True
                radius = config.inner_radius
        params["closure"] = closure
    elif statistic in ("sup_omega1", "dominant_rh"):
        radius = max(bias_radius(config, plan.truncation_eps, "disk"), 0.0)
    elif statistic in ("joint_omega_pair", "equal_event"):
        radius = _wedge_radius(config, plan, 2)
    elif statistic == "acf_grid":
        params.setdefault("grid_size", plan.grid_size)
        radius = _wedge_radius(config, plan, params["grid_size"])
    elif statistic in ("visible_count", "outage_event"):
        c = params.get("constellation")
        if not isinstance(c, leo_link.ConstellationConfig):
            raise ValueError(f"{statistic} needs constellation=ConstellationConfig(...)")
        radius = leo_link.outage_radius(c, config)
    else:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    return _Job(statistic, config, float(radius), params)


def _run_chunk(job: _Job, seeds: np.ndarray) -> list:
    kernel = _KERNELS[job.statistic]
    return [kernel(job, make_rng(int(s))) for s in seeds]


def estimate(statistic: str, config: UrbanConfig, plan: McPlan, **params) -> EmpiricalLaw:
    """Run ``plan.trials`` independent trials of ``statistic``.

    Parameters
    ----------
    statistic : str
        One of :data:`STATISTICS`.
    config : UrbanConfig
    plan : McPlan
    **params
        ``psi`` (omega1_at_psi, omega2_zero_freq), ``psis`` or ``delta``
        (joint_omega_pair, equal_event), ``grid_size`` (acf_grid) and
        ``constellation`` (visible_count, outage_event).
    """
    if statistic not in _KERNELS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    job = _prepare(statistic, config, plan, params)
    seeds = plan.seeds()
    chunks = [seeds[i:i + plan.chunk] for i in range(0, len(seeds), plan.chunk)]
    if plan.workers == 1 or len(chunks) == 1:
        parts = [_run_chunk(job, ch) for ch in chunks]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            parts = list(pool.map(_run_chunk, [job] * len(chunks), chunks))
    values = np.asarray([v for part in parts for v in part], dtype=float)
    meta = {"radius": job.radius, "master_seed": plan.master_seed,
            "closure": bool(job.params.get("closure", False))}
    return EmpiricalLaw(statistic, values, meta)


def acf_mc(config: UrbanConfig, plan: McPlan, delta) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo ACF and its standard error at separations ``delta``.

    Separations must be multiples of ``2 pi / plan.grid_size``.
    """
    G = plan.grid_size
    delta = np.asarray(delta, dtype=float)
    lag = delta * G / (2 * math.pi)
    idx = np.rint(lag).astype(int)
    if np.any(np.abs(lag - idx) > 1e-6):
        raise ValueError(f"separations must be multiples of 2 pi / {G}")
    emp = estimate("acf_grid", config, plan, grid_size=G)
    return np.asarray(emp.mean)[idx % G], np.asarray(emp.stderr)[idx % G]
