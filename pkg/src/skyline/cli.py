"""``skyline`` command line: parameter sweeps emitted as CSV or JSON tables.

Lengths are meters, densities per square meter (``--lambda``) or per square
kilometer (``--lambda-km2``), and angles on the command line are degrees
unless the flag name says ``rad``.  Exit status is 0 on success, 2 for bad
arguments and 3 when an integral fails to converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from skyline import angular_joint, direction_stats, global_stats, leo_link, mc_engine, tables
from skyline._quad import NonConvergenceError
from skyline.heights import ExponentialHeights, ParetoHeights, parse_height_model
from skyline.urban_field import (
    TruncationError,
    UrbanConfig,
    bias_radius,
    eval_skyline,
    sample_field,
)

log = logging.getLogger("skyline")

KM2 = 1e-6
DEG = math.pi / 180.0

#: column layout of every table, versioned together with tables.SCHEMA_VERSION
COLUMNS = {
    "sample": ["psi_rad", "omega1_rad", "omega2_rad", "omega3_rad"],
    "cdf": ["phi_rad", "cdf_analytic", "cdf_uncapped", "cdf_mc", "mc_stderr"],
    "omega2zero": ["lambda_m2", "l_m", "p_analytic", "p_mc", "mc_stderr"],
    "sup": ["phi_rad", "cdf_sup", "pdf_sup", "cdf_mc", "mc_stderr"],
    "dominant": ["x_m", "height_pdf", "distance_pdf"],
    "joint": ["delta_rad", "joint_cdf", "marginal_product"],
    "equal": ["delta_rad", "p_equal", "p_mc", "mc_stderr"],
    "acf": ["delta_rad", "acf_analytic", "acf_mc", "mc_stderr"],
    "psd": ["harmonic", "frequency", "psd"],
    "leo-visible": ["theta_min_rad", "mean_visible", "open_field"],
    "leo-outage": ["theta_min_rad", "outage_independent", "outage_mc", "mc_stderr"],
    "leo-dual": ["delta_rad", "dual_outage", "independent", "relative_gap"],
    "mask": ["lambda_m2", "mu_inv_m", "mask_rad", "feasible"],
}


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive(name: str, x: float, allow_zero: bool = False):
    if x is None:
        return
    if not math.isfinite(x) or x < 0 or (x == 0 and not allow_zero):
        raise UsageError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {x}")


# --------------------------------------------------------------------------
# argument model


def _add_city(p: argparse.ArgumentParser, lam=1.0, l=1.0, height="exp:1"):
    g = p.add_argument_group("city")
    dens = g.add_mutually_exclusive_group()
    dens.add_argument("--lambda", dest="lam", type=float, default=None,
                      help=f"building density per m^2 (default {lam})")
    dens.add_argument("--lambda-km2", dest="lam_km2", type=float, default=None,
                      help="building density per km^2")
    g.add_argument("--lambdas", type=_floats, default=None,
                   help="comma-separated density sweep per m^2 (where supported)")
    g.add_argument("--l", dest="l", type=float, default=l, help="building arc length (m)")
    hg = g.add_mutually_exclusive_group()
    hg.add_argument("--height", default=None,
                    help=f"height law: exp:<mu>, pareto:<kappa>:<s>, pareto-mm:<kappa>:<mean> "
                         f"(default {height})")
    hg.add_argument("--mu-inv", type=float, default=None,
                    help="mean of exponential heights (m)")
    g.add_argument("--tail-eps", type=float, default=1e-6,
                   help="truncation tail bound for sampled fields")
    p.set_defaults(_lam_default=lam, _height_default=height)


def _add_mc(p, trials=0):
    g = p.add_argument_group("Monte Carlo")
    g.add_argument("--trials", type=int, default=trials, help="MC trials (0 disables MC)")
    g.add_argument("--seed", type=int, default=None, help="master seed (env SKYLINE_SEED)")
    g.add_argument("--threads", type=int, default=1, help="worker processes")
    g.add_argument("--far-field", choices=("auto", "never", "always"), default="auto")


def _add_sky(p, theta_min_deg="0"):
    g = p.add_argument_group("constellation")
    g.add_argument("--h-sat-km", type=float, default=500.0)
    g.add_argument("--n-total", type=float, default=1e4, help="mean satellites on the shell")
    g.add_argument("--theta-min-deg", type=_floats, default=_floats(theta_min_deg),
                   help="elevation mask(s) in degrees, comma-separated")


def _add_io(p: argparse.ArgumentParser, default):
    g = p.add_argument_group("output")
    g.add_argument("--config", default=default,
                   help="JSON file of option values; command-line flags override it")
    g.add_argument("--format", choices=("csv", "json"), default=default,
                   help="output format (default from --out suffix, else csv)")
    g.add_argument("--out", default=default, help="output file (default stdout)")
    g.add_argument("-v", "--verbose", action="store_true", default=default,
                   help="progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyline", description=__doc__.splitlines()[0])
    _add_io(parser, None)
    parser.set_defaults(config=None, format=None, out=None, verbose=False)
    common = argparse.ArgumentParser(add_help=False)
    # suppressed defaults so a subcommand never resets options given before it
    _add_io(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command",
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("sample", help="one skyline trace")
    _add_city(p, lam=0.1, l=5.0)
    _add_mc(p)
    p.add_argument("--grid", type=int, default=720, help="azimuth grid size")
    p.add_argument("--radius", type=float, default=None, help="field radius (m)")

    p = sub.add_parser("cdf", help="CDF of omega_1 in one direction")
    _add_city(p)
    _add_mc(p)
    p.add_argument("--phi-grid", type=int, default=64)

    p = sub.add_parser("omega2zero", help="probability that omega_2 = 0")
    _add_city(p, lam=0.1, l=5.0)
    _add_mc(p)

    p = sub.add_parser("sup", help="law of the all-azimuth maximum")
    _add_city(p)
    _add_mc(p)
    p.add_argument("--phi-grid", type=int, default=64)

    p = sub.add_parser("dominant", help="height and distance marginals of the dominant building")
    _add_city(p)
    p.add_argument("--x-max", type=float, default=None, help="grid end (m)")
    p.add_argument("--points", type=int, default=50)

    p = sub.add_parser("joint", help="joint CDF of two directions versus separation")
    _add_city(p, lam=0.1)
    p.add_argument("--phi-deg", type=float, default=45.0)
    p.add_argument("--delta-step-deg", type=float, default=1.0)

    p = sub.add_parser("equal", help="probability that two directions share omega_1")
    _add_city(p, lam=0.1)
    _add_mc(p)
    p.add_argument("--deltas-deg", type=_floats, default=_floats("0,5,11.25,22.5,45,90,180"))

    for name in ("acf", "psd"):
        p = sub.add_parser(name, help="autocorrelation" if name == "acf" else "angular spectrum")
        _add_city(p, lam=0.1)
        _add_mc(p)
        p.add_argument("--grid", type=int, default=64, help="separations 2 pi j / grid")

    p = sub.add_parser("leo-visible", help="mean number of visible satellites")
    _add_city(p, l=50.0, lam=500 * KM2, height="exp:0.02")
    _add_sky(p, ",".join(str(x) for x in range(0, 90, 5)))

    p = sub.add_parser("leo-outage", help="outage probability versus mask")
    _add_city(p, l=50.0, lam=500 * KM2, height="exp:0.02")
    _add_sky(p, ",".join(str(x) for x in range(5, 90, 5)))
    _add_mc(p)

    p = sub.add_parser("leo-dual", help="two-satellite outage versus azimuth separation")
    _add_city(p, l=25.0, lam=1000 * KM2, height="exp:0.0333333333333")
    p.add_argument("--theta-deg", type=float, default=45.0)
    p.add_argument("--delta-step-deg", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=0.05, help="relative gap for decorrelation")

    p = sub.add_parser("mask", help="largest elevation mask meeting an outage target")
    _add_city(p, l=50.0, lam=500 * KM2, height="exp:0.02")
    _add_sky(p)
    p.add_argument("--target", type=float, default=1e-6)
    p.add_argument("--mu-invs", type=_floats, default=None,
                   help="comma-separated mean heights (m) to sweep")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    if pre.config is None:
        return parser.parse_args(argv)
    try:
        with open(pre.config) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {pre.config}: {exc}")
    if not isinstance(values, dict):
        parser.error("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[pre.command]  # noqa: SLF001
    known = {a.dest: a for a in sub._actions} | {a.dest: a for a in parser._actions}  # noqa: SLF001
    defaults = {}
    for key, val in values.items():
        dest = key.replace("-", "_")
        dest = {"lambda": "lam", "lambda_km2": "lam_km2"}.get(dest, dest)
        if dest not in known or dest in ("command", "help", "config"):
            parser.error(f"unknown config key {key!r} for {pre.command}")
        act = known[dest]
        if act.type is _floats and not isinstance(val, list):
            val = _floats(str(val))
        defaults[dest] = val
    sub.set_defaults(**defaults)
    parser.set_defaults(**{k: v for k, v in defaults.items() if k in ("format", "out")})
    args = parser.parse_args(argv)
    # flags override file values; mutually exclusive pairs must not both survive
    if args.lam is not None and args.lam_km2 is not None:
        if "--lambda" in argv:
            args.lam_km2 = None
        else:
            args.lam = None
    if getattr(args, "height", None) is not None and getattr(args, "mu_inv", None) is not None:
        if "--height" in argv:
            args.mu_inv = None
        else:
            args.height = None
    return args


def _city(args, lam=None, mu_inv=None) -> UrbanConfig:
    if lam is None:
        if args.lam is not None:
            lam = args.lam
        elif args.lam_km2 is not None:
            lam = args.lam_km2 * KM2
        else:
            lam = args._lam_default
    mu_inv = mu_inv if mu_inv is not None else args.mu_inv
    _positive("density", lam, allow_zero=True)
    _positive("arc length", args.l)
    if mu_inv is not None:
        _positive("mean height", mu_inv)
        heights = ExponentialHeights(1.0 / mu_inv)
    else:
        heights = parse_height_model(args.height or args._height_default)
    return UrbanConfig(lam, args.l, heights, tail_epsilon=args.tail_eps)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SKYLINE_SEED")
    if env is None:
        raise UsageError("Monte Carlo needs --seed or SKYLINE_SEED")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SKYLINE_SEED must be an integer, got {env!r}") from None


def _plan(args, **kw) -> mc_engine.McPlan:
    if args.trials < 0 or args.threads < 1:
        raise UsageError("--trials must be >= 0 and --threads >= 1")
    return mc_engine.McPlan(args.trials, _seed(args), workers=args.threads,
                            far_field=args.far_field, **kw)


def _constellation(args, theta_min=0.0) -> leo_link.ConstellationConfig:
    _positive("satellite altitude", args.h_sat_km)
    _positive("satellite count", args.n_total, allow_zero=True)
    return leo_link.ConstellationConfig(h_sat=args.h_sat_km * 1e3, n_total_mean=args.n_total,
                                        theta_min=theta_min)


def _phi_grid(n: int) -> np.ndarray:
    if n < 1:
        raise UsageError("--phi-grid must be >= 1")
    return direction_stats.HALF_PI * np.arange(1, n + 1) / n


def _ecdf_columns(emp, grid):
    if emp is None:
        nan = np.full(len(grid), np.nan)
        return nan, nan
    F = emp.ecdf(grid)
    return F, np.sqrt(F * (1 - F) / emp.count)


def _meta(args, cfg: UrbanConfig | None = None, **extra) -> dict:
    meta = {"table": args.command, "columns_version": 1}
    if cfg is not None:
        meta.update(density_m2=cfg.density, arc_length_m=cfg.arc_length,
                    heights=cfg.heights.spec())
    if getattr(args, "trials", 0):
        meta.update(trials=args.trials, seed=_seed(args))
    meta.update(extra)
    return meta


# --------------------------------------------------------------------------
# commands


def cmd_sample(args):
    cfg = _city(args)
    if args.grid < 4:
        raise UsageError("--grid must be >= 4")
    radius = args.radius
    if radius is None:
        radius = bias_radius(cfg, 1e-3, "disk", max_radius=2000.0)
    field = sample_field(cfg, radius, _seed(args))
    tr = eval_skyline(field, args.grid, k_max=3)
    return tables.from_columns(COLUMNS["sample"], tr.grid, *tr.omega,
                               meta=_meta(args, cfg, radius_m=radius, buildings=len(field),
                                          seed=_seed(args)))


def cmd_cdf(args):
    cfg = _city(args)
    law = direction_stats.DirectionalLaw(cfg)
    phi = _phi_grid(args.phi_grid)
    F = direction_stats.cdf_omega1(law, phi)
    h = cfg.heights
    if isinstance(h, ParetoHeights):
        unc = direction_stats.cdf_omega1_pareto_printed(cfg.density, cfg.arc_length,
                                                         h.shape, h.scale, phi)
    else:
        unc = np.full(len(phi), np.nan)
    emp = None
    if args.trials:
        log.info("cdf: %d trials", args.trials)
        emp = mc_engine.estimate("omega1_at_psi", cfg, _plan(args))
    mc, se = _ecdf_columns(emp, phi)
    return tables.from_columns(COLUMNS["cdf"], phi, F, unc, mc, se, meta=_meta(args, cfg))


def cmd_omega2zero(args):
    lams = args.lambdas or [None]
    rows = []
    for lam in lams:
        cfg = _city(args, lam=lam)
        p = direction_stats.prob_omega2_zero(direction_stats.DirectionalLaw(cfg))
        m = se = math.nan
        if args.trials:
            emp = mc_engine.estimate("omega2_zero_freq", cfg, _plan(args))
            m, se = emp.mean, emp.stderr
        log.info("omega2zero: lambda=%g done", cfg.density)
        rows.append([cfg.density, cfg.arc_length, p, m, se])
    return tables.Table(COLUMNS["omega2zero"], rows, _meta(args, cfg))


def cmd_sup(args):
    cfg = _city(args)
    law = global_stats.GlobalLaw(cfg)
    phi = _phi_grid(args.phi_grid)
    F = global_stats.cdf_sup(law, phi)
    extra = {}
    if isinstance(cfg.heights, ExponentialHeights):
        pdf = global_stats.pdf_sup_exponential(law, phi)
        if cfg.density > 0:
            extra["mean_sup_rad"] = global_stats.mean_sup_exponential(cfg.density,
                                                                      cfg.heights.rate)
    else:
        pdf = np.full(len(phi), np.nan)
    emp = mc_engine.estimate("sup_omega1", cfg, _plan(args)) if args.trials else None
    mc, se = _ecdf_columns(emp, phi)
    if emp is not None:
        extra.update(mean_sup_mc=emp.mean, mean_sup_mc_stderr=emp.stderr)
    return tables.from_columns(COLUMNS["sup"], phi, F, pdf, mc, se,
                               meta=_meta(args, cfg, **extra))


def cmd_dominant(args):
    cfg = _city(args)
    if cfg.density <= 0:
        raise UsageError("density must be > 0")
    law = global_stats.GlobalLaw(cfg)
    x_max = args.x_max or 10.0 * max(cfg.heights.mean(), 1.0 / math.sqrt(cfg.density))
    x = np.linspace(x_max / args.points, x_max, args.points)
    hp = global_stats.marginal_height_dominant(law, x)
    rp = global_stats.marginal_distance_dominant(law, x)
    return tables.from_columns(COLUMNS["dominant"], x, hp, rp, meta=_meta(args, cfg))


def _delta_sweep(step_deg: float) -> np.ndarray:
    if not (0 < step_deg <= 180):
        raise UsageError("--delta-step-deg must lie in (0, 180]")
    n = int(round(180.0 / step_deg))
    return np.linspace(0.0, math.pi, n + 1)


def cmd_joint(args):
    cfg = _city(args)
    phi = args.phi_deg * DEG
    F = float(direction_stats.cdf_omega1(direction_stats.DirectionalLaw(cfg), phi))
    rows = []
    for d in _delta_sweep(args.delta_step_deg):
        pair = angular_joint.RegionPair.from_separation(cfg, d)
        rows.append([d, angular_joint.joint_cdf(pair, phi, phi), F * F])
    return tables.Table(COLUMNS["joint"], rows, _meta(args, cfg, phi_rad=phi))


def cmd_equal(args):
    cfg = _city(args)
    rows = []
    for deg in args.deltas_deg:
        d = deg * DEG
        p = angular_joint.prob_equal(angular_joint.RegionPair.from_separation(cfg, d))
        m = se = math.nan
        if args.trials:
            emp = mc_engine.estimate("equal_event", cfg, _plan(args), delta=d)
            m, se = emp.mean, emp.stderr
        rows.append([d, p, m, se])
    return tables.Table(COLUMNS["equal"], rows, _meta(args, cfg))


def _acf(args):
    cfg = _city(args)
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    delta = angular_joint.uniform_delta_grid(args.grid)
    a = angular_joint.acf(cfg, delta)
    mc = se = np.full(len(delta), np.nan)
    if args.trials:
        if args.grid < 4:
            raise UsageError("Monte Carlo ACF needs --grid >= 4")
        m = angular_joint.acf(cfg, delta, "monte_carlo", plan=_plan(args, grid_size=args.grid))
        mc, se = m.values, m.stderr
    return cfg, a, mc, se


def cmd_acf(args):
    cfg, a, mc, se = _acf(args)
    return tables.from_columns(COLUMNS["acf"], a.delta, a.values, mc, se, meta=_meta(args, cfg))


def cmd_psd(args):
    cfg, a, mc, _ = _acf(args)
    spec = angular_joint.psd(a, args.grid // 2)
    extra = {}
    if args.trials:
        mspec = angular_joint.psd(angular_joint.CircularACF(a.delta, mc, "monte_carlo"),
                                  args.grid // 2)
        extra["psd_mc"] = mspec.values.tolist()
    return tables.from_columns(COLUMNS["psd"], spec.harmonics, spec.frequency, spec.values,
                               meta=_meta(args, cfg, **extra))


def cmd_leo_visible(args):
    cfg = _city(args)
    law = direction_stats.DirectionalLaw(cfg)
    open_law = direction_stats.DirectionalLaw(UrbanConfig(0.0, cfg.arc_length, cfg.heights))
    rows = []
    for deg in args.theta_min_deg:
        c = _constellation(args, deg * DEG)
        rows.append([c.theta_min, leo_link.mean_visible(c, law),
                     leo_link.mean_visible(c, open_law)])
    return tables.Table(COLUMNS["leo-visible"], rows, _meta(args, cfg))


def cmd_leo_outage(args):
    cfg = _city(args)
    law = direction_stats.DirectionalLaw(cfg)
    rows = []
    for deg in args.theta_min_deg:
        c = _constellation(args, deg * DEG)
        m = se = math.nan
        if args.trials:
            emp = mc_engine.estimate("outage_event", cfg, _plan(args), constellation=c)
            m, se = emp.mean, emp.stderr
        rows.append([c.theta_min, leo_link.outage_independent(c, law), m, se])
        log.info("leo-outage: mask %g deg done", deg)
    return tables.Table(COLUMNS["leo-outage"], rows, _meta(args, cfg))


def cmd_leo_dual(args):
    cfg = _city(args)
    theta = args.theta_deg * DEG
    if not (0 < theta < direction_stats.HALF_PI):
        raise UsageError("--theta-deg must lie in (0, 90)")
    deltas = _delta_sweep(args.delta_step_deg)
    base = leo_link.dual_outage_independent(cfg, theta)
    rows = []
    for d in deltas:
        dual = leo_link.dual_outage(angular_joint.RegionPair.from_separation(cfg, d), theta)
        rows.append([d, dual, base, (dual - base) / base if base > 0 else math.nan])
    gaps = np.array([r[3] for r in rows[1:]])
    below = np.nonzero(gaps < args.tolerance)[0]
    angle = float(deltas[1:][below[0]]) if below.size else None
    return tables.Table(COLUMNS["leo-dual"], rows,
                        _meta(args, cfg, theta_rad=theta, tolerance=args.tolerance,
                              decorrelation_angle_rad=angle))


def cmd_mask(args):
    if not (0 < args.target < 1):
        raise UsageError("--target must lie in (0, 1)")
    mus = args.mu_invs or [None]
    lams = args.lambdas or [None]
    rows = []
    c = _constellation(args)
    for lam in lams:
        for mu_inv in mus:
            cfg = _city(args, lam=lam, mu_inv=mu_inv)
            th = leo_link.find_mask(c, direction_stats.DirectionalLaw(cfg), args.target)
            mean_h = cfg.heights.mean()
            rows.append([cfg.density, mean_h, math.nan if th is None else th, th is not None])
    return tables.Table(COLUMNS["mask"], rows, _meta(args, None, target=args.target))


COMMANDS = {
    "sample": cmd_sample,
    "cdf": cmd_cdf,
    "omega2zero": cmd_omega2zero,
    "sup": cmd_sup,
    "dominant": cmd_dominant,
    "joint": cmd_joint,
    "equal": cmd_equal,
    "acf": cmd_acf,
    "psd": cmd_psd,
    "leo-visible": cmd_leo_visible,
    "leo-outage": cmd_leo_outage,
    "leo-dual": cmd_leo_dual,
    "mask": cmd_mask,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="skyline: %(message)s")
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.out and args.out.lower().endswith(".json") else "csv"
    try:
        table = COMMANDS[args.command](args)
        tables.write_table(table, args.out, fmt)
    except NonConvergenceError as exc:
        print(f"skyline: error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, TruncationError, ValueError, NotImplementedError) as exc:
        print(f"skyline {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
