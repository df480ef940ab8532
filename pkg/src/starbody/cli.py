"""Command-line front end for the starbody toolkit.

Subcommands cover the main workflows: radial profiles (``rho``), optimal
bodies (``optimal``), convexity checks, Gibbs sampling, empirical fits,
self-check suites (``verify``), and canned reproduction runs
(``reproduce``).  All outputs are deterministic for a fixed seed: floats
are printed with 17 significant digits, JSON keys are sorted, and files
are written atomically (temp file + rename) so concurrent runs never see
partial output.

Exit codes: 0 success, 2 input or parse error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import density as dn
from . import geometry as ge
from . import gibbs as gb
from . import learn as ln
from . import optimizer as op

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

DENSITY_SHORTHANDS = (
    "gaussian-identity-2d",
    "gmm-eps:<v>",
    "uniform-ball-2d",
    "uniform-l1-2d",
)

# keys a JSON config file may set; values act as defaults, flags override
_CONFIG_COERCE = {
    "seed": int, "grid_n": int, "tol": float, "out": str, "format": str,
    "alpha": float, "bandwidth": float, "density": str, "samples": str,
    "trials": int, "n": int, "family": str, "data": str, "report": str,
    "p": int, "L": int, "iters": int, "step": float, "floor": float,
    "body": str,
}


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _json_text(obj, level: int = 0) -> str:
    """Render obj as JSON with sorted keys and %.17g floats.

    json.dumps cannot control float formatting, so this walks the tree
    itself.  %.17g round-trips every float64 exactly.
    """
    pad = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [
            f"{pad}  {json.dumps(str(k))}: {_json_text(obj[k], level + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        rows = [f"{pad}  {_json_text(v, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return _json_text(obj.tolist(), level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("non-finite value in output")
        return "%.17g" % v
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_atomic_text(path, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_atomic_with(writer, path) -> None:
    """Atomic variant for writers that take a destination path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(obj, out) -> None:
    text = _json_text(obj) + "\n"
    if out:
        _write_atomic_text(out, text)
    else:
        sys.stdout.write(text)


def _meta_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".meta.json")


def _stem_path(out, suffix: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + suffix)


def _boundary_csv_text(body, grid) -> str:
    rho = ge.radial_on_grid(body, grid)
    pts = grid.nodes * rho[:, None]
    rows = ["# x,y"]
    rows.extend("%.17g,%.17g" % (x, y) for x, y in pts)
    return "\n".join(rows) + "\n"


def _svg_text(polylines) -> str:
    """512x512 document; each polyline becomes one closed path."""
    span = max(float(np.abs(np.concatenate(polylines)).max()), 1e-12)
    scale = 240.0 / span
    paths = []
    for poly in polylines:
        cmds = " ".join(
            "%s%.3f %.3f" % ("M" if i == 0 else "L", 256.0 + scale * x, 256.0 - scale * y)
            for i, (x, y) in enumerate(poly)
        )
        paths.append(
            f'<path d="{cmds} Z" fill="none" stroke="black" stroke-width="1.5"/>'
        )
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="512" height="512" '
        'viewBox="0 0 512 512">\n  ' + "\n  ".join(paths) + "\n</svg>\n"
    )


def _body_polyline(body, grid) -> np.ndarray:
    rho = ge.radial_on_grid(body, grid)
    return grid.nodes * rho[:, None]


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------


def _parse_density(name: str, grid_n: int):
    if name == "gaussian-identity-2d":
        return dn.GaussianDensity(np.eye(2))
    if name.startswith("gmm-eps:"):
        return dn.two_gaussian_mixture(float(name[len("gmm-eps:"):]))
    if name == "uniform-ball-2d":
        return dn.UniformOverBody(ge.EllipsoidBody(np.eye(2)), ge.make_grid(2, grid_n))
    if name == "uniform-l1-2d":
        return dn.UniformOverBody(
            ge.DictionaryPolytopeBody(np.eye(2)), ge.make_grid(2, grid_n)
        )
    path = Path(name)
    if path.suffix == ".json":
        return dn.density_from_dict(json.loads(path.read_text()))
    raise ValueError(
        f"unknown density {name!r}; use one of {DENSITY_SHORTHANDS} or a JSON file"
    )


def _load_body(path: str):
    return ge.body_from_json(Path(path).read_text())


def _tolerances(args) -> ge.GeometryTolerances:
    if getattr(args, "tol", None) is None:
        return ge.DEFAULT_TOLERANCES
    if args.tol <= 0:
        raise ValueError("--tol must be positive")
    return dataclasses.replace(ge.DEFAULT_TOLERANCES, quadrature_rel_tol=args.tol)


def _profile_from_args(args):
    """Build a radial profile from --density or --samples."""
    if bool(args.density) == bool(args.samples):
        raise ValueError("exactly one of --density or --samples is required")
    if args.density:
        spec = _parse_density(args.density, args.grid_n)
        grid = ge.make_grid(spec.dim, args.grid_n)
        profile = dn.rho_analytic(spec, grid, alpha=args.alpha, tolerances=_tolerances(args))
        source = {"density": args.density, "kind": "analytic"}
    else:
        samples = dn.SampleSet.from_csv(args.samples)
        if args.alpha != 1.0:
            raise ValueError("empirical profiles support alpha = 1 only")
        grid = ge.make_grid(samples.dim, args.grid_n)
        profile = dn.rho_empirical(samples, grid, bandwidth=args.bandwidth)
        source = {
            "samples": str(args.samples),
            "m": samples.m,
            "bandwidth": args.bandwidth,
            "kind": "empirical",
        }
    return profile, grid, source


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_rho(args) -> int:
    if not args.out:
        raise ValueError("rho requires --out")
    profile, grid, source = _profile_from_args(args)
    _write_atomic_with(profile.to_csv, args.out)
    values = profile.values
    meta = {
        "alpha": args.alpha,
        "dim": grid.dim,
        "grid_n": grid.n,
        "source": source,
        "min_value": float(values.min()),
        "max_value": float(values.max()),
        "max_min_ratio": float(values.max() / values.min()),
    }
    _emit_json(meta, _meta_path(args.out))
    return EXIT_OK


def _cmd_optimal(args) -> int:
    if not args.out:
        raise ValueError("optimal requires --out")
    profile, grid, source = _profile_from_args(args)
    result = op.optimal_body(profile)
    verdict = op.check_convexity(result.k_star, seed=args.seed)
    _write_atomic_text(args.out, _json_text(ge.body_to_dict(result.k_star)) + "\n")
    if grid.dim == 2:
        _write_atomic_text(
            _stem_path(args.out, ".boundary.csv"),
            _boundary_csv_text(result.k_star, grid),
        )
        if args.format == "svg":
            _write_atomic_text(
                _stem_path(args.out, ".boundary.svg"),
                _svg_text([_body_polyline(result.k_star, grid)]),
            )
    meta = {
        "alpha": result.alpha,
        "achieved_risk": result.achieved_risk,
        "volume_check": result.volume_check,
        "source": source,
        "convexity": verdict.to_dict(),
    }
    _emit_json(meta, _meta_path(args.out))
    return EXIT_OK


def _cmd_convexity(args) -> int:
    body = _load_body(args.body)
    report = op.check_convexity(body, trials=args.trials, seed=args.seed)
    _emit_json(report.to_dict(), args.out)
    return EXIT_OK


def _cmd_gibbs_sample(args) -> int:
    if not args.out:
        raise ValueError("gibbs-sample requires --out")
    if args.n < 1:
        raise ValueError("--n must be at least 1")
    body = _load_body(args.body)
    grid = ge.make_grid(body.dim, args.grid_n)
    samples = gb.sample_gibbs(body, args.n, seed=args.seed, grid=grid)
    _write_atomic_with(samples.to_csv, args.out)
    return EXIT_OK


_FAMILY_ALIASES = {
    "ellipsoid": "ellipsoid",
    "dictionary": "dictionary",
    "union": "union_ellipsoids",
    "union_ellipsoids": "union_ellipsoids",
}


def _cmd_fit(args) -> int:
    if not args.out:
        raise ValueError("fit requires --out")
    samples = dn.SampleSet.from_csv(args.data)
    cfg = ln.FitConfig(
        family=_FAMILY_ALIASES[args.family],
        max_iters=args.iters,
        step_size=args.step,
        inner_width_floor=args.floor,
        seed=args.seed,
        p=args.p,
        L=args.L,
    )
    report = ln.fit(samples, cfg)
    _write_atomic_text(args.out, _json_text(ge.body_to_dict(report.body)) + "\n")
    if args.report:
        _emit_json(report.to_dict(), args.report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------


def _random_star_body(rng, grid, n_modes: int = 4, base: float = 1.0):
    theta = grid.angles()
    rho = np.full(grid.n, base)
    for k in range(1, n_modes + 1):
        rho += (rng.uniform(-0.35, 0.35) / k) * np.cos(k * theta + rng.uniform(0, 2 * np.pi))
    return ge.RadialGridBody(grid, np.clip(rho, 0.25, None))


def _verify_lutwak(seed: int, grid_n: int):
    grid = ge.make_grid(2, grid_n)
    rng = np.random.default_rng(seed)
    d = grid.dim
    min_margin = math.inf
    max_dilate_residual = 0.0
    for trial in range(100):
        k = _random_star_body(rng, grid)
        l = _random_star_body(rng, grid)
        lhs = ge.dual_mixed_volume(k, l, -1.0, grid) ** d
        rhs = ge.volume(k, grid) ** -1 * ge.volume(l, grid) ** (d + 1)
        min_margin = min(min_margin, lhs - rhs)
        if trial < 10:
            c = rng.uniform(0.5, 2.0)
            dk = ge.dilate(k, c)
            dlhs = ge.dual_mixed_volume(k, dk, -1.0, grid) ** d
            drhs = ge.volume(k, grid) ** -1 * ge.volume(dk, grid) ** (d + 1)
            max_dilate_residual = max(max_dilate_residual, abs(dlhs - drhs) / drhs)
    passed = min_margin >= -1e-6 and max_dilate_residual <= 1e-6
    return passed, {
        "suite": "lutwak",
        "pairs": 100,
        "min_margin": min_margin,
        "max_dilate_residual": max_dilate_residual,
        "passed": passed,
    }


def _verify_gibbs(seed: int, grid_n: int):
    grid = ge.make_grid(2, grid_n)
    rng = np.random.default_rng(seed)
    body = _random_star_body(rng, grid)
    n = 100_000
    samples = gb.sample_gibbs(body, n, seed=seed + 1, grid=grid)
    ks = gb.gauge_ks_statistic(body, samples)
    ks_bound = 1.63 / math.sqrt(n)
    exact = math.exp(gb.log_normalizer(body, grid))
    est, se = gb.mc_normalizer_estimate(body, grid, n=200_000, seed=seed + 2)
    z_err = abs(est - exact) / exact
    z_tol = max(4.0 * se / exact, 0.02)
    passed = ks < ks_bound and z_err <= z_tol
    return passed, {
        "suite": "gibbs",
        "n": n,
        "ks_statistic": ks,
        "ks_bound": ks_bound,
        "normalizer_exact": exact,
        "normalizer_estimate": est,
        "normalizer_rel_error": z_err,
        "normalizer_tolerance": z_tol,
        "passed": passed,
    }


def _verify_lipschitz(seed: int, grid_n: int):
    grid = ge.make_grid(2, grid_n)
    rng = np.random.default_rng(seed)
    r = 0.5
    worst = -math.inf
    for _ in range(50):
        # well conditioned pair: radial functions bounded below by r
        k = _random_star_body(rng, grid, base=1.1)
        l = _random_star_body(rng, grid, base=1.1)
        k = ge.RadialGridBody(grid, np.clip(ge.radial_on_grid(k, grid), r, None))
        l = ge.RadialGridBody(grid, np.clip(ge.radial_on_grid(l, grid), r, None))
        delta = ge.radial_distance(k, l, grid)
        x = rng.uniform(-1.5, 1.5, size=(20, 2))
        y = x + rng.uniform(-0.5, 0.5, size=(20, 2))
        lhs = np.abs(k.gauge_many(x) - l.gauge_many(y))
        bound = delta / r**2 + np.linalg.norm(x - y, axis=1) / r
        worst = max(worst, float((lhs - bound).max()))
    passed = worst <= 1e-6
    return passed, {
        "suite": "lipschitz",
        "quadruples": 1000,
        "worst_violation": worst,
        "slack": 1e-6,
        "passed": passed,
    }


def _verify_noise(seed: int, grid_n: int):
    grid = ge.make_grid(2, grid_n)
    rng = np.random.default_rng(seed)
    bodies = []
    for _ in range(10):
        axes = rng.uniform(0.6, 1.8, size=2)
        q = _random_rotation(rng)
        bodies.append(ge.EllipsoidBody(q @ np.diag(axes) @ q.T))
    spec = dn.GaussianDensity(np.eye(2))
    noise = dn.GaussianDensity(np.eye(2))
    report = ln.noise_robustness(
        spec, bodies, [0.05, 0.1, 0.2, 0.5], noise, m=20_000, seed=seed, r=0.5, grid=grid
    )
    passed = all(report.within_bound)
    return passed, {"suite": "noise", "passed": passed, "report": report.to_dict()}


def _random_rotation(rng) -> np.ndarray:
    a = rng.uniform(0, 2 * np.pi)
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def _verify_mixture(seed: int, grid_n: int):
    grid = ge.make_grid(2, grid_n)
    rng = np.random.default_rng(seed)
    d, alpha = grid.dim, 1.0
    worst_additivity = 0.0
    worst_quadrature = 0.0
    for eps in (0.1, 0.35, 0.8):
        mix = dn.two_gaussian_mixture(eps)
        rho_mix = dn.rho_analytic(mix, grid, alpha=alpha).values
        # the (d+alpha) power of the mixture profile is the weighted sum of
        # the component powers
        combined = np.zeros(grid.n)
        for w, comp in zip(mix.weights, mix.components):
            combined += w * dn.rho_analytic(comp, grid, alpha=alpha).values ** (d + alpha)
        worst_additivity = max(
            worst_additivity,
            float(np.abs(rho_mix ** (d + alpha) - combined).max() / combined.max()),
        )
        # independent quadrature path on a few random nodes
        for idx in rng.integers(0, grid.n, size=3):
            u = grid.nodes[idx]
            moment = dn.radial_moment_quadrature(
                lambda rr: mix.pdf(np.asarray(rr)[:, None] * u), d + alpha, 40.0
            )
            worst_quadrature = max(
                worst_quadrature,
                abs(moment ** (1.0 / (d + alpha)) - rho_mix[idx]) / rho_mix[idx],
            )
    passed = worst_additivity < 1e-6 and worst_quadrature < 1e-6
    return passed, {
        "suite": "mixture",
        "worst_additivity_residual": worst_additivity,
        "worst_quadrature_residual": worst_quadrature,
        "passed": passed,
    }


VERIFY_SUITES = {
    "lutwak": _verify_lutwak,
    "gibbs": _verify_gibbs,
    "lipschitz": _verify_lipschitz,
    "noise": _verify_noise,
    "mixture": _verify_mixture,
}


def _cmd_verify(args) -> int:
    passed, report = VERIFY_SUITES[args.suite](args.seed, args.grid_n)
    _emit_json(report, args.out)
    return EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# reproduce figures
# ---------------------------------------------------------------------------


def _reproduce_l2_supports(args) -> int:
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    grid = ge.make_grid(2, args.grid_n)
    theta = grid.angles()
    choices = {
        "const": np.full(grid.n, 0.4),
        "wiggle3": 0.7 + 0.25 * np.cos(3 * theta),
        "wiggle5": 0.6 + 0.2 * np.sin(5 * theta) + 0.1 * np.cos(2 * theta),
        "lobe": 0.9 + 0.35 * np.cos(theta + 1.0),
    }
    summary = {}
    for name, f_values in choices.items():
        region = dn.AnnularRegion(f_values, grid)
        profile = region.analytic_profile(alpha=1.0)
        base = str(outdir / f"l2_supports_{name}")
        _write_atomic_with(profile.to_csv, base + ".profile.csv")
        _write_atomic_text(base + ".inner.csv", _boundary_csv_text(region.inner, grid))
        _write_atomic_text(base + ".outer.csv", _boundary_csv_text(region.outer, grid))
        _write_atomic_text(
            base + ".svg",
            _svg_text(
                [_body_polyline(region.inner, grid), _body_polyline(region.outer, grid)]
            ),
        )
        values = profile.values
        ratio = float(values.max() / values.min())
        summary[name] = {
            "mean": float(values.mean()),
            "max_min_ratio": ratio,
            "constant_within_2pct": ratio <= 1.02,
        }
    _emit_json(summary, outdir / "l2_supports_summary.json")
    return EXIT_OK


def _reproduce_gmm_bodies(args) -> int:
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    grid = ge.make_grid(2, args.grid_n)
    summary = {}
    for eps in (0.01, 0.1, 0.25, 0.75):
        profile = op.gmm_profile(eps, grid)
        result = op.optimal_body(profile)
        verdict = op.check_convexity(result.k_star, seed=args.seed)
        base = str(outdir / f"gmm_body_eps_{eps}")
        _write_atomic_text(base + ".json", _json_text(ge.body_to_dict(result.k_star)) + "\n")
        _write_atomic_text(base + ".boundary.csv", _boundary_csv_text(result.k_star, grid))
        _write_atomic_text(base + ".svg", _svg_text([_body_polyline(result.k_star, grid)]))
        summary[str(eps)] = {
            "is_convex": verdict.is_convex,
            "margin": verdict.margin,
            "achieved_risk": result.achieved_risk,
        }
    _emit_json(summary, outdir / "gmm_bodies_summary.json")
    return EXIT_OK


def _reproduce_gmm_critical_eps(args) -> int:
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    grid = ge.make_grid(2, args.grid_n)
    record = []
    eps_c = op.critical_epsilon_gmm(grid, record=record)
    payload = {
        "eps_critical": eps_c,
        "expected_bracket": [0.30, 0.45],
        "in_expected_bracket": 0.30 < eps_c < 0.45,
        "trace": [
            {"eps": e, "margin": m, "is_convex": c} for e, m, c in record
        ],
    }
    _emit_json(payload, outdir / "gmm_critical_eps.json")
    return EXIT_OK


REPRODUCE_FIGURES = {
    "l2-supports": _reproduce_l2_supports,
    "gmm-bodies": _reproduce_gmm_bodies,
    "gmm-critical-eps": _reproduce_gmm_critical_eps,
}


def _cmd_reproduce(args) -> int:
    return REPRODUCE_FIGURES[args.figure](args)


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed")
    common.add_argument(
        "--grid-n", type=int, default=1024, dest="grid_n", help="angular grid size"
    )
    common.add_argument("--tol", type=float, default=None, help="quadrature tolerance")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument(
        "--format", choices=["json", "csv", "svg"], default="json",
        help="extra output format where applicable",
    )
    common.add_argument("--config", default=None, help="JSON file with default flags")

    parser = argparse.ArgumentParser(
        prog="starbody", description="Star-body densities, optimal bodies, and fits."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rho = sub.add_parser("rho", parents=[common], help="radial profile to CSV")
    p_opt = sub.add_parser("optimal", parents=[common], help="optimal body to JSON")
    for p in (p_rho, p_opt):
        p.add_argument("--density", default=None, help="density shorthand or JSON file")
        p.add_argument("--samples", default=None, help="sample CSV path")
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--bandwidth", type=float, default=dn.DEFAULT_BANDWIDTH)

    p_cvx = sub.add_parser("convexity", parents=[common], help="convexity verdict")
    p_cvx.add_argument("--body", required=True, help="body JSON path")
    p_cvx.add_argument("--trials", type=int, default=512)

    p_gs = sub.add_parser("gibbs-sample", parents=[common], help="draw Gibbs samples")
    p_gs.add_argument("--body", required=True, help="body JSON path")
    p_gs.add_argument("--n", type=int, default=1000)

    p_fit = sub.add_parser("fit", parents=[common], help="fit a body to samples")
    p_fit.add_argument("--family", choices=sorted(_FAMILY_ALIASES), default="ellipsoid")
    p_fit.add_argument("--data", required=True, help="sample CSV path")
    p_fit.add_argument("--report", default=None, help="risk report JSON path")
    p_fit.add_argument("--p", type=int, default=None)
    p_fit.add_argument("--L", type=int, default=None)
    p_fit.add_argument("--iters", type=int, default=60)
    p_fit.add_argument("--step", type=float, default=0.5)
    p_fit.add_argument("--floor", type=float, default=1e-3)

    p_ver = sub.add_parser("verify", parents=[common], help="run a self-check suite")
    p_ver.add_argument("suite", choices=sorted(VERIFY_SUITES))

    p_rep = sub.add_parser("reproduce", parents=[common], help="canned figure runs")
    p_rep.add_argument("figure", choices=sorted(REPRODUCE_FIGURES))

    return parser


def _apply_config(args, argv) -> None:
    """Merge --config JSON into args; explicit flags keep priority."""
    if not args.config:
        return
    conf = json.loads(Path(args.config).read_text())
    if not isinstance(conf, dict):
        raise ValueError("config file must hold a JSON object")
    for key, value in conf.items():
        dest = str(key).replace("-", "_")
        if dest not in _CONFIG_COERCE:
            raise ValueError(f"unknown config key {key!r}")
        if not hasattr(args, dest):
            continue  # valid key, but not for this subcommand
        flag = "--" + dest.replace("_", "-")
        given = any(tok == flag or tok.startswith(flag + "=") for tok in argv)
        if not given:
            setattr(args, dest, None if value is None else _CONFIG_COERCE[dest](value))


DISPATCH = {
    "rho": _cmd_rho,
    "optimal": _cmd_optimal,
    "convexity": _cmd_convexity,
    "gibbs-sample": _cmd_gibbs_sample,
    "fit": _cmd_fit,
    "verify": _cmd_verify,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code) if exc.code else EXIT_OK
    try:
        _apply_config(args, argv)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"starbody: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return DISPATCH[args.command](args)
    except ge.NumericalFailure as exc:
        print(f"starbody: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"starbody: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
