"""Batch entry point: ``sna-lab <subcommand> --config <path> [--out <dir>] [--seed <u64>]``.

Exit codes: 0 success, 1 usage/config/I/O error, 2 budget-limited bracket,
3 verification found a violation (or could not exercise a check).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io, plotting, suite, svg
from .bifurcation import BetaCBracket, find_beta_c, lyapunov
from .boundary_lines import gap_profile, lower_line, upper_line
from .config import RunConfig, bracket_key, load_config
from .dimension import (atom_cloud, box_dimension, dyadic_ladder, graph_cloud, information_dimension,
                        orbit_cloud, sine_graph_cloud, unit_square_cloud)
from .errors import BudgetInconclusive, ConfigError, InsufficientScales, SnaLabError
from .multiscale import Infeasible, certify
from .torus_dynamics import ArctanFamily

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


# ---------------------------------------------------------------------------
# critical parameter and its cache
# ---------------------------------------------------------------------------


def _bracket_dict(b: BetaCBracket) -> dict:
    return {"lo": b.lo, "hi": b.hi, "midpoint": b.midpoint, "estimate": b.estimate,
            "width": b.width, "tol": b.tol, "evaluations": b.evaluations,
            "budget_N": b.budget_N, "m": b.m}


def _cache_path(cfg: RunConfig, out: Path) -> Path:
    base = Path(cfg.cache_dir) if cfg.cache_dir is not None else out
    return base / f"betac-{bracket_key(cfg)}.json"


def _search(cfg: RunConfig) -> BetaCBracket:
    fb = cfg.find_betac
    family = ArctanFamily(cfg.family.a, 0.0, cfg.family.x_lo)
    return find_beta_c(family, cfg.rotation_obj(), fb.tol, fb.budget, fb.m, fb.safety_margin,
                       fb.lo, fb.hi)


def _write_cache(cfg: RunConfig, out: Path, bracket: BetaCBracket) -> Path:
    path = _cache_path(cfg, out)
    path.parent.mkdir(parents=True, exist_ok=True)
    io.write_json(path, {"key": bracket_key(cfg), "a": cfg.family.a, "find_betac": vars(cfg.find_betac),
                         "bracket": _bracket_dict(bracket)})
    return path


def resolve_beta(cfg: RunConfig, requested, out: Path) -> tuple[float, dict]:
    """A block's beta: its own value, else the family's; ``"critical"`` reads the cache."""
    if requested is None:
        requested = cfg.family.beta
    if requested != "critical":
        return float(requested), {"requested": requested, "value": float(requested)}
    path = _cache_path(cfg, out)
    if path.exists():
        cached = io.read_json(path)
        if cached.get("key") != bracket_key(cfg):
            raise ConfigError(f"cache file {path} does not match the current search settings")
        br = cached["bracket"]
        source = "cache"
    else:
        print(f"no cached bracket at {path}; running the search", file=sys.stderr)
        br = _bracket_dict(_search(cfg))
        _write_cache(cfg, out, BetaCBracket(br["lo"], br["hi"], br["tol"], br["evaluations"],
                                            br["budget_N"], br["m"], ()))
        source = "search"
    return float(br["estimate"]), {"requested": "critical", "value": float(br["estimate"]),
                                    "bracket": [br["lo"], br["hi"]], "source": source,
                                    "cache_file": path.name}


def _family(cfg: RunConfig, beta: float) -> ArctanFamily:
    return ArctanFamily(cfg.family.a, beta, cfg.family.x_lo)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_find_betac(cfg: RunConfig, out: Path) -> int:
    status, code = "bracketed", EXIT_OK
    try:
        bracket = _search(cfg)
    except BudgetInconclusive as exc:
        bracket, status, code = exc.bracket, "budget_inconclusive", EXIT_INCONCLUSIVE
    rows = bracket.trace
    io.write_csv(out / "betac_trace.csv", ["step", "beta", "verdict", "collapse_step", "min_gap"],
                 [[r.step for r in rows], [r.beta for r in rows], [r.verdict for r in rows],
                  [r.collapse_step for r in rows], [r.min_gap for r in rows]])
    io.write_json(out / "betac.json", {"config": cfg.to_dict(), "status": status,
                                       "bracket": _bracket_dict(bracket)})
    if code == EXIT_OK:
        _write_cache(cfg, out, bracket)
    print(f"beta_c in [{bracket.lo!r}, {bracket.hi!r}] after {bracket.evaluations} evaluations ({status})")
    return code


def cmd_lines(cfg: RunConfig, out: Path) -> int:
    beta, beta_info = resolve_beta(cfg, cfg.lines.beta, out)
    fmap, rot = _family(cfg, beta), cfg.rotation_obj()
    panels, summary = [], []
    for n in cfg.lines.n:
        gp = gap_profile(upper_line(fmap, rot, n, cfg.lines.m), lower_line(fmap, rot, n, cfg.lines.m))
        th = gp.upper.thetas
        io.write_csv(out / f"lines_n{n}.csv", ["theta", "upper", "lower", "gap"],
                     [th, gp.upper.values, gp.lower.values, gp.gaps])
        panels.append((f"n = {n}", th, gp.upper.values, gp.lower.values))
        summary.append({"n": n, "min_gap": gp.min_gap, "max_gap": gp.max_gap,
                        "argmin_theta": float(th[gp.argmin]), "clamped": gp.lower.clamped})
    svg.write_svg(out / "lines.svg", svg.lines_svg(panels))
    plotting.lines_figure(out / "lines.png", panels)
    io.write_json(out / "lines.json", {"config": cfg.to_dict(), "beta": beta_info, "lines": summary})
    print(f"wrote {len(panels)} line pairs at beta={beta!r}")
    return EXIT_OK


def cmd_lyapunov(cfg: RunConfig, out: Path) -> int:
    lc = cfg.lyapunov
    base, beta_info = resolve_beta(cfg, lc.beta, out)
    beta = base + lc.beta_offset
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta {beta!r} after offset lies outside [0, 1]")
    fmap, rot = _family(cfg, beta), cfg.rotation_obj()
    up = lyapunov(fmap, rot, lc.theta0, 1.0, lc.N, lc.burn_in, 1, lc.n_blocks)
    lo = lyapunov(fmap, rot, lc.theta0, 0.0, lc.N, lc.burn_in, -1, lc.n_blocks)
    result = {
        "config": cfg.to_dict(), "beta": dict(beta_info, offset=lc.beta_offset, evaluated=beta),
        "upper": {"exponent": up.exponent, "stderr": up.stderr, "start_x": 1.0, "direction": 1},
        "lower": {"exponent": lo.exponent, "stderr": lo.stderr, "start_x": 0.0, "direction": -1},
        "signs_separated": bool(up.exponent < -3 * up.stderr and lo.exponent > 3 * lo.stderr),
    }
    io.write_json(out / "lyapunov.json", result)
    print(f"lambda+ = {up.exponent:.6g} +- {up.stderr:.2g}, lambda- = {lo.exponent:.6g} +- {lo.stderr:.2g}")
    return EXIT_OK


def _make_cloud(cfg: RunConfig, out: Path):
    dc = cfg.dimension
    if dc.generator == "unit_square":
        return unit_square_cloud(dc.n_points, cfg.seed), None
    if dc.generator == "sine":
        return sine_graph_cloud(dc.m), None
    if dc.generator == "atom":
        return atom_cloud(dc.n_points), None
    beta, info = resolve_beta(cfg, dc.beta, out)
    fmap, rot = _family(cfg, beta), cfg.rotation_obj()
    if dc.generator == "graph":
        return graph_cloud(fmap, rot, dc.m, dc.N), info
    return orbit_cloud(fmap, rot, dc.n_points, dc.burn_in), info


def cmd_dimension(cfg: RunConfig, out: Path) -> int:
    dc = cfg.dimension
    cloud, beta_info = _make_cloud(cfg, out)
    result = {"config": cfg.to_dict(), "beta": beta_info, "generator": dc.generator,
              "provenance": cloud.provenance, "n_points": len(cloud)}
    fits = []
    try:
        box = box_dimension(cloud, dc.eps_max, dc.eps_min)
        result["box"] = box.to_dict()
        io.write_csv(out / "dimension_box.csv", ["eps", "count"], [box.scales, box.values.astype(np.int64)])
        fits.append(("box", box))
    except InsufficientScales as exc:
        result["box"] = {"error": str(exc)}
    if dc.information:
        ladder = dyadic_ladder(dc.eps_max, dc.eps_min)
        try:
            info = information_dimension(cloud, dc.num_centers, ladder, cfg.seed)
            result["information"] = info.to_dict()
            io.write_csv(out / "dimension_info.csv", ["eps", "mean_log_mu"], [info.scales, info.values])
            fits.append(("information", info))
        except InsufficientScales as exc:
            result["information"] = {"error": str(exc)}
    io.write_json(out / "dimension.json", result)
    svg.write_svg(out / "cloud.svg", svg.cloud_svg(cloud.thetas, cloud.xs, cloud.provenance))
    plotting.cloud_figure(out / "cloud.png", cloud.thetas, cloud.xs, cloud.provenance)
    if fits:
        plotting.scaling_figure(out / "scaling.png", fits)
    slopes = ", ".join(f"{name} slope {fit.slope:.4f}" for name, fit in fits) or "no fit"
    print(f"{dc.generator}: {slopes}")
    return EXIT_OK


def cmd_multiscale(cfg: RunConfig, out: Path) -> int:
    mc = cfg.multiscale
    beta, beta_info = resolve_beta(cfg, mc.beta, out)
    cert = certify(_family(cfg, beta), cfg.rotation_obj(), m=mc.m, max_level=mc.max_level)
    result = {"config": cfg.to_dict(), "beta": beta_info}
    if isinstance(cert, Infeasible):
        result.update({"feasible": False, "constraint": cert.constraint, "detail": cert.detail})
        print(f"infeasible: {cert.constraint} ({cert.detail})")
    else:
        result.update({"feasible": True, **cert.to_dict()})
        held = sum(c.holds for c in cert.conditions)
        print(f"depth {cert.depth}: {held}/{len(cert.conditions)} conditions hold")
    io.write_json(out / "multiscale.json", result)
    return EXIT_OK


def run_verify(cfg: RunConfig, out: Path) -> tuple[list[suite.CheckResult], dict]:
    vc = cfg.verify
    beta, beta_info = resolve_beta(cfg, vc.beta, out)
    fmap, rot = _family(cfg, beta), cfg.rotation_obj()
    checks = [
        suite.check_monotonicity(fmap, rot, vc.N, vc.m, vc.slack),
        suite.check_recurrence(fmap, rot, vc.recurrence_n, vc.m),
        suite.check_inverse_residual(fmap, vc.inverse_samples, cfg.seed),
        suite.check_orbit_roundtrip(fmap, rot, vc.roundtrip_length, vc.roundtrip_samples, cfg.seed),
    ]
    cert = certify(fmap, rot, m=vc.m_regions, max_level=vc.max_level)
    if isinstance(cert, Infeasible):
        checks.append(suite.CheckResult("multiscale_fit", False,
                                        detail={"constraint": cert.constraint, "detail": cert.detail}))
    else:
        regions, k = cert.regions, cert.constants
        checks += [
            suite.check_contraction_count(fmap, rot, regions, k, vc.shadow_n, vc.shadow_samples, cfg.seed),
            suite.check_index_bound(fmap, rot, regions, k, vc.omega_j, vc.omega_n, vc.omega_m,
                                    vc.shadow_samples, cfg.seed),
            suite.check_stabilization(fmap, rot, regions, k, vc.omega_j, vc.omega_n, vc.omega_m),
            suite.check_lipschitz(fmap, rot, regions, k, vc.omega_j, vc.omega_n, vc.omega_m),
        ]
    return checks, beta_info


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    checks, beta_info = run_verify(cfg, out)
    ok = all(c.passed for c in checks)
    io.write_json(out / "verify.json", {"config": cfg.to_dict(), "beta": beta_info, "all_passed": ok,
                                        "checks": [c.to_dict() for c in checks]})
    for c in checks:
        state = "pass" if c.passed else ("vacuous" if c.vacuous else "FAIL")
        print(f"{c.name:18s} {state}")
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {
    "find-betac": (cmd_find_betac, "bracket the critical parameter"),
    "lines": (cmd_lines, "iterated boundary lines: CSV, SVG and PNG"),
    "dimension": (cmd_dimension, "box and information dimension of a point cloud"),
    "multiscale": (cmd_multiscale, "fit constants and report critical regions and conditions"),
    "lyapunov": (cmd_lyapunov, "Lyapunov exponents of the attracting and repelling graphs"),
    "verify": (cmd_verify, "run the property suite; nonzero exit on any failure"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sna-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="run configuration (JSON)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command][0](cfg, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"sna-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SnaLabError) as exc:
        print(f"sna-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
