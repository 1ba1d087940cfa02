"""``braneflow`` command line: verify, field, evolve, converge, ss.

Every RunConfig key is also a flag (``--u-star 1.5``, ``--field-r 0,-2``).
Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import io
from .branes import TargetBrane, convergence_run, evolve_cloud, seed_semicircles, theta_gap
from .config import ConfigError, RunConfig
from .flow import STATUS_NAMES, IntegratorConfig, field_grid
from .hamiltonian import HamiltonianSpec, hamiltonian_array
from .ss_model import find_stable_intersection, ss_convergence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def make_spec(cfg: RunConfig, perturb_f: float = 0.0) -> HamiltonianSpec:
    if cfg.kind == "paper":
        return HamiltonianSpec.paper(perturb_f=perturb_f)
    if perturb_f:
        raise ConfigError("--perturb-f only applies to kind = paper")
    return HamiltonianSpec.model_Rv() if cfg.kind == "model_Rv" else HamiltonianSpec.model_v()


def integrator(cfg: RunConfig, t_end: float, times) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_step=cfg.max_step, t_end=t_end, snapshot_times=list(times))


def _tag(x: float) -> str:
    return f"{x:g}".replace("-", "m").replace(".", "p")


# ---------------------------------------------------------------------------
# predicates evaluated on emitted CSV files


def field_direction_deviation(csv_path: Path) -> float:
    """Largest angle between the (du, dv) field and +u over a field CSV."""
    rows = io.read_csv(csv_path)
    return max(abs(math.atan2(float(r["dv"]), float(r["du"]))) for r in rows)


def seed_predicate(csv_path: Path, u_star: float) -> bool:
    rows = io.read_csv(csv_path)
    return all(float(r["u"]) == -u_star and float(r["theta_lift"]) == 0.0 for r in rows)


def window_theta_coverage(csv_path: Path, window: tuple[float, float]) -> float | None:
    """Arc length of the fiber circle covered by window points: 2 pi minus the largest gap."""
    th = [float(r["theta"]) for r in io.read_csv(csv_path) if window[0] <= float(r["u"]) <= window[1]]
    if not th:
        return None
    return 2 * math.pi - theta_gap(np.array(th))


def slice_height_error(csv_path: Path) -> float | None:
    rows = io.read_csv(csv_path)
    if not rows:
        return None
    return max(abs(float(r["r"]) - float(r["r0"])) for r in rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(cfg: RunConfig, args) -> int:
    from .verify import run_checks

    spec = make_spec(cfg, args.perturb_f)
    results = run_checks(spec, only=args.only)
    failed = [r for r in results if not r.passed]
    if args.json:
        payload = {
            "schema_version": io.SCHEMA_VERSION,
            "kind": cfg.kind,
            "perturb_f": args.perturb_f,
            "n_checks": len(results),
            "n_failed": len(failed),
            "failed": [r.name for r in failed],
            "checks": [vars(r) for r in results],
        }
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(f"{r.module}.{r.name}") for r in results)
        for r in results:
            flag = "PASS" if r.passed else "FAIL"
            print(f"{flag}  {f'{r.module}.{r.name}':<{width}}  {r.seconds:6.2f}s  {r.detail}")
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        if failed:
            print("failed: " + ", ".join(r.name for r in failed))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_field(cfg: RunConfig, args) -> dict:
    spec = make_spec(cfg)
    out = Path(cfg.out_dir)
    report = {"kind": cfg.kind, "n": cfg.field_n, "bounds": list(cfg.field_bounds), "files": [], "direction_deviation": {}}
    for r in cfg.field_r:
        grid = field_grid(spec, r, tuple(cfg.field_bounds), cfg.field_n)
        stem = f"field_{cfg.kind}_r{_tag(r)}"
        path = io.write_csv(out / f"{stem}.csv", ("u", "v", "du", "dv", "speed"), grid.rows())
        report["files"].append(str(path))
        report["direction_deviation"][repr(r)] = field_direction_deviation(path)
        if "svg" in cfg.formats:
            svg = io.quiver_svg(grid.u, grid.v, grid.du, grid.dv, grid.speed, title=f"{cfg.kind}, r = {r:g}")
            report["files"].append(str(io.write_text(out / f"{stem}.svg", svg)))
    if "json" in cfg.formats:
        io.write_json(out / f"field_{cfg.kind}.json", report)
    return report


EVOLVE_HEADER = ("t", "id", "eps", "arc_angle", "u", "v", "r", "theta", "theta_lift", "H0", "H")


def cmd_evolve(cfg: RunConfig, args) -> dict:
    spec = make_spec(cfg)
    out = Path(cfg.out_dir)
    cloud = seed_semicircles(cfg.u_star, cfg.eps_list, cfg.n_per_arc)
    times = list(cfg.evolve_times)
    ev = evolve_cloud(spec, cloud, integrator(cfg, times[-1], times))
    s0 = cloud.states
    H0 = hamiltonian_array(spec, s0[:, 0], s0[:, 1], s0[:, 2])
    files, snaps = [], {}
    for t, snap in ev.snapshots:
        s = snap.states
        H = hamiltonian_array(spec, s[:, 0], s[:, 1], s[:, 2])
        rows = (
            (t, i, snap.eps[i], snap.arc_angle[i], *s[i, :3], snap.theta[i], s[i, 3], H0[i], H[i])
            for i in range(len(snap))
            if snap.valid[i]
        )
        p = io.write_csv(out / f"evolve_t{_tag(t)}.csv", EVOLVE_HEADER, rows)
        snaps[t] = p
        files.append(str(p))
        files.append(str(io.write_csv(out / f"proj_uvr_t{_tag(t)}.csv", ("id", "u", "v", "r"), ((i, *s[i, :3]) for i in range(len(snap))))))
        files.append(
            str(io.write_csv(out / f"proj_uthetar_t{_tag(t)}.csv", ("id", "u", "theta", "r"), ((i, s[i, 0], snap.theta[i], s[i, 2]) for i in range(len(snap)))))
        )
        near = np.nonzero(np.abs(s[:, 0] - cfg.u_slice) < cfg.slice_tol)[0]
        files.append(
            str(
                io.write_csv(
                    out / f"slice_t{_tag(t)}.csv",
                    ("id", "eps", "u", "theta", "r", "r0"),
                    ((i, snap.eps[i], s[i, 0], snap.theta[i], s[i, 2], snap.r0[i]) for i in near),
                )
            )
        )
        if "svg" in cfg.formats:
            files.append(str(io.write_text(out / f"proj_uv_t{_tag(t)}.svg", io.scatter_svg(s[:, 0], s[:, 1], (-2, 2), (-2, 2), f"(u, v) at t = {t:g}", color_values=s[:, 2]))))
            files.append(
                str(io.write_text(out / f"proj_utheta_t{_tag(t)}.svg", io.scatter_svg(s[:, 0], snap.theta, (-2, 2), (-math.pi, math.pi), f"(u, theta) at t = {t:g}", color_values=s[:, 2])))
            )
    t_last = times[-1]
    coverage = window_theta_coverage(snaps[t_last], cfg.window)
    slice_err = slice_height_error(out / f"slice_t{_tag(t_last)}.csv")
    predicates = {
        "seed_at_u_minus_ustar_theta_zero": seed_predicate(snaps[times[0]], cfg.u_star) if times[0] == 0.0 else None,
        "window_theta_coverage": coverage,
        "window_theta_coverage_exceeds_3pi_2": None if coverage is None else coverage > 1.5 * math.pi,
        "slice_height_error": slice_err,
        "slice_heights_equal_seed": None if slice_err is None else slice_err < 1e-12,
        "status_counts": {name: int(np.sum(ev.status == code)) for code, name in STATUS_NAMES.items()},
    }
    report = {"files": files, "predicates": predicates, "times": times}
    if "json" in cfg.formats:
        io.write_json(out / "evolve_predicates.json", report)
    return report


CONVERGE_HEADER = ("t", "offset", "theta_gap", "hausdorff", "n_in_window")


def cmd_converge(cfg: RunConfig, args) -> dict:
    spec = make_spec(cfg)
    out = Path(cfg.out_dir)
    rep = convergence_run(
        spec,
        cfg.u_star,
        cfg.eps_list,
        cfg.n_per_arc,
        cfg.window,
        cfg.converge_times,
        cfg=integrator(cfg, cfg.converge_times[-1], cfg.converge_times),
        target=TargetBrane(u_range=cfg.window, m=cfg.target_m, n_u=cfg.target_n_u),
    )
    rows = zip(rep.times, rep.offset, rep.theta_gap, rep.hausdorff, rep.n_in_window)
    io.write_csv(out / "converge.csv", CONVERGE_HEADER, rows)
    payload = {"report": rep.as_dict(), "config": {k: getattr(cfg, k) for k in config_mod.field_names()}}
    if "json" in cfg.formats:
        io.write_json(out / "converge.json", payload)
    return payload


SS_HEADER = ("t", "max_residual", "n_points_in_window", "im_w_drift")


def cmd_ss(cfg: RunConfig, args) -> dict:
    from .verify import ss_conservation, ss_flow_fd, ss_group_law, ss_invariant_loci

    out = Path(cfg.out_dir)
    samples = (np.linspace(-cfg.ss_v_max, cfg.ss_v_max, cfg.ss_nv), np.linspace(cfg.ss_y_min, cfg.ss_y_max, cfg.ss_ny))
    rep = ss_convergence(cfg.ss_w_star, samples, (cfg.ss_window_min, cfg.ss_window_max), cfg.ss_times, margin=cfg.ss_margin)
    p = find_stable_intersection(cfg.ss_w_star)
    rep.stable_intersection = p
    io.write_csv(out / "ss.csv", SS_HEADER, zip(rep.times, rep.max_residual, rep.n_points_in_window, rep.im_w_drift))
    checks = {}
    for fn in (ss_group_law, ss_conservation, ss_invariant_loci, ss_flow_fd):
        ok, detail = fn(None)
        checks[fn.__name__] = {"passed": ok, "detail": detail}
    payload = {
        "w_star": cfg.ss_w_star,
        "times": rep.times,
        "max_residual": rep.max_residual,
        "n_points_in_window": rep.n_points_in_window,
        "im_w_drift": rep.im_w_drift,
        "re_w_monotone": rep.re_w_monotone,
        "stable_intersection": {"x": p.x, "y": p.y, "w": p.w},
        "checks": checks,
    }
    if "json" in cfg.formats:
        io.write_json(out / "ss.json", payload)
    return payload


COMMANDS = {"verify": cmd_verify, "field": cmd_field, "evolve": cmd_evolve, "converge": cmd_converge, "ss": cmd_ss}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="braneflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    for name in config_mod.field_names():
        common.add_argument("--" + name.replace("_", "-"), dest="cfg_" + name, metavar="VALUE", help=f"override {name}")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("--json", action="store_true", help="print results as JSON")
            p.add_argument("--perturb-f", type=float, default=0.0, help="add c*R to the radial factor (negative control)")
            p.add_argument("--only", nargs="*", help="run only the named checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    try:
        cfg = config_mod.load(args.config, overrides)
        result = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    if isinstance(result, int):
        return result
    if args.command != "verify":
        print(json.dumps(io._jsonable(result), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
