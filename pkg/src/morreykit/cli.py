"""Batch experiment driver.

    morreykit SUBCOMMAND --config PATH [--out DIR] [--threads N] [--refine K] [--seed S]

Exit status: 0 when every asserted row matches its expectation, 1 on a suite
failure (the failing rows are named), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import growth as gr
from .approx import ApproximationError, approximate
from .blocks import decompose, validate_block
from .config import ConfigError, ExperimentConfig, load_config
from .czo import CZCViolation, apply_czo, check_standard_kernel, hilbert_kernel, riesz_kernel
from .grid import GridError, UNIT_BALL_VOLUME, save_grid, set_threads
from .morrey import WindowError, a_functional, default_windows, morrey_sup
from .reports import Report
from .testfunctions import PowerSingularity

COMMANDS = ("check-phi", "norm", "afunc", "distance", "approx", "decompose", "czo", "demo-zorko")


def _windows(cfg: ExperimentConfig, f):
    return default_windows(f, float(cfg.get("windows.large_scale")), float(cfg.get("windows.threshold_frac")))


def cmd_check_phi(cfg: ExperimentConfig, rep: Report) -> None:
    phi = cfg.growth()
    p = cfg.p
    xs, rs = cfg.x_samples(), cfg.r_samples()
    cap = float(cfg.get("growth.cap"))
    reports = [
        gr.check_doubling(phi, gr.doubling_samples(xs, rs), cap),
        gr.check_nearness(phi, gr.nearness_samples(xs, rs[::2]), cap),
        gr.check_gdec(phi, p, gr.monotone_samples(xs, rs[::2]), cap),
        gr.check_czc(phi, xs, rs, float(cfg.get("growth.czc_r_inf")), cap),
        gr.check_lim_conditions(phi, p),
    ]
    if phi.family == "variable":
        reports.append(gr.check_log_holder(phi.params["lam_fn"], gr.log_holder_samples(xs)))
    for r in reports:
        for name, value, bound, ok in r.rows():
            rep.check(name, value, bound, ok)
    found = gr.find_czc_epsilon(phi, xs, rs, float(cfg.get("growth.czc_eps_cap")))
    rep.info("growth", phi.describe())
    rep.info("czc_eps", None if found is None else found.eps)
    rep.info("czc_eps_constant", None if found is None else found.constant)


def cmd_norm(cfg: ExperimentConfig, rep: Report) -> None:
    f, phi, p = cfg.function(), cfg.growth(), cfg.p
    norm, ball = morrey_sup(f, phi, p, cfg.family(f))
    rep.info("morrey_norm", norm)
    rep.info("argmax_center", None if ball is None else " ".join(repr(c) for c in ball.center))
    rep.info("argmax_radius", None if ball is None else ball.radius)
    tol = float(cfg.get("tol.norm_identity"))
    if phi.family == "lp":
        lp = f.lp_norm(p)
        expected = UNIT_BALL_VOLUME[f.d] ** (-1.0 / p)
        ratio = norm / lp if lp else 0.0
        rep.check("ratio_to_lp_norm", ratio, expected, abs(ratio - expected) <= tol * expected)
    elif phi.family == "constant":
        m = f.max_abs() / phi.params["c"]
        rep.check("ratio_to_max_abs", norm / m if m else 0.0, 1.0, abs(norm - m) <= tol * m)
    else:
        rep.check("morrey_norm_finite", norm, math.inf, math.isfinite(norm))


def _afunc_rows(rep: Report, report) -> None:
    rows = []
    for key, diag in report.diagnostics.items():
        for rung, val in zip(diag.rungs, diag.values):
            rows.append((key, rung, val))
    rep.tables["rungs"] = (["term", "rung", "value"], rows)
    small = report.diagnostics["small_r"]
    rep.plots["small_r"] = ("small-radius diagnostic: radius, sup_x M_p/phi", small.rungs, small.values)


def cmd_afunc(cfg: ExperimentConfig, rep: Report) -> None:
    f, phi, p = cfg.function(), cfg.growth(), cfg.p
    fam = cfg.family(f)
    from .morrey import morrey_norm

    res = a_functional(f, phi, p, _windows(cfg, f), norm=morrey_norm(f, phi, p, fam))
    rep.info("A", res.A)
    rep.info("norm", res.norm)
    for key, diag in res.diagnostics.items():
        rep.info(f"{key}.extreme", diag.extreme)
        rep.info(f"{key}.trend", diag.trend)
        rep.info(f"{key}.limit", diag.limit)
        rep.check(f"condition_{key}", diag.extreme, diag.threshold, diag.holds)
    _afunc_rows(rep, res)


def cmd_distance(cfg: ExperimentConfig, rep: Report) -> None:
    from .morrey import distance_bounds

    f, phi, p = cfg.function(), cfg.growth(), cfg.p
    est = distance_bounds(f, phi, p, float(cfg.get("approx.eps")), _windows(cfg, f), cfg.family(f))
    rep.info("lower", est.lower)
    rep.info("upper", est.upper)
    rep.info("upper_over_lower", est.upper / max(est.lower, 0.01))
    rep.check("lower_le_upper", est.lower, est.upper * (1 + est.tolerance), est.consistent)


def cmd_approx(cfg: ExperimentConfig, rep: Report, out: Path) -> None:
    f, phi, p = cfg.function(), cfg.growth(), cfg.p
    g, cert = approximate(f, phi, p, float(cfg.get("approx.eps")), _windows(cfg, f), cfg.family(f),
                          bisection_steps=int(cfg.get("approx.bisection_steps")))
    for k, v in cert.items():
        rep.info(k, v)
    pts = g.cell_centers()
    outside = np.sqrt(np.sum(pts**2, axis=1)) >= cert.s + cert.t + g.h
    rep.check("support_in_B(0,s+t)", float(np.max(np.abs(g.values.ravel()[outside]), initial=0.0)), 0.0,
              not np.any(g.values.ravel()[outside]))
    rep.check("t_below_2^(i-1)", cert.t, 2.0 ** (cert.i_eps - 1), cert.t < 2.0 ** (cert.i_eps - 1))
    rep.check("lp_error_below_C_eps_eps", cert.lp_error, cert.C_eps * cert.eps, cert.lp_error < cert.C_eps * cert.eps)
    out.mkdir(parents=True, exist_ok=True)
    save_grid(g, out / "approximant.grid")


def cmd_decompose(cfg: ExperimentConfig, rep: Report, out: Path) -> None:
    f, phi, q = cfg.function(), cfg.growth(), cfg.q
    n = int(cfg.raw.get("n", cfg.get("blocks.n")))
    dec = decompose(f, phi, q, n)
    rec = dec.reconstruct()
    err = float(np.max(np.abs(rec.values - f.values), initial=0.0))
    tol = float(cfg.get("tol.reconstruction"))
    rep.info("blocks", len(dec.terms))
    rep.info("coefficient_sum", dec.coefficient_sum)
    rep.info("q_conjugate", 1.0 if math.isinf(q) else q / (q - 1))
    rep.check("reconstruction", err, tol * max(1.0, f.max_abs()), err <= tol * max(1.0, f.max_abs()))
    bad = [i for i, (_, blk) in enumerate(dec.terms) if not validate_block(blk.b, blk.ball, phi, q).passed]
    rep.check("blocks_valid", len(bad), 0, not bad)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i, (lam, blk) in enumerate(dec.terms):
        name = f"block_{i:04d}.grid"
        save_grid(blk.b, out / name)
        manifest.append((i, lam, " ".join(repr(c) for c in blk.ball.center), blk.ball.radius, name))
    rep.tables["manifest"] = (["index", "lambda", "center", "radius", "file"], manifest)


def _kernel(cfg: ExperimentConfig):
    name = str(cfg.raw.get("kernel", {}).get("type", cfg.get("czo.kernel")))
    if name == "hilbert":
        if cfg.d != 1:
            raise ConfigError("the Hilbert kernel needs d = 1")
        return hilbert_kernel()
    if name == "riesz":
        if cfg.d != 2:
            raise ConfigError("the Riesz kernels need d = 2")
        return riesz_kernel(int(cfg.raw.get("kernel", {}).get("j", 1)))
    raise ConfigError(f"unknown kernel {name!r}")


def cmd_czo(cfg: ExperimentConfig, rep: Report, out: Path) -> None:
    from .morrey import closure_conditions, morrey_norm

    K = _kernel(cfg)
    kr = check_standard_kernel(K, seed=cfg.seed)
    rep.check("SK1", kr.sk1, math.inf, math.isfinite(kr.sk1))
    rep.check("SK2", kr.sk2, math.inf, math.isfinite(kr.sk2))
    rep.info("dini", kr.dini)
    f = cfg.function()
    lo, up = cfg.eval_box()
    delta = int(cfg.raw.get("kernel", {}).get("delta_cells", cfg.get("czo.delta_cells"))) * f.h
    Tf = apply_czo(K, f, lo, up, delta)
    l2 = Tf.lp_norm(2) / f.lp_norm(2) if f.lp_norm(2) else 0.0
    rep.info("l2_ratio", l2)
    if cfg.raw.get("growth") is not None:
        phi, p = cfg.growth(), cfg.p
        czc = gr.check_czc(phi, gr.default_x_samples(lo, up), cfg.r_samples())
        if not czc.passed:
            rep.check("CZ-C", czc.constant, czc.cap, False)
            raise CZCViolation("CZ-C violated")
        rep.check("CZ-C", czc.constant, czc.cap, True)
        F = f.embed(lo, up)
        fam = cfg.family(F)
        ratio = morrey_norm(Tf, phi, p, fam) / max(morrey_norm(F, phi, p, fam), 1e-300)
        rep.info("morrey_ratio", ratio)
        diags = closure_conditions(Tf, phi, p, _windows(cfg, Tf))
        for key, diag in diags.items():
            rep.info(f"closure_{key}.trend", diag.trend)
            rep.info(f"closure_{key}.extreme", diag.extreme)
    out.mkdir(parents=True, exist_ok=True)
    save_grid(Tf, out / "Tf.grid")
    if Tf.d == 1:
        rep.plots["Tf"] = ("x, Tf(x)", Tf.axis_centers(0), Tf.values)


def cmd_demo_zorko(cfg: ExperimentConfig, rep: Report) -> None:
    """A for |x|^a chi_B(0,1) with a = lam/p and a = lam, phi = r^lam."""
    from .morrey import morrey_norm

    phi, p = cfg.growth(), cfg.p
    if phi.family != "power":
        raise ConfigError("demo-zorko needs a power-law growth function")
    lam = phi.params["lam"]
    values = {}
    for label, a in (("lam_over_p", lam / p), ("lam", lam)):
        f = PowerSingularity(a, 1.0, tuple([0.0] * cfg.d)).sample(cfg.lower, cfg.upper, cfg.h, p)
        res = a_functional(f, phi, p, _windows(cfg, f), norm=morrey_norm(f, phi, p, cfg.family(f)))
        values[label] = res.A
        rep.info(f"A[{label}]", res.A)
        rep.info(f"small_r_trend[{label}]", res.diagnostics["small_r"].trend)
    rep.check("A_positive[lam]", values["lam"], 0.1, values["lam"] > 0.1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morreykit", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=None, help="output directory (default: config 'output' or ./out)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--refine", type=int, default=1, help="grid refinement multiplier")
    ap.add_argument("--seed", type=int, default=0, help="battery generation seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        set_threads(args.threads)
        cfg = load_config(args.config, args.refine, args.seed)
        out = args.out or Path(cfg.raw.get("output", "out"))
        rep = Report(args.command, expect=cfg.expect)
        rep.info("config", args.config.name)
        rep.info("refine", args.refine)
        rep.info("seed", args.seed)
        rep.info("p", cfg.p)
        rep.info("p_conjugate", cfg.p_conj)
        run = {
            "check-phi": lambda: cmd_check_phi(cfg, rep),
            "norm": lambda: cmd_norm(cfg, rep),
            "afunc": lambda: cmd_afunc(cfg, rep),
            "distance": lambda: cmd_distance(cfg, rep),
            "approx": lambda: cmd_approx(cfg, rep, out),
            "decompose": lambda: cmd_decompose(cfg, rep, out),
            "czo": lambda: cmd_czo(cfg, rep, out),
            "demo-zorko": lambda: cmd_demo_zorko(cfg, rep),
        }[args.command]
        try:
            run()
        except (ApproximationError, CZCViolation) as exc:
            rep.info("error", str(exc))
            rep.rows.append(("suite", str(exc), None, False))
    except (ConfigError, GridError, WindowError, gr.GrowthError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rep.write(out)
    print(rep.human())
    if not rep.passed:
        print("failed: " + ", ".join(rep.failures), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
