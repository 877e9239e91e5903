"""Command-line experiment runner.

    parcom SUBCOMMAND [--config PATH] [--out DIR] [--seed N] [--quick] [--plot]

Each subcommand writes ``<out>/<subcommand>.csv`` plus a manifest JSON, prints
one PASS/FAIL line against the thresholds in the config and exits 0 on PASS,
1 on FAIL, 2 on usage or configuration errors.

CSV schemas (header rows):

    multiplier-decay   ray1,ray2,k,xi1,xi2,abs_m,decay_product,regime
    qs-decay           symbol,j,s,norm            (+ qs-decay-fit.csv: symbol,exponent,intercept,r_squared)
    kernel-reg         symbol,lambda,h1,h2,integral,ratio,n_quad,seed,ratio_refined
    shift-bound        lambda,n_requested,n_valid,violations,max_ratio
    f-lambda           lambda,h1,h2,estimate,stderr,n_mc,bound
    wbp                symbol,r,ratio
    t1-osc             symbol,a,b,r,oscillation
    sigma-sweep        symbol,theta,sigma1,sigma2,norm
    rotations-compare  refine,n_sigma,n_quad,rel_error
    symbol-check       name,lip_half,sup_dx1,bmo_d2a,grid,seed,identity_error
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from .config import SUBCOMMANDS, RunConfig, load_config
from .geometry import ParaPoint
from .grid import Field2D, TorusGrid
from .operators import CurveOpSpec, smooth_profile
from .symbols import check_condition_17, frac_diff, make_symbol
from . import experiments as ex
from . import oscillatory as osc
from . import regularity as reg
from .grid import spectral_derivative

CSV_SCHEMAS = {
    "multiplier-decay": ("ray1", "ray2", "k", "xi1", "xi2", "abs_m", "decay_product", "regime"),
    "qs-decay": ("symbol", "j", "s", "norm"),
    "qs-decay-fit": ("symbol", "exponent", "intercept", "r_squared"),
    "kernel-reg": reg.RegSweepRow.CSV_HEADER + ("ratio_refined",),
    "shift-bound": ("lambda", "n_requested", "n_valid", "violations", "max_ratio"),
    "f-lambda": ("lambda", "h1", "h2", "estimate", "stderr", "n_mc", "bound"),
    "wbp": ("symbol", "r", "ratio"),
    "t1-osc": ("symbol", "a", "b", "r", "oscillation"),
    "sigma-sweep": ("symbol", "theta", "sigma1", "sigma2", "norm"),
    "rotations-compare": ("refine", "n_sigma", "n_quad", "rel_error"),
    "symbol-check": ("name", "lip_half", "sup_dx1", "bmo_d2a", "grid", "seed", "identity_error"),
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=10, cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_manifest(path: Path, cfg: RunConfig, subcommand: str, passed: bool, quick: bool) -> None:
    doc = {
        "subcommand": subcommand,
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "quick": quick,
        "passed": bool(passed),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "git_describe": _git_describe(),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def emit_plot(series: dict, path, xlabel: str = "log2 x", ylabel: str = "log2 y",
              title: str = "") -> Path:
    """Deterministic SVG log-log line plot; ``series`` maps label -> (x, y)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for label, (x, y) in series.items():
        if len(x) < 2 or len(x) != len(y):
            raise ValueError(f"series {label!r} needs >= 2 matching points")
    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "parcom", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, (x, y) in series.items():
            y = np.asarray(y, dtype=float)
            ax.loglog(x, np.where(y > 0, y, np.nan), marker="o", label=label, base=2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


# ---------------------------------------------------------------- subcommands


def _grid(cfg: RunConfig, quick: bool) -> TorusGrid:
    return TorusGrid.square(32 if quick else cfg.N, cfg.L)


def _symbol(cfg: RunConfig, name: str | None = None):
    name = name or cfg.symbol
    params = {"L1": cfg.L, "L2": cfg.L}
    if name == "random_bandlimited":
        params["seed"] = cfg.symbol_seed
    return make_symbol(name, **params)


def run_multiplier_decay(cfg, quick):
    thr = cfg.thresholds
    k_max = min(cfg.integer("multiplier-decay", "k_max"), 8 if quick else 99)
    rows, ok, series = [], True, {}
    for ray in cfg.pairs("multiplier-decay", "rays"):
        sw = osc.decay_sweep(ray, k_max)
        ok &= bool(np.isfinite(sw.max_product)) and sw.log_slope() <= thr["decay_log_slope"]
        for k, r in enumerate(sw.results):
            rows.append((ray[0], ray[1], k, r.xi[0], r.xi[1], abs(r.value), r.decay_product, r.regime))
        series[f"ray {ray}"] = ([2.0**k for k in range(k_max + 1)], sw.products)
    return rows, ok, {"multiplier-decay": series}, f"{len(series)} rays, k<={k_max}"


def run_qs_decay(cfg, quick):
    thr = cfg.thresholds
    g = _grid(cfg, quick)
    s_list = cfg.numbers("qs-decay", "s_list")
    if quick:
        s_list = [s for s in s_list if ex.qs_resolved(s, g)]
    res = ex.qs_tj_decay(_symbol(cfg), s_list, g, j=cfg.integer("qs-decay", "j"), seed=cfg.seed)
    rows = [(res.symbol, res.j, s, n) for s, n in zip(res.scales, res.norms)]
    fit = res.fit
    extra = {"qs-decay-fit": [(res.symbol, fit.exponent, fit.intercept, fit.r_squared)] if fit
             else [(res.symbol, "nan", "nan", "nan")]}
    ok = fit is not None and fit.exponent >= thr["qs_min_exponent"] and fit.r_squared >= thr["qs_min_r2"]
    msg = (f"epsilon={fit.exponent:.4f} r2={fit.r_squared:.4f}" if fit else "degenerate (all norms 0)")
    return rows, ok, {"qs-decay": {res.symbol: (res.scales, res.norms)}}, msg, extra


def run_kernel_reg(cfg, quick):
    thr = cfg.thresholds
    lams = cfg.numbers("kernel-reg", "lambdas")
    x = ParaPoint(*cfg.numbers("kernel-reg", "x")[:2])
    n = cfg.integer("kernel-reg", "n_quad") // (2 if quick else 1)
    A = _symbol(cfg)
    base = reg.reg_integral_sweep(A, x, lams, cfg.seed, n_quad=n)
    fine = reg.reg_integral_sweep(A, x, lams, cfg.seed, n_quad=2 * n)
    rows = [r.to_csv_row() + [repr(f.ratio)] for r, f in zip(base, fine)]
    ratios = np.array([r.ratio for r in base])
    spread = ratios.max() / ratios.min() if ratios.min() > 0 else float("inf")
    change = max((abs(f.ratio - r.ratio) / r.ratio if r.ratio > 0 else (0.0 if f.ratio == 0 else 1.0))
                 for r, f in zip(base, fine))
    ok = spread < thr["reg_max_ratio_spread"] and change < thr["reg_max_refine_change"]
    series = {"ratio": (lams, ratios), "integral": (lams, [r.integral for r in base])}
    return rows, ok, {"kernel-reg": series}, f"ratio max/min={spread:.3g} refine change={change:.2e}"


def run_shift_bound(cfg, quick):
    n = cfg.integer("shift-bound", "n_samples") // (10 if quick else 1)
    rows, ok = [], True
    for lam in cfg.numbers("shift-bound", "lambdas"):
        rep = reg.shift_bound_check(lam, n, cfg.seed)
        rows.append((lam, rep.n_requested, rep.n_valid, rep.violations, rep.max_ratio))
        ok &= rep.violations == 0 and rep.n_valid == rep.n_requested
    empty = [r[0] for r in rows if r[2] == 0]
    return rows, ok, {}, f"violations={sum(r[3] for r in rows)} empty E_lambda at {empty}"


def run_f_lambda(cfg, quick):
    thr = cfg.thresholds
    n = cfg.integer("f-lambda", "n_mc") // (10 if quick else 1)
    rows, ok = [], True
    for lam in cfg.numbers("f-lambda", "lambdas"):
        h = ParaPoint(lam, lam * lam)
        res = reg.f_lambda_measure(ParaPoint(0.0, 0.0), h, lam, n, cfg.seed)
        bound = thr["f_lambda_factor"] * lam ** (2.0 / 3.0)
        rows.append((lam, h.x1, h.x2, res.estimate, res.stderr, n, bound))
        ok &= res.estimate <= bound and res.stderr < thr["f_lambda_max_rel_se"] * res.estimate
    return rows, ok, {}, "; ".join(f"lam={r[0]:.0e}: {r[3]:.3e}+-{r[4]:.1e}" for r in rows)


def run_wbp(cfg, quick):
    A = _symbol(cfg)
    center = ParaPoint(*cfg.numbers("wbp", "center")[:2])
    vals = ex.wbp_sweep(A, cfg.numbers("wbp", "r_list"), 64, center)
    ratios = np.array([v for _, v in vals])
    spread = ratios.max() / ratios.min() if ratios.min() > 0 else float("inf")
    ok = bool(np.all(ratios == 0)) or spread < cfg.thresholds["wbp_max_spread"]
    rows = [(A.name, r, v) for r, v in vals]
    return rows, ok, {"wbp": {A.name: ([r for r, _ in vals], ratios)}}, f"max/min={spread:.4g}"


def run_t1_osc(cfg, quick):
    A = _symbol(cfg)
    cubes = ex.random_unit_cubes(cfg.integer("t1-osc", "n_cubes"), cfg.seed)
    t_max = cfg.real("t1-osc", "t_max")
    vals = [ex.t1_oscillation(A, c, t_max, n_side=12 if quick else 24) for c in cubes]
    mom = ex.max_over_median(vals)
    rows = [(A.name, c.a, c.b, c.r, v) for c, v in zip(cubes, vals)]
    return rows, mom < cfg.thresholds["t1_max_over_median"], {}, f"max/median={mom:.4g}"


def run_sigma_sweep(cfg, quick):
    g = _grid(cfg, quick)
    n = 16 if quick else cfg.integer("sigma-sweep", "n_sigma")
    rows, ok, msgs = [], True, []
    for name in cfg.symbols:
        A = _symbol(cfg, name)
        tab = ex.sigma_uniformity(A, n, g, seed=cfg.seed)
        mom = ex.max_over_median([r.norm for r in tab])
        ok &= mom <= cfg.thresholds["sigma_max_over_median"]
        msgs.append(f"{name}:{mom:.3f}")
        rows += [(name, r.theta, r.sigma[0], r.sigma[1], r.norm) for r in tab]
    return rows, ok, {}, "max/median " + " ".join(msgs)


def run_rotations_compare(cfg, quick):
    # the tolerance is stated at the configured N, so --quick keeps the grid
    g = _grid(cfg, False)
    A = _symbol(cfg)
    f = Field2D.from_function(g, lambda x1, x2: np.cos(np.pi * x1 / cfg.L + np.pi * x2 / cfg.L))
    n_sigma = cfg.integer("rotations-compare", "n_sigma")
    n_quad = cfg.integer("rotations-compare", "n_quad")
    ic, oc = cfg.real("rotations-compare", "inner_cut"), cfg.real("rotations-compare", "outer_cut")
    rows = []
    for refine in (1, 2):
        spec = CurveOpSpec(epsilon=ic, R=oc, n_quad=n_quad * refine)
        err = ex.rotations_vs_direct(A, f, smooth_profile(), spec, n_sigma * refine, refine)
        rows.append((refine, n_sigma * refine, n_quad * refine, err))
    e1, e2 = rows[0][3], rows[1][3]
    thr = cfg.thresholds
    ok = e1 <= thr["rotations_max_error"] and (e1 == 0 or e1 / max(e2, 1e-300) >= thr["rotations_min_refine_gain"])
    return rows, ok, {}, f"rel error {e1:.3e} -> {e2:.3e} under refinement"


def symbol_identity_error(b: Field2D) -> float:
    """Relative gap between d/dx2 b and D_2(D b) on the grid."""
    lhs = spectral_derivative(b, 0, 1)
    rhs = frac_diff(frac_diff(b, "full"), "partial")
    scale = lhs.norm()
    gap = (lhs - rhs).norm()
    return gap / scale if scale > 0 else gap


def run_symbol_check(cfg, quick):
    g = _grid(cfg, quick)
    A = _symbol(cfg)
    rep = check_condition_17(A, g, n_samples=cfg.integer("symbol-check", "n_samples") // (10 if quick else 1),
                             depth=1 if quick else cfg.integer("symbol-check", "depth"), seed=cfg.seed)
    ident = symbol_identity_error(A.sample(g))
    values = (rep.lip_half, rep.sup_dx1, rep.bmo_d2a)
    ok = all(np.isfinite(values)) and ident <= cfg.thresholds["symbol_identity_tol"]
    return [rep.to_csv_row() + [repr(ident)]], ok, {}, (
        f"lip_half={rep.lip_half:.4g} sup_dx1={rep.sup_dx1:.4g} bmo_d2a={rep.bmo_d2a:.4g} "
        f"identity={ident:.2e}")


RUNNERS = {
    "multiplier-decay": run_multiplier_decay,
    "qs-decay": run_qs_decay,
    "kernel-reg": run_kernel_reg,
    "shift-bound": run_shift_bound,
    "f-lambda": run_f_lambda,
    "wbp": run_wbp,
    "t1-osc": run_t1_osc,
    "sigma-sweep": run_sigma_sweep,
    "rotations-compare": run_rotations_compare,
    "symbol-check": run_symbol_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parcom", description="Parabolic commutator experiments")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, default=None, help="INI file overlaid on the defaults")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--quick", action="store_true", help="reduced sizes for smoke runs")
    p.add_argument("--plot", action="store_true", help="also write SVG plots where available")
    return p


def run(subcommand: str, config=None, out=Path("results"), seed=None, quick=False,
        plot=False) -> int:
    try:
        cfg = load_config(config)
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        cfg.seed = seed
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = RUNNERS[subcommand](cfg, quick)
    except ValueError as exc:
        print(f"FAIL {subcommand}: {exc}")
        return 2
    rows, ok, plots, msg = result[:4]
    extra = result[4] if len(result) > 4 else {}
    write_csv(out / f"{subcommand}.csv", CSV_SCHEMAS[subcommand], rows)
    for name, extra_rows in extra.items():
        write_csv(out / f"{name}.csv", CSV_SCHEMAS[name], extra_rows)
    if plot or cfg.plot:
        for name, series in plots.items():
            emit_plot(series, out / f"{name}.svg", title=name)
    ok = bool(ok)
    write_manifest(out / f"{subcommand}.manifest.json", cfg, subcommand, ok, quick)
    print(f"{'PASS' if ok else 'FAIL'} {subcommand}: {msg}")
    return 0 if ok else 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(args.subcommand, args.config, args.out, args.seed, args.quick, args.plot)


if __name__ == "__main__":
    sys.exit(main())
