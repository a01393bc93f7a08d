"""Batch experiment driver.

Configuration values are resolved in a fixed precedence order: flags on
the command line override fields of the optional JSON config document
(--config), which override the built-in defaults of the chosen
experiment.  Every output CSV starts with one '#' metadata line echoing
the effective configuration, the package versions, and the achieved
numbers next to any requested targets, so a run is reproducible from its
own artifacts.  Figures are rendered alongside the tables into --out.

Exit codes: 0 on success, 2 on invalid configuration, 3 when a requested
tolerance or hypothesis check is not met.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

import numpy as np
import scipy

from . import __version__
from .spectral import (
    FilterBand,
    FrequencyOutOfSchemeDomain,
    State,
    bandpass,
    evolve_continuous,
    make_transport_spectrum,
)
from .schemes import certify, parse_scheme
from .kernels import continuous_from_discrete, kernel_config, kernel_grid
from .observability import (
    ingham_bounds,
    liouville_check,
    packet_mass_decay,
    point_obs_transport,
    uniformity_sweep,
    weak_obs_sweep,
)
from .report import heatmap_figure, line_figure, write_table

_SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0

_DEFAULTS = {
    "certify": {
        "scheme": "midpoint",
        "delta": 1.0,
        "seed": 0,
    },
    "kernel": {
        "scheme": "midpoint",
        "tau": 0.1,
        "delta": 1.0,
        "eps": 0.5,
        "which": "forward",
        "t_range": [0.0, 2.0],
        "s_range": [-0.5, 2.5],
        "nt": 41,
        "ns": 61,
    },
    "reconstruct": {
        "scheme": "midpoint",
        "tau": 0.01,
        "delta": 1.0,
        "eps": 0.5,
        "modes": 64,
        "times": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "tol": 1e-6,
        "seed": 0,
    },
    "obs-sweep": {
        "scheme": "midpoint",
        "delta": 2.0,
        "T": 2.4,
        "tau_ladder": [0.05, 0.025, 0.0125, 0.00625],
        "modes": None,
        "max_variation": None,
    },
    "sharpness": {
        "delta": 2.0,
        "x0": 0.5,
        "eps": 0.1,
        "tau_ladder": [8e-4, 4e-4, 2e-4, 1e-4],
        "min_slope": None,
    },
    "ingham": {
        "scheme": "midpoint",
        "delta": 1.0,
        "T": 1.5,
        "tau_ladder": [0.05, 0.025, 0.0125, 0.00625],
        "modes": None,
    },
    "weak-obs": {
        "x0": _SQRT2_MINUS_1,
        "scheme": "midpoint",
        "delta": 1.0,
        "T": 2.6,
        "tau_ladder": [0.05, 0.025, 0.0125],
        "r": -2.0,
        "j_max": 10_000,
    },
}


_FLOAT_KEYS = frozenset(
    {"tau", "delta", "eps", "T", "x0", "tol", "r", "max_variation", "min_slope"}
)
_INT_KEYS = frozenset({"seed", "modes", "nt", "ns", "j_max"})
_LIST_KEYS = frozenset({"tau_ladder", "times", "t_range", "s_range"})


def _parse_floats(text):
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")


def _load_config(path: str, experiment: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    declared = doc.pop("experiment", None)
    if declared is not None and declared != experiment:
        raise ValueError(
            f"config declares experiment {declared!r} but the "
            f"{experiment!r} subcommand was invoked"
        )
    allowed = set(_DEFAULTS[experiment]) | {"seed", "out"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(
            f"unknown config fields for {experiment!r}: {sorted(unknown)}"
        )
    return doc


def _effective(args: argparse.Namespace, experiment: str) -> dict:
    cfg = dict(_DEFAULTS[experiment])
    cfg.setdefault("seed", 0)
    cfg["out"] = "report"
    if args.config:
        cfg.update(_load_config(args.config, experiment))
    for key in cfg:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            cfg[key] = flag_value
    for key in ("tau_ladder", "times", "t_range", "s_range"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _parse_floats(cfg[key])
    for key, value in cfg.items():
        if value is None or key in _LIST_KEYS:
            continue
        if key in _FLOAT_KEYS:
            cfg[key] = float(value)
        elif key in _INT_KEYS:
            cfg[key] = int(value)
    return cfg


def _meta(experiment: str, cfg: dict, achieved: dict | None = None) -> dict:
    meta = {
        "experiment": experiment,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "versions": {
            "obslab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    if achieved:
        meta["achieved"] = achieved
    return meta


def _out_path(cfg: dict, name: str) -> str:
    return os.path.join(cfg["out"], name)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


# ----------------------------------------------------------------------
# experiment handlers


def _run_certify(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    report = certify(scheme, cfg["delta"], seed=cfg["seed"])
    print(report)
    rows = [
        {
            "check": c.name,
            "passed": c.passed,
            "worst": c.worst,
            "witness": c.witness,
        }
        for c in report.checks
    ]
    write_table(
        _out_path(cfg, f"certify_{_slug(scheme.name)}.csv"),
        rows,
        _meta("certify", cfg, {"all_passed": report.all_passed}),
    )
    return 0 if report.all_passed else 3


def _run_kernel(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    kcfg = kernel_config(scheme, cfg["tau"], cfg["delta"], cfg["eps"])
    which = cfg["which"]
    if which not in ("forward", "reverse"):
        raise ValueError(f"which must be 'forward' or 'reverse', got {which!r}")
    (t0, t1), (s0, s1) = cfg["t_range"], cfg["s_range"]
    ts = np.linspace(t0, t1, int(cfg["nt"]))
    ss = np.linspace(s0, s1, int(cfg["ns"]))
    grid = kernel_grid(kcfg, ts, ss, which)
    rows = [
        {"t": t, "s": s, "real": grid[i, j].real, "imag": grid[i, j].imag}
        for i, t in enumerate(ts)
        for j, s in enumerate(ss)
    ]
    peak = float(np.max(np.abs(grid)))
    meta = _meta("kernel", cfg, {"max_abs": peak})
    write_table(_out_path(cfg, f"kernel_{which}.csv"), rows, meta)
    heatmap_figure(
        _out_path(cfg, f"kernel_{which}.png"),
        grid,
        extent=(s0, s1, t0, t1),
        xlabel="s",
        ylabel="t",
        title=f"{which} kernel, {scheme.name}, tau={cfg['tau']:g}",
    )
    print(f"kernel grid {grid.shape}, max |K| = {peak:.6g}")
    return 0


def _run_reconstruct(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    tau, delta, eps = cfg["tau"], cfg["delta"], cfg["eps"]
    kcfg = kernel_config(scheme, tau, delta, eps)
    spectrum = make_transport_spectrum(int(cfg["modes"]))
    rng = np.random.default_rng(cfg["seed"])
    n = len(spectrum)
    raw = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y0 = bandpass(State(spectrum, raw), FilterBand(0.0, delta / tau))
    rows = []
    worst = 0.0
    for t in cfg["times"]:
        approx, details = continuous_from_discrete(kcfg, y0, float(t), details=True)
        exact = evolve_continuous(y0, float(t))
        err = State(spectrum, approx.coefficients - exact.coefficients).norm()
        rel = err / exact.norm()
        worst = max(worst, rel)
        rows.append(
            {
                "t": float(t),
                "rel_error": rel,
                "abs_error": err,
                "tail_estimate": details["tail_estimate"],
                "k_lo": details["k_lo"],
                "k_hi": details["k_hi"],
            }
        )
    meta = _meta(
        "reconstruct", cfg, {"max_rel_error": worst, "target": cfg["tol"]}
    )
    write_table(_out_path(cfg, "reconstruct.csv"), rows, meta)
    line_figure(
        _out_path(cfg, "reconstruct.png"),
        [r["t"] for r in rows],
        {"relative error": [r["rel_error"] for r in rows]},
        xlabel="t",
        ylabel="relative error",
        title=f"flow reconstruction, {scheme.name}, tau={tau:g}",
        logy=True,
    )
    print(f"max relative error {worst:.3e} (target {cfg['tol']:g})")
    return 0 if worst <= cfg["tol"] else 3


def _run_obs_sweep(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    delta, horizon = cfg["delta"], cfg["T"]
    taus = cfg["tau_ladder"]
    modes = cfg["modes"]
    if modes is None:
        modes = int(math.ceil(delta / (2 * math.pi * min(taus)))) + 2
    spectrum = make_transport_spectrum(int(modes))
    sweep = uniformity_sweep(
        spectrum, point_obs_transport, scheme, delta, horizon, taus
    )
    cs = [r["C_obs"] for r in sweep.rows]
    variation = max(cs) / min(cs) - 1.0
    achieved = {"C_obs_variation": variation}
    if cfg["max_variation"] is not None:
        achieved["target_variation"] = cfg["max_variation"]
    write_table(
        _out_path(cfg, "obs_sweep.csv"),
        sweep.rows,
        _meta("obs-sweep", cfg, achieved),
        columns=["member", "tau", "T", "delta", "lambda_min", "lambda_max", "C_obs", "modes"],
    )
    line_figure(
        _out_path(cfg, "obs_sweep.png"),
        [r["tau"] for r in sweep.rows],
        {"C_obs": cs},
        xlabel="tau",
        ylabel="C_obs",
        title=f"observability sweep, {scheme.name}, T={horizon:g}, delta={delta:g}",
        logx=True,
        logy=True,
    )
    print(f"C_obs across ladder: {', '.join('%.6g' % c for c in cs)}")
    print(f"variation {variation * 100:.1f}%")
    if cfg["max_variation"] is not None and variation > cfg["max_variation"]:
        return 3
    return 0


def _run_sharpness(cfg: dict) -> int:
    decay = packet_mass_decay(cfg["tau_ladder"], cfg["delta"], cfg["x0"], cfg["eps"])
    rows = [
        {"tau": t, "norm_sq": n, "outside_mass": m}
        for t, n, m in zip(decay.taus, decay.norms_sq, decay.outside_masses)
    ]
    limit = 1.0 / (2 * math.pi)
    achieved = {
        "mass_decay_slope": decay.slope,
        "norm_sq_smallest_tau": float(decay.norms_sq[-1]),
        "norm_sq_limit": limit,
    }
    write_table(_out_path(cfg, "sharpness.csv"), rows, _meta("sharpness", cfg, achieved))
    line_figure(
        _out_path(cfg, "sharpness.png"),
        list(decay.taus),
        {"outside mass": list(decay.outside_masses)},
        xlabel="tau",
        ylabel="mass outside the ball",
        title=f"packet concentration, delta={cfg['delta']:g}, radius={cfg['eps']:g}",
        logx=True,
        logy=True,
    )
    print(
        f"outside-mass decay slope {decay.slope:.2f}; "
        f"norm_sq at tau={decay.taus[-1]:g} is {decay.norms_sq[-1]:.6g} "
        f"(limit {limit:.6g})"
    )
    if cfg["min_slope"] is not None and decay.slope < cfg["min_slope"]:
        return 3
    return 0


def _run_ingham(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    rows = []
    for tau in cfg["tau_ladder"]:
        tau = float(tau)
        # the frequency set 2 pi Z fills the band per tau unless a fixed
        # truncation is requested; collapse below the threshold needs the
        # growing set
        if cfg["modes"] is None:
            n = int(math.floor(cfg["delta"] / (2 * math.pi * tau)))
        else:
            n = int(cfg["modes"])
        freqs = [2 * math.pi * j for j in range(-n, n + 1)]
        b = ingham_bounds(freqs, scheme, tau, cfg["delta"], cfg["T"])
        rows.append(
            {
                "tau": tau,
                "T": cfg["T"],
                "modes": len(freqs),
                "lower": b.lower,
                "upper": b.upper,
                "gap": b.gap,
                "threshold": b.threshold,
            }
        )
    achieved = {"threshold": rows[0]["threshold"]}
    write_table(_out_path(cfg, "ingham.csv"), rows, _meta("ingham", cfg, achieved))
    line_figure(
        _out_path(cfg, "ingham.png"),
        [r["tau"] for r in rows],
        {"lower frame bound": [r["lower"] for r in rows]},
        xlabel="tau",
        ylabel="frame bound",
        title=f"discrete frame bounds, {scheme.name}, T={cfg['T']:g}",
        logx=True,
        logy=True,
    )
    state = "above" if cfg["T"] > rows[0]["threshold"] else "below"
    print(
        f"T={cfg['T']:g} is {state} the threshold {rows[0]['threshold']:.4g}; "
        f"lower bounds: {', '.join('%.4g' % r['lower'] for r in rows)}"
    )
    return 0


def _run_weak_obs(cfg: dict) -> int:
    scheme = parse_scheme(cfg["scheme"])
    report = liouville_check(cfg["x0"], cfg["r"], int(cfg["j_max"]))
    print(
        f"liouville check at x0={cfg['x0']:.12g}, r={cfg['r']:g}: "
        f"{'pass' if report.passed else 'FAIL'} "
        f"(min margin {report.min_margin:.3e}, C growth {report.growth:.3f}, "
        f"worst j={report.witness_j})"
    )
    sweep = weak_obs_sweep(
        cfg["x0"], scheme, cfg["delta"], cfg["T"], cfg["tau_ladder"]
    )
    achieved = {
        "liouville_passed": report.passed,
        "liouville_best_c": report.best_c,
        "lambda_min": [r["lambda_min"] for r in sweep.rows],
    }
    write_table(
        _out_path(cfg, "weak_obs.csv"),
        sweep.rows,
        _meta("weak-obs", cfg, achieved),
    )
    line_figure(
        _out_path(cfg, "weak_obs.png"),
        [r["tau"] for r in sweep.rows],
        {"lambda_min": [r["lambda_min"] for r in sweep.rows]},
        xlabel="tau",
        ylabel="smallest generalized eigenvalue",
        title=f"weak observability, x0={cfg['x0']:.6g}, T={cfg['T']:g}",
        logx=True,
        logy=True,
    )
    for row in sweep.rows:
        print(
            f"tau={row['tau']:<10g} modes={row['modes']:<5d} "
            f"lambda_min={row['lambda_min']:.6g}"
        )
    return 0 if report.passed else 3


_HANDLERS = {
    "certify": _run_certify,
    "kernel": _run_kernel,
    "reconstruct": _run_reconstruct,
    "obs-sweep": _run_obs_sweep,
    "sharpness": _run_sharpness,
    "ingham": _run_ingham,
    "weak-obs": _run_weak_obs,
}


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON config document; flags override it")
    sub.add_argument("--out", help="output directory (default: report)")
    sub.add_argument("--seed", type=int, help="seed for randomized checks")
    sub.add_argument("--scheme", help="midpoint | gauss4 | newmark:<beta>")
    sub.add_argument("--tau", type=float, help="time step")
    sub.add_argument("--tau-ladder", dest="tau_ladder", help="comma-separated steps")
    sub.add_argument("--delta", type=float, help="filtering parameter")
    sub.add_argument("--eps", type=float, help="cutoff margin / ball radius")
    sub.add_argument("--T", type=float, dest="T", help="time horizon")
    sub.add_argument("--modes", type=int, help="spectrum truncation")
    sub.add_argument("--x0", type=float, help="observation point in (0, 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obslab",
        description="Conservative discretization laboratory: kernels, "
        "reconstructions, and observability sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"obslab {__version__}")
    subs = parser.add_subparsers(dest="experiment", required=True)

    p = subs.add_parser("certify", help="check the phase map hypotheses of a scheme")
    _add_common(p)

    p = subs.add_parser("kernel", help="tabulate a transfer kernel on a (t, s) grid")
    _add_common(p)
    p.add_argument("--which", choices=["forward", "reverse"])
    p.add_argument("--t-range", dest="t_range", help="t0,t1")
    p.add_argument("--s-range", dest="s_range", help="s0,s1")
    p.add_argument("--nt", type=int, help="grid points in t")
    p.add_argument("--ns", type=int, help="grid points in s")

    p = subs.add_parser(
        "reconstruct", help="rebuild the flow from scheme samples and measure the error"
    )
    _add_common(p)
    p.add_argument("--times", help="comma-separated evaluation times")
    p.add_argument("--tol", type=float, help="relative error target")

    p = subs.add_parser("obs-sweep", help="observability constants along a tau ladder")
    _add_common(p)
    p.add_argument(
        "--max-variation",
        dest="max_variation",
        type=float,
        help="fail (exit 3) if C_obs varies by more than this fraction",
    )

    p = subs.add_parser("sharpness", help="concentrated packet norms and escape mass")
    _add_common(p)
    p.add_argument(
        "--min-slope",
        dest="min_slope",
        type=float,
        help="fail (exit 3) if the mass decay slope is smaller",
    )

    p = subs.add_parser("ingham", help="frame bounds of discrete exponentials")
    _add_common(p)

    p = subs.add_parser("weak-obs", help="string point observation in the weak norm")
    _add_common(p)
    p.add_argument("--r", type=float, help="weight exponent for the margin check")
    p.add_argument("--j-max", dest="j_max", type=int, help="margin check range")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective(args, args.experiment)
        return _HANDLERS[args.experiment](cfg)
    except (ValueError, FrequencyOutOfSchemeDomain, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
