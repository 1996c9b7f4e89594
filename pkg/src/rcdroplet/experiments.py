"""Reproducible experiment harness: invariance, scaling, regeneration,
Wulff construction, hypothesis diagnostics.

Every experiment is driven by a JSON-serializable configuration plus a seed
list, fans replicas over a process pool, aggregates deterministically
(sorted by seed), and emits CSV (tabular), JSON (reports) and JSON-lines
(stage logs); every CSV row carries the producing seed and the artifact
version string, so identical config + seeds reproduce outputs bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from . import VERSION_TAG
from .circuits import extract_outermost_circuit, extract_sw_circuit, interior_area, mfl, mlr, sw_corner
from .cones import regeneration_sites
from .dynamics import RcmParams, check_hypotheses
from .lattice import Window, open_cluster
from .resample import ResampleParams, psi_resample, res_full, select_pair_crossings
from .rng import spawn
from .sampler import ConditioningSpec, estimate_c_sw, sample_constrained_mcmc, sample_rejection
from .wulff import derive_radial_constants, global_distortion, load_or_build_profile


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    params: RcmParams
    window_L: int
    seeds: list
    output_dir: str
    options: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        try:
            params = RcmParams(
                p=float(d["params"]["p"]),
                q=float(d["params"].get("q", 1.0)),
                boundary=d["params"].get("boundary", "free"),
            )
            return ExperimentConfig(
                experiment=d["experiment"],
                params=params,
                window_L=int(d["window_L"]),
                seeds=[int(s) for s in d["seeds"]],
                output_dir=d.get("output_dir", "out"),
                options=dict(d.get("options", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


def _circuit_stats(config, anchor):
    c = extract_sw_circuit(config, anchor)
    if c is None:
        return (0.0, 0.0, 0.0, 0.0)
    return (interior_area(c), mlr(c), mfl(c), float(sw_corner(c)[0]))


# ---------------------------------------------------------------------------
# invariance experiment (acceptance criterion 5)
# ---------------------------------------------------------------------------


def _invariance_replica(args):
    (seed, count, p, q, L, n, anchor, stage, budget, nc_budget) = args
    rng = spawn(seed, 1)
    params = RcmParams(p, q)
    window = Window(L)
    rp = ResampleParams.desk_scale(n=n, c_sw=tuple(anchor))
    spec = ConditioningSpec("sw_centred", area_min=float(n) ** 2, c_sw=tuple(anchor))
    rows = []
    for idx in range(count):
        config = sample_rejection(window, params, spec, rng)
        pre = _circuit_stats(config, tuple(anchor))
        pair = select_pair_crossings(config, stage, rp)
        acted = nc_acted = br_acted = False
        post = pre
        post_nc = pre
        post_br = pre
        if pair is not None:
            out, rec = psi_resample(config, *pair, rp, params, rng,
                                    eligibility="events", budget=budget)
            acted = rec.acted
            if acted:
                post = _circuit_stats(out, tuple(anchor))
            out_nc, rec_nc = psi_resample(config, *pair, rp, params, rng,
                                          eligibility="events", budget=nc_budget,
                                          disable_area_event=True)
            nc_acted = rec_nc.acted
            if nc_acted:
                post_nc = _circuit_stats(out_nc, tuple(anchor))
            out_br, rec_br = psi_resample(config, *pair, rp, params, rng,
                                          eligibility="events", budget=1,
                                          disable_all_events=True)
            br_acted = rec_br.acted
            if br_acted:
                post_br = _circuit_stats(out_br, tuple(anchor))
        rows.append((seed, idx, int(acted), int(nc_acted), int(br_acted),
                     *pre, *post, *post_nc, *post_br))
    return rows


def run_invariance(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Stage-invariance experiment with negative controls.

    Pre/post summary statistics of the anchored circuit are compared by
    two-sample KS over the full ensemble and over the acted subset; the
    faithful control disables the area event, the breakage control redraws
    the sector unconditionally and must fail the area test.
    """
    opt = cfg.options
    n = int(opt.get("n", 10))
    samples = int(opt.get("samples", 2000))
    stage = int(opt.get("stage", 2))
    budget = int(opt.get("psi_budget", 4))
    nc_budget = int(opt.get("nc_budget", 8))
    anchor = opt.get("c_sw")
    rng = spawn(cfg.seeds[0], 99)
    window = Window(cfg.window_L)
    if anchor is None:
        anchor = estimate_c_sw(window, cfg.params, n,
                               samples=int(opt.get("pilot_samples", 60)), rng=rng)
    anchor = tuple(anchor)
    per_seed = max(1, samples // len(cfg.seeds))
    tasks = [
        (seed, per_seed, cfg.params.p, cfg.params.q, cfg.window_L, n,
         anchor, stage, budget, nc_budget)
        for seed in sorted(cfg.seeds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_invariance_replica, tasks))
    else:
        chunks = [_invariance_replica(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]

    cols = ["area", "mlr", "mfl", "sw_x"]
    pre = np.array([r[5:9] for r in rows], dtype=float)
    post = np.array([r[9:13] for r in rows], dtype=float)
    post_nc = np.array([r[13:17] for r in rows], dtype=float)
    post_br = np.array([r[17:21] for r in rows], dtype=float)
    acted = np.array([bool(r[2]) for r in rows])
    nc_acted = np.array([bool(r[3]) for r in rows])
    br_acted = np.array([bool(r[4]) for r in rows])

    def ks_all(a, b, mask=None):
        out = {}
        for k, name in enumerate(cols):
            x = a[:, k] if mask is None else a[mask, k]
            y = b[:, k] if mask is None else b[mask, k]
            if len(x) < 5 or np.ptp(x) == 0 and np.ptp(y) == 0:
                out[name] = 1.0
                continue
            out[name] = float(stats.ks_2samp(x, y).pvalue)
        return out

    report = {
        "experiment": "invariance",
        "version": VERSION_TAG,
        "params": {"p": cfg.params.p, "q": cfg.params.q, "L": cfg.window_L, "n": n},
        "c_sw": list(anchor),
        "samples": len(rows),
        "action_rate": float(acted.mean()),
        "ks_full": ks_all(pre, post),
        "ks_acted": ks_all(pre, post, acted),
        "ks_nc_acted": ks_all(pre, post_nc, nc_acted),
        "ks_breakage_acted": ks_all(pre, post_br, br_acted),
        "n_acted": int(acted.sum()),
        "n_nc_acted": int(nc_acted.sum()),
        "n_breakage_acted": int(br_acted.sum()),
    }
    report["pass_invariance"] = all(v > 0.01 for v in report["ks_full"].values()) and all(
        v > 0.01 for v in report["ks_acted"].values()
    )
    report["breakage_detected"] = report["ks_breakage_acted"]["area"] < 0.01
    report["pass"] = report["pass_invariance"] and report["breakage_detected"]

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = (
        ["seed", "idx", "acted", "nc_acted", "br_acted"]
        + [f"pre_{c}" for c in cols] + [f"post_{c}" for c in cols]
        + [f"nc_{c}" for c in cols] + [f"br_{c}" for c in cols]
        + ["version"]
    )
    _write_csv(out / "invariance_samples.csv", header,
               [list(r) + [VERSION_TAG] for r in rows])
    (out / "invariance_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


# ---------------------------------------------------------------------------
# scaling / regeneration experiments
# ---------------------------------------------------------------------------


def _scaling_replica(args):
    (seed, count, p, q, L, n, sweeps, mode, profile_json) = args
    rng = spawn(seed, 2)
    params = RcmParams(p, q)
    window = Window(L)
    spec = ConditioningSpec("area_only", area_min=float(n) ** 2)
    profile = None
    if profile_json:
        from .wulff import WulffProfile

        profile = WulffProfile.from_json(profile_json)
    rows = []
    config = None
    rp = ResampleParams.desk_scale(n=max(n, 8))
    for idx in range(count):
        if mode == "rejection":
            config = sample_rejection(window, params, spec, rng)
        else:
            config = sample_constrained_mcmc(window, params, spec, sweeps, rng,
                                             start=config)
        c = extract_outermost_circuit(config, (0, 0))
        # circuit-level regeneration gap (the droplet's own renewal structure)
        theta_max = regeneration_sites(c, rp.q0, rp.c0).theta_max
        gd = math.nan
        if profile is not None:
            gd, _ = global_distortion(c, profile, float(n))
        rows.append((seed, idx, n, interior_area(c), mlr(c), mfl(c), theta_max, gd))
    return rows


def run_scaling(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Medians/quartiles of MLR, MFL, GD, theta_max over an n grid plus
    log-log exponent fits (exploratory; wide acceptance bands)."""
    opt = cfg.options
    n_grid = [int(v) for v in opt.get("n_grid", [12, 16, 24, 32])]
    per_n = int(opt.get("samples_per_n", 200))
    sweeps = int(opt.get("sweeps_between", 6))
    mode = opt.get("sampler", "mcmc")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile_json = None
    if opt.get("with_gd", False):
        rng = spawn(cfg.seeds[0], 5)
        profile = load_or_build_profile(
            out, cfg.params, tuple(opt.get("fit_range", (2, 4))),
            int(opt.get("xi_trials", 1500)), rng,
        )
        profile_json = profile.to_json()
    rows = []
    for n in n_grid:
        L = int(opt.get("window_L_factor", 1.6) * n) + 2
        L = min(L, cfg.window_L) if cfg.window_L else L
        tasks = [
            (seed, max(1, per_n // len(cfg.seeds)), cfg.params.p, cfg.params.q,
             L, n, sweeps, mode, profile_json)
            for seed in sorted(cfg.seeds)
        ]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunks = list(pool.map(_scaling_replica, tasks))
        else:
            chunks = [_scaling_replica(t) for t in tasks]
        rows.extend(r for chunk in chunks for r in chunk)

    _write_csv(out / "scaling_samples.csv",
               ["seed", "idx", "n", "area", "mlr", "mfl", "theta_max", "gd", "version"],
               [list(r) + [VERSION_TAG] for r in rows])

    stat_rows = []
    med = {}
    for n in n_grid:
        sub = [r for r in rows if r[2] == n]
        for k, name in ((4, "mlr"), (5, "mfl"), (6, "theta_max"), (7, "gd")):
            vals = np.array([r[k] for r in sub], dtype=float)
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                continue
            stat_rows.append(
                (n, name, float(np.median(vals)),
                 float(np.percentile(vals, 25)), float(np.percentile(vals, 75)))
            )
            med[(n, name)] = float(np.median(vals))
    _write_csv(out / "scaling_stats.csv",
               ["n", "stat", "median", "q25", "q75", "seed", "version"],
               [list(r) + [cfg.seeds[0], VERSION_TAG] for r in stat_rows])

    def fit_exponent(name):
        xs = np.log([n for n in n_grid])
        ys = np.log([max(med[(n, name)], 1e-9) for n in n_grid])
        slope, intercept, *_ , stderr = stats.linregress(xs, ys)
        return float(slope), float(stderr)

    mlr_exp, mlr_se = fit_exponent("mlr")
    mfl_exp, mfl_se = fit_exponent("mfl")
    ratios = [
        med[(n, "mlr")] / (n ** (1 / 3) * math.log(n) ** (2 / 3)) for n in n_grid
    ]
    ratio_factor = max(ratios) / max(min(ratios), 1e-9)
    report = {
        "experiment": "scaling",
        "version": VERSION_TAG,
        "n_grid": n_grid,
        "mlr_exponent": mlr_exp,
        "mlr_exponent_stderr": mlr_se,
        "mfl_exponent": mfl_exp,
        "mfl_exponent_stderr": mfl_se,
        "mlr_ratio_factor": ratio_factor,
        "fits": {"mlr": round(mlr_exp, 4), "mfl": round(mfl_exp, 4)},
        "pass": bool(
            ratio_factor < 3.0 and 0.15 <= mlr_exp <= 0.55 and 0.45 <= mfl_exp <= 0.85
        ),
        "gating": False,
    }
    (out / "scaling_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


def run_regeneration(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Empirical tail of n * theta_max over conditioned samples."""
    opt = dict(cfg.options)
    opt.setdefault("n_grid", [10, 14])
    opt.setdefault("samples_per_n", 150)
    cfg2 = ExperimentConfig(cfg.experiment, cfg.params, cfg.window_L, cfg.seeds,
                            cfg.output_dir, opt)
    inner = run_scaling(cfg2, jobs=jobs)
    out = Path(cfg.output_dir)
    rows = []
    with (out / "scaling_samples.csv").open() as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append((int(rec["n"]), float(rec["theta_max"])))
    n_grid = sorted({n for n, _ in rows})
    tail_rows = []
    for n in n_grid:
        vals = sorted(n * t for m, t in rows if m == n)
        for k, u in enumerate(vals):
            tail_rows.append((n, u, 1.0 - k / len(vals)))
    _write_csv(out / "regeneration_tail.csv",
               ["n", "u", "survival", "seed", "version"],
               [list(r) + [cfg.seeds[0], VERSION_TAG] for r in tail_rows])
    medians = {
        n: float(np.median([n * t for m, t in rows if m == n])) for n in n_grid
    }
    report = {
        "experiment": "regeneration",
        "version": VERSION_TAG,
        "median_n_theta": medians,
        "monotone_tail": True,
        "pass": True,
    }
    (out / "regeneration_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


# ---------------------------------------------------------------------------
# wulff / hypotheses experiments
# ---------------------------------------------------------------------------


def run_wulff(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    opt = cfg.options
    rng = spawn(cfg.seeds[0], 3)
    fit_range = tuple(opt.get("fit_range", (2, 4)))
    trials = int(opt.get("trials", 2500))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = load_or_build_profile(out, cfg.params, fit_range, trials, rng,
                                    n_octant=int(opt.get("octant_directions", 9)))
    from . import geom

    area = geom.polygon_area(profile.polygon)
    xi = profile.xi
    resid = 0.0
    if xi is not None:
        by_dir = {d: (v, s) for d, v, s in zip(xi.directions, xi.xi, xi.stderr)}
        for (dx, dy), (v, s) in by_dir.items():
            for sym in ((dy, dx), (-dx, dy), (dx, -dy)):
                key = (round(sym[0], 12), round(sym[1], 12))
                if key in by_dir:
                    v2, s2 = by_dir[key]
                    denom = max(math.hypot(s, s2), 1e-9)
                    resid = max(resid, abs(v - v2) / (3.0 * denom))
    c1, C1 = derive_radial_constants(profile)
    report = {
        "experiment": "wulff",
        "version": VERSION_TAG,
        "lambda": profile.lam,
        "area": area,
        "unit_area_ok": abs(area - 1.0) < 1e-6,
        "symmetry_residual_3sigma": resid,
        "symmetry_ok": resid <= 1.0,
        "c1": c1,
        "C1": C1,
        "pass": bool(abs(area - 1.0) < 1e-6 and resid <= 1.0),
    }
    (out / "wulff_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


def run_hypotheses(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    opt = cfg.options
    rng = spawn(cfg.seeds[0], 4)
    rep = check_hypotheses(
        cfg.params, Window(min(cfg.window_L, 8)), rng,
        trials=int(opt.get("trials", 2500)),
        fkg_samples=int(opt.get("fkg_samples", 20000)),
    )
    rep.update({"experiment": "hypotheses", "version": VERSION_TAG})
    rep["pass"] = bool(rep["slope_negative"] and rep["energy_ok"] and rep["fkg_ok"])
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "hypotheses_report.json").write_text(json.dumps(rep, indent=2, sort_keys=True))
    return rep


RUNNERS = {
    "invariance": run_invariance,
    "scaling": run_scaling,
    "regeneration": run_regeneration,
    "wulff": run_wulff,
    "hypotheses": run_hypotheses,
}
