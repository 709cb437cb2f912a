"""Batch front end.

Builds models from a config file, runs the sweep drivers, and writes
block-structured CSV plus a JSON manifest per subcommand.  Quick-look PNG
renders are produced next to the data unless --no-figures is given; the
CSV stays the primary artifact.  Exit codes: 0 success, 2 config error,
3 numerical failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import acceptance, csvio, electro, figures, infline, nhh, strobo, zeno
from . import model as model_mod
from .config import ConfigError, ExperimentConfig, load_config
from .core import (
    CorrectionInvalidError,
    FdtlabError,
    InvalidModelError,
    QuantumModel,
    ResonanceError,
)

# stroboscopic line amplitudes need Bessel orders up to 2 tau n
_LINE_ARG_CAP = 5000.0


# ---------------------------------------------------------------------------
# config plumbing


def _config_digest(cfg: ExperimentConfig) -> str:
    doc = dataclasses.asdict(cfg)
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=list).encode()
    ).hexdigest()[:16]


def _build_model(cfg: ExperimentConfig, seed_override: int | None) -> QuantumModel:
    spec = cfg.model
    kind = spec["kind"]
    gamma = float(spec.get("gamma", 1.0))
    detect = int(spec.get("detect_site", 0))
    if kind == "ring":
        return model_mod.build_ring(int(spec["sites"]), gamma=gamma, detect_site=detect)
    if kind == "gue":
        seed = int(spec["seed"]) if seed_override is None else seed_override
        return model_mod.build_gue(int(spec["dim"]), seed, gamma=gamma, detect_site=detect)
    if kind == "file":
        return model_mod.load_model(spec["path"])
    raise ConfigError(f"model kind {kind!r} has no finite-dimensional builder")


def _initial_state(model: QuantumModel, cfg: ExperimentConfig) -> np.ndarray:
    spec = cfg.initial
    kind = spec.get("kind", "site")
    dim = model.dim
    if kind == "site":
        idx = int(spec.get("index", 0))
        if not 0 <= idx < dim:
            raise ConfigError(f"initial.index {idx} outside dimension {dim}")
        return model_mod.site_state(dim, idx)
    if kind == "uniform":
        return model_mod.uniform_state(dim)
    if kind == "vector":
        re = np.asarray(spec.get("real", ()), dtype=float)
        im = np.asarray(spec.get("imag", np.zeros_like(re)), dtype=float)
        if re.size != dim or im.size != dim:
            raise ConfigError(f"initial vector length must equal dimension {dim}")
        vec = re + 1j * im
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise ConfigError("initial vector has zero norm")
        return vec / norm
    if kind == "perturbed":
        site = int(spec.get("site", spec.get("index", 0)))
        if not 0 <= site < dim:
            raise ConfigError(f"initial.site {site} outside dimension {dim}")
        perp = model_mod.site_state(dim, site)
        if abs(np.vdot(model.psi_detect, perp)) > 1e-9:
            raise ConfigError("initial.site must be orthogonal to the detected state")
        return model_mod.perturbed_state(model.psi_detect, perp, float(spec["epsilon"]))
    raise ConfigError(f"unknown initial state kind {kind!r}")


def _prepared(cfg: ExperimentConfig, seed_override: int | None):
    """Model with the configured launch state, plus its spectral reduction."""
    model = _build_model(cfg, seed_override)
    model = model_mod.with_initial_state(model, _initial_state(model, cfg))
    tol = cfg.tolerances
    data = model_mod.spectral_charges(
        model,
        merge_tol=float(tol.get("merge_tol", 1e-9)),
        drop_tol=float(tol.get("drop_tol", 1e-12)),
    )
    return model, data


def _line_xi(cfg: ExperimentConfig) -> int:
    spec = cfg.initial
    if spec.get("kind", "site") != "site":
        raise ConfigError("line models take a site initial state (distance from the detector)")
    xi = int(spec.get("index", 0))
    if xi < 0:
        raise ConfigError("line site index must be >= 0")
    return xi


def _problem_label(overlap: complex) -> str | None:
    if abs(abs(overlap) - 1.0) < 1e-9:
        return "return"
    if abs(overlap) < 1e-9:
        return "transition"
    return None


def _out_dir(cfg: ExperimentConfig | None, args) -> str:
    out = args.out or (cfg.out_dir if cfg is not None else "out")
    os.makedirs(out, exist_ok=True)
    return out


def _manifest(out: str, name: str, cfg: ExperimentConfig | None, args, entries: dict) -> None:
    doc = {"subcommand": name}
    if cfg is not None:
        doc["config_digest"] = _config_digest(cfg)
    if args.seed is not None:
        doc["seed"] = args.seed
    doc.update(entries)
    csvio.write_manifest(os.path.join(out, f"{name}_manifest.json"), doc)


def _gnuplot_script(out: str, csv_name: str, n_blocks: int, logy: bool,
                    using: str = "1:2") -> None:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
    ]
    if logy:
        lines.append("set logscale y")
    lines.append(
        f"plot for [i=0:{max(n_blocks - 1, 0)}] '{csv_name}' "
        f"index i using {using} with linespoints"
    )
    with open(os.path.join(out, "plot.gp"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _WarnLog:
    """Collect warning messages so the manifest can report them."""

    def __enter__(self):
        self._cm = warnings.catch_warnings(record=True)
        self._records = self._cm.__enter__()
        warnings.simplefilter("always")
        return self

    def __exit__(self, *exc):
        return self._cm.__exit__(*exc)

    @property
    def messages(self) -> list[str]:
        return sorted({str(r.message) for r in self._records})


# ---------------------------------------------------------------------------
# pdf


def _pdf_blocks_discrete(cfg, model, data, wlog):
    stop = float(cfg.t_grid["stop"])
    count = int(cfg.t_grid["count"])
    problem = _problem_label(data.overlap)
    zd = None
    if problem is not None:
        zd = electro.zeno_data(data)
    blocks = []
    curves_by_tau = {}
    for tau in cfg.tau:
        curves = {}
        n_pts = max(1, min(cfg.n_max, int(round(stop / tau))))
        ser = strobo.renewal_amplitudes(data, tau, n_pts)
        curves["strobo"] = (ser.times, ser.probabilities / tau)
        blocks.append((f"strobo tau={tau:g}",
                       {"t": ser.times, "density": ser.probabilities / tau}))
        t = np.linspace(0.0, stop, count)
        ev = nhh.evolve_nhh(model, tau, t)
        curves["nhh"] = (t, ev.density)
        blocks.append((f"nhh tau={tau:g}", {"t": t, "density": ev.density}))
        if problem == "return":
            corr = 4.0 * ev.density
            curves["corrected"] = (t, corr)
            blocks.append((f"corrected tau={tau:g}", {"t": t, "density": corr}))
        if zd is not None:
            zp = zeno.zeno_pdf(zd, tau, t, kind="strobo", problem=problem,
                               overlap=data.overlap)
            curves["zeno"] = (t, zp.density)
            blocks.append((f"zeno tau={tau:g}", {"t": t, "density": zp.density}))
            if zp.point_masses:
                blocks.append((f"zeno-point-mass tau={tau:g}",
                               {"t": [m[0] for m in zp.point_masses],
                                "mass": [m[1] for m in zp.point_masses]}))
        curves_by_tau[tau] = curves
    return blocks, curves_by_tau


def _pdf_blocks_line(cfg, wlog):
    xi = _line_xi(cfg)
    stop = float(cfg.t_grid["stop"])
    count = int(cfg.t_grid["count"])
    blocks = []
    curves_by_tau = {}
    for tau in cfg.tau:
        curves = {}
        n_pts = max(1, min(cfg.n_max, int(round(stop / tau)),
                           int(_LINE_ARG_CAP / tau)))
        ser = infline.line_strobo_series(xi, tau, n_pts)
        curves["strobo"] = (ser.times, ser.probabilities / tau)
        blocks.append((f"strobo tau={tau:g}",
                       {"t": ser.times, "density": ser.probabilities / tau}))
        t = np.linspace(stop / count, stop, count)
        psi = infline.line_psi(xi, t, tau)
        dens = (4.0 / tau) * np.abs(psi) ** 2
        curves["nhh"] = (t, dens)
        blocks.append((f"nhh tau={tau:g}", {"t": t, "density": dens}))
        if xi == 0:
            curves["corrected"] = (t, 4.0 * dens)
            blocks.append((f"corrected tau={tau:g}", {"t": t, "density": 4.0 * dens}))
        curves_by_tau[tau] = curves
    return blocks, curves_by_tau


def run_pdf(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    with _WarnLog() as wlog:
        if cfg.model["kind"] == "line":
            blocks, curves_by_tau = _pdf_blocks_line(cfg, wlog)
        else:
            model, data = _prepared(cfg, args.seed)
            blocks, curves_by_tau = _pdf_blocks_discrete(cfg, model, data, wlog)
    path = os.path.join(out, "pdf.csv")
    csvio.write_blocks(path, blocks, preamble=(
        "first-detection density curves, one block per (framework, tau)",
        "t = time; density = first-detection probability density",
    ))
    _manifest(out, "pdf", cfg, args, {
        "files": ["pdf.csv"],
        "columns": {"t": "time since launch",
                    "density": "first-detection density; stroboscopic rows are "
                               "the per-probe weight divided by tau",
                    "mass": "discrete probe-time point mass (first probe)"},
        "warnings": wlog.messages,
    })
    if not args.no_figures:
        for tau, curves in curves_by_tau.items():
            figures.pdf_figure(os.path.join(out, f"pdf_tau{tau:g}.png"), tau, curves)
    if args.gnuplot:
        _gnuplot_script(out, "pdf.csv", len(blocks), logy=True)
    return 0


# ---------------------------------------------------------------------------
# stats


_STAT_NAMES = ("p_det", "mean", "var")


def _stat_rows(tau, framework, st, note=""):
    vals = {"p_det": st.p_det, "mean": st.mean}
    if st.moments.size >= 2:
        vals["var"] = st.variance
    return [
        {"tau": tau, "framework": framework, "statistic": k, "value": v,
         "valid": 1, "note": note}
        for k, v in vals.items()
    ]


def _flag_rows(tau, framework, note, stats=_STAT_NAMES):
    return [
        {"tau": tau, "framework": framework, "statistic": k, "value": math.nan,
         "valid": 0, "note": note}
        for k in stats
    ]


def _stats_cell_discrete(cfg, model, data, zd, tau, framework):
    tail_tol = float(cfg.tolerances.get("tail_tol", 1e-9))
    problem = _problem_label(data.overlap)
    if framework == "strobo":
        note = ""
        try:
            strobo.check_resonance(data, tau)
        except ResonanceError as exc:
            note = f"resonant: {exc}"
        st = strobo.converged_stats(
            lambda n: strobo.renewal_amplitudes(data, tau, n),
            m_max=cfg.m_max, n_start=256, tail_tol=tail_tol,
        )
        return _stat_rows(tau, framework, st, note)
    if framework == "nhh":
        st = nhh.nhh_stats(nhh.nhh_poles(data, tau), m_max=cfg.m_max)
        return _stat_rows(tau, framework, st)
    if framework == "zeno":
        if problem is None:
            return _flag_rows(tau, framework,
                              "limit formulas need a pure return or orthogonal launch")
        st = zeno.zeno_stats(zd, tau, cfg.m_max, kind="strobo",
                             problem=problem, overlap=data.overlap)
        return _stat_rows(tau, framework, st)
    if framework == "corrected":
        base = nhh.nhh_stats(nhh.nhh_poles(data, tau), m_max=cfg.m_max)
        p_corr, mom_corr = zeno.correction_map(base.p_det, base.moments)
        st = type(base)(p_det=p_corr, moments=mom_corr)
        return _stat_rows(tau, framework, st)
    raise FdtlabError(f"unknown framework {framework!r}")


def _stats_cell_line(cfg, xi, tau, framework):
    if framework == "strobo":
        n_pts = max(1, min(cfg.n_max, int(_LINE_ARG_CAP / tau)))
        ser = infline.line_strobo_series(xi, tau, n_pts)
        st = strobo.stats(ser, m_max=cfg.m_max)
        return _stat_rows(tau, framework, st)
    if framework == "nhh":
        p = infline.pdet_closed(tau, xi)
        mean = infline.mean_t_closed(tau, xi)
        return [
            {"tau": tau, "framework": framework, "statistic": "p_det",
             "value": p, "valid": 1, "note": ""},
            {"tau": tau, "framework": framework, "statistic": "mean",
             "value": mean, "valid": 1, "note": ""},
        ]
    if framework == "corrected":
        p = infline.pdet_closed(tau, xi)
        mean = infline.mean_t_closed(tau, xi)
        p_corr = 4.0 * p - 3.0
        if p_corr <= 0.0:
            return _flag_rows(tau, framework,
                              "corrected detection probability not positive",
                              stats=("p_det", "mean"))
        return [
            {"tau": tau, "framework": framework, "statistic": "p_det",
             "value": p_corr, "valid": 1, "note": ""},
            {"tau": tau, "framework": framework, "statistic": "mean",
             "value": mean * 4.0 * p / p_corr, "valid": 1, "note": ""},
        ]
    if framework == "zeno":
        return _flag_rows(tau, framework,
                          "no discrete slow-mode data on the infinite line",
                          stats=("p_det", "mean"))
    raise FdtlabError(f"unknown framework {framework!r}")


def run_stats(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    line_model = cfg.model["kind"] == "line"
    with _WarnLog() as wlog:
        if line_model:
            xi = _line_xi(cfg)
            ctx = (xi,)
        else:
            model, data = _prepared(cfg, args.seed)
            zd = electro.zeno_data(data) if "zeno" in cfg.frameworks else None
            ctx = (model, data, zd)

        def cell(tau, framework):
            try:
                if line_model:
                    return _stats_cell_line(cfg, ctx[0], tau, framework)
                return _stats_cell_discrete(cfg, ctx[0], ctx[1], ctx[2], tau, framework)
            except (CorrectionInvalidError, ResonanceError, FdtlabError) as exc:
                return _flag_rows(tau, framework, f"{type(exc).__name__}: {exc}")

        cells = [(tau, fw) for tau in cfg.tau for fw in cfg.frameworks]
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                results = list(pool.map(lambda c: cell(*c), cells))
        else:
            results = [cell(*c) for c in cells]
    rows = [row for group in results for row in group]
    rows.sort(key=lambda r: (r["tau"], r["framework"], r["statistic"]))
    path = os.path.join(out, "stats.csv")
    csvio.write_blocks(path, [("stats", {
        "tau": [r["tau"] for r in rows],
        "framework": [r["framework"] for r in rows],
        "statistic": [r["statistic"] for r in rows],
        "value": [r["value"] for r in rows],
        "valid": [r["valid"] for r in rows],
        # the note shares the delimited file, so it must stay comma-free
        "note": [(r["note"] or "-").replace(",", ";") for r in rows],
    })], preamble=(
        "detection statistics sweep, one row per (tau, framework, statistic)",
    ))
    _manifest(out, "stats", cfg, args, {
        "files": ["stats.csv"],
        "columns": {"tau": "probe period",
                    "framework": "strobo | nhh | zeno | corrected",
                    "statistic": "p_det | mean | var (mean and var conditioned on detection)",
                    "value": "statistic value; nan when valid = 0",
                    "valid": "1 when the cell evaluated, 0 when flagged",
                    "note": "flag reason, '-' when clean"},
        "warnings": wlog.messages,
    })
    if not args.no_figures:
        figures.sweep_figure(os.path.join(out, "stats.png"),
                             [r for r in rows if r["valid"]])
    if args.gnuplot:
        _gnuplot_script(out, "stats.csv", 1, logy=False, using="1:4")
    return 0


# ---------------------------------------------------------------------------
# zeno


def run_zeno(cfg: ExperimentConfig, args) -> int:
    if cfg.model["kind"] == "line":
        raise ConfigError("the zeno subcommand needs a finite-dimensional model")
    out = _out_dir(cfg, args)
    with _WarnLog() as wlog:
        model, data = _prepared(cfg, args.seed)
        problem = _problem_label(data.overlap)
        if problem is None:
            raise ConfigError(
                "the zeno subcommand needs a pure return or orthogonal launch state")
        zd = electro.zeno_data(data)
        blocks = [
            ("modes", {"omega": zd.omega, "rate": zd.rates,
                       "theta_re": zd.theta.real, "theta_im": zd.theta.imag}),
            ("scales", {"tau_zeno": [zd.tau_zeno], "omega_fast": [zd.omega_fast]}),
        ]
        stats_rows = []
        stop = float(cfg.t_grid["stop"])
        count = int(cfg.t_grid["count"])
        curves_by_tau = {}
        for tau in cfg.tau:
            t = np.linspace(stop / count, stop, count)
            curves = {}
            for kind in ("strobo", "nhh"):
                zp = zeno.zeno_pdf(zd, tau, t, kind=kind, problem=problem,
                                   overlap=data.overlap)
                label = "zeno" if kind == "strobo" else "nhh"
                curves[label] = (t, zp.density)
                blocks.append((f"{kind} tau={tau:g}", {"t": t, "density": zp.density}))
                if zp.point_masses:
                    blocks.append((f"{kind}-point-mass tau={tau:g}",
                                   {"t": [m[0] for m in zp.point_masses],
                                    "mass": [m[1] for m in zp.point_masses]}))
                st = zeno.zeno_stats(zd, tau, cfg.m_max, kind=kind,
                                     problem=problem, overlap=data.overlap)
                for row in _stat_rows(tau, kind, st):
                    stats_rows.append(row)
            curves_by_tau[tau] = curves
        blocks.append(("stats", {
            "tau": [r["tau"] for r in stats_rows],
            "kind": [r["framework"] for r in stats_rows],
            "statistic": [r["statistic"] for r in stats_rows],
            "value": [r["value"] for r in stats_rows],
        }))
    path = os.path.join(out, "zeno.csv")
    csvio.write_blocks(path, blocks, preamble=(
        "frequent-detection limit: slow modes, limiting densities, statistics",
    ))
    _manifest(out, "zeno", cfg, args, {
        "files": ["zeno.csv"],
        "columns": {"omega": "slow-mode frequency",
                    "rate": "slow-mode decay rate per probe period",
                    "theta_re/theta_im": "transition amplitude of the slow mode",
                    "tau_zeno": "Zeno time of the detected state",
                    "omega_fast": "fast-mode frequency",
                    "t": "time", "density": "limiting first-detection density",
                    "mass": "first-probe point mass"},
        "problem": problem,
        "warnings": wlog.messages,
    })
    if not args.no_figures:
        for tau, curves in curves_by_tau.items():
            figures.pdf_figure(os.path.join(out, f"zeno_tau{tau:g}.png"), tau, curves)
    if args.gnuplot:
        _gnuplot_script(out, "zeno.csv", len(blocks), logy=True)
    return 0


# ---------------------------------------------------------------------------
# electro-grid


def run_electro_grid(cfg: ExperimentConfig, args) -> int:
    if cfg.model["kind"] == "line":
        raise ConfigError("the electro-grid subcommand needs a finite-dimensional model")
    if cfg.grid is None:
        raise ConfigError("electro-grid needs a grid section in the config")
    out = _out_dir(cfg, args)
    g = cfg.grid
    xs = np.linspace(float(g["x_min"]), float(g["x_max"]), int(g["nx"]))
    ys = np.linspace(float(g["y_min"]), float(g["y_max"]), int(g["ny"]))
    with _WarnLog() as wlog:
        model, data = _prepared(cfg, args.seed)
        blocks = [("frequencies", {"omega": electro.absorption_frequencies(data)})]
        first_grids = {}
        # potential_grid returns (len(ys), len(xs)); flatten y-major to match
        mesh_y, mesh_x = np.meshgrid(ys, xs, indexing="ij")
        for tau in cfg.tau:
            for kind in ("strobo", "nhh"):
                v, gx, gy = electro.potential_grid(data, tau, kind, xs, ys)
                if tau == cfg.tau[0]:
                    first_grids[kind] = v
                blocks.append((f"potential {kind} tau={tau:g}", {
                    "x": mesh_x.ravel(), "y": mesh_y.ravel(),
                    "v": v.ravel(), "gx": gx.ravel(), "gy": gy.ravel(),
                }))
    path = os.path.join(out, "grid.csv")
    csvio.write_blocks(path, blocks, preamble=(
        "2d logarithmic potential of the spectral charges, row-major over (x, y)",
        "omega block: stationary points on the frequency axis",
    ))
    _manifest(out, "electro-grid", cfg, args, {
        "files": ["grid.csv"],
        "columns": {"x/y": "evaluation point", "v": "potential (nan at a charge)",
                    "gx/gy": "potential gradient",
                    "omega": "stationary frequencies between neighbouring levels"},
        "warnings": wlog.messages,
    })
    if not args.no_figures and first_grids:
        figures.grid_figure(os.path.join(out, "grid.png"), xs, ys,
                            first_grids["strobo"], first_grids["nhh"])
    if args.gnuplot:
        _gnuplot_script(out, "grid.csv", len(blocks), logy=False, using="1:3")
    return 0


# ---------------------------------------------------------------------------
# infline


def run_infline(cfg: ExperimentConfig, args) -> int:
    if cfg.model["kind"] != "line":
        raise ConfigError("the infline subcommand needs model.kind = 'line'")
    out = _out_dir(cfg, args)
    closed_rows = {"xi": [], "tau": [], "p_det": [], "mean": []}
    grid_rows = {"xi": [], "tau": [], "n_used": [], "p_sum": [], "mean": []}
    fig_rows = []
    with _WarnLog() as wlog:
        for xi in cfg.xi:
            for tau in cfg.tau:
                p = infline.pdet_closed(tau, xi)
                mean = infline.mean_t_closed(tau, xi)
                closed_rows["xi"].append(int(xi))
                closed_rows["tau"].append(tau)
                closed_rows["p_det"].append(p)
                closed_rows["mean"].append(mean)
                fig_rows.append({"quantity": f"closed xi={xi}", "statistic": "p_det",
                                 "tau": tau, "value": p})
                fig_rows.append({"quantity": f"closed xi={xi}", "statistic": "mean",
                                 "tau": tau, "value": mean})
                n_pts = max(1, min(cfg.n_max, int(_LINE_ARG_CAP / tau)))
                ser = infline.line_strobo_series(int(xi), tau, n_pts)
                st = strobo.stats(ser, m_max=1)
                grid_rows["xi"].append(int(xi))
                grid_rows["tau"].append(tau)
                grid_rows["n_used"].append(n_pts)
                grid_rows["p_sum"].append(st.p_det)
                grid_rows["mean"].append(st.mean)
                fig_rows.append({"quantity": f"probe-grid xi={xi}", "statistic": "p_det",
                                 "tau": tau, "value": st.p_det})
                fig_rows.append({"quantity": f"probe-grid xi={xi}", "statistic": "mean",
                                 "tau": tau, "value": st.mean})
        blocks = [("closed", closed_rows), ("probe-grid", grid_rows)]
        manifest_extra = {}
        if 0 in tuple(int(x) for x in cfg.xi):
            gap = {"tau": [], "p_grid": [], "p_corrected": [], "gap": []}
            for tau in cfg.tau:
                n_pts = max(1, min(cfg.n_max, int(_LINE_ARG_CAP / tau)))
                p_grid = strobo.stats(
                    infline.line_strobo_series(0, tau, n_pts), m_max=1).p_det
                p_corr = 4.0 * infline.pdet_closed(tau, 0) - 3.0
                gap["tau"].append(tau)
                gap["p_grid"].append(p_grid)
                gap["p_corrected"].append(p_corr)
                gap["gap"].append(abs(p_grid - p_corr))
            blocks.append(("gap", gap))
            small = [(t, d) for t, d in zip(gap["tau"], gap["gap"])
                     if t <= 0.3 and d > 0]
            if len(small) >= 3:
                ts, ds = zip(*small)
                manifest_extra["gap_exponent"] = float(
                    np.polyfit(np.log(ts), np.log(ds), 1)[0])
    path = os.path.join(out, "infline.csv")
    csvio.write_blocks(path, blocks, preamble=(
        "infinite-line detection: closed forms, probe-grid sums, framework gap",
    ))
    _manifest(out, "infline", cfg, args, {
        "files": ["infline.csv"],
        "columns": {"xi": "launch distance from the detector",
                    "tau": "probe period",
                    "p_det": "closed-form detection probability (absorbing frame)",
                    "mean": "closed-form or probe-grid conditioned mean",
                    "n_used": "probe-grid truncation",
                    "p_sum": "truncated probe-grid detection probability",
                    "p_grid/p_corrected/gap": "probe-grid sum vs corrected closed "
                                              "form and their absolute gap"},
        "warnings": wlog.messages,
        **manifest_extra,
    })
    if not args.no_figures:
        figures.line_figure(os.path.join(out, "infline.png"), fig_rows)
    if args.gnuplot:
        _gnuplot_script(out, "infline.csv", len(blocks), logy=False)
    return 0


# ---------------------------------------------------------------------------
# perturb


def run_perturb(cfg: ExperimentConfig, args) -> int:
    if cfg.model["kind"] == "line":
        raise ConfigError("the perturb subcommand needs a finite-dimensional model")
    out = _out_dir(cfg, args)
    tail_tol = float(cfg.tolerances.get("tail_tol", 1e-9))
    with _WarnLog() as wlog:
        base = _build_model(cfg, args.seed)
        perp = _initial_state(base, cfg)
        if abs(np.vdot(base.psi_detect, perp)) > 1e-9:
            raise ConfigError(
                "perturb needs an initial state orthogonal to the detected state")
        trans_data = model_mod.spectral_charges(model_mod.with_initial_state(base, perp))
        zd = electro.zeno_data(trans_data)
        w = trans_data.w
        return_model = model_mod.with_initial_state(base, base.psi_detect.copy())

        rows = {"tau": [], "mode": [], "epsilon": [], "formula": [],
                "simulated": [], "rel_dev": []}
        fig_rows = []

        def add(tau, mode, eps, formula, simulated):
            rows["tau"].append(tau)
            rows["mode"].append(mode)
            rows["epsilon"].append(eps)
            rows["formula"].append(formula)
            rows["simulated"].append(simulated)
            rel = abs(formula / simulated - 1.0) if simulated else math.nan
            rows["rel_dev"].append(rel)
            fig_rows.append({"mode": mode, "epsilon": eps, "value": formula})
            fig_rows.append({"mode": f"{mode}-sim", "epsilon": eps, "value": simulated})

        formula_modes = [m for m in cfg.modes if m != "shifted"]
        for tau in cfg.tau:
            for eps in cfg.epsilon:
                if formula_modes:
                    psi = model_mod.perturbed_state(base.psi_detect, perp, eps)
                    pdata = model_mod.spectral_charges(
                        model_mod.with_initial_state(base, psi))
                    sim = strobo.converged_stats(
                        lambda n: strobo.renewal_amplitudes(pdata, tau, n),
                        m_max=1, tail_tol=tail_tol).mean
                    for mode in formula_modes:
                        if mode == "uniform":
                            val = zeno.perturbed_return_moments(zd, tau, eps, 1,
                                                                mode="uniform")
                            add(tau, mode, eps, val, sim)
                        elif mode == "naive":
                            deep, _ = zeno.perturbed_return_moments(zd, tau, eps, 1,
                                                                     mode="state")
                            add(tau, mode, eps, deep, sim)
                        elif mode == "state":
                            deep, near = zeno.perturbed_return_moments(
                                zd, tau, eps, 1, mode="state")
                            add(tau, "state-deep", eps, deep, sim)
                            add(tau, "state-near", eps, near, sim)
                if "shifted" in cfg.modes and eps < 1.0:
                    st = strobo.converged_stats(
                        lambda n: strobo.shifted_direct_amplitudes(
                            return_model, tau, eps, n),
                        m_max=1, tail_tol=tail_tol)
                    sim = st.mean - eps * tau      # probe times are (n - eps) tau
                    add(tau, "shifted", eps,
                        zeno.shifted_protocol_mean(tau, eps, w), sim)
    path = os.path.join(out, "perturb.csv")
    csvio.write_blocks(path, [("perturb", rows)], preamble=(
        "perturbation sweeps: limit formulas against renewal simulation",
    ))
    _manifest(out, "perturb", cfg, args, {
        "files": ["perturb.csv"],
        "columns": {"tau": "probe period",
                    "mode": "formula family (uniform | naive | state-deep | "
                            "state-near | shifted)",
                    "epsilon": "perturbation amplitude, or grid shift for 'shifted'",
                    "formula": "limit-formula mean",
                    "simulated": "renewal-simulation mean",
                    "rel_dev": "relative deviation of formula from simulation"},
        "warnings": wlog.messages,
    })
    if not args.no_figures:
        figures.perturb_figure(os.path.join(out, "perturb.png"), fig_rows)
    if args.gnuplot:
        _gnuplot_script(out, "perturb.csv", 1, logy=False)
    return 0


# ---------------------------------------------------------------------------
# validate


def run_validate(cfg: ExperimentConfig | None, args) -> int:
    out = _out_dir(cfg, args)
    records = []
    if cfg is not None and cfg.model["kind"] == "file":
        try:
            model_mod.load_model(cfg.model["path"])
            records.append({"id": 0, "name": "model-load", "passed": True,
                            "target": "model file parses and satisfies the "
                                      "hermiticity/normalization checks",
                            "detail": {"path": cfg.model["path"]}, "seconds": 0.0})
        except (FdtlabError, OSError) as exc:
            records.append({"id": 0, "name": "model-load", "passed": False,
                            "target": "model file parses and satisfies the "
                                      "hermiticity/normalization checks",
                            "detail": {"path": cfg.model["path"],
                                       "error": f"{type(exc).__name__}: {exc}"},
                            "seconds": 0.0})
    records.extend(acceptance.run_all())
    path = os.path.join(out, "validate.jsonl")
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    n_fail = sum(not r["passed"] for r in records)
    for rec in records:
        status = "PASS" if rec["passed"] else "FAIL"
        print(f"[{rec['id']:2d}] {rec['name']:26s} {status}  ({rec['seconds']:.2f}s)")
    print(f"{len(records) - n_fail}/{len(records)} checks passed; report: {path}")
    return 0 if n_fail == 0 else 4


# ---------------------------------------------------------------------------
# entry point


def _add_common(sp, config_required=True):
    sp.add_argument("--config", required=config_required, metavar="PATH",
                    help="experiment config file (JSON)")
    sp.add_argument("--out", metavar="DIR", default=None,
                    help="output directory (default: config out_dir)")
    sp.add_argument("--threads", type=int, default=1, metavar="N",
                    help="worker threads for independent sweep cells")
    sp.add_argument("--seed", type=lambda s: int(s, 0), default=None, metavar="U64",
                    help="override the random-matrix seed")
    sp.add_argument("--no-figures", action="store_true",
                    help="skip the PNG quick-look renders")
    sp.add_argument("--gnuplot", action="store_true",
                    help="also write a gnuplot script referencing the CSVs")


_HANDLERS = {
    "pdf": run_pdf,
    "stats": run_stats,
    "zeno": run_zeno,
    "electro-grid": run_electro_grid,
    "infline": run_infline,
    "perturb": run_perturb,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fdtlab",
        description="first-detection-time sweeps: probe-grid, absorbing, "
                    "limiting and corrected frameworks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        _add_common(sub.add_parser(name))
    _add_common(sub.add_parser("validate"), config_required=False)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "validate":
            return run_validate(cfg, args)
        return _HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvalidModelError as exc:
        # bad model inputs are a config problem, not a numerical one
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FdtlabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001  keep batch runs diagnosable
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
