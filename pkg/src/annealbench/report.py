"""Report bundle: CSV tables, plot-ready JSON series and PNG figures."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.ticker import MaxNLocator

from . import plotting
from .harness import I_OPT, SUMMARY_COLUMNS, U_OPT, SweepResult, optimize_jf, series_label
from .stats import ScalingFit, write_fits_json, write_json, write_rows_csv


@dataclass
class ReportBundle:
    directory: Path
    files: dict[str, Path] = field(default_factory=dict)


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


def _setting_tag(setting) -> str:
    return setting.replace("_", ".") if isinstance(setting, str) else f"{setting:g}"


def _series(result: SweepResult, t: float, fit_by_label: dict) -> list[dict]:
    out = []
    settings: list = list(result.j_f_grid)
    optima = {}
    if len(result.j_f_grid) >= 2:
        for mode in (U_OPT, I_OPT):
            optima[mode] = optimize_jf(result, mode, t)
            settings.append(mode)
    for setting in settings:
        label = series_label(result.machine, t, _setting_tag(setting))
        fit = fit_by_label.get(label)
        points = []
        for n in result.sizes:
            b = result.bootstrap(n, t, setting) if not isinstance(setting, str) else optima[setting][n].boot
            points.append({"n": n, "median": b.median, "boot_mean": b.mean, "ci_low": b.low, "ci_high": b.high})
        out.append({
            "machine": result.machine,
            "anneal_time_us": t,
            "setting": _setting_tag(setting),
            "label": label if fit else "",
            "alpha": fit.alpha if fit else None,
            "stderr": _finite_or_none(fit.stderr_alpha) if fit else None,
            "t0": fit.t0 if fit else None,
            "points": points,
        })
    return out


def _heatmap(result: SweepResult, t: float) -> dict:
    grid = result.j_f_grid
    med = [[result.bootstrap(n, t, j).median for j in grid] for n in result.sizes]
    best = {}
    if len(grid) >= 2:
        opt = optimize_jf(result, U_OPT, t)
        best = {str(n): opt[n].j_f[0] for n in result.sizes}
    return {"machine": result.machine, "anneal_time_us": t, "sizes": result.sizes,
            "j_f_grid": grid, "median_tts": med, "u_opt_j_f": best}


def _opt_rows(result: SweepResult) -> list[dict]:
    rows = []
    if len(result.j_f_grid) < 2:
        return rows
    for t in result.anneal_times:
        for mode in (U_OPT, I_OPT):
            for n, o in optimize_jf(result, mode, t).items():
                counts = Counter(o.j_f)
                rows.append({
                    "machine": result.machine, "n": n, "anneal_time_us": t, "mode": mode,
                    "j_f": ";".join(f"{j:g}:{counts[j]}" for j in sorted(counts, key=abs)),
                    "median_tts": o.boot.median, "boot_mean_tts": o.boot.mean,
                    "ci_low": o.boot.low, "ci_high": o.boot.high,
                })
    return rows


def _comparison_rows(results: Sequence[SweepResult], fit_by_label: dict) -> list[dict]:
    """Default coupling versus optimised coupling, per machine and anneal time."""
    rows = []
    for r in results:
        ref = r.plan.reference_j_f
        settings = [ref] if ref in r.j_f_grid else []
        if len(r.j_f_grid) >= 2:
            settings += [U_OPT, I_OPT]
        for t in r.anneal_times:
            for s in settings:
                fit = fit_by_label.get(series_label(r.machine, t, _setting_tag(s)))
                opt = optimize_jf(r, s, t) if isinstance(s, str) else None
                for n in r.sizes:
                    b = opt[n].boot if opt else r.bootstrap(n, t, s)
                    rows.append({
                        "machine": r.machine, "anneal_time_us": t,
                        "setting": "default" if not isinstance(s, str) else s,
                        "j_f": f"{s:g}" if not isinstance(s, str) else "", "n": n,
                        "median_tts": b.median, "ci_low": b.low, "ci_high": b.high,
                        "alpha": fit.alpha if fit else "",
                        "stderr": fit.stderr_alpha if fit else "",
                    })
    return rows


def _alpha_text(entry: dict) -> str:
    if entry["alpha"] is None:
        return ""
    err = entry["stderr"]
    return f" (alpha={entry['alpha']:.3f}" + (f"+/-{err:.3f})" if err is not None else ")")


def _plot_series(ax, entry: dict, style: str = "o-") -> None:
    pts = [p for p in entry["points"] if math.isfinite(p["median"])]
    if not pts:
        return
    n = [p["n"] for p in pts]
    med = [p["median"] for p in pts]
    (line,) = ax.plot(n, med, style, label=f"{entry['setting']}{_alpha_text(entry)}")
    lo = [p["ci_low"] for p in pts]
    hi = [p["ci_high"] if math.isfinite(p["ci_high"]) else np.nan for p in pts]
    ax.fill_between(n, lo, hi, color=line.get_color(), alpha=0.15, linewidth=0)


def _tts_figure(series: list[dict], machine: str, path: Path) -> Path:
    times = sorted({s["anneal_time_us"] for s in series})
    fig, axes = plotting.figure(width=3.2 * len(times), ncols=len(times))
    for ax, t in zip(axes, times):
        for entry in series:
            if entry["anneal_time_us"] == t:
                _plot_series(ax, entry, "s--" if entry["setting"] in ("u.opt", "i.opt") else "o-")
        ax.set_yscale("log")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_xlabel("problem size n")
        ax.set_ylabel("median TTS (us)")
        ax.set_title(f"{machine}, t = {t:g} us")
        plotting.despine(ax)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(frameon=False)
    return plotting.save(fig, path)


def _heatmap_figure(hm: dict, path: Path) -> Path:
    data = np.array(hm["median_tts"], dtype=float)
    shown = np.where(np.isfinite(data), np.log10(np.where(np.isfinite(data), data, 1.0)), np.nan)
    fig, axes = plotting.figure(width=4.5)
    ax = axes[0]
    im = ax.imshow(shown, aspect="auto", origin="lower", cmap="viridis")
    ax.set_xticks(range(len(hm["j_f_grid"])), [f"{j:g}" for j in hm["j_f_grid"]], rotation=45)
    ax.set_yticks(range(len(hm["sizes"])), [str(n) for n in hm["sizes"]])
    ax.set_xlabel("chain coupling")
    ax.set_ylabel("problem size n")
    ax.set_title(f"{hm['machine']}, t = {hm['anneal_time_us']:g} us")
    for i, j in zip(*np.nonzero(~np.isfinite(data))):
        ax.text(j, i, "inf", ha="center", va="center", fontsize=8)
    for i, n in enumerate(hm["sizes"]):
        best = hm["u_opt_j_f"].get(str(n))
        if best is not None:
            ax.plot(hm["j_f_grid"].index(best), i, "w*", markersize=7)
    fig.colorbar(im, ax=ax, label="log10 median TTS (us)")
    return plotting.save(fig, path)


def _comparison_figure(series: list[dict], results: Sequence[SweepResult], path: Path) -> Path:
    fig, axes = plotting.figure(width=4.5)
    ax = axes[0]
    for r in results:
        t = min(r.anneal_times)
        for entry in series:
            if entry["machine"] != r.machine or entry["anneal_time_us"] != t:
                continue
            if entry["setting"] == f"{r.plan.reference_j_f:g}":
                _plot_series(ax, {**entry, "setting": f"{r.machine} default"}, "o-")
            elif entry["setting"] == "u.opt":
                _plot_series(ax, {**entry, "setting": f"{r.machine} u.opt"}, "s--")
    ax.set_yscale("log")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("problem size n")
    ax.set_ylabel("median TTS (us)")
    ax.set_title("machine comparison (shortest anneal time)")
    plotting.despine(ax)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    return plotting.save(fig, path)


def emit_report(results: Sequence[SweepResult], fits: Sequence[ScalingFit], out_dir: str | Path,
                figures: bool = True) -> ReportBundle:
    if not results:
        raise ValueError("need at least one result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = ReportBundle(out)
    fit_by_label = {f.label: f for f in fits}

    rows = [row for r in results for row in r.summary_rows()]
    bundle.files["summary"] = write_rows_csv(rows, out / "tts_summary.csv", SUMMARY_COLUMNS)
    opt_rows = [row for r in results for row in _opt_rows(r)]
    bundle.files["optimized"] = write_rows_csv(
        opt_rows, out / "jf_optimized.csv",
        ("machine", "n", "anneal_time_us", "mode", "j_f", "median_tts", "boot_mean_tts", "ci_low", "ci_high"))
    bundle.files["comparison"] = write_rows_csv(
        _comparison_rows(results, fit_by_label), out / "comparison.csv",
        ("machine", "anneal_time_us", "setting", "j_f", "n", "median_tts", "ci_low", "ci_high", "alpha", "stderr"))
    bundle.files["fits"] = write_fits_json(list(fits), out / "fits.json")

    series = [s for r in results for t in r.anneal_times for s in _series(r, t, fit_by_label)]
    bundle.files["series"] = write_json(series, out / "series.json")
    heatmaps = [_heatmap(r, t) for r in results for t in r.anneal_times]
    bundle.files["heatmaps"] = write_json(heatmaps, out / "heatmaps.json")

    if figures:
        for r in results:
            mine = [s for s in series if s["machine"] == r.machine]
            bundle.files[f"tts_{r.machine}"] = _tts_figure(mine, r.machine, out / f"tts_vs_n_{r.machine}.png")
        for hm in heatmaps:
            if len(hm["j_f_grid"]) >= 2:
                key = f"heatmap_{hm['machine']}_t{hm['anneal_time_us']:g}"
                bundle.files[key] = _heatmap_figure(hm, out / f"{key}.png")
        bundle.files["comparison_figure"] = _comparison_figure(series, results, out / "comparison.png")
    return bundle
