from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from annealbench.harness import scaling_fits
from annealbench.report import emit_report
from synth import exponential, synthetic_result


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def two_machines():
    a = exponential(0.3, times=(1.0, 5.0), profile="Advantage", grid=(-0.4, -1.0))
    b = exponential(0.5, times=(1.0,), profile="2000Q", grid=(-0.75, -1.0), penalty=0.5)
    return [a, b]


def test_bundle_contents(two_machines, tmp_path):
    fits = [f for r in two_machines for f in scaling_fits(r)]
    bundle = emit_report(two_machines, fits, tmp_path / "rep")
    names = {p.name for p in bundle.files.values()}
    assert {"tts_summary.csv", "jf_optimized.csv", "comparison.csv", "fits.json", "series.json",
            "heatmaps.json", "tts_vs_n_Advantage.png", "tts_vs_n_2000Q.png", "heatmap_Advantage_t1.png",
            "heatmap_Advantage_t5.png", "heatmap_2000Q_t1.png", "comparison.png"} == names
    for p in bundle.files.values():
        assert p.exists() and p.stat().st_size > 0
        if p.suffix == ".png":
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_comparison_table_default_versus_optimised(two_machines, tmp_path):
    fits = [f for r in two_machines for f in scaling_fits(r)]
    emit_report(two_machines, fits, tmp_path, figures=False)
    rows = read_csv(tmp_path / "comparison.csv")
    assert {r["machine"] for r in rows} == {"Advantage", "2000Q"}
    adv = [r for r in rows if r["machine"] == "Advantage" and r["anneal_time_us"] == "1.0" and r["n"] == "8"]
    by = {r["setting"]: r for r in adv}
    assert set(by) == {"default", "u_opt", "i_opt"}
    # the default coupling is twice as slow as the optimum on this data
    assert float(by["default"]["median_tts"]) == pytest.approx(2 * float(by["u_opt"]["median_tts"]))
    assert by["default"]["j_f"] == "-1"
    # on the second machine the reference coupling is already optimal
    q = [r for r in rows if r["machine"] == "2000Q" and r["n"] == "10"]
    assert len({r["median_tts"] for r in q}) == 1
    assert float(q[0]["alpha"]) == pytest.approx(0.5)


def test_optimised_table(two_machines, tmp_path):
    emit_report(two_machines, [], tmp_path, figures=False)
    rows = read_csv(tmp_path / "jf_optimized.csv")
    adv = [r for r in rows if r["machine"] == "Advantage"]
    assert len(adv) == 3 * 2 * 2
    assert all(r["j_f"] == ("-0.4:1" if r["mode"] == "u_opt" else "-0.4:5") for r in adv)
    assert {r["j_f"] for r in rows if r["machine"] == "2000Q" and r["mode"] == "u_opt"} == {"-1:1"}


def test_heatmap_json_marks_optimum(two_machines, tmp_path):
    emit_report(two_machines, [], tmp_path, figures=False)
    heat = json.loads((tmp_path / "heatmaps.json").read_text())
    hm = next(h for h in heat if h["machine"] == "Advantage" and h["anneal_time_us"] == 5.0)
    assert hm["sizes"] == [8, 10, 12] and hm["j_f_grid"] == [-0.4, -1.0]
    assert hm["u_opt_j_f"] == {"8": -0.4, "10": -0.4, "12": -0.4}
    assert np.allclose(np.array(hm["median_tts"])[:, 0], 5 * np.exp(0.3 * np.array([8, 10, 12])))


def test_series_without_fits_have_no_alpha_labels(two_machines, tmp_path):
    emit_report(two_machines, [], tmp_path, figures=True)
    series = json.loads((tmp_path / "series.json").read_text())
    assert series and all(s["label"] == "" and s["alpha"] is None for s in series)
    assert json.loads((tmp_path / "fits.json").read_text()) == []


def test_series_with_fits_are_labelled(two_machines, tmp_path):
    fits = scaling_fits(two_machines[0])
    emit_report(two_machines[:1], fits, tmp_path, figures=False)
    series = json.loads((tmp_path / "series.json").read_text())
    labelled = {s["label"]: s for s in series if s["label"]}
    assert "alpha[Advantage,5us,u.opt]" in labelled
    assert labelled["alpha[Advantage,5us,u.opt]"]["alpha"] == pytest.approx(0.3)
    pts = labelled["alpha[Advantage,1us,-1]"]["points"]
    assert [p["n"] for p in pts] == [8, 10, 12]
    assert all(p["ci_low"] <= p["median"] <= p["ci_high"] for p in pts)


def test_unsolved_cells_survive_reporting(tmp_path):
    tab = {(n, 1.0): np.array([[10.0 * n, math.inf]] * 3) for n in (8, 10)}
    r = synthetic_result(tab)
    bundle = emit_report([r], scaling_fits(r), tmp_path)
    heat = json.loads((tmp_path / "heatmaps.json").read_text())
    assert heat[0]["median_tts"][0][1] == "inf"
    assert bundle.files["heatmap_Advantage_t1"].exists()
    rows = read_csv(tmp_path / "tts_summary.csv")
    assert {r["median_tts"] for r in rows if r["j_f"] == "-1.0"} == {"inf"}


def test_empty_results_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], [], tmp_path)
