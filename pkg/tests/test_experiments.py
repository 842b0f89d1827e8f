import math
import os

import numpy as np
import pytest

from lfamilies.exceptions import ConfigError, InputError, NumericalCheckError, UnsupportedError
from lfamilies.experiments import (ExperimentConfig, RunReport, compare, expected_central_order,
                                   family_curves, family_overlay, fit_exponent, run, write_report)


def cfg(**kw):
    return ExperimentConfig(**kw)


# ---------------------------------------------------------------- configuration

def test_config_text_parsing():
    c = ExperimentConfig.from_text(
        "experiment = ensemble_density  # inline comment\n"
        "# full-line comment\n"
        "seed = 7\nkind = interaction\nforced = 3\ndimension = 20\n"
        "grid = 0:2:10\nsemistable = false\nladder = 11, 21, 31, 41\nT = none\n"
    )
    assert c.seed == 7 and c.forced == 3 and c.dimension == 20
    assert c.grid == (0.0, 2.0, 10)
    assert c.semistable is False
    assert c.ladder == (11, 21, 31, 41)
    assert c.T is None
    c = ExperimentConfig.from_text("grid = 0, 0.5, 2, 5\nseed = 1")
    assert c.grid == (0.0, 0.5, 2.0, 5.0)


@pytest.mark.parametrize("text", [
    "colour = blue",
    "samples = many",
    "samples = 0",
    "kind = gue",
    "statistic = triple",
    "method = gibbs",
    "family_sign = 0",
    "ordering = height",
    "grid = 0:1:0",
    "grid = 2:1:5",
    "experiment = everything",
    "X = 0",
    "not a key value line",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_seed_is_mandatory_for_runs():
    c = ExperimentConfig.from_text("dimension = 10")
    with pytest.raises(ConfigError):
        c.validate()
    with pytest.raises(ConfigError):
        run(c)
    assert c.replace(seed=3).validate().seed == 3


def test_config_file_and_roundtrip(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 5\nkind = so_odd\ndimension = 9\n")
    c = ExperimentConfig.from_file(p)
    assert ExperimentConfig.from_mapping(c.to_dict()).to_dict() == c.to_dict()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.cfg")


# ---------------------------------------------------------------- exponent fit

def test_fit_exponent_exact_power_law():
    x = np.array([11, 21, 31, 41, 51, 61], float)
    slope, half, icpt = fit_exponent(x, 2.5 * x ** 0.75, 0.01 * x ** 0.75)
    assert slope == pytest.approx(0.75, abs=1e-12)
    assert icpt == pytest.approx(math.log(2.5), abs=1e-12)
    assert 0 < half < 0.05  # interval comes from the quoted 1% errors


def test_fit_exponent_interval_covers_truth(rng):
    x = np.array([11, 21, 31, 41, 51, 61], float)
    covered = 0
    for _ in range(200):
        m = x ** 1.0
        se = 0.03 * m
        slope, half, _ = fit_exponent(x, m + rng.normal(size=x.size) * se, se)
        covered += abs(slope - 1.0) <= half
    assert covered >= 180


def test_fit_exponent_rejects_bad_input():
    with pytest.raises(ConfigError):
        fit_exponent([1, 2, 3], [1, 2, 3], [0.1] * 3)
    with pytest.raises(NumericalCheckError):
        fit_exponent([1, 2, 3, 4], [1, -2, 3, 4], [0.1] * 4)


# ---------------------------------------------------------------- family pairing

def test_family_pairing():
    assert family_overlay("F1", 1) == ("so_even", 0)
    assert family_overlay("F1", -1) == ("so_odd", 0)
    assert family_overlay("F2", 1) == ("so_even", 0)
    assert family_overlay("f2", -1) == ("so_even", 0)
    assert expected_central_order("F1", 1) == 0
    assert expected_central_order("F1", -1) == 1
    assert expected_central_order("F2", 1) == 2
    assert expected_central_order("F2", -1) == 1


def test_family_curves_selection():
    c = cfg(experiment="ec_density", seed=1, family="F1", X=2 * 10 ** 4, family_sign=-1)
    curves, counts = family_curves(c, 1)
    assert len(curves) > 5 and counts["examined"] >= len(curves)
    from lfamilies.ellcurve import root_number
    assert all(root_number(x) == -1 for x in curves)
    sub, _ = family_curves(c.replace(max_curves=5), 1)
    assert len(sub) == 5 and set(sub) <= set(curves)
    small = c.replace(X=2000)
    with pytest.raises(UnsupportedError):
        family_curves(small.replace(semistable=False), 1)


def test_box_sampling_stops_when_box_is_exhausted():
    c = cfg(experiment="ec_density", seed=1, family="F1", X=2000, family_sign=-1)
    everything, _ = family_curves(c, 1)
    sampled, counts = family_curves(c.replace(max_curves=len(everything) + 5), 1)
    assert counts.get("sampled_from_box") and set(sampled) == set(everything)


def test_family_box_sampling_is_seeded():
    c = cfg(experiment="ec_density", seed=1, family="F1", X=1e9, family_sign=1, max_curves=6)
    a, counts = family_curves(c, 11)
    b, _ = family_curves(c, 11)
    assert a == b and len(a) == 6 and counts["sampled_from_box"]
    assert all(abs(x.a) <= 1000 and abs(x.b) <= 31622 for x in a)


# ---------------------------------------------------------------- runs and reports

def ensemble_report(kind, r, seed=3, samples=3000, grid=(0.0, 3.0, 30), **kw):
    c = cfg(experiment="ensemble_density", seed=seed, kind=kind, forced=r, dimension=kw.pop("M", 20 + r),
            samples=samples, grid=grid, chains=32, units=4, **kw)
    return run(c)


def test_ensemble_density_overlay_by_model():
    rep = ensemble_report("interaction", 2)
    (name, t), = rep.tables.items()
    assert rep.overlays[f"{name}_model"].label == "interaction_r2"
    assert rep.discrepancy[name]["max"] < 5
    assert t.sample_count == 3000
    rep = ensemble_report("so_odd", 0, M=21, method="direct")
    assert list(rep.overlays.values())[0].label == "so_odd"
    rep = ensemble_report("unitary", 0, M=20, method="direct", statistic="pair")
    assert not rep.overlays  # no overlay for two-point statistics


def test_compare_self_is_zero():
    rep = ensemble_report("interaction", 1, samples=1000)
    out = compare(rep, rep)
    (entry,) = out.values()
    assert entry["max_abs_z"] == 0
    assert entry["ks_pvalue"] == pytest.approx(1.0)


def test_compare_models():
    # I_r (+) SO(21) against SO(21 + r) conditioned on r eigenvalues at 1: same number of free angles
    ind1 = ensemble_report("independent", 1, seed=4, M=22, samples=4000, method="direct")
    int1 = ensemble_report("interaction", 1, seed=5, M=21, samples=4000)
    (e,) = compare(ind1, int1).values()
    assert e["max_abs_z"] < 5
    ind3 = ensemble_report("independent", 3, seed=6, M=24, samples=4000, method="direct")
    int3 = ensemble_report("interaction", 3, seed=7, M=23, samples=4000)
    (e,) = compare(ind3, int3).values()
    assert e["max_abs_z"] > 5
    assert e["ks_pvalue"] < 1e-6


def test_compare_grid_mismatch():
    a = ensemble_report("interaction", 1, samples=200)
    b = ensemble_report("interaction", 1, samples=200, grid=(0.0, 3.0, 20))
    with pytest.raises(InputError):
        compare(a, b)


def read_all(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d)) if f != "timing.json"}


def test_thread_count_does_not_change_output(tmp_path):
    c = cfg(experiment="ensemble_density", seed=9, kind="interaction", forced=2, dimension=12,
            samples=800, chains=16, units=4)
    write_report(run(c, threads=1), tmp_path / "one")
    write_report(run(c, threads=2), tmp_path / "two")
    assert read_all(tmp_path / "one") == read_all(tmp_path / "two")


def test_report_roundtrip(tmp_path):
    rep = ensemble_report("interaction", 1, samples=500)
    write_report(rep, tmp_path)
    assert {"report.json", "timing.json", "unfolded.csv"} <= set(os.listdir(tmp_path))
    back = RunReport.from_dir(tmp_path)
    (name, t), = rep.tables.items()
    np.testing.assert_array_equal(back.tables[name].heights, t.heights)
    np.testing.assert_array_equal(back.unfolded[name], rep.unfolded[name])
    assert back.seed == rep.seed and back.config == rep.to_dict()["config"]


def test_sample_run_writes_angles(tmp_path):
    c = cfg(experiment="sample", seed=2, kind="so_even", dimension=8, samples=10, units=2, method="direct")
    rep = run(c)
    header, rows = rep.extra_csv["samples.csv"]
    assert header == ("sample", "j", "angle") and len(rows) == 40
    assert all(0 <= r[2] <= math.pi for r in rows)


def test_analytic_run():
    rep = run(cfg(experiment="analytic", seed=0, kind="interaction", forced=3, grid=(0, 2, 8)))
    (curve,) = rep.overlays.values()
    assert curve.label == "interaction_r3" and curve.values.size == 8
    with pytest.raises(ConfigError):
        run(cfg(experiment="analytic", seed=0, overlay="gue"))


def test_ec_density_run_and_replay(tmp_path):
    c = cfg(experiment="ec_density", seed=4, family="F1", X=1e6, family_sign=-1, max_curves=6,
            grid=(0.0, 1.5, 6))
    rep = run(c)
    assert rep.counts["used"] + rep.counts["dropped"] == rep.counts["selected"] == 6
    assert sum(rep.counts["central_order_histogram"].values()) == rep.counts["used"]
    assert rep.overlays and list(rep.overlays.values())[0].label == "so_odd"
    write_report(rep, tmp_path / "a")
    write_report(run(c, threads=2), tmp_path / "b")
    assert read_all(tmp_path / "a") == read_all(tmp_path / "b")
    header = open(tmp_path / "a" / "zeros.csv").readline().strip()
    assert header == "curve,j,gamma,bracket_width"
    with pytest.raises(NumericalCheckError):
        run(c.replace(X=1.0))


def test_ec_moments_run():
    c = cfg(experiment="ec_moments", seed=4, family="F1", family_sign=-1, max_curves=8,
            ladder=(1e5, 1e6, 1e7, 1e8))
    rep = run(c)
    assert len(rep.moments) == 4
    assert all(m["mean"] > 0 for m in rep.moments)
    assert rep.fits["exponent"]["regressor"] == "log X"
    assert "desk-scale" in rep.fits["exponent"]["note"]
