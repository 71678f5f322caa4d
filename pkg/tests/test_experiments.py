import json
import math
import warnings

import numpy as np
import pytest

from starbodies.bodies import realize
from starbodies.errors import InvalidBody
from starbodies.experiments import (ExperimentConfig, calibrate_eps_quad,
                                    emit, emit_chain, generate_corpus,
                                    mc_measure, quadrature_measure,
                                    run_experiment, two_path_gap)

SPH_ELLIPSE = {"kind": "ellipsoid", "dim": 2, "geometry": "spherical",
               "axes": [0.9, 0.7]}
HYP_ELLIPSE = {"kind": "ellipsoid", "dim": 2, "geometry": "hyperbolic",
               "axes": [0.8, 0.6]}
EUC_TRIG = {"kind": "trig-radial", "dim": 2, "geometry": "euclidean",
            "a0": 1.0, "cos": [0.15], "sin": [0.0, 0.1]}


def quiet_run(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return run_experiment(cfg)


# -- config validation --------------------------------------------------------

def test_config_rejects_unknown_geometry():
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="minkowski", body={})


def test_config_rejects_unknown_mode():
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="euclidean", body={}, mode="replay")


def test_config_rejects_empty_schedule():
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="euclidean", body={}, iterations=0)
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="euclidean", body={}, schedule=[])


def test_config_rejects_bad_tolerances():
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="euclidean", body={}, eps_quad=-1e-9)
    with pytest.raises(InvalidBody):
        ExperimentConfig(geometry="euclidean", body={}, equality_band=0.0)


def test_config_zero_eps_quad_is_allowed():
    cfg = ExperimentConfig(geometry="euclidean", body={}, eps_quad=0.0)
    assert cfg.eps_quad == 0.0


def test_schedule_is_seed_deterministic():
    a = ExperimentConfig(geometry="euclidean", body={}, seed=9)
    b = ExperimentConfig(geometry="euclidean", body={}, seed=9)
    assert np.array_equal(a.directions(2), b.directions(2))
    assert np.allclose(np.linalg.norm(a.directions(2), axis=1), 1.0)


# -- tolerance calibration ----------------------------------------------------

def test_calibration_is_cached_and_sane():
    vals = {g: calibrate_eps_quad(g, 2, 720)
            for g in ("euclidean", "spherical", "hyperbolic")}
    for g, v in vals.items():
        assert 1e-12 < v < 1e-5, (g, v)
        assert calibrate_eps_quad(g, 2, 720) == v


# -- corpus generation --------------------------------------------------------

def test_corpus_caps_example():
    specs = generate_corpus(7, 3, "spherical", alphas=[0.3, 0.5, 0.7],
                            family="caps")
    assert specs == [
        {"kind": "ball", "dim": 2, "geometry": "spherical", "alpha": 0.3},
        {"kind": "ball", "dim": 2, "geometry": "spherical", "alpha": 0.5},
        {"kind": "ball", "dim": 2, "geometry": "spherical", "alpha": 0.7},
    ]


def test_corpus_is_deterministic():
    a = generate_corpus(7, 12, "hyperbolic", family="mixed")
    b = generate_corpus(7, 12, "hyperbolic", family="mixed")
    assert a == b
    assert generate_corpus(8, 12, "hyperbolic", family="mixed") != a


def test_corpus_trig_specs_all_pass_the_constructor():
    specs = generate_corpus(7, 50, "spherical", family="trig-radial",
                            degree=4)
    assert len(specs) == 50
    for spec in specs:
        assert spec["geometry"] == "spherical"
        assert len(spec.get("cos", [])) <= 4
        assert len(spec.get("sin", [])) <= 4
        body = realize(spec, 720)
        assert body.chart.r_in >= 0.1


def test_corpus_mixed_cycles_families():
    specs = generate_corpus(3, 8, "euclidean")
    kinds = [s["kind"] for s in specs]
    assert kinds == ["ball", "ellipsoid", "trig-radial", "trig-radial"] * 2
    assert all(s["geometry"] == "euclidean" for s in specs)


def test_corpus_rejects_bad_family():
    with pytest.raises(InvalidBody):
        generate_corpus(1, 4, "euclidean", family="moons")
    with pytest.raises(InvalidBody):
        generate_corpus(1, 4, "hyperbolic", family="caps")


# -- verification runs --------------------------------------------------------

def test_euclidean_run_has_unit_corrections_and_margin():
    cfg = ExperimentConfig(geometry="euclidean", body=EUC_TRIG, iterations=10,
                           seed=1)
    rep = quiet_run(cfg)
    assert rep.passed
    assert np.all(rep.petty.r_values == 1.0)
    assert rep.petty.margin > 1e-4
    assert not rep.petty.equality


def test_euclidean_ellipsoids_are_the_equality_case():
    cfg = ExperimentConfig(geometry="euclidean",
                           body={"kind": "ellipsoid", "dim": 2,
                                 "geometry": "euclidean", "axes": [1.1, 0.8]},
                           iterations=6, seed=1)
    rep = quiet_run(cfg)
    assert rep.passed
    assert rep.petty.equality


def test_spherical_run_report_verdicts():
    cfg = ExperimentConfig(geometry="spherical", body=SPH_ELLIPSE,
                           iterations=12, seed=2)
    rep = quiet_run(cfg)
    assert rep.passed and rep.monotone_ok and rep.measure_ok
    assert rep.petty.margin > 0
    assert rep.summary()["violations"] == 0
    assert rep.summary()["geometry"] == "spherical"


def test_converge_mode_requires_distance_decay():
    cfg = ExperimentConfig(geometry="hyperbolic", body=HYP_ELLIPSE,
                           iterations=40, seed=3, mode="converge")
    rep = quiet_run(cfg)
    assert rep.distance_ratio <= 0.05
    assert rep.overall_decreasing
    assert rep.passed


def test_zero_eps_quad_demonstrates_the_tolerance():
    # same run, tolerance on and off: the negative increments are pure
    # quadrature noise, orders below the genuine per-step growth
    body = dict(EUC_TRIG)
    on = quiet_run(ExperimentConfig(geometry="euclidean", body=body,
                                    iterations=30, seed=5))
    off = quiet_run(ExperimentConfig(geometry="euclidean", body=body,
                                     iterations=30, seed=5, eps_quad=0.0))
    assert on.passed and on.petty.violations == 0
    assert off.petty.violations >= 1
    assert not off.passed
    worst = float(np.diff(off.petty.polar_projection).min())
    assert -1e-6 < worst < 0


# -- chains -------------------------------------------------------------------

def test_chain_cap_is_the_equality_case():
    cfg = ExperimentConfig(geometry="spherical",
                           body={"kind": "ball", "dim": 2,
                                 "geometry": "spherical", "alpha": 0.7},
                           mode="chain")
    rep = quiet_run(cfg)
    assert rep.equality_case and rep.passed
    scale = abs(rep.values.body_scaled_perimeter)
    assert abs(rep.values.left_gap) <= 1e-8 * scale
    assert abs(rep.values.right_slack) <= 1e-8 * scale


def test_chain_asymmetric_body_has_slack():
    cfg = ExperimentConfig(geometry="hyperbolic", body=HYP_ELLIPSE,
                           mode="chain")
    rep = quiet_run(cfg)
    assert not rep.equality_case
    assert rep.passed
    assert rep.values.middle_slack >= -rep.eps_quad
    assert rep.values.right_slack > 1e-4


def test_chain_rejects_euclidean():
    cfg = ExperimentConfig(geometry="euclidean", body=EUC_TRIG, mode="chain")
    with pytest.raises(InvalidBody):
        run_experiment(cfg)


# -- emission -----------------------------------------------------------------

def test_csv_contract(tmp_path):
    cfg = ExperimentConfig(geometry="spherical", body=SPH_ELLIPSE,
                           iterations=8, seed=4)
    rep = quiet_run(cfg)
    csv_path, json_path = emit(rep, str(tmp_path), "run_000")
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "iter,dir_0,dir_1,r_K,measure,polar_proj_measure,dist_to_star"
    assert len(lines) == 1 + 8 + 1  # header, initial row, one per iterate
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "" and first[3] == ""
    summary = json.load(open(json_path))
    assert summary["passed"] is True
    assert "wall_seconds" in summary


def test_csv_bytes_are_deterministic(tmp_path):
    def bytes_of(subdir):
        cfg = ExperimentConfig(geometry="hyperbolic", body=HYP_ELLIPSE,
                               iterations=6, seed=11)
        rep = quiet_run(cfg)
        path, _ = emit(rep, str(tmp_path / subdir), "run_000")
        return open(path, "rb").read()

    assert bytes_of("a") == bytes_of("b")


def test_cap_run_trace_is_flat(tmp_path):
    cfg = ExperimentConfig(geometry="spherical",
                           body={"kind": "ball", "dim": 2,
                                 "geometry": "spherical", "alpha": 0.8},
                           iterations=8, seed=6)
    rep = quiet_run(cfg)
    csv_path, _ = emit(rep, str(tmp_path), "cap")
    rows = [l.split(",") for l in open(csv_path).read().splitlines()[1:]]
    ppv = np.array([float(r[5]) for r in rows])
    assert np.ptp(ppv) <= 1e-6 * ppv[0]


def test_chain_emission(tmp_path):
    cfg = ExperimentConfig(geometry="hyperbolic",
                           body={"kind": "ball", "dim": 2,
                                 "geometry": "hyperbolic",
                                 "geodesic_radius": 0.6},
                           mode="chain")
    rep = quiet_run(cfg)
    path = emit_chain(rep, str(tmp_path), "chain_000")
    data = json.load(open(path))
    assert data["equality_case"] is True and data["passed"] is True
    assert set(data) >= {"star_scaled_perimeter", "star_inverse",
                         "body_inverse", "body_scaled_perimeter",
                         "left_gap", "middle_slack", "right_slack"}


# -- measure oracles ----------------------------------------------------------

def test_mc_measure_agrees_with_quadrature():
    for spec in (SPH_ELLIPSE, HYP_ELLIPSE, EUC_TRIG):
        body = realize(spec, 720)
        q = quadrature_measure(body)
        m = mc_measure(body, n_samples=2 * 10**5, seed=3)
        assert abs(m - q) / q < 5e-3, spec["geometry"]


def test_two_path_routes_agree():
    assert two_path_gap(realize(SPH_ELLIPSE, 720)) < 1e-9
    assert two_path_gap(realize(HYP_ELLIPSE, 720)) < 1e-9
    with pytest.raises(InvalidBody):
        two_path_gap(realize(EUC_TRIG, 720))
