"""Run configs, filter execution, CSV artifacts, comparison."""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from _support import small_run_dict, small_world_dict
from lieslam.harness import (
    bundled_config_path,
    compare,
    load_run_config,
    parse_run_config,
    read_csv,
    run,
    run_filter,
)
from lieslam.liegroup import rotation_defect
from lieslam.metrics import report_header
from lieslam.worldsim import ConfigError, simulate_world


# ------------------------------------------------------------------ parsing


def test_parse_minimal_config_defaults():
    rc = parse_run_config(small_run_dict())
    assert rc.filter_kind == "both"
    assert rc.filters() == ["basic", "imu"]
    assert rc.sample_stride == 100
    assert not rc.simplified_form
    assert np.array_equal(rc.init_rotation, np.eye(3))
    assert np.array_equal(rc.init_landmarks, np.zeros((3, 3)))
    assert np.array_equal(rc.init_bias, np.zeros(6))


def test_parse_rejects_unknown_top_key():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_run_config(small_run_dict(plot=True))


def test_parse_requires_world():
    doc = small_run_dict()
    del doc["world"]
    with pytest.raises(ConfigError, match="world: required"):
        parse_run_config(doc)


def test_parse_rejects_unknown_filter():
    with pytest.raises(ConfigError, match="filter"):
        parse_run_config(small_run_dict(filter="kalman"))


def test_parse_requires_matching_gains():
    doc = small_run_dict(filter="imu")
    del doc["gains"]["imu"]
    with pytest.raises(ConfigError, match="gains.imu"):
        parse_run_config(doc)
    doc = small_run_dict(filter="basic")
    del doc["gains"]["basic"]
    with pytest.raises(ConfigError, match="gains.basic"):
        parse_run_config(doc)
    doc = small_run_dict(filter="imu")
    del doc["gains"]["imu"]["k_2"]
    with pytest.raises(ConfigError, match="k_2: required"):
        parse_run_config(doc)


def test_parse_gain_broadcasting():
    doc = small_run_dict()
    doc["gains"]["basic"]["alpha"] = 0.25
    doc["gains"]["basic"]["gamma"] = 2.0
    rc = parse_run_config(doc)
    assert np.array_equal(rc.gains_basic.alpha, np.full(3, 0.25))
    assert np.array_equal(rc.gains_basic.gamma, np.full(6, 2.0))
    doc["gains"]["basic"]["alpha"] = [0.1, 0.2]  # 3 landmarks
    with pytest.raises(ConfigError, match="alpha"):
        parse_run_config(doc)


def test_parse_init_rotation_repair_and_rejection():
    doc = small_run_dict(init={"rotation": [0.8112, -0.5660, 0.1468,
                                            0.5749, 0.8179, -0.0234,
                                            -0.1068, 0.1034, 0.9889]})
    rc = parse_run_config(doc)
    assert rotation_defect(rc.init_rotation) < 1e-12
    with pytest.raises(ConfigError, match="not close to a rotation"):
        parse_run_config(small_run_dict(init={"rotation": [1.1, 0, 0, 0, 1.1, 0, 0, 0, 1.1]}))
    with pytest.raises(ConfigError, match="9 scalars"):
        parse_run_config(small_run_dict(init={"rotation": [1.0, 0.0, 0.0]}))


def test_parse_init_shape_checks():
    with pytest.raises(ConfigError, match="landmarks"):
        parse_run_config(small_run_dict(init={"landmarks": [[0, 0, 0]]}))
    with pytest.raises(ConfigError, match="bias"):
        parse_run_config(small_run_dict(init={"bias": [0, 0, 0]}))
    with pytest.raises(ConfigError, match="sample_stride"):
        parse_run_config(small_run_dict(sample_stride=0))


# ------------------------------------------------------------------ loading


def test_load_bundled_configs():
    for name in ("square_climb.json", "square_level"):
        rc = load_run_config(name)
        assert rc.filter_kind == "both"
        assert rc.world.n_landmarks == 4
        assert rc.world.rng_seed == 46
        assert rc.sample_stride == 100
    assert bundled_config_path("square_climb").exists()


def test_bundled_configs_differ_only_in_velocity_profile():
    climb = load_run_config("square_climb")
    level = load_run_config("square_level")
    assert np.array_equal(level.world.v_true.slope, np.zeros(3))
    assert np.array_equal(climb.world.v_true.slope, [0.0, 0.0, 0.2])
    assert np.array_equal(climb.world.v_true.const, level.world.v_true.const)
    assert np.array_equal(climb.world.omega_true.const, level.world.omega_true.const)


def test_climb_config_contents():
    rc = load_run_config("square_climb")
    w = rc.world
    assert np.array_equal(
        w.landmarks,
        [[10.0, 10, 0], [-10, 10, 0], [10, -10, 0], [-10, -10, 0]],
    )
    assert np.array_equal(w.init_position, [0.0, 0.0, 6.0])
    assert np.array_equal(w.bias_omega, [0.2, -0.2, 0.2])
    assert np.array_equal(w.bias_v, [0.04, 0.1, -0.02])
    assert w.noise_std_omega == w.noise_std_v == 0.2
    assert w.feature_noise_std == 0.0
    assert w.dt == 0.001 and w.duration == 40.0
    g = rc.gains_imu
    assert g.k_w == 5.0 and g.k_1 == 5.0 and g.k_2 == 20.0
    assert np.array_equal(g.gamma_1, np.full(3, 3.0))
    assert np.array_equal(g.gamma_2, np.full(3, 100.0))
    assert np.array_equal(g.alpha, np.full(4, 0.1))
    gb = rc.gains_basic
    assert np.array_equal(gb.gamma, [3.0, 3, 3, 100, 100, 100])
    assert rotation_defect(rc.init_rotation) < 1e-12


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="no such config"):
        load_run_config(tmp_path / "nope.json")
    with pytest.raises(ConfigError, match="no such config"):
        load_run_config("definitely_not_bundled.json")


def test_load_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"world\": }")
    with pytest.raises(ConfigError, match="bad.json:1:"):
        load_run_config(bad)


def test_load_invalid_content(tmp_path):
    doc = small_run_dict()
    del doc["world"]["landmarks"]
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="landmarks"):
        load_run_config(p)


# ---------------------------------------------------------------- execution


def test_run_filter_rejects_unknown_name():
    rc = parse_run_config(small_run_dict())
    trace = simulate_world(rc.world)
    with pytest.raises(ValueError, match="unknown filter"):
        run_filter(trace, rc, "ekf")


def test_run_filter_sampling_grid(warmed_up):
    rc = parse_run_config(small_run_dict())
    trace = simulate_world(rc.world)
    result = run_filter(trace, rc, "imu")
    # stride 100 over 1000 steps: samples at 0, 100, ..., 1000
    assert np.array_equal(result.sample_ks, np.arange(0, 1001, 100))
    assert len(result.states) == len(result.reports) == 11
    assert result.lyap_steps is None and result.rot_traj is None
    assert result.reports[0].t == 0.0
    assert np.isclose(result.reports[-1].t, 1.0, atol=1e-12)


def test_run_writes_artifacts(tmp_path, warmed_up):
    doc = small_run_dict()
    rc = dataclasses.replace(parse_run_config(doc), output_dir=tmp_path / "out")
    artifacts = run(rc)
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == [
        "estimate_basic.csv", "estimate_imu.csv",
        "filter_basic.csv", "filter_imu.csv", "truth.csv",
    ]
    header, data = read_csv(artifacts.truth_path)
    assert header[:4] == ["t", "P_x", "P_y", "P_z"]
    assert header[4:13] == ["r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"]
    assert header[13:16] == ["p_1_x", "p_1_y", "p_1_z"]
    assert data.shape == (11, len(header))

    eheader, edata = read_csv(artifacts.estimate_paths["imu"])
    assert eheader == header
    assert edata.shape == data.shape

    fheader, fdata = read_csv(artifacts.filter_paths["basic"])
    assert ",".join(fheader) == report_header(3)
    assert fdata.shape == (11, len(fheader))
    # diagnostics recompute exactly from the stored reports
    rep = artifacts.results["basic"].reports[-1]
    assert fdata[-1, 1] == rep.att_dist
    assert fdata[-1, 2] == rep.pos_err


def test_read_csv_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty"):
        read_csv(empty)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(ConfigError):
        read_csv(ragged)


# --------------------------------------------------------------- comparison


def test_compare_identical_files(climb_artifacts):
    deltas = compare(climb_artifacts.truth_path, climb_artifacts.truth_path)
    assert all(d.final == 0.0 and d.max == 0.0 for d in deltas)


def test_compare_filters_shows_attitude_gap(climb_artifacts):
    """On the benchmark run the IMU-aided observer pins the attitude while
    the feature-only one settles a constant offset away."""
    deltas = {
        d.column: d
        for d in compare(
            climb_artifacts.filter_paths["basic"], climb_artifacts.filter_paths["imu"]
        )
    }
    assert deltas["att_dist"].final > 0.04
    assert deltas["t"].max == 0.0


def test_compare_schema_mismatch(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("t,x\n0.0,1.0\n")
    b.write_text("t,y\n0.0,1.0\n")
    with pytest.raises(ConfigError, match="column mismatch"):
        compare(a, b)
    c = tmp_path / "c.csv"
    c.write_text("t,x\n0.0,1.0\n1.0,2.0\n")
    with pytest.raises(ConfigError, match="row count"):
        compare(a, c)


def test_compare_treats_shared_nan_as_equal(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("t,lyap\n0.0,nan\n")
    b.write_text("t,lyap\n0.0,nan\n")
    deltas = compare(a, b)
    assert deltas[1].final == 0.0 and deltas[1].max == 0.0
