import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulseduff import (ConfigError, ImpulseSchedule, SystemConfig, TrigPoly,
                         config_hash, eval_coefficient, load_config,
                         save_config)
from impulseduff.model import config_from_dict, config_to_dict

from conftest import make_config, zero_polys


# --- TrigPoly ---------------------------------------------------------------

def test_trigpoly_values():
    p = TrigPoly(1.5, ((2.0, 0.0), (0.0, -1.0)))
    assert p(0.0) == pytest.approx(1.5 + 2.0)
    assert p(0.25) == pytest.approx(1.5)  # cos(pi/2)=0, sin(pi)=0
    t = 0.1
    expect = (1.5 + 2.0 * math.cos(2 * math.pi * t)
              - math.sin(4 * math.pi * t))
    assert p(t) == pytest.approx(expect, rel=1e-15)


@given(st.floats(-10, 10), st.floats(-5, 5), st.floats(-5, 5),
       st.floats(-100, 100))
@settings(max_examples=200, deadline=None)
def test_trigpoly_periodicity(mean, a, b, t):
    p = TrigPoly(mean, ((a, b),))
    assert abs(p(t + 1.0) - p(t)) < 1e-9 * (1.0 + abs(p(t)))


def test_trigpoly_derivative_matches_fd():
    p = TrigPoly(0.3, ((1.0, -0.5), (0.25, 2.0)))
    h = 1e-6
    for t in [0.0, 0.123, 0.5, 0.987]:
        fd = (p(t + h) - p(t - h)) / (2 * h)
        assert p.derivative(t) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_trigpoly_is_zero():
    assert TrigPoly().is_zero
    assert TrigPoly(0.0, ((0.0, 0.0),)).is_zero
    assert not TrigPoly(0.1).is_zero


# --- ImpulseSchedule --------------------------------------------------------

def test_schedule_validation():
    with pytest.raises(ConfigError):
        ImpulseSchedule(0.0, 0.5)
    with pytest.raises(ConfigError):
        ImpulseSchedule(0.3, 1.0)
    with pytest.raises(ConfigError, match="t1 < t2 violated"):
        ImpulseSchedule(0.5, 0.25)


def test_schedule_degenerate_flag():
    assert not ImpulseSchedule(0.25, 0.5).degenerate
    assert ImpulseSchedule(0.2, 0.7).degenerate
    assert ImpulseSchedule(0.25, 0.75).degenerate


def test_schedule_bracket():
    assert ImpulseSchedule(0.25, 0.5).bracket == pytest.approx(0.5)
    assert ImpulseSchedule(0.1, 0.8).bracket == pytest.approx(-0.4)
    assert ImpulseSchedule(0.2, 0.7).bracket == pytest.approx(0.0)


def test_times_between():
    s = ImpulseSchedule(0.25, 0.5)
    assert s.times_between(0.0, 1.0) == [0.25, 0.5]
    assert s.times_between(0.25, 1.25) == [0.5, 1.25]  # half-open (a, b]
    assert s.times_between(0.0, 10.0) == pytest.approx(
        [j + base for j in range(10) for base in (0.25, 0.5)])


# --- SystemConfig -----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        make_config(n=0)
    with pytest.raises(ConfigError):
        SystemConfig(n=1, coefficients=zero_polys(2),
                     schedule=ImpulseSchedule(0.25, 0.5))
    with pytest.raises(ConfigError):
        make_config(max_step=0.5)  # straddles an impulse
    with pytest.raises(ConfigError):
        make_config(abs_tol=0.0)


def test_config_flags():
    assert make_config().unforced
    assert not make_config().degenerate
    assert make_config(t1=0.2, t2=0.7).degenerate


def test_eval_coefficient():
    cfg = make_config(coefficients=(TrigPoly(0.5), TrigPoly(), TrigPoly()))
    assert eval_coefficient(cfg, 0, 0.3) == 0.5
    assert eval_coefficient(cfg, 2, 0.3) == 0.0
    with pytest.raises(IndexError):
        eval_coefficient(cfg, 3, 0.0)


# --- file format ------------------------------------------------------------

def sample_doc():
    return {
        "n": 1,
        "coefficients": [
            {"mean": 0.0, "harmonics": [[0.1, 0.0]]},
            {"mean": -0.25, "harmonics": []},
            {"mean": 0.0, "harmonics": [[0.0, 0.01], [0.002, 0.0]]},
        ],
        "impulses": {"t1": 0.25, "t2": 0.5},
        "integrator": {"abs_tol": 1e-12, "rel_tol": 1e-12, "max_step": 0.1},
    }


def test_load_config_roundtrip_bitexact(tmp_path):
    cfg = config_from_dict(sample_doc())
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    again = load_config(path)
    assert again == cfg
    assert config_to_dict(again) == config_to_dict(cfg)
    assert config_hash(again) == config_hash(cfg)


def test_load_config_examples(tmp_path):
    doc = sample_doc()
    doc["coefficients"] = [{"mean": 0.0, "harmonics": []} for _ in range(3)]
    cfg = config_from_dict(doc)
    assert cfg.unforced and not cfg.degenerate
    doc["impulses"] = {"t1": 0.2, "t2": 0.7}
    doc["integrator"]["max_step"] = 0.1
    assert config_from_dict(doc).degenerate


def test_unknown_keys_rejected():
    doc = sample_doc()
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_dict(doc)
    doc = sample_doc()
    doc["integrator"]["order"] = 5
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_dict(doc)


def test_missing_keys_rejected():
    doc = sample_doc()
    del doc["impulses"]
    with pytest.raises(ConfigError, match="missing keys"):
        config_from_dict(doc)


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(p)


def test_config_hash_stability():
    a = config_from_dict(sample_doc())
    b = config_from_dict(json.loads(json.dumps(sample_doc())))
    assert config_hash(a) == config_hash(b)
    doc = sample_doc()
    doc["impulses"]["t1"] = 0.26
    assert config_hash(config_from_dict(doc)) != config_hash(a)
