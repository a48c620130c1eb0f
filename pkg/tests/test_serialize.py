"""JSON round-trips for the persisted document types."""

import numpy as np
import pytest

from jpac.deflation import admission_control
from jpac.powerctl import run_two_timescale
from jpac.network import sample_gains
from jpac.serialize import (INSTANCE_FORMAT, OUTCOME_FORMAT, SAMPLES_FORMAT,
                            instance_from_dict, instance_to_dict,
                            outcome_from_dict, outcome_to_dict, read_json,
                            report_to_dict, samples_from_dict,
                            samples_to_dict, write_json)


def test_instance_round_trip(inst3, tmp_path):
    doc = instance_to_dict(inst3)
    assert doc["format"] == INSTANCE_FORMAT
    path = tmp_path / "inst.json"
    write_json(path, doc)
    back = instance_from_dict(read_json(path))
    assert back.K == inst3.K
    np.testing.assert_allclose(back.gamma, inst3.gamma, rtol=0)
    np.testing.assert_allclose(back.pbar, inst3.pbar, rtol=0)
    np.testing.assert_allclose(back.dist, inst3.dist, rtol=0)
    assert back.kappa == inst3.kappa


def test_samples_round_trip(samples3, tmp_path):
    doc = samples_to_dict(samples3)
    assert doc["format"] == SAMPLES_FORMAT
    path = tmp_path / "samples.json"
    write_json(path, doc)
    back = samples_from_dict(read_json(path))
    assert back.N == samples3.N
    np.testing.assert_allclose(back.gains, samples3.gains, rtol=0)
    assert back.seed == samples3.seed


def test_outcome_round_trip(inst3, samples3):
    out = admission_control(inst3, samples3, mode="constant")
    doc = outcome_to_dict(out)
    assert doc["format"] == OUTCOME_FORMAT
    back = outcome_from_dict(doc)
    np.testing.assert_array_equal(back.support, out.support)
    assert back.removal_order == out.removal_order
    assert back.readmitted == out.readmitted
    assert back.mode == out.mode
    assert back.rounds == out.rounds
    np.testing.assert_allclose(back.q_const, out.q_const, rtol=0)


def test_wrong_format_rejected(inst3, samples3):
    doc = instance_to_dict(inst3)
    with pytest.raises(ValueError):
        samples_from_dict(doc)


def test_write_json_is_deterministic(inst3, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_json(a, instance_to_dict(inst3))
    write_json(b, instance_to_dict(inst3))
    assert a.read_bytes() == b.read_bytes()


def test_report_serializes(inst3):
    draws = sample_gains(inst3, 10, rng_seed=91)
    rep = run_two_timescale(inst3, [0, 1], draws)
    doc = report_to_dict(rep)
    assert doc["format"] == "jpac.validation/v1"
    assert doc["n_draws"] == 10
    assert set(doc) >= {"support", "outage_rate", "avg_total_power"}
