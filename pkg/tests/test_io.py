import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clutterem import io
from clutterem.em import FitConfig
from clutterem.scenario import ConfigError, ar1_scenario

MINIMAL = {"scenario": {"N": 16, "class_sizes": [24, 24, 48], "model_kind": "ScaledAR1",
                        "clutter_powers_db": [20, 30, 40], "rho": 0.9, "seed": 3},
           "fit": {"model_kind": "ScaledCommon"}}


def test_config_round_trip():
    bundle = io.parse_config_dict(MINIMAL)
    again = io.parse_config_dict(json.loads(io.canonical_json(bundle.to_dict())))
    assert again.to_dict() == bundle.to_dict()
    assert again.scenario == bundle.scenario
    assert again.fit.L == 3


def test_config_from_file_and_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(MINIMAL))
    assert io.parse_config(p).scenario.N == 16
    with pytest.raises(ConfigError, match="not found"):
        io.parse_config(tmp_path / "missing.json")
    p.write_text('{\n  "scenario": {,\n}')
    with pytest.raises(ConfigError) as info:
        io.parse_config(p)
    assert info.value.key.endswith(":2:16")


@pytest.mark.parametrize("mutate,key", [
    (lambda d: d["scenario"].update(clutter_powers_db=[20, 30]), "scenario.clutter_powers_db"),
    (lambda d: d["scenario"].update(colour="red"), "scenario.colour"),
    (lambda d: d["fit"].update(hmax=3), "fit.hmax"),
    (lambda d: d.update(extra={}), "extra"),
    (lambda d: d["fit"].update(L=4), "fit.L"),
    (lambda d: d["fit"].update(mos_rule="hqc"), "fit.mos_rule"),
    (lambda d: d["fit"].update(h_max=0), "fit.h_max"),
    (lambda d: d.update(benchmark={"matching": "greedy"}), "benchmark.matching"),
    (lambda d: d.update(init={"seed": -1}), "init.seed"),
])
def test_config_rejections_name_the_key(mutate, key):
    doc = json.loads(json.dumps(MINIMAL))
    mutate(doc)
    with pytest.raises(ConfigError) as info:
        io.parse_config_dict(doc)
    assert info.value.key == key


def test_tables_section():
    doc = {"tables": {"trials": 3, "scenarios": [{"name": "a", "scenario": MINIMAL["scenario"]}],
                      "methods": [{"name": "p2", "fit": {"model_kind": "ScaledCommon", "L": 3}}]}}
    table = io.parse_config_dict(doc).tables
    assert table.settings.trials == 3 and table.methods[0][0] == "p2"
    doc["tables"]["methods"][0]["fit"]["L"] = 2
    with pytest.raises(ConfigError):
        io.parse_config_dict(doc)


def test_range_profile_single_entry(tmp_path):
    p = tmp_path / "z.csv"
    p.write_text('{"n_channels": 1, "n_bins": 1, "layout": "csv-interleaved"}\n1.0,-2.0\n')
    np.testing.assert_array_equal(io.load_range_profile(p), [[1 - 2j]])


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 6), n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_range_profile_round_trip_is_exact(tmp_path_factory, k, n, seed):
    r = np.random.default_rng(seed)
    z = (r.normal(size=(k, n)) + 1j * r.normal(size=(k, n))) * 10.0 ** r.uniform(-8, 8, (k, n))
    p = tmp_path_factory.mktemp("rp") / "z.csv"
    io.write_range_profile(p, z)
    np.testing.assert_array_equal(io.load_range_profile(p), z)


def test_range_profile_row_errors(tmp_path):
    p = tmp_path / "z.csv"
    head = '{"n_channels": 2, "n_bins": 2, "layout": "csv-interleaved"}\n'
    p.write_text(head + "1,2,3,4\n1,2,3\n")
    with pytest.raises(io.RangeProfileError, match="row 2"):
        io.load_range_profile(p)
    p.write_text(head + "1,2,3,4\n1,2,x,4\n")
    with pytest.raises(io.RangeProfileError, match="row 2"):
        io.load_range_profile(p)
    p.write_text(head + "1,2,3,4\n")
    with pytest.raises(io.RangeProfileError, match="declares 2 rows"):
        io.load_range_profile(p)
    p.write_text('{"n_channels": 2}\n')
    with pytest.raises(io.RangeProfileError, match="line 1"):
        io.load_range_profile(p)


def test_labels_are_one_based_on_disk(tmp_path):
    p = tmp_path / "t.csv"
    io.write_labels(p, np.array([0, 2, 1]))
    assert p.read_text().splitlines() == ["bin,label", "1,1", "2,3", "3,2"]
    np.testing.assert_array_equal(io.load_labels(p), [0, 2, 1])


def test_canonical_json_is_stable():
    doc = {"b": [1.0, float("nan")], "a": np.float64(0.1), "c": np.arange(2)}
    text = io.canonical_json(doc)
    assert text == io.canonical_json(dict(reversed(list(doc.items()))))
    assert json.loads(text) == {"a": 0.1, "b": [1.0, None], "c": [0, 1]}


def test_fit_config_serialization_round_trip():
    cfg = FitConfig("LowRankNoise", 3, ranks=[5, 5, 5], mos_rule="bic")
    again = io.parse_fit(io.fit_config_to_dict(cfg))
    assert again == cfg


def test_scenario_dict_round_trip():
    s = ar1_scenario([10, 20], [0, 3])
    assert io.parse_config_dict({"scenario": s.to_dict()}).scenario == s
