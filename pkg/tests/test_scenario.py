import json

import numpy as np
import pytest

from phca.scenario import (
    DayScenario,
    ScenarioError,
    ScenarioSet,
    SyntheticProfile,
    generate_synthetic,
    load_scenarios,
    write_scenarios,
)


def test_synthetic_is_seeded(net6):
    a = generate_synthetic(net6, 5, 24, seed=3)
    b = generate_synthetic(net6, 5, 24, seed=3)
    c = generate_synthetic(net6, 5, 24, seed=4)
    assert a == b
    assert a != c


def test_synthetic_shapes_and_ranges(scen6):
    assert scen6.N == 30 and scen6.T == 24
    assert scen6.n_candidates == 2 and scen6.n_nodes == 5
    for day in scen6.days:
        assert day.alpha.min() >= 0 and day.alpha.max() <= 1
        assert np.all(day.d >= 0)
        # no sun at night
        assert np.all(day.alpha[:6] == 0) and np.all(day.alpha[-5:] == 0)


def test_zero_noise_days_identical(net6):
    prof = SyntheticProfile(amplitude_noise=0, site_noise=0, load_noise=0)
    s = generate_synthetic(net6, 3, 12, seed=0, profile=prof)
    assert np.array_equal(s.days[0].alpha, s.days[2].alpha)
    assert np.array_equal(s.days[0].d, s.days[1].d)


def test_negative_noise_rejected(net6):
    with pytest.raises(ScenarioError):
        generate_synthetic(net6, 3, 12, 0, SyntheticProfile(load_noise=-0.1))


def test_round_trip(tmp_path, net6, scen6):
    write_scenarios(scen6, tmp_path)
    back = load_scenarios(tmp_path, net6, threads=3)
    assert back == scen6
    meta = json.loads((tmp_path / "scenarios_meta.json").read_text())
    assert meta == {"n_days": 30, "T": 24, "L": 2, "V": 5}


def test_alpha_out_of_range_names_file_and_row(tmp_path, net6):
    write_scenarios(generate_synthetic(net6, 2, 4, 0), tmp_path)
    path = tmp_path / "day_2.csv"
    lines = path.read_text().splitlines()
    cells = lines[3].split(",")
    cells[0] = "1.5"
    lines[3] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ScenarioError, match=r"day_2\.csv, row 4: alpha_1"):
        load_scenarios(tmp_path, net6)


def test_non_numeric_cell(tmp_path, net6):
    write_scenarios(generate_synthetic(net6, 1, 3, 0), tmp_path)
    path = tmp_path / "day_1.csv"
    text = path.read_text().splitlines()
    text[1] = "abc" + text[1][text[1].index(",") :]
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(ScenarioError, match="non-numeric"):
        load_scenarios(tmp_path, net6)


def test_dimension_mismatch_against_network(tmp_path, net6, mm):
    write_scenarios(generate_synthetic(net6, 2, 4, 0), tmp_path)
    with pytest.raises(ScenarioError, match="dimension mismatch"):
        load_scenarios(tmp_path, mm[0])


def test_ragged_days_rejected(tmp_path, net6):
    write_scenarios(generate_synthetic(net6, 1, 4, 0), tmp_path / "a")
    write_scenarios(generate_synthetic(net6, 1, 5, 0), tmp_path / "b")
    (tmp_path / "b" / "day_1.csv").rename(tmp_path / "a" / "day_2.csv")
    with pytest.raises(ScenarioError, match="day_2.csv"):
        load_scenarios(tmp_path / "a", net6)


def test_day_shapes_validated():
    with pytest.raises(ScenarioError):
        DayScenario(1, np.zeros((3, 2)), np.zeros((4, 5)), np.zeros((4, 5)))
    with pytest.raises(ScenarioError):
        ScenarioSet(())


def test_subset_keeps_order(scen6):
    sub = scen6.subset([7, 3, 21])
    assert sub.day_ids() == [3, 7, 21]
