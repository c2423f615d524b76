import math

import numpy as np
import pytest

from nfcrb.harness import (CSV_COLUMNS, ConfigError, RunRecord, SweepSpec, parse_config,
                           parse_config_text, records_to_csv, records_to_plot_data, write_outputs)

BASE = """
num_bs_antennas    = 3
num_stars_elements = 9
num_fa_positions   = 3
carrier_frequency  = 10 GHz
stars_spacing      = 1/2 lambda
bs_spacing         = 1/2 lambda
fa_spacing         = 1/3 lambda
bs_range     = 180 m
bs_angle     = 30 deg
target_range = 20 m
target_angle = 30 deg
num_users = 1
users = 25 m 60 deg
pathloss_ref    = 30 dB
noise_user      = -110 dB
noise_sensing   = -110 dB
coherence_block = 100
power_budget    = 30 dB
sinr_threshold  = 10 dB
"""


def _cfg(text=BASE, **over):
    lines = []
    for line in text.splitlines():
        key = line.split("=")[0].strip()
        if key in over:
            if over[key] is None:
                continue
            line = f"{key} = {over[key]}"
        lines.append(line)
    return parse_config_text("\n".join(lines))


def test_units_are_converted():
    rc = _cfg()
    s = rc.system
    assert s.wavelength == pytest.approx(0.03)
    assert s.stars_spacing == pytest.approx(0.015)
    assert s.fa_spacing == pytest.approx(0.01)
    assert s.bs_angle == pytest.approx(math.pi / 6)
    assert s.noise_user == pytest.approx(1e-11)
    assert s.power_budget == pytest.approx(1000.0)
    assert s.sinr_thresholds == pytest.approx((10.0,))
    assert s.user_placements[0] == pytest.approx((25.0, math.pi / 3))


def test_missing_power_budget():
    with pytest.raises(ConfigError) as err:
        _cfg(power_budget=None)
    assert err.value.key == "power_budget"


def test_even_array_rejected_with_line():
    with pytest.raises(ConfigError) as err:
        _cfg(num_stars_elements="8")
    assert err.value.line is not None


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text(BASE + "\nfoo = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text(BASE + "\nseed = 1\nseed = 2\n")


def test_bad_unit_reports_key():
    with pytest.raises(ConfigError) as err:
        _cfg(bs_angle="30 furlongs")
    assert err.value.key == "bs_angle"


def test_random_users_follow_seed():
    text = BASE.replace("users = 25 m 60 deg", "user_range_window = 20 m, 40 m\nuser_angle_window = 30 deg, 120 deg")
    a = parse_config_text(text)
    b = parse_config_text(text)
    assert a.system.user_placements == b.system.user_placements
    moved = a.with_value("none", 0, 7)
    assert moved.system.user_placements != a.system.user_placements
    r, t = moved.system.user_placements[0]
    assert 20 <= r <= 40 and math.radians(30) <= t <= math.radians(120)


def test_with_value_sweeps_db():
    rc = _cfg()
    assert rc.with_value("power_budget_db", 20.0).system.power_budget == pytest.approx(100.0)
    assert rc.with_value("sinr_threshold_db", 0.0).system.sinr_thresholds == pytest.approx((1.0,))
    with pytest.raises(ValueError):
        rc.with_value("noise", 1.0)


@pytest.mark.parametrize("name", ["paper", "desk", "desk_single"])
def test_presets_parse(name):
    rc = parse_config(f"preset:{name}")
    assert rc.system.num_stars_elements % 2 == 1


def test_paper_preset_rayleigh_distance():
    assert 588 <= parse_config("preset:paper").system.rayleigh_distance <= 612


def test_missing_file():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/file.cfg")


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("power_budget_db", (30.0, 20.0))
    with pytest.raises(ValueError):
        SweepSpec("noise", (1.0,))
    with pytest.raises(ValueError):
        SweepSpec("power_budget_db", (1.0,), repeats=0)


def _record(value, status="converged", seed=0):
    return RunRecord("power_budget_db", value, 0.1 * value, 1e-5, 0.01, (1.5, 2.0), 3, 9, 2e-6, status,
                     12.3456, seed)


def test_csv_columns_and_formatting(tmp_path):
    text = records_to_csv([_record(20.0), _record(30.0, "stalled")])
    rows = text.splitlines()
    assert rows[0].split(",") == list(CSV_COLUMNS)
    first = rows[1].split(",")
    assert first[0] == "power" and first[1] == "20"
    assert first[5] == "1.5"
    assert first[CSV_COLUMNS.index("wall_ms")] == ""
    assert rows[2].split(",")[CSV_COLUMNS.index("status")] == "stalled"
    timed = records_to_csv([_record(20.0)], timing=True).splitlines()[1].split(",")
    assert timed[CSV_COLUMNS.index("wall_ms")] == "12.346"


def test_plot_data_skips_unconverged(tmp_path):
    recs = [_record(20.0), _record(20.0, seed=1), _record(30.0, "stalled")]
    rows = records_to_plot_data(recs).splitlines()
    assert rows[0] == "x,series,y"
    assert "20,rcrb_range_m,2" in rows
    assert not any(r.startswith("30,") for r in rows)
    plot = write_outputs(recs, tmp_path / "out.csv")
    assert plot.name == "out.plot.csv" and plot.exists()
    assert (tmp_path / "out.csv").read_text().startswith("sweep_var,")
