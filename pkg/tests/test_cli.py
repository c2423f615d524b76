from nfcrb.cli import main


def _small_config(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("""
num_bs_antennas    = 3
num_stars_elements = 5
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
user_range_window = 20 m, 40 m
user_angle_window = 30 deg, 120 deg
pathloss_ref    = 30 dB
noise_user      = -110 dB
noise_sensing   = -110 dB
coherence_block = 100
power_budget    = 30 dB
sinr_threshold  = 5 dB
randomizations  = 10
""")
    return cfg


def test_bad_config_exits_with_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("num_bs_antennas = 3\n")
    assert main(["crb", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err


def test_crb_lists_every_position(tmp_path, capsys):
    assert main(["crb", "--config", str(_small_config(tmp_path))]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("position,")
    assert [l.split(",")[0] for l in lines[1:]] == ["-1", "0", "1"]


def test_optimize_writes_csv(tmp_path, capsys):
    out = tmp_path / "one.csv"
    assert main(["optimize", "--config", str(_small_config(tmp_path)), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 2 and rows[1].split(",")[9] == "converged"


def test_sweep_rejects_unsorted_values(tmp_path):
    cfg = _small_config(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--var", "power", "--values", "30,20",
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_sweep_fixed_position(tmp_path):
    out = tmp_path / "fpa.csv"
    code = main(["sweep", "--config", str(_small_config(tmp_path)), "--var", "sinr", "--values", "0,5",
                 "--out", str(out), "--fpa", "--repeats", "2"])
    assert code == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 5
    assert (tmp_path / "fpa.plot.csv").exists()
