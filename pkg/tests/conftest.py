import math

import numpy as np
import pytest

from nfcrb.geometry import SystemConfig, db_to_linear

LAM = 0.03


def make_config(N=9, M=5, K=1, Q=3, power_db=30.0, sinr_db=10.0, seed=0, **kw):
    users = ((25.0, math.radians(60)), (35.0, math.radians(100)), (30.0, math.radians(80)))[:K]
    base = dict(num_bs_antennas=M, num_stars_elements=N, num_fa_positions=Q, wavelength=LAM,
                stars_spacing=LAM / 2, bs_spacing=LAM / 2, fa_spacing=LAM / 3,
                bs_range=180.0, bs_angle=math.radians(30), target_range=20.0,
                target_angle=math.radians(30), user_placements=users, pathloss_ref_db=30.0,
                noise_user_db=-110.0, noise_sensing_db=-110.0, coherence_block=100,
                power_budget=float(db_to_linear(power_db)),
                sinr_thresholds=tuple([float(db_to_linear(sinr_db))] * K), rng_seed=seed)
    base.update(kw)
    return SystemConfig(**base)


@pytest.fixture
def small_cfg():
    return make_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
