import math

import numpy as np
import pytest

from coherent_repeater.chain import RepeaterPlan, expected_attempts
from coherent_repeater.montecarlo import (
    SegmentModel,
    TrialConfig,
    estimate_chain,
    simulate_segment,
)
from coherent_repeater.rng import Xoshiro256StarStar


@pytest.mark.parametrize("N,P", [(1, 0.5), (3, 0.1), (7, 0.5)])
def test_cycle_mean_matches_z(N, P):
    s = estimate_chain(TrialConfig(20000, 5, segments=N, p_cycle=P))
    assert abs(s.z_score) < 4
    assert s.analytic_mean_max == expected_attempts(N, P)
    assert abs(s.success_probability - P) < 4 * s.success_probability_se


def test_certain_segment_uses_one_distribution_per_step():
    rng = Xoshiro256StarStar.from_seed(1)
    assert simulate_segment(SegmentModel(1.0, (1.0,) * 4), rng) == 5


def test_same_seed_same_numbers():
    cfg = TrialConfig(3000, 17, segments=3, p_cycle=0.2)
    assert estimate_chain(cfg) == estimate_chain(cfg)
    other = estimate_chain(TrialConfig(3000, 18, segments=3, p_cycle=0.2))
    assert other.mean_max != estimate_chain(cfg).mean_max


def test_worker_count_does_not_change_results():
    a = estimate_chain(TrialConfig(4000, 3, segments=3, p_cycle=0.2, workers=1))
    b = estimate_chain(TrialConfig(4000, 3, segments=3, p_cycle=0.2, workers=3))
    assert a == b


def test_backends_agree():
    from coherent_repeater import kernels

    try:
        kernels.get_backend("cython")
    except ImportError:
        pytest.skip("compiled core not built")
    cfg = TrialConfig(2000, 9, segments=4, p_cycle=0.3)
    assert estimate_chain(cfg, "python") == estimate_chain(cfg, "cython")


def test_pumping_first_pass_estimates_p_pd():
    plan = RepeaterPlan(3.0, 30.0, 2)
    s = estimate_chain(TrialConfig(20000, 2, plan=plan, mode="pumping"))
    assert abs(s.first_pass_probability - plan.P_pd) < 4 * s.first_pass_probability_se
    assert s.z_score is None


def test_segment_model_from_plan():
    plan = RepeaterPlan(1.0, 25.0, 3)
    m = SegmentModel.from_plan(plan)
    assert math.isclose(m.first_pass_probability, plan.P_pd, rel_tol=1e-12)


def test_standard_errors_are_calibrated():
    inside = 0
    for seed in range(300):
        s = estimate_chain(TrialConfig(500, 1000 + seed, segments=3, p_cycle=0.3))
        inside += abs(s.z_score) <= 3
    assert inside >= 297


def test_invalid_configs():
    with pytest.raises(ValueError):
        TrialConfig(0, 1, segments=2, p_cycle=0.5)
    with pytest.raises(ValueError):
        TrialConfig(10, 1)
    with pytest.raises(ValueError):
        TrialConfig(10, 1, segments=2, p_cycle=0.5, mode="other")
    with pytest.raises(ValueError):
        estimate_chain(TrialConfig(10, 1, segments=2, p_cycle=0.0))
    with pytest.raises(ValueError):
        SegmentModel(0.0, ())


def test_row_columns():
    row = estimate_chain(TrialConfig(100, 1, segments=2, p_cycle=0.5)).row()
    assert list(row)[:3] == ["mode", "trials", "N"]
    assert np.isfinite(row["mean_max_se"])
