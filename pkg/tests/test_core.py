"""Tests for the closed-form test mathematics.

High-precision expected values come from an mpmath oracle that evaluates the
same closed forms at 50 decimal digits; frozen literals below were produced
by that oracle.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safebandit import core
from safebandit.errors import InvalidParameter, UpdateAfterDiscard

mpmath.mp.dps = 50


def hp_values(mu, eps, alpha):
    """Independent high-precision evaluation of every derived constant."""
    mu, eps, alpha = mpmath.mpf(mu), mpmath.mpf(eps), mpmath.mpf(alpha)
    lam0 = mpmath.log((1 - mu) / (1 - mu - eps))
    lam1 = mpmath.log((mu + eps) / mu)
    log_a = mpmath.log(1 / alpha)
    kl = mu * mpmath.log(mu / (mu + eps)) + (1 - mu) * mpmath.log(
        (1 - mu) / (1 - mu - eps)
    )
    return {
        "lambda0": lam0,
        "lambda1": lam1,
        "log_threshold": log_a,
        "kl": kl,
        "detection_bound": 1 + log_a / kl,
    }


def rel_err(value, reference):
    return abs(float((mpmath.mpf(value) - reference) / reference))


GRID_CONFIGS = [
    (mu, eps, alpha)
    for mu in (0.5, 0.7, 0.9)
    for eps in (0.01, 0.02, 0.05)
    for alpha in (0.01, 0.05, 0.1, 0.5)
] + [
    (0.99, eps, alpha)
    for eps in (0.002, 0.005, 0.009)
    for alpha in (0.01, 0.05, 0.1, 0.5)
]


class TestMakeConfig:
    def test_example_values(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        assert cfg.lambda0 == pytest.approx(0.6931472, abs=5e-8)
        assert cfg.lambda1 == pytest.approx(0.0540672, abs=5e-8)
        assert cfg.log_threshold == pytest.approx(2.3025851, abs=5e-8)

    def test_second_example(self):
        cfg = core.make_config(0.9, 0.02, 0.05)
        assert cfg.lambda0 == pytest.approx(0.2231436, abs=5e-8)
        assert cfg.lambda1 == pytest.approx(0.0219789, abs=5e-8)
        assert cfg.log_threshold == pytest.approx(2.9957323, abs=5e-8)

    def test_matches_high_precision_oracle(self):
        for mu, eps, alpha in GRID_CONFIGS:
            cfg = core.make_config(mu, eps, alpha)
            hp = hp_values(mu, eps, alpha)
            assert rel_err(cfg.lambda0, hp["lambda0"]) <= 1e-9
            assert rel_err(cfg.lambda1, hp["lambda1"]) <= 1e-9
            assert rel_err(cfg.log_threshold, hp["log_threshold"]) <= 1e-9

    def test_rejects_mu_plus_epsilon_of_one_or_more(self):
        with pytest.raises(InvalidParameter):
            core.make_config(0.9, 0.2, 0.1)
        with pytest.raises(InvalidParameter):
            core.make_config(0.9, 0.1, 0.1)  # exactly 1: lambda0 would blow up

    @pytest.mark.parametrize(
        "mu,eps,alpha",
        [
            (0.0, 0.05, 0.1),
            (1.0, 0.05, 0.1),
            (0.9, 0.0, 0.1),
            (0.9, -0.01, 0.1),
            (0.9, 0.05, 0.0),
            (0.9, 0.05, 1.0),
        ],
    )
    def test_rejects_out_of_range_parameters(self, mu, eps, alpha):
        with pytest.raises(InvalidParameter):
            core.make_config(mu, eps, alpha)

    def test_positivity(self):
        for mu, eps, alpha in GRID_CONFIGS:
            cfg = core.make_config(mu, eps, alpha)
            assert cfg.lambda0 > 0
            assert cfg.lambda1 > 0
            assert cfg.log_threshold > 0
            assert core.kl_divergence(cfg) > 0


class TestUpdateLogLik:
    def test_zero_outcome(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        state = core.update_log_lik(core.ArmState(), cfg, 0)
        assert state.pulls == 1
        assert state.zeros == 1
        assert state.log_lik == pytest.approx(0.6931472, abs=5e-8)

    def test_one_outcome(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        state = core.update_log_lik(core.ArmState(), cfg, 1)
        assert state.pulls == 1
        assert state.zeros == 0
        assert state.log_lik == pytest.approx(-0.0540672, abs=5e-8)

    def test_fresh_state_untouched(self):
        state = core.ArmState()
        assert state.pulls == 0 and state.zeros == 0 and state.log_lik == 0.0

    def test_update_after_discard_raises(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        state = core.ArmState(pulls=3, zeros=3, log_lik=2.4, verdict=core.Verdict(3))
        with pytest.raises(UpdateAfterDiscard):
            core.update_log_lik(state, cfg, 1)

    def test_bad_outcome_rejected(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        with pytest.raises(InvalidParameter):
            core.update_log_lik(core.ArmState(), cfg, 2)

    @settings(max_examples=60, deadline=None)
    @given(
        outcomes=st.lists(st.integers(0, 1), max_size=300),
        idx=st.integers(0, len(GRID_CONFIGS) - 1),
    )
    def test_reconstruction_identity(self, outcomes, idx):
        cfg = core.make_config(*GRID_CONFIGS[idx])
        state = core.ArmState()
        for out in outcomes:
            state = core.update_log_lik(state, cfg, out)
        recon = core.reconstruct_log_lik(state.pulls, state.zeros, cfg)
        assert state.zeros <= state.pulls
        assert abs(state.log_lik - recon) <= 1e-12 * max(1.0, abs(recon))


class TestDiscardChecks:
    def test_loglik_boundary_is_inclusive(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        state = core.ArmState(pulls=40, zeros=5, log_lik=cfg.log_threshold)
        verdict = core.check_discard_loglik(state, cfg)
        assert verdict.discarded and verdict.at_pull == 40

    def test_zero_loglik_is_active(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        assert not core.check_discard_loglik(core.ArmState(), cfg).discarded

    def test_alpha_half_discards_on_first_zero(self):
        # log(1/2) equals the per-zero increment for mu=0.9, eps=0.05
        cfg = core.make_config(0.9, 0.05, 0.5)
        assert cfg.lambda0 >= cfg.log_threshold
        assert math.isclose(cfg.lambda0, cfg.log_threshold, rel_tol=1e-12)
        state = core.update_log_lik(core.ArmState(), cfg, 0)
        assert core.check_discard_loglik(state, cfg).at_pull == 1
        assert core.check_discard_count(1, 1, cfg).at_pull == 1

    def test_count_examples(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        assert core.count_threshold(10, cfg) == pytest.approx(3.8051, abs=5e-5)
        assert core.check_discard_count(10, 4, cfg).discarded
        assert not core.check_discard_count(10, 3, cfg).discarded
        assert not core.check_discard_count(0, 0, cfg).discarded

    def test_count_preconditions(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        with pytest.raises(InvalidParameter):
            core.check_discard_count(3, 4, cfg)
        with pytest.raises(InvalidParameter):
            core.check_discard_count(-1, 0, cfg)

    def test_forms_agree_on_reconstructed_states(self):
        # full sweep lives in the acceptance suite; spot-check the API here
        for mu, eps, alpha in GRID_CONFIGS[::5]:
            cfg = core.make_config(mu, eps, alpha)
            for pulls in range(0, 60):
                for zeros in range(0, pulls + 1):
                    state = core.ArmState(
                        pulls=pulls,
                        zeros=zeros,
                        log_lik=core.reconstruct_log_lik(pulls, zeros, cfg),
                    )
                    a = core.check_discard_loglik(state, cfg).discarded
                    b = core.check_discard_count(pulls, zeros, cfg).discarded
                    assert a == b, (mu, eps, alpha, pulls, zeros)

    def test_min_zeros_table_matches_count_check(self):
        for mu, eps, alpha in GRID_CONFIGS[::3]:
            cfg = core.make_config(mu, eps, alpha)
            table = core.min_zeros_table(cfg, 5000)
            t = np.arange(5001)
            thr = (cfg.log_threshold + cfg.lambda1 * t.astype(float)) / (
                cfg.lambda0 + cfg.lambda1
            )
            assert np.array_equal(table, np.ceil(thr).astype(np.int64))
            for pulls in (0, 1, 7, 100, 4999):
                k = int(table[pulls])
                if k <= pulls:
                    assert core.check_discard_count(pulls, k, cfg).discarded
                if k - 1 >= 0 and k - 1 <= pulls:
                    assert not core.check_discard_count(pulls, k - 1, cfg).discarded

    @settings(max_examples=40, deadline=None)
    @given(
        outcomes=st.lists(st.integers(0, 1), min_size=1, max_size=200),
        idx=st.integers(0, len(GRID_CONFIGS) - 1),
    )
    def test_first_discard_minimality(self, outcomes, idx):
        # the count check fires at the first threshold crossing and never before
        cfg = core.make_config(*GRID_CONFIGS[idx])
        state = core.ArmState()
        fired_at = None
        for out in outcomes:
            state = core.update_log_lik(state, cfg, out)
            if core.check_discard_count(state.pulls, state.zeros, cfg).discarded:
                fired_at = state.pulls
                break
        if fired_at is not None:
            replay = core.ArmState()
            for out in outcomes[: fired_at - 1]:
                replay = core.update_log_lik(replay, cfg, out)
                assert not core.check_discard_count(
                    replay.pulls, replay.zeros, cfg
                ).discarded


class TestKlAndBounds:
    def test_kl_examples(self):
        assert core.kl_divergence(core.make_config(0.9, 0.05, 0.1)) == pytest.approx(
            0.0206542, abs=5e-8
        )
        assert core.kl_divergence(core.make_config(0.9, 0.02, 0.1)) == pytest.approx(
            0.0025333, abs=5e-8
        )

    def test_kl_oracle(self):
        for mu, eps, alpha in GRID_CONFIGS:
            cfg = core.make_config(mu, eps, alpha)
            assert rel_err(core.kl_divergence(cfg), hp_values(mu, eps, alpha)["kl"]) <= 1e-9

    def test_kl_vanishes_with_epsilon(self):
        assert core.kl_divergence(core.make_config(0.9, 1e-6, 0.1)) < 1e-8

    def test_kl_increasing_in_epsilon(self):
        for mu in (0.5, 0.7, 0.9):
            values = [
                core.kl_divergence(core.make_config(mu, eps, 0.1))
                for eps in (0.005, 0.01, 0.02, 0.05, 0.09)
            ]
            assert all(a < b for a, b in zip(values, values[1:]))

    def test_detection_bound_examples(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        assert core.detection_time_bound(cfg) == pytest.approx(112.4825549, abs=5e-6)
        cfg = core.make_config(0.9, 0.02, 0.05)
        assert core.detection_time_bound(cfg) == pytest.approx(1183.5, abs=0.05)

    def test_detection_bound_near_alpha_one(self):
        bound = core.detection_time_bound(core.make_config(0.9, 0.05, 0.999))
        assert 1.0 < bound < 1.1

    def test_detection_bound_monotone(self):
        # decreasing in epsilon at fixed alpha, decreasing in alpha at fixed epsilon
        for alpha in (0.01, 0.1):
            values = [
                core.detection_time_bound(core.make_config(0.9, eps, alpha))
                for eps in (0.01, 0.02, 0.05, 0.09)
            ]
            assert all(a > b for a, b in zip(values, values[1:]))
        for eps in (0.02, 0.05):
            values = [
                core.detection_time_bound(core.make_config(0.9, eps, alpha))
                for alpha in (0.01, 0.05, 0.1, 0.5)
            ]
            assert all(a > b for a, b in zip(values, values[1:]))

    def test_handicap_bound(self):
        cfg = core.make_config(0.9, 0.05, 0.1)
        per_arm = core.detection_time_bound(cfg)
        assert core.handicap_bound_relaxed(cfg, 0) == 0.0
        assert core.handicap_bound_relaxed(cfg, 1) == pytest.approx(per_arm)
        assert core.handicap_bound_relaxed(cfg, 50) == pytest.approx(50 * per_arm)
        with pytest.raises(InvalidParameter):
            core.handicap_bound_relaxed(cfg, -1)

    def test_flawless_testing_bound(self):
        assert core.testing_time_bound_flawless(0.8) == pytest.approx(25.0)
        assert core.testing_time_bound_flawless(0.0) == pytest.approx(1.0)
        assert core.testing_time_bound_flawless(0.5) == pytest.approx(4.0)
        with pytest.raises(InvalidParameter):
            core.testing_time_bound_flawless(1.0)
