"""Tests for the Lion-attack model: occupancy, attack probability, kernel,
rewards, and MDP assembly."""

import numpy as np
import pytest

from lionmdp.mdp import enumerate_policies_brute_force, validate_model, value_iteration
from lionmdp.model import (
    HEAVY,
    LION,
    PRIMARY,
    LionAction,
    LionParams,
    LionState,
    admissible_actions,
    build_mdp,
    lion_attack_probability,
    lion_states,
    model_as_dict,
    primary_occupancy,
    reward,
    transition_distribution,
)

DEFAULTS = LionParams()  # alpha=beta=0.5, lam=0.1, m=20, M=100, standard costs

ST, HT, SF, HF = LionAction.ST, LionAction.HT, LionAction.SF, LionAction.HF


def random_valid_params(rng):
    m_users = int(rng.integers(1, 60))
    return LionParams(
        alpha=float(rng.uniform(0.02, 0.98)),
        beta=float(rng.uniform(0.02, 0.98)),
        lam=float(rng.uniform(0.0, 1.0)),
        m=m_users,
        M=int(rng.integers(m_users, 150)),
        C_s=float(rng.uniform(0.0, 10.0)),
        C_h=float(rng.uniform(0.0, 10.0)),
        C_L=float(rng.uniform(0.0, 30.0)),
        C_H=float(rng.uniform(0.0, 30.0)),
        G=float(rng.uniform(0.0, 100.0)),
        K=int(rng.integers(1, 12)),
        gamma=float(rng.uniform(0.0, 0.95)),
    )


class TestPrimaryOccupancy:
    def test_symmetric_chain(self):
        occ = primary_occupancy(LionParams(alpha=0.5, beta=0.5))
        assert occ.occupied == pytest.approx(0.5)
        assert occ.idle == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "alpha,beta,expected_occ", [(0.1, 0.9, 0.9), (0.9, 0.1, 0.1)]
    )
    def test_asymmetric_chain(self, alpha, beta, expected_occ):
        occ = primary_occupancy(LionParams(alpha=alpha, beta=beta))
        assert occ.occupied == pytest.approx(expected_occ)
        assert occ.occupied + occ.idle == pytest.approx(1.0)


class TestLionAttackProbability:
    def test_first_probe_after_one_success(self):
        # 20 attackers, 80 bands still unsearched.
        assert lion_attack_probability(1, DEFAULTS) == pytest.approx(0.25)

    def test_saturates_when_search_nearly_done(self):
        assert lion_attack_probability(4, DEFAULTS) == 1.0

    def test_boundary_equals_one_exactly(self):
        # m=50, M=100: the branch condition fails at k=1 and the closed
        # form would give 50/50 = 1 anyway.
        params = LionParams(m=50, M=100)
        assert lion_attack_probability(1, params) == 1.0

    def test_rejects_nonpositive_counter(self):
        with pytest.raises(ValueError):
            lion_attack_probability(0, DEFAULTS)

    def test_nondecreasing_and_reaching_one(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = int(rng.integers(1, 40))
            M = int(rng.integers(m, 120))
            params = LionParams(m=m, M=M, K=1)
            values = [lion_attack_probability(k, params) for k in range(1, M + 2)]
            assert all(b >= a for a, b in zip(values, values[1:]))
            first_saturated = next(k for k, v in enumerate(values, start=1) if v == 1.0)
            assert first_saturated == next(k for k in range(1, M + 2) if k >= M / m - 1)


class TestAdmissibility:
    def test_action_sets_per_state(self):
        assert admissible_actions(LionState.success(3)) == (ST, HT)
        assert admissible_actions(HEAVY) == (ST, HT)
        assert admissible_actions(PRIMARY) == (SF, HF)
        assert admissible_actions(LION) == (SF, HF)

    def test_inadmissible_pairs_rejected(self):
        with pytest.raises(ValueError, match="not admissible"):
            transition_distribution(PRIMARY, ST, DEFAULTS)
        with pytest.raises(ValueError, match="not admissible"):
            reward(LionState.success(1), SF, PRIMARY, DEFAULTS)


class TestTransitionDistribution:
    def test_stay_from_first_success(self):
        d = transition_distribution(LionState.success(1), ST, DEFAULTS)
        assert d[PRIMARY] == pytest.approx(0.5)
        assert d[HEAVY] == pytest.approx(0.05)
        assert d[LION] == pytest.approx(0.1125)
        assert d[LionState.success(2)] == pytest.approx(0.3375)

    def test_hop_from_heavy_traffic(self):
        d = transition_distribution(HEAVY, HT, DEFAULTS)
        assert d[PRIMARY] == pytest.approx(0.5)
        assert d[HEAVY] == pytest.approx(0.05)
        assert d[LION] == pytest.approx(0.09)
        assert d[LionState.success(1)] == pytest.approx(0.36)

    def test_certain_occupation_when_beta_is_one(self):
        d = transition_distribution(LionState.success(1), ST, LionParams(beta=1.0))
        assert d[PRIMARY] == 1.0
        assert d[HEAVY] == 0.0 and d[LION] == 0.0

    def test_stay_frozen_in_occupied_band_no_traffic(self):
        d = transition_distribution(PRIMARY, SF, LionParams(alpha=0.5, lam=0.0))
        assert d[PRIMARY] == pytest.approx(0.5)
        assert d[HEAVY] == 0.0
        assert d[LION] == pytest.approx(0.1)
        assert d[LionState.success(1)] == pytest.approx(0.4)

    def test_success_counter_truncation_self_loop(self):
        params = LionParams(K=3)
        d = transition_distribution(LionState.success(3), ST, params)
        assert LionState.success(3) in d
        assert LionState.success(4) not in d

    def test_hop_lands_on_stationary_occupancy(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            params = random_valid_params(rng)
            occ = primary_occupancy(params).occupied
            for s, a in [
                (LionState.success(1), HT),
                (HEAVY, HT),
                (PRIMARY, HF),
                (LION, HF),
            ]:
                assert transition_distribution(s, a, params)[PRIMARY] == occ

    def test_rows_stochastic_over_random_draws(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            params = random_valid_params(rng)
            for s in lion_states(params.K):
                for a in admissible_actions(s):
                    d = transition_distribution(s, a, params)
                    probs = np.array(list(d.values()))
                    assert abs(probs.sum() - 1.0) < 1e-12
                    assert (probs >= 0.0).all() and (probs <= 1.0).all()

    def test_all_attackers_cover_all_bands(self):
        # m = M: both the staying and the hopping attack terms reach 1.
        params = LionParams(m=100, M=100, lam=0.3)
        for s in lion_states(params.K):
            for a in admissible_actions(s):
                d = transition_distribution(s, a, params)
                assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)
                succ = [t for t in d if t.kind == "S"][0]
                assert d[succ] == pytest.approx(0.0, abs=1e-12)


class TestReward:
    def test_success_gain_net_of_sensing(self):
        r = reward(LionState.success(1), ST, LionState.success(2), DEFAULTS)
        assert r == pytest.approx(48.0)  # G - C_s

    def test_attack_loss_while_frozen(self):
        assert reward(LION, SF, LION, DEFAULTS) == pytest.approx(-12.0)  # -C_s - C_L

    def test_heavy_traffic_after_hop(self):
        assert reward(PRIMARY, HF, HEAVY, DEFAULTS) == pytest.approx(-24.0)  # -C_H - C_s - C_h

    def test_recovery_hop_to_success(self):
        r = reward(HEAVY, HT, LionState.success(1), DEFAULTS)
        assert r == pytest.approx(46.0)  # G - C_s - C_h

    def test_every_printed_reward_line(self):
        # Each admissible source/action, all four outcome kinds, checked
        # against the per-line closed forms.
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_valid_params(rng)
            s1 = LionState.success(1)
            s_next = LionState.success(min(2, p.K))
            cases = [
                (s1, ST, s_next, p.G - p.C_s),
                (s1, ST, PRIMARY, -p.C_s),
                (s1, ST, LION, -p.C_L - p.C_s),
                (s1, ST, HEAVY, -p.C_H - p.C_s),
                (s1, HT, s_next, p.G - p.C_s - p.C_h),
                (s1, HT, PRIMARY, -p.C_s - p.C_h),
                (s1, HT, LION, -p.C_L - p.C_s - p.C_h),
                (s1, HT, HEAVY, -p.C_H - p.C_s - p.C_h),
                (HEAVY, ST, HEAVY, -p.C_s - p.C_H),
                (HEAVY, ST, PRIMARY, -p.C_s),
                (HEAVY, ST, LION, -p.C_s - p.C_L),
                (HEAVY, ST, s1, p.G - p.C_s),
                (HEAVY, HT, HEAVY, -p.C_s - p.C_h - p.C_H),
                (HEAVY, HT, PRIMARY, -p.C_s - p.C_h),
                (HEAVY, HT, LION, -p.C_s - p.C_L - p.C_h),
                (HEAVY, HT, s1, p.G - p.C_s - p.C_h),
                (LION, SF, s1, p.G - p.C_s),
                (LION, SF, LION, -p.C_s - p.C_L),
                (LION, SF, PRIMARY, -p.C_s),
                (LION, SF, HEAVY, -p.C_H - p.C_s),
                (PRIMARY, SF, PRIMARY, -p.C_s),
                (PRIMARY, SF, LION, -p.C_s - p.C_L),
                (PRIMARY, SF, HEAVY, -p.C_H - p.C_s),
                (PRIMARY, SF, s1, p.G - p.C_s),
                (LION, HF, s1, p.G - p.C_s - p.C_h),
                (LION, HF, LION, -p.C_s - p.C_h - p.C_L),
                (LION, HF, PRIMARY, -p.C_s - p.C_h),
                (LION, HF, HEAVY, -p.C_H - p.C_s - p.C_h),
                (PRIMARY, HF, PRIMARY, -p.C_s - p.C_h),
                (PRIMARY, HF, LION, -p.C_s - p.C_h - p.C_L),
                (PRIMARY, HF, HEAVY, -p.C_H - p.C_s - p.C_h),
                (PRIMARY, HF, s1, p.G - p.C_s - p.C_h),
            ]
            for s, a, t, expected in cases:
                assert reward(s, a, t, p) == pytest.approx(expected), (s.label, a.value, t.label)


class TestParams:
    def test_invalid_params_list_every_violation(self):
        with pytest.raises(ValueError) as err:
            LionParams(alpha=1.5, m=0, gamma=1.0, C_s=-1.0)
        message = str(err.value)
        for fragment in ("alpha", "m must", "gamma", "C_s"):
            assert fragment in message

    def test_alpha_beta_cannot_both_be_zero(self):
        with pytest.raises(ValueError, match="alpha \\+ beta"):
            LionParams(alpha=0.0, beta=0.0)

    def test_from_mapping_accepts_lambda_key(self):
        params = LionParams.from_mapping({"alpha": "0.3", "lambda": "0.2", "m": "10"})
        assert params.alpha == 0.3
        assert params.lam == 0.2
        assert params.m == 10

    def test_mapping_round_trip(self):
        params = LionParams(alpha=0.3, lam=0.25, K=4)
        assert LionParams.from_mapping(params.to_mapping()) == params

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown parameter keys: zeta"):
            LionParams.from_mapping({"zeta": 1})


class TestBuildMdp:
    def test_state_and_row_counts(self):
        model = build_mdp(LionParams(K=3))
        assert len(model.states) == 6
        assert all(len(model.actions(s)) == 2 for s in model.states)
        assert validate_model(model).passed

    def test_small_model_matches_brute_force(self):
        model = build_mdp(LionParams(K=2))
        pi_bf, v_bf = enumerate_policies_brute_force(model)
        v_vi, pi_vi, report = value_iteration(model, epsilon=1e-9)
        assert report.converged
        for s in model.states:
            assert pi_vi[s] == pi_bf[s]
            assert v_vi[s] == pytest.approx(v_bf[s], abs=1e-8)

    def test_myopic_policy_prefers_stay_freeze_in_occupied_band(self):
        # At discount 0: argmax of expected immediate reward; staying while
        # frozen saves the hop cost (expected 14.1 vs 12.1 at defaults).
        model = build_mdp(LionParams(gamma=0.0))
        _, pi, _ = value_iteration(model)
        assert pi[PRIMARY] == SF
        backup = model.expected_reward(PRIMARY, SF)
        assert backup == pytest.approx(14.1)
        assert model.expected_reward(PRIMARY, HF) == pytest.approx(12.1)

    def test_model_dict_shape(self):
        data = model_as_dict(LionParams(K=2))
        assert data["states"] == ["S1", "S2", "P", "L", "H"]
        assert len(data["rows"]) == 10
        for row in data["rows"]:
            assert set(row["rewards"]) == set(row["transitions"])
            assert sum(row["transitions"].values()) == pytest.approx(1.0, abs=1e-12)


class TestStateType:
    def test_labels_and_parsing(self):
        assert LionState.success(4).label == "S4"
        assert LionState.parse("S4") == LionState.success(4)
        assert LionState.parse("P") == PRIMARY
        with pytest.raises(ValueError):
            LionState.parse("X9")

    def test_invalid_states_rejected(self):
        with pytest.raises(ValueError):
            LionState("S", 0)
        with pytest.raises(ValueError):
            LionState("P", 2)
        with pytest.raises(ValueError):
            LionState("Q")
