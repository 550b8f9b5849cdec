import itertools
import math

import numpy as np
import pytest

from continual_aif.inference import (
    BeliefState,
    InferenceError,
    column_novelty,
    compute_vfe,
    evaluate_policies,
    expected_free_energy,
    infer_states,
    predict_for_policy,
    select_policy,
)
from continual_aif.maths import DomainError
from continual_aif.model import (
    NORMALIZED_MEAN,
    OUTCOME_OBS,
    FactorSpec,
    GenerativeModel,
    ModalitySpec,
    build_paper_model,
    with_concentrations,
)
from oracles import (
    brute_force_posterior,
    brute_force_vfe,
    quadrature_kl,
    random_belief,
    random_model,
)


def single_factor_model(A, prior=None):
    A = np.asarray(A, dtype=float)
    n_o, n_s = A.shape
    return GenerativeModel(
        factors=[FactorSpec("s", n_s)], modalities=[ModalitySpec("o", n_o)],
        A=[A], a=[None], B=[np.eye(n_s)[:, :, None]], C=[np.zeros(n_o)],
        D=[np.full(n_s, 1 / n_s) if prior is None else np.asarray(prior, dtype=float)],
        policies=np.zeros((1, 1, 1), dtype=int),
    )


class TestInferStates:
    def test_identity_likelihood(self):
        model = single_factor_model(np.eye(4))
        q = infer_states(model, [2], BeliefState(model.D[0]))
        np.testing.assert_array_equal(q.joint, [0, 0, 1, 0])

    def test_two_state_uniform_prior(self):
        model = single_factor_model([[0.8, 0.3], [0.2, 0.7]])
        q = infer_states(model, [0], BeliefState([0.5, 0.5]))
        # 0.4 / 0.55 and 0.15 / 0.55
        np.testing.assert_allclose(q.joint, [0.7273, 0.2727], atol=1e-4)

    def test_two_state_informed_prior(self):
        model = single_factor_model([[0.8, 0.3], [0.2, 0.7]])
        q = infer_states(model, [0], BeliefState([0.9, 0.1]))
        # 0.72 / 0.75 and 0.03 / 0.75
        np.testing.assert_allclose(q.joint, [0.96, 0.04], atol=1e-4)

    def test_matches_enumeration(self, rng):
        for _ in range(200):
            model = random_model(rng, sparse=0.2)
            prior = random_belief(rng)
            obs = [int(rng.integers(n)) for n in model.num_obs]
            expected, evidence = brute_force_posterior(model, obs, prior.joint)
            if evidence == 0:
                continue
            np.testing.assert_allclose(infer_states(model, obs, prior).joint, expected, atol=1e-9)

    def test_absent_modality_is_skipped(self, rng):
        model = random_model(rng)
        prior = random_belief(rng)
        obs = [1, None, 2]
        expected, _ = brute_force_posterior(model, obs, prior.joint)
        np.testing.assert_allclose(infer_states(model, obs, prior).joint, expected, atol=1e-12)

    def test_impossible_observation_names_modality(self, paper_models):
        _, bottom = paper_models
        prior = np.zeros((16, 4))
        prior[3, 1] = 1.0
        with pytest.raises(InferenceError, match="industry_cue"):
            infer_states(bottom, [1, 0, 5], BeliefState(prior))

    def test_bad_observation_index(self, paper_models):
        _, bottom = paper_models
        with pytest.raises(DomainError):
            infer_states(bottom, [4, 0, 0], BeliefState.from_marginals(bottom.D))

    def test_marginals_resum(self, rng):
        model = random_model(rng)
        q = infer_states(model, [0, 1, 2], random_belief(rng))
        m0, m1 = q.marginals
        np.testing.assert_allclose(m0, q.joint.sum(axis=1), atol=1e-12)
        np.testing.assert_allclose(m1, q.joint.sum(axis=0), atol=1e-12)
        assert abs(m0.sum() - 1) < 1e-9 and abs(m1.sum() - 1) < 1e-9


class TestVfe:
    def test_uninformative_model(self):
        model = single_factor_model(np.full((5, 3), 0.2))
        prior = BeliefState(np.full(3, 1 / 3))
        fe = compute_vfe(model, prior, [2], prior)
        assert fe.complexity == 0
        assert fe.accuracy == pytest.approx(-math.log(5), abs=1e-12)
        assert fe.total == pytest.approx(math.log(5), abs=1e-12)

    def test_perfect_fit_is_zero(self):
        model = single_factor_model(np.eye(3))
        one_hot = BeliefState([0, 1.0, 0])
        assert compute_vfe(model, one_hot, [1], one_hot).total == 0

    def test_matches_statewise_sum(self, rng):
        model = random_model(rng)
        prior, q = random_belief(rng), random_belief(rng)
        obs = [0, 3, 1]
        assert compute_vfe(model, q, obs, prior).total == pytest.approx(
            brute_force_vfe(model, q.joint, obs, prior.joint), abs=1e-9)

    def test_exact_posterior_is_minimal(self, rng):
        for _ in range(20):
            model = random_model(rng)
            prior = random_belief(rng)
            obs = [int(rng.integers(n)) for n in model.num_obs]
            q = infer_states(model, obs, prior)
            f_star = compute_vfe(model, q, obs, prior).total
            _, evidence = brute_force_posterior(model, obs, prior.joint)
            assert f_star == pytest.approx(-math.log(evidence), abs=1e-9)
            for _ in range(50):
                noise = rng.dirichlet(np.ones(q.joint.size)).reshape(q.joint.shape)
                lam = rng.uniform(0.001, 1)
                other = BeliefState((1 - lam) * q.joint + lam * noise)
                assert compute_vfe(model, other, obs, prior).total >= f_star - 1e-12


class TestPrediction:
    def test_identity_dynamics(self, rng):
        model = random_model(rng)
        q = random_belief(rng)
        (step,) = predict_for_policy(model, q, [[0, 0]])
        np.testing.assert_allclose(step.qs.joint, q.joint, atol=1e-15)

    def test_action_sets_process(self, paper_models):
        _, bottom = paper_models
        q = BeliefState.from_marginals(bottom.D)
        (step,) = predict_for_policy(bottom, q, bottom.policies[2])
        np.testing.assert_allclose(step.qs.marginals[1], [0, 0, 1, 0])
        np.testing.assert_allclose(step.qs.marginals[0], bottom.D[0])

    def test_outcome_contraction(self, rng):
        A = np.zeros((5, 16, 4))
        grid = rng.integers(0, 5, size=(16, 4))
        for j, k in itertools.product(range(16), range(4)):
            A[grid[j, k], j, k] = 1.0
        _, bottom = build_paper_model()
        bottom.A[OUTCOME_OBS] = A
        joint = np.zeros((16, 4))
        joint[6, 1] = 1.0
        (step,) = predict_for_policy(bottom, BeliefState(joint), [[0, 1]])
        expected = np.zeros(5)
        expected[grid[6, 1]] = 1.0
        np.testing.assert_array_equal(step.qo[OUTCOME_OBS], expected)

    def test_soft_contraction(self, rng):
        _, bottom = build_paper_model()
        A = rng.dirichlet(np.ones(5), size=(16, 4)).transpose(2, 0, 1)
        bottom.A[OUTCOME_OBS] = A
        industry = rng.dirichlet(np.ones(16))
        q = BeliefState.from_marginals([industry, np.full(4, 0.25)])
        (step,) = predict_for_policy(bottom, q, [[0, 3]])
        expected = np.zeros(5)
        for j, k in itertools.product(range(16), range(4)):
            expected += step.qs.joint[j, k] * A[:, j, k]
        np.testing.assert_allclose(step.qo[OUTCOME_OBS], expected, atol=1e-12)


def industry_belief(j=0, n=16):
    d = np.zeros(n)
    d[j] = 1.0
    return BeliefState.from_marginals([d, np.full(4, 0.25)])


class TestExpectedFreeEnergy:
    def test_total_identity(self, paper_models):
        _, bottom = paper_models
        for g in evaluate_policies(bottom, industry_belief()):
            assert g.total == pytest.approx(g.risk + g.ambiguity - g.novelty, abs=1e-12)

    def test_symmetric_policies_tie(self, paper_models):
        _, bottom = paper_models
        gs = evaluate_policies(bottom, BeliefState.from_marginals(bottom.D))
        for g in gs[1:]:
            assert g.as_dict() == pytest.approx(gs[0].as_dict(), abs=1e-12)

    def test_single_policy_matches_batch(self, paper_models, rng):
        _, bottom = paper_models
        bottom = with_concentrations(bottom, OUTCOME_OBS, rng.uniform(0.1, 9, size=(5, 16, 4)))
        q = industry_belief(3)
        batch = evaluate_policies(bottom, q)
        for pi, g in zip(bottom.policies, batch):
            assert expected_free_energy(bottom, q, pi).as_dict() == pytest.approx(g.as_dict(), abs=1e-12)

    def test_lower_counts_more_novel(self, paper_models):
        _, bottom = paper_models
        conc = bottom.a[OUTCOME_OBS].copy()
        conc[:, 0, 1] = 5.0
        model = with_concentrations(bottom, OUTCOME_OBS, conc)
        g = evaluate_policies(model, industry_belief(0))
        assert g[0].novelty > g[1].novelty
        assert g[0].total < g[1].total
        # brute-force: expected KL of the incremented column under the predicted outcome distribution
        for k in (0, 1):
            col = conc[:, 0, k]
            A = model.A[OUTCOME_OBS][:, 0, k]
            oracle = sum(A[o] * quadrature_kl(col + np.eye(5)[o], col) for o in range(5))
            assert g[k].novelty == pytest.approx(oracle, abs=1e-6)

    def test_deterministic_likelihood_has_no_ambiguity(self):
        model = single_factor_model(np.eye(3))
        model.B = [np.stack([np.eye(3)[:, [u] * 3] for u in range(3)], axis=2)]
        model.policies = np.arange(3).reshape(3, 1, 1)
        model.likelihood_mode = NORMALIZED_MEAN
        for g in evaluate_policies(model, BeliefState(np.full(3, 1 / 3))):
            assert g.ambiguity == 0

    def test_novelty_sweep_strictly_decreasing(self, paper_models):
        _, bottom = paper_models
        totals = np.linspace(0.25, 50, 20)
        novelty = []
        for t in totals:
            conc = bottom.a[OUTCOME_OBS].copy()
            conc[:, 0, 0] = np.array([0.2, 0.2, 0.2, 0.2, 0.2]) * t
            model = with_concentrations(bottom, OUTCOME_OBS, conc)
            novelty.append(evaluate_policies(model, industry_belief(0))[0].novelty)
        assert all(n >= 0 for n in novelty)
        assert np.all(np.diff(novelty) < 0)

    def test_column_novelty_nonnegative(self, rng):
        conc = rng.uniform(0.01, 40, size=(5, 30))
        A = conc / conc.sum(axis=0)
        assert np.all(column_novelty(conc, A) >= 0)


class TestSelectPolicy:
    def test_equal_values_uniform(self):
        choice = select_policy([2.0, 2.0, 2.0, 2.0], 16.0, np.random.default_rng(0))
        np.testing.assert_allclose(choice.posterior, 0.25)

    def test_large_precision_picks_minimum(self):
        choice = select_policy([1.0, 0.5], 1e6, np.random.default_rng(0))
        assert choice.chosen == 1
        np.testing.assert_allclose(choice.posterior, [0, 1], atol=1e-12)

    def test_hand_value(self):
        choice = select_policy([1.0, 2.0], 1.0, np.random.default_rng(0))
        np.testing.assert_allclose(choice.posterior, [0.7311, 0.2689], atol=1e-4)

    def test_infinite_precision_breaks_ties_by_index(self):
        assert select_policy([0.3, 0.1, 0.1], math.inf, None).chosen == 1

    def test_empty(self):
        with pytest.raises(DomainError):
            select_policy([], 1.0, np.random.default_rng(0))

    def test_shift_invariance_and_argmax(self, rng):
        for _ in range(100):
            G = rng.normal(size=6)
            c = rng.normal() * 10
            a = select_policy(G, 3.0, np.random.default_rng(1)).posterior
            b = select_policy(G + c, 3.0, np.random.default_rng(1)).posterior
            np.testing.assert_allclose(a, b, atol=1e-12)
            assert np.argmax(a) == np.argmin(G)

    def test_seeded_sampling_is_deterministic(self):
        G = [0.1, 0.2, 0.15]
        picks = [select_policy(G, 4.0, np.random.default_rng(9)).chosen for _ in range(3)]
        assert len(set(picks)) == 1

    def test_sampling_frequencies(self):
        rng = np.random.default_rng(2)
        G = np.array([0.0, 0.5, 1.0])
        post = select_policy(G, 2.0, rng).posterior
        counts = np.bincount([select_policy(G, 2.0, rng).chosen for _ in range(20000)], minlength=3)
        np.testing.assert_allclose(counts / 20000, post, atol=0.015)
