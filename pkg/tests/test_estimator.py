import numpy as np
import pytest

from lownoise.channels import pure_state_density, sqrt_completion_channel
from lownoise.errors import BadProbabilities, EmptySum
from lownoise.estimator import (
    EstimatorPOVM,
    analytic_mse,
    build_povm,
    build_score_operators,
    cr_direction_margin,
    cr_gap,
    outcome_probabilities,
    raise_index,
    sample_measurements,
    score_second_moment,
    unbiasedness_residual,
)
from lownoise.fisher import divergent_fisher, fisher_inverse, quantum_fisher
from lownoise.linalg import power_order_fit
from lownoise.scenarios import scenario_ancilla_bell, scenario_threelevel
from lownoise.spectral import output_spectrum_with_gradients

SCALES = np.geomspace(1e-5, 1e-2, 8)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.fixture(scope="module")
def bell():
    return scenario_ancilla_bell()


@pytest.fixture(scope="module")
def threelevel():
    return scenario_threelevel()


def estimator_pipeline(sc, s, included=None):
    eps = s * np.asarray(sc.sweep.direction)
    step = sc.fd_step if sc.fd_step is not None else s / 100
    spec, grads = output_spectrum_with_gradients(sc.channel, sc.input_state, eps, step)
    shifts = spec.shifts()
    if included is None:
        included = [i for i in range(shifts.shape[0]) if shifts[i] > 1e-3 * s]
    score = build_score_operators(spec, shifts, grads[:, 1:], included)
    jdiv = divergent_fisher(shifts, grads[:, 1:], included)
    score = raise_index(score, jdiv)
    return eps, spec, grads, jdiv, score


class TestScoreOperators:
    def test_bell_covariant_form(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        # shift eigenvectors: index 0 is the eps_2 shift, index 1 the eps_1 shift
        v2 = spec.basis[:, 1]
        v1 = spec.basis[:, 2]
        a1 = (1 / eps[0]) * np.outer(v1, v1.conj())
        a2 = (1 / eps[1]) * np.outer(v2, v2.conj())
        assert np.max(np.abs(score.covariant[0] - a1)) <= 1e-6 / eps[0]
        assert np.max(np.abs(score.covariant[1] - a2)) <= 1e-6 / eps[1]

    def test_bell_contravariant_bounded_projectors(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        v2 = spec.basis[:, 1]
        v1 = spec.basis[:, 2]
        assert np.max(np.abs(score.contravariant[0] - np.outer(v1, v1.conj()))) <= 1e-6
        assert np.max(np.abs(score.contravariant[1] - np.outer(v2, v2.conj()))) <= 1e-6

    def test_single_parameter_amplitude_damping(self):
        ch = sqrt_completion_channel([[LOWER]])
        phi = np.array([0.0, 1.0], dtype=complex)
        eps = np.array([2e-3])
        spec, grads = output_spectrum_with_gradients(ch, phi, eps, 2e-5)
        score = build_score_operators(spec, spec.shifts(), grads[:, 1:], [0])
        v = spec.basis[:, 1]
        want = (1 / eps[0]) * np.outer(v, v.conj())
        assert np.max(np.abs(score.covariant[0] - want)) <= 1e-6 / eps[0]
        jdiv = divergent_fisher(spec.shifts(), grads[:, 1:], [0])
        score = raise_index(score, jdiv)
        # contravariant operator stays bounded as the noise vanishes
        assert np.linalg.norm(score.contravariant[0], 2) <= 1.1

    def test_all_excluded_raises(self, bell):
        with pytest.raises(EmptySum):
            estimator_pipeline(bell, 3e-3, included=[])

    def test_covariant_operators_commute(self, threelevel):
        eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, 1e-3)
        a, b = score.covariant
        assert np.linalg.norm(a @ b - b @ a) <= 1e-10 * np.linalg.norm(a) * np.linalg.norm(b)
        c, d = score.contravariant
        assert np.linalg.norm(c @ d - d @ c) <= 1e-10

    def test_contravariant_is_inverse_weighted_sum(self, threelevel):
        eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, 1e-3)
        inv = fisher_inverse(jdiv).inverse
        for mu in range(2):
            acc = inv[mu, 0] * score.covariant[0] + inv[mu, 1] * score.covariant[1]
            assert np.max(np.abs(score.contravariant[mu] - acc)) <= 1e-10


class TestBuildPOVM:
    def test_bell_projectors_match_reference_frame(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-4)
        povm = build_povm(score)
        refs = bell.closed_forms["projectors_zero"]()
        # informative outcomes: the eps_1 and eps_2 shift projectors
        v23p = refs[2]
        f1 = refs[1]
        got = {tuple(np.round(x, 6)): p for x, p in zip(povm.estimates, povm.projectors)}
        informative = [p for x, p in zip(povm.estimates, povm.projectors) if np.max(np.abs(x)) > 1e-6]
        assert len(informative) == 2 and len(povm.projectors) == 3
        dists = sorted(
            min(np.max(np.abs(p - f1)), np.max(np.abs(p - v23p))) for p in informative
        )
        assert dists[-1] <= 1e-9
        kernel = [p for x, p in zip(povm.estimates, povm.projectors) if np.max(np.abs(x)) <= 1e-6]
        np.testing.assert_allclose(kernel[0], refs[0] + refs[3], atol=1e-9)

    def test_two_level_single_parameter(self):
        ch = sqrt_completion_channel([[LOWER]])
        phi = np.array([0.0, 1.0], dtype=complex)
        eps = np.array([1e-3])
        spec, grads = output_spectrum_with_gradients(ch, phi, eps, 1e-5)
        score = raise_index(
            build_score_operators(spec, spec.shifts(), grads[:, 1:], [0]),
            divergent_fisher(spec.shifts(), grads[:, 1:], [0]),
        )
        povm = build_povm(score)
        assert len(povm.projectors) == 2
        zero_rows = [x for x in povm.estimates if abs(x[0]) <= 1e-12]
        assert len(zero_rows) == 1

    def test_completeness_and_orthogonality(self, threelevel):
        eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, 1e-3)
        povm = build_povm(score)
        assert povm.completeness_residual() <= 1e-10
        for i, p in enumerate(povm.projectors):
            assert np.linalg.norm(p @ p - p) <= 1e-10
            assert np.linalg.norm(p - p.conj().T) <= 1e-10
            for q in povm.projectors[i + 1 :]:
                assert np.linalg.norm(p @ q) <= 1e-10

    def test_rescaled_shifts_leave_estimator_invariant(self, threelevel):
        eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, 1e-3)
        povm = build_povm(score)
        c = 3.7
        shifts = spec.shifts() * c
        jdiv_scaled = divergent_fisher(shifts, grads[:, 1:], [0, 1])
        score_scaled = raise_index(
            build_score_operators(spec, shifts, grads[:, 1:], [0, 1]), jdiv_scaled
        )
        povm_scaled = build_povm(score_scaled)
        assert len(povm.projectors) == len(povm_scaled.projectors)
        for p, q in zip(povm.projectors, povm_scaled.projectors):
            assert np.max(np.abs(p - q)) <= 1e-10
        assert np.max(np.abs(povm.estimates - povm_scaled.estimates)) <= 1e-10


class TestUnbiasedness:
    def test_bell_expectation_exact(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        res = unbiasedness_residual(povm, bell.channel, bell.input_state, eps)
        assert np.max(res) <= 1e-5  # exact appart from differencing noise

    def test_threelevel_second_order(self, threelevel):
        vals = []
        for s in SCALES:
            eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, s)
            povm = build_povm(score)
            vals.append(np.max(unbiasedness_residual(povm, threelevel.channel, threelevel.input_state, eps)))
        fit = power_order_fit(list(zip(SCALES, vals)))
        assert 1.8 <= fit.slope <= 2.2

    def test_kernel_outcome_contributes_nothing(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        rho = bell.channel.apply(pure_state_density(bell.input_state), eps)
        q = outcome_probabilities(povm, rho)
        mean_with = povm.estimates.T @ q
        keep = [i for i in range(len(q)) if np.max(np.abs(povm.estimates[i])) > 0]
        mean_without = sum(q[i] * povm.estimates[i] for i in keep)
        np.testing.assert_allclose(mean_with, mean_without, atol=1e-15)


class TestAnalyticMSE:
    def test_bell_matches_exact_inverse(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        mse = analytic_mse(povm, bell.channel, bell.input_state, eps)
        closed = bell.closed_forms["jinv"](eps)
        assert np.max(np.abs(mse.entries - closed)) <= 1e-9

    def test_second_moment_identity(self, threelevel):
        eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, 1e-3)
        povm = build_povm(score)
        mse = analytic_mse(povm, threelevel.channel, threelevel.input_state, eps)
        second = score_second_moment(povm, threelevel.channel, threelevel.input_state, eps)
        # V = S - eps mean^T - mean eps^T + eps eps^T exactly
        recon = second - np.outer(eps, mse.mean) - np.outer(mse.mean, eps) + np.outer(eps, eps)
        assert np.max(np.abs(mse.entries - recon)) <= 1e-14

    def test_mse_vs_second_moment_second_order(self, bell):
        vals = []
        for s in SCALES:
            eps, spec, grads, jdiv, score = estimator_pipeline(bell, s)
            povm = build_povm(score)
            mse = analytic_mse(povm, bell.channel, bell.input_state, eps)
            second = score_second_moment(povm, bell.channel, bell.input_state, eps)
            vals.append(np.linalg.norm(mse.entries - second))
        fit = power_order_fit(list(zip(SCALES, vals)))
        assert 1.8 <= fit.slope <= 2.2

    def test_single_parameter_attains_quantum_bound(self):
        # generic input so the output eigenbasis genuinely rotates with eps
        ch = sqrt_completion_channel([[LOWER]])
        theta = 0.7
        phi = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
        gaps = []
        for s in SCALES:
            eps = np.array([s])
            spec, grads = output_spectrum_with_gradients(ch, phi, eps, s / 100)
            jdiv = divergent_fisher(spec.shifts(), grads[:, 1:], [0])
            score = raise_index(build_score_operators(spec, spec.shifts(), grads[:, 1:], [0]), jdiv)
            povm = build_povm(score)
            mse = analytic_mse(povm, ch, phi, eps)
            rho_in = pure_state_density(phi)
            drho = [ch.finite_difference_derivative(rho_in, 0, eps, s / 100)]
            jq = fisher_inverse(quantum_fisher(spec.probs, spec.basis, drho))
            gaps.append(abs(mse.entries[0, 0] - jq.inverse[0, 0]))
        fit = power_order_fit(list(zip(SCALES, gaps)))
        assert 1.8 <= fit.slope <= 2.2

    def test_wrong_povm_fails_attainment(self, threelevel):
        # negative control: rotate the projectors away from the output eigenbasis
        rng = np.random.default_rng(11)
        g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        q_unitary, _ = np.linalg.qr(g)
        gaps = []
        for s in SCALES:
            eps, spec, grads, jdiv, score = estimator_pipeline(threelevel, s)
            povm = build_povm(score)
            bad = EstimatorPOVM(
                projectors=tuple(q_unitary @ p @ q_unitary.conj().T for p in povm.projectors),
                estimates=povm.estimates,
                reference_eps=povm.reference_eps,
            )
            mse = analytic_mse(bad, threelevel.channel, threelevel.input_state, eps)
            rho_in = pure_state_density(threelevel.input_state)
            drho = [
                threelevel.channel.finite_difference_derivative(rho_in, mu, eps, s / 100)
                for mu in range(2)
            ]
            jq = fisher_inverse(quantum_fisher(spec.probs, spec.basis, drho))
            gaps.append(np.linalg.norm(mse.entries - jq.inverse))
        fit = power_order_fit(list(zip(SCALES, gaps)))
        assert fit.slope < 1.8


class TestCRGap:
    def test_exact_attainment_zero_gap(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        mse = analytic_mse(povm, bell.channel, bell.input_state, eps)
        rho_in = pure_state_density(bell.input_state)
        drho = [bell.channel.finite_difference_derivative(rho_in, mu, eps, bell.fd_step) for mu in range(2)]
        jq = fisher_inverse(quantum_fisher(spec.probs, spec.basis, drho))
        gap = cr_gap(mse, jq)
        assert np.max(np.abs(gap)) <= 1e-12
        assert cr_direction_margin(gap, 100, seed=1) >= -1e-12

    def test_direction_margin_detects_violation(self):
        gap = np.diag([1.0, -0.5])
        assert cr_direction_margin(gap, 200, seed=2) < -0.3


class TestSampling:
    def test_single_shot_rank_one(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        mc = sample_measurements(povm, bell.channel, bell.input_state, eps, shots=1, seed=5)
        w = np.linalg.eigvalsh(mc.entries)
        assert np.sum(np.abs(w) > 1e-15) <= 1  # outer product of one outcome deviation

    def test_seed_determinism(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        a = sample_measurements(povm, bell.channel, bell.input_state, eps, shots=4321, seed=7)
        b = sample_measurements(povm, bell.channel, bell.input_state, eps, shots=4321, seed=7)
        np.testing.assert_array_equal(a.entries, b.entries)
        np.testing.assert_array_equal(a.mean, b.mean)

    def test_worker_count_invariance(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        kw = dict(shots=300_000, seed=9, block_size=1 << 14)
        a = sample_measurements(povm, bell.channel, bell.input_state, eps, workers=1, **kw)
        b = sample_measurements(povm, bell.channel, bell.input_state, eps, workers=5, **kw)
        np.testing.assert_array_equal(a.entries, b.entries)

    def test_monte_carlo_agrees_with_analytic(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        analytic = analytic_mse(povm, bell.channel, bell.input_state, eps)
        mc = sample_measurements(povm, bell.channel, bell.input_state, eps, shots=10**6, seed=2026)
        assert np.all(np.abs(mc.entries - analytic.entries) <= 4 * mc.standard_error + 1e-300)

    def test_bad_probabilities(self, bell):
        eps, spec, grads, jdiv, score = estimator_pipeline(bell, 3e-3)
        povm = build_povm(score)
        broken = EstimatorPOVM(
            projectors=povm.projectors[:-1],  # drops weight: probabilities no longer sum to 1
            estimates=povm.estimates[:-1],
            reference_eps=povm.reference_eps,
        )
        with pytest.raises(BadProbabilities):
            sample_measurements(broken, bell.channel, bell.input_state, eps, shots=10, seed=1)
